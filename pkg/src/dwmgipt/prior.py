"""Steering-kernel local structure prior.

Per pixel, the gradients inside a small window are summarized by a regularized
2x2 covariance whose eigenvalues separate structure classes: both small on
flat areas, one large on straight edges, both large on corner-like or
blob-like structure. The scaling factor couples to the product of the
windowed gradient singular values, so rank-1 structure (a clean edge) is
damped while genuinely two-dimensional structure (a compact target) is kept.
From the two eigenvalue maps a target prior, a background prior and their
product are formed; the solver consumes the reciprocal of the product as a
per-entry shrinkage weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .patches import PatchModel, image_to_tensor

__all__ = [
    "gradients",
    "SteeringStats",
    "steering_covariance",
    "target_prior",
    "background_prior",
    "combined_prior",
    "PriorMaps",
    "compute_prior_maps",
    "weight_tensor",
    "steering_kernel",
    "rescale_to_gray",
]

# regularizers for the covariance estimate; standard values from the
# steering-kernel literature
LAMBDA_ELONGATION = 1.0
LAMBDA_SCALE = 1e-7


def gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients (horizontal, vertical), replicate border."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D grayscale image")
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


@dataclass(frozen=True)
class SteeringStats:
    """Per-pixel 2x2 covariance stack and its eigenvalue maps (lam1 >= lam2)."""

    C: np.ndarray      # (H, W, 2, 2)
    lam1: np.ndarray   # (H, W)
    lam2: np.ndarray   # (H, W)
    gamma: np.ndarray  # (H, W)


def steering_covariance(
    gx: np.ndarray,
    gy: np.ndarray,
    window: int = 5,
    gamma_exponent: float = 0.5,
) -> SteeringStats:
    """Estimate the regularized structure covariance at every pixel.

    The window side must be odd. Windows are replicate-padded at the border,
    so every pixel sees window**2 gradient samples. The eigenvalues are
    gamma*tau1 and gamma*tau2 by construction, so no per-pixel eigen solve of
    the assembled covariance is needed.
    """
    if window % 2 == 0 or window < 3:
        raise ValueError("window side must be odd and >= 3")
    gx = np.asarray(gx, dtype=float)
    gy = np.asarray(gy, dtype=float)
    if gx.shape != gy.shape:
        raise ValueError("gradient maps must share a shape")
    m_samples = window * window

    def windowed_sum(a):
        return ndimage.uniform_filter(a, size=window, mode="nearest") * m_samples

    sxx = windowed_sum(gx * gx)
    sxy = windowed_sum(gx * gy)
    syy = windowed_sum(gy * gy)

    gram = np.empty(gx.shape + (2, 2))
    gram[..., 0, 0] = sxx
    gram[..., 0, 1] = sxy
    gram[..., 1, 0] = sxy
    gram[..., 1, 1] = syy

    # eigh returns ascending eigenvalues; singular values of the stacked
    # gradient matrix are their square roots
    evals, evecs = np.linalg.eigh(gram)
    s2 = np.sqrt(np.maximum(evals[..., 0], 0.0))
    s1 = np.sqrt(np.maximum(evals[..., 1], 0.0))
    v1 = evecs[..., :, 1]
    v2 = evecs[..., :, 0]

    tau1 = (s1 + LAMBDA_ELONGATION) / (s2 + LAMBDA_ELONGATION)
    tau2 = (s2 + LAMBDA_ELONGATION) / (s1 + LAMBDA_ELONGATION)
    gamma = ((s1 * s2 + LAMBDA_SCALE) / m_samples) ** gamma_exponent

    outer1 = v1[..., :, None] * v1[..., None, :]
    outer2 = v2[..., :, None] * v2[..., None, :]
    cov = gamma[..., None, None] * (
        tau1[..., None, None] * outer1 + tau2[..., None, None] * outer2
    )
    return SteeringStats(C=cov, lam1=gamma * tau1, lam2=gamma * tau2, gamma=gamma)


def target_prior(lam1: np.ndarray, lam2: np.ndarray) -> np.ndarray:
    """exp of the min-max normalized eigenvalue gap; constant 1 when flat."""
    d = np.asarray(lam1, dtype=float) - np.asarray(lam2, dtype=float)
    lo, hi = d.min(), d.max()
    if hi == lo:
        return np.ones_like(d)
    return np.exp((d - lo) / (hi - lo))


def background_prior(lam1: np.ndarray, lam2: np.ndarray) -> np.ndarray:
    """Min-max normalized pointwise max eigenvalue; all zero when flat."""
    m = np.maximum(lam1, lam2)
    lo, hi = m.min(), m.max()
    if hi == lo:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def combined_prior(w_tp: np.ndarray, w_bp: np.ndarray) -> np.ndarray:
    if w_tp.shape != w_bp.shape:
        raise ValueError("prior maps must share a shape")
    return w_tp * w_bp


@dataclass(frozen=True)
class PriorMaps:
    L1: np.ndarray
    L2: np.ndarray
    W_tp: np.ndarray
    W_bp: np.ndarray
    W_p: np.ndarray


def compute_prior_maps(
    img: np.ndarray,
    window: int = 5,
    gamma_exponent: float = 0.5,
) -> PriorMaps:
    """Full prior stack for an image: eigenvalue maps and the three priors."""
    gx, gy = gradients(img)
    stats = steering_covariance(gx, gy, window=window, gamma_exponent=gamma_exponent)
    w_tp = target_prior(stats.lam1, stats.lam2)
    w_bp = background_prior(stats.lam1, stats.lam2)
    return PriorMaps(
        L1=stats.lam1,
        L2=stats.lam2,
        W_tp=w_tp,
        W_bp=w_bp,
        W_p=combined_prior(w_tp, w_bp),
    )


def weight_tensor(
    w_p: np.ndarray,
    pm: PatchModel,
    t_current: np.ndarray,
    eps: float = 0.01,
    eps_prior: float = 1e-6,
) -> np.ndarray:
    """Per-entry shrinkage weight: reciprocal prior times reweighted sparsity.

    The prior map is lifted into the patch-tensor domain and inverted (with a
    floor `eps_prior`, since the normalized prior can be exactly 0), then
    multiplied by 1/(|T|+eps) so entries already captured by the sparse
    component are shrunk less on the next pass.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps_prior <= 0:
        raise ValueError("eps_prior must be positive")
    t_current = np.asarray(t_current, dtype=float)
    if t_current.shape != pm.tensor_shape:
        raise ValueError(f"tensor shape {t_current.shape} != {pm.tensor_shape}")
    wp_t = image_to_tensor(w_p, pm)
    wp_recip = 1.0 / np.maximum(wp_t, eps_prior)
    return wp_recip / (np.abs(t_current) + eps)


def steering_kernel(cov: np.ndarray, window: int = 5) -> np.ndarray:
    """Kernel footprint sqrt(det C) * exp(-d' C d) over window offsets.

    Diagnostic only: renders the footprint a single covariance induces, the
    shape that is circular on flat areas and elongated along structure.
    """
    if window % 2 == 0 or window < 3:
        raise ValueError("window side must be odd and >= 3")
    cov = np.asarray(cov, dtype=float)
    half = window // 2
    dy, dx = np.mgrid[-half : half + 1, -half : half + 1]
    quad = (
        cov[0, 0] * dx * dx + (cov[0, 1] + cov[1, 0]) * dx * dy + cov[1, 1] * dy * dy
    )
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    return np.sqrt(max(det, 0.0)) * np.exp(-quad)


def rescale_to_gray(a: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 255] for debug dumps; flat maps go to 0."""
    a = np.asarray(a, dtype=float)
    lo, hi = a.min(), a.max()
    if hi == lo:
        return np.zeros_like(a)
    return (a - lo) * (255.0 / (hi - lo))
