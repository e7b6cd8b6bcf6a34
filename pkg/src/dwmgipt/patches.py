"""Multi-granularity patch tensor construction and image reconstruction.

A sliding window of size (patch_h, patch_w) traverses the image from the top
left (clamping the last window so the image is fully covered). Each window is
split along its height and width into the ascending prime factors of the
patch dimensions, which raises the tensor order: a 50x50 window becomes modes
(2, 5, 5, 2, 5, 5). Window position occupies the last two modes (cols, rows).

With the package-wide column-major linearization, the multi-index of a window
pixel (u, v) is the mixed-radix decomposition of u over the height factors
and v over the width factors, first factor fastest, so construction is a
single column-major reshape of the (patch_h, patch_w, cols, rows) stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["prime_factorize", "PatchModel", "plan_patches", "image_to_tensor", "tensor_to_image"]


def prime_factorize(k: int) -> list[int]:
    """Ascending prime factors of k (k >= 2), with multiplicity."""
    k = int(k)
    if k < 2:
        raise ValueError(f"cannot factorize {k}: need an integer >= 2")
    factors = []
    d = 2
    while d * d <= k:
        while k % d == 0:
            factors.append(d)
            k //= d
        d += 1
    if k > 1:
        factors.append(k)
    return factors


def _axis_positions(size: int, patch: int, step: int) -> tuple[int, ...]:
    last = size - patch
    pos = list(range(0, last + 1, step))
    if pos[-1] != last:
        pos.append(last)
    return tuple(pos)


@dataclass(frozen=True)
class PatchModel:
    """Sliding-window geometry plus the prime-factor mode layout."""

    image_h: int
    image_w: int
    patch_h: int
    patch_w: int
    step: int
    row_positions: tuple[int, ...]
    col_positions: tuple[int, ...]
    m_factors: tuple[int, ...]
    n_factors: tuple[int, ...]
    tensor_shape: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        shape = self.m_factors + self.n_factors + (self.cols, self.rows)
        object.__setattr__(self, "tensor_shape", shape)

    @property
    def cols(self) -> int:
        return len(self.col_positions)

    @property
    def rows(self) -> int:
        return len(self.row_positions)

    @property
    def z(self) -> int:
        return self.cols * self.rows


def plan_patches(image_h: int, image_w: int, patch_h: int, patch_w: int, step: int) -> PatchModel:
    """Lay out sliding windows and the factorized tensor shape.

    Window top-left offsets advance by `step`; if the last regular offset
    does not reach the image edge, one extra window clamped to the edge is
    appended so every pixel is covered.
    """
    if patch_h > image_h or patch_w > image_w:
        raise ValueError(
            f"patch {patch_h}x{patch_w} larger than image {image_h}x{image_w}"
        )
    if patch_h < 2 or patch_w < 2:
        raise ValueError("patch dimensions must be >= 2")
    if step < 1:
        raise ValueError("step must be >= 1")
    if step > min(patch_h, patch_w):
        # a stride beyond the window size would leave uncovered pixels
        raise ValueError(f"step {step} exceeds patch size {patch_h}x{patch_w}")
    return PatchModel(
        image_h=image_h,
        image_w=image_w,
        patch_h=patch_h,
        patch_w=patch_w,
        step=step,
        row_positions=_axis_positions(image_h, patch_h, step),
        col_positions=_axis_positions(image_w, patch_w, step),
        m_factors=tuple(prime_factorize(patch_h)),
        n_factors=tuple(prime_factorize(patch_w)),
    )


def _window_stack(img: np.ndarray, pm: PatchModel) -> np.ndarray:
    m, n = pm.patch_h, pm.patch_w
    stack = np.empty((m, n, pm.cols, pm.rows), dtype=float)
    for b, ry in enumerate(pm.row_positions):
        for a, cx in enumerate(pm.col_positions):
            stack[:, :, a, b] = img[ry : ry + m, cx : cx + n]
    return stack


def image_to_tensor(img: np.ndarray, pm: PatchModel) -> np.ndarray:
    """Stack all windows of `img` into the multi-granularity patch tensor."""
    img = np.asarray(img, dtype=float)
    if img.shape != (pm.image_h, pm.image_w):
        raise ValueError(f"image shape {img.shape} != {(pm.image_h, pm.image_w)}")
    return _window_stack(img, pm).reshape(pm.tensor_shape, order="F")


def tensor_to_image(t: np.ndarray, pm: PatchModel) -> np.ndarray:
    """Rebuild the image; overlapping windows resolve per pixel by median."""
    t = np.asarray(t, dtype=float)
    if t.shape != pm.tensor_shape:
        raise ValueError(f"tensor shape {t.shape} != {pm.tensor_shape}")
    m, n = pm.patch_h, pm.patch_w
    stack = t.reshape((m, n, pm.cols, pm.rows), order="F")

    counts = np.zeros((pm.image_h, pm.image_w), dtype=int)
    for ry in pm.row_positions:
        for cx in pm.col_positions:
            counts[ry : ry + m, cx : cx + n] += 1

    buf = np.full((pm.image_h, pm.image_w, int(counts.max())), np.nan)
    fill = np.zeros_like(counts)
    ui = np.arange(m)[:, None]
    vi = np.arange(n)[None, :]
    for b, ry in enumerate(pm.row_positions):
        for a, cx in enumerate(pm.col_positions):
            idx = fill[ry : ry + m, cx : cx + n]
            buf[ry + ui, cx + vi, idx] = stack[:, :, a, b]
            fill[ry : ry + m, cx : cx + n] += 1
    return np.nanmedian(buf, axis=2)
