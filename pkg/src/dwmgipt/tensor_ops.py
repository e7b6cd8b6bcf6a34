"""Dense tensor primitives: balanced unfoldings, norms, SVD.

Tensors are plain float64 ndarrays. The linearization convention throughout
the package is column-major (first index varies fastest), which makes the
balanced mode-i unfolding a pure re-indexing: ``tt_unfold`` groups the first
i modes into rows and the remaining modes into columns without moving any
value relative to that ordering, so fold(unfold(t)) is bitwise exact.

Element-wise algebra (add/sub/scale) is plain ndarray arithmetic; only the
operations with a contract worth enforcing get a named function here.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "tt_unfold",
    "tt_fold",
    "l1_norm",
    "frobenius_norm",
    "hadamard",
    "count_nonzero",
    "svd",
    "nuclear_norm",
]


def _check_mode(ndim: int, mode: int) -> None:
    if not 1 <= mode <= ndim - 1:
        raise ValueError(f"mode must be in [1, {ndim - 1}], got {mode}")


def tt_unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Balanced mode-i unfolding: rows index the first `mode` axes.

    Returns a matrix of shape (prod(shape[:mode]), prod(shape[mode:])).
    `mode` is 1-based and must satisfy 1 <= mode <= ndim-1.
    """
    t = np.asarray(t)
    _check_mode(t.ndim, mode)
    left = int(np.prod(t.shape[:mode]))
    right = int(np.prod(t.shape[mode:]))
    return t.reshape((left, right), order="F")


def tt_fold(m: np.ndarray, shape: tuple[int, ...], mode: int) -> np.ndarray:
    """Inverse of :func:`tt_unfold` for the same shape and mode."""
    m = np.asarray(m)
    shape = tuple(int(s) for s in shape)
    _check_mode(len(shape), mode)
    left = int(np.prod(shape[:mode]))
    right = int(np.prod(shape[mode:]))
    if m.shape != (left, right):
        raise ValueError(
            f"matrix shape {m.shape} does not match mode-{mode} unfolding "
            f"of {shape} (expected {(left, right)})"
        )
    return m.reshape(shape, order="F")


def l1_norm(t: np.ndarray) -> float:
    return float(np.sum(np.abs(t)))


def frobenius_norm(t: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.square(np.asarray(t, dtype=float)))))


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Element-wise product; unlike ``a * b`` this refuses to broadcast."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def count_nonzero(t: np.ndarray) -> int:
    return int(np.count_nonzero(t))


def svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD with singular values sorted descending.

    Returns (U, s, Vt) with m = (U * s) @ Vt. Raises on non-finite input.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("svd requires finite entries")
    return np.linalg.svd(m, full_matrices=False)


def nuclear_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("nuclear_norm requires finite entries")
    return float(np.linalg.svd(m, compute_uv=False).sum())
