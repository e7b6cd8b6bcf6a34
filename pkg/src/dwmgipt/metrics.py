"""Detection quality metrics: SCR, SCR gain, BSF, Pd/Fa, ROC with AUC.

Target statistics use the annotated box; clutter statistics use the ring
around it (box grown by a margin on every side, box itself excluded), clipped
at the image border. Every denominator that can vanish carries the small
guard `phi`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = [
    "TargetBox",
    "scr",
    "scrg",
    "bsf",
    "pd_fa",
    "RocCurve",
    "roc",
]

DEFAULT_RING_MARGIN = 65
DEFAULT_PHI = 0.01


@dataclass(frozen=True)
class TargetBox:
    """Ground-truth target: center (cx, cy) and box dimensions a x b pixels."""

    cx: float
    cy: float
    a: int
    b: int


def _box_slices(box: TargetBox, shape: tuple[int, int]) -> tuple[slice, slice]:
    h, w = shape
    x0 = int(round(box.cx)) - box.a // 2
    y0 = int(round(box.cy)) - box.b // 2
    if x0 < 0 or y0 < 0 or x0 + box.a > w or y0 + box.b > h:
        raise ValueError(f"annotation {box} outside image {h}x{w}")
    return slice(y0, y0 + box.b), slice(x0, x0 + box.a)


def _ring_values(img: np.ndarray, box: TargetBox, margin: int) -> np.ndarray:
    h, w = img.shape
    ys, xs = _box_slices(box, img.shape)
    ry = slice(max(ys.start - margin, 0), min(ys.stop + margin, h))
    rx = slice(max(xs.start - margin, 0), min(xs.stop + margin, w))
    mask = np.zeros(img.shape, dtype=bool)
    mask[ry, rx] = True
    mask[ys, xs] = False
    return img[mask]


def scr(
    img: np.ndarray,
    box: TargetBox,
    ring_margin: int = DEFAULT_RING_MARGIN,
    phi: float = DEFAULT_PHI,
) -> float:
    """Signal-to-clutter ratio |mean(box) - mean(ring)| / (std(ring) + phi)."""
    img = np.asarray(img, dtype=float)
    ys, xs = _box_slices(box, img.shape)
    ring = _ring_values(img, box, ring_margin)
    if ring.size == 0:
        raise ValueError("empty neighborhood ring")
    return float(abs(img[ys, xs].mean() - ring.mean()) / (ring.std() + phi))


def scrg(
    in_img: np.ndarray,
    out_img: np.ndarray,
    box: TargetBox,
    ring_margin: int = DEFAULT_RING_MARGIN,
    phi: float = DEFAULT_PHI,
) -> float:
    """SCR gain: SCR after processing over SCR before (guarded)."""
    scr_in = scr(in_img, box, ring_margin, phi)
    scr_out = scr(out_img, box, ring_margin, phi)
    return scr_out / (scr_in + phi)


def bsf(
    in_img: np.ndarray,
    out_img: np.ndarray,
    box: TargetBox,
    ring_margin: int = DEFAULT_RING_MARGIN,
    phi: float = DEFAULT_PHI,
) -> float:
    """Background suppression factor: ring std before over ring std after."""
    sigma_in = _ring_values(np.asarray(in_img, dtype=float), box, ring_margin).std()
    sigma_out = _ring_values(np.asarray(out_img, dtype=float), box, ring_margin).std()
    return float(sigma_in / (sigma_out + phi))


def _match_frame(dets, gts, radius: float) -> int:
    """Greedy nearest-first one-to-one matching; returns number of true hits."""
    pairs = []
    for di, (dx, dy) in enumerate(dets):
        for gi, (gx, gy) in enumerate(gts):
            dist = float(np.hypot(dx - gx, dy - gy))
            if dist <= radius:
                pairs.append((dist, di, gi))
    pairs.sort()
    used_d, used_g = set(), set()
    hits = 0
    for _, di, gi in pairs:
        if di in used_d or gi in used_g:
            continue
        used_d.add(di)
        used_g.add(gi)
        hits += 1
    return hits


def pd_fa(
    detections_per_frame,
    annotations_per_frame,
    frame_pixels: int,
    match_radius: float = 4.0,
) -> tuple[float, float]:
    """Detection probability and false-alarm rate over a batch of frames.

    A detection is true when its centroid falls within `match_radius` of an
    unmatched ground-truth centroid (greedy nearest-first, one-to-one). Fa
    normalizes the unmatched detections by the total pixel count. Frames
    without targets contribute only false alarms.
    """
    if match_radius <= 0:
        raise ValueError("match_radius must be positive")
    if len(detections_per_frame) != len(annotations_per_frame):
        raise ValueError("frame count mismatch")
    total_true = 0
    total_det = 0
    total_targets = 0
    for dets, gts in zip(detections_per_frame, annotations_per_frame):
        det_pts = [_centroid_of(d) for d in dets]
        gt_pts = [(g.cx, g.cy) if isinstance(g, TargetBox) else tuple(g) for g in gts]
        total_det += len(det_pts)
        total_targets += len(gt_pts)
        total_true += _match_frame(det_pts, gt_pts, match_radius)
    pd = total_true / total_targets if total_targets else 1.0
    fa = (total_det - total_true) / (frame_pixels * len(detections_per_frame))
    return pd, fa


def _centroid_of(det):
    if hasattr(det, "cx"):
        return (det.cx, det.cy)
    return tuple(det)


@dataclass(frozen=True)
class RocCurve:
    """Threshold sweep: (Fa, Pd) points sorted by Fa, plus normalized AUC."""

    thresholds: np.ndarray
    fa: np.ndarray
    pd: np.ndarray
    fa_max: float
    auc: float


def _components_above(img: np.ndarray, tau: float):
    mask = img > tau
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    cents = []
    for lbl in range(1, n + 1):
        where = labels == lbl
        weights = img[where]
        ys, xs = np.nonzero(where)
        wsum = weights.sum()
        if wsum > 0:
            cents.append((float((xs * weights).sum() / wsum), float((ys * weights).sum() / wsum)))
        else:
            cents.append((float(xs.mean()), float(ys.mean())))
    return cents


def roc(
    target_images,
    annotations_per_frame,
    thresholds=None,
    match_radius: float = 4.0,
    max_levels: int = 512,
) -> RocCurve:
    """Sweep a global segmentation threshold and trace (Fa, Pd).

    By default the sweep visits the sorted unique intensities of the target
    images (evenly subsampled down to `max_levels` when there are more). The
    AUC integrates Pd over Fa rescaled by the largest observed Fa; when no
    false alarm ever occurs the curve degenerates to a point and the AUC is
    the best Pd reached.
    """
    imgs = [np.asarray(im, dtype=float) for im in target_images]
    if len(imgs) != len(annotations_per_frame):
        raise ValueError("frame count mismatch")
    if thresholds is None:
        levels = np.unique(np.concatenate([im.ravel() for im in imgs]))
        if levels.size > max_levels:
            idx = np.linspace(0, levels.size - 1, max_levels).round().astype(int)
            levels = levels[np.unique(idx)]
        thresholds = levels
    thresholds = np.asarray(thresholds, dtype=float)

    frame_pixels = imgs[0].size
    fa_pts, pd_pts = [], []
    for tau in thresholds:
        dets = [_components_above(im, tau) for im in imgs]
        pd, fa = pd_fa(dets, annotations_per_frame, frame_pixels, match_radius)
        fa_pts.append(fa)
        pd_pts.append(pd)

    order = np.lexsort((pd_pts, fa_pts))
    fa_arr = np.asarray(fa_pts)[order]
    pd_arr = np.asarray(pd_pts)[order]
    fa_max = float(fa_arr[-1]) if fa_arr.size else 0.0

    if fa_max == 0.0:
        auc = float(pd_arr.max()) if pd_arr.size else 0.0
    else:
        x = fa_arr / fa_max
        auc = float(np.sum(0.5 * (pd_arr[1:] + pd_arr[:-1]) * np.diff(x)))
    return RocCurve(
        thresholds=thresholds[order],
        fa=fa_arr,
        pd=pd_arr,
        fa_max=fa_max,
        auc=auc,
    )
