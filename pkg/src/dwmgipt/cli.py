"""Command-line front end: detect / eval / synth subcommands.

All artifacts are plain files: 8-bit PGM images and comma-separated CSV with
a versioned comment header. Each frame's outputs land in their own
subdirectory, built in a temp directory and renamed into place, so a crashed
frame leaves nothing behind. Frame-level parallelism is capped by the
DWMGIPT_THREADS environment variable (0 or unset picks the CPU count).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, format_config, load_config
from .metrics import TargetBox, bsf, pd_fa, roc, scr, scrg
from .pgm import atomic_write_bytes, read_image, write_pgm
from .pipeline import detect
from .synth import RNG_NAME, SceneSpec, TargetSpec, generate

CSV_HEADER = f"# dwmgipt {__version__}"
IMAGE_SUFFIXES = (".pgm", ".pnm", ".png")


def _collect_frames(path: Path) -> list[Path]:
    if path.is_dir():
        frames = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not frames:
            raise FileNotFoundError(f"no images under {path}")
        return frames
    if not path.exists():
        raise FileNotFoundError(f"{path} does not exist")
    return [path]


def _worker_count(n_frames: int) -> int:
    raw = os.environ.get("DWMGIPT_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"DWMGIPT_THREADS must be an integer, got {raw!r}")
    if cap < 0:
        raise ValueError("DWMGIPT_THREADS must be >= 0")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_frames))


def _detect_frame(frame_path: str, cfg: RunConfig, out_dir: str, trace: bool) -> dict:
    """Process one frame and atomically publish its output directory."""
    path = Path(frame_path)
    img = read_image(path)
    report = detect(img, cfg)

    out = Path(out_dir)
    tmp = Path(tempfile.mkdtemp(dir=out, prefix=f".tmp-{path.stem}-"))
    try:
        write_pgm(tmp / "target.pgm", report.target_image)
        write_pgm(tmp / "background.pgm", report.background_image)
        write_pgm(tmp / "mask.pgm", report.mask * 255.0)
        if trace:
            n_modes = report.alpha_trace.shape[1] if report.alpha_trace.size else 0
            lines = [CSV_HEADER,
                     "k,residual," + ",".join(f"alpha_{i+1}" for i in range(n_modes)) + ",t_l1"]
            for k in range(len(report.residual_trace)):
                alphas = ",".join(f"{a:.9g}" for a in report.alpha_trace[k])
                lines.append(f"{k},{report.residual_trace[k]:.9g},{alphas},{report.l1_trace[k]:.9g}")
            atomic_write_bytes(tmp / "trace.csv", ("\n".join(lines) + "\n").encode())
        final = out / path.stem
        if final.exists():
            shutil.rmtree(final)
        os.replace(tmp, final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise

    rows = [
        f"{path.stem},{d.cx:.3f},{d.cy:.3f},{d.x0},{d.y0},{d.w},{d.h},{d.peak:.3f},{d.area}"
        for d in report.detections
    ]
    return {
        "stem": path.stem,
        "rows": rows,
        "iterations": report.iterations,
        "seconds": report.wall_time,
    }


def cmd_detect(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except (OSError, ValueError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    try:
        frames = _collect_frames(Path(args.infile))
        workers = _worker_count(len(frames))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_bytes(out / "config.txt", format_config(cfg).encode())

    results, failures = [], []
    if workers == 1:
        for frame in frames:
            try:
                results.append(_detect_frame(str(frame), cfg, str(out), args.trace))
            except Exception as exc:
                failures.append((frame, exc))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {
                pool.submit(_detect_frame, str(frame), cfg, str(out), args.trace): frame
                for frame in frames
            }
            for fut in concurrent.futures.as_completed(futs):
                frame = futs[fut]
                try:
                    results.append(fut.result())
                except Exception as exc:
                    failures.append((frame, exc))

    results.sort(key=lambda r: r["stem"])
    lines = [CSV_HEADER, "frame,cx,cy,x0,y0,w,h,peak,area"]
    for r in results:
        lines.extend(r["rows"])
    atomic_write_bytes(out / "detections.csv", ("\n".join(lines) + "\n").encode())

    for frame, exc in failures:
        print(f"error: {frame}: {exc}", file=sys.stderr)
    if results:
        n_det = sum(len(r["rows"]) for r in results)
        mean_it = np.mean([r["iterations"] for r in results])
        mean_s = np.mean([r["seconds"] for r in results])
        print(
            f"frames={len(results)} detections={n_det} "
            f"mean_iterations={mean_it:.1f} mean_seconds={mean_s:.2f}"
        )
    return 1 if failures else 0


def _read_csv_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    header = None
    rows = []
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
        else:
            rows.append(cells)
    if header is None:
        raise ValueError(f"{path}: empty CSV")
    return header, rows


def _load_annotations(path: Path) -> dict[str, list[TargetBox]]:
    header, rows = _read_csv_rows(path)
    expected = ["frame", "cx", "cy", "a", "b"]
    if [h.lower() for h in header] != expected:
        raise ValueError(f"{path}: expected header {expected}, got {header}")
    out: dict[str, list[TargetBox]] = {}
    for frame, cx, cy, a, b in rows:
        out.setdefault(frame, []).append(
            TargetBox(cx=float(cx), cy=float(cy), a=int(a), b=int(b))
        )
    return out


def _load_detections(path: Path) -> dict[str, list[tuple[float, float]]]:
    _, rows = _read_csv_rows(path)
    out: dict[str, list[tuple[float, float]]] = {}
    for cells in rows:
        out.setdefault(cells[0], []).append((float(cells[1]), float(cells[2])))
    return out


def cmd_eval(args) -> int:
    pred_dir = Path(args.pred)
    try:
        annotations = _load_annotations(Path(args.gt))
        detections = _load_detections(pred_dir / "detections.csv")
        frame_dirs = sorted(p for p in pred_dir.iterdir() if (p / "target.pgm").is_file())
        if not frame_dirs:
            raise FileNotFoundError(f"no frame outputs under {pred_dir}")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    in_dir = Path(args.infile) if args.infile else None

    metric_lines = [CSV_HEADER, "frame,detections,targets,matched,pd,fa,scr_in,scr_out,scrg,bsf"]
    target_images, ann_list = [], []
    scrg_vals, bsf_vals = [], []
    all_dets, all_anns, frame_px = [], [], 0

    for frame_dir in frame_dirs:
        stem = frame_dir.name
        target_img = read_image(frame_dir / "target.pgm")
        anns = annotations.get(stem, [])
        dets = detections.get(stem, [])
        frame_px = target_img.size
        target_images.append(target_img)
        ann_list.append(anns)
        all_dets.append(dets)
        all_anns.append(anns)

        pd_i, fa_i = pd_fa([dets], [anns], frame_px, match_radius=args.match_radius)
        matched = round(pd_i * len(anns))
        cells = [stem, str(len(dets)), str(len(anns)), str(matched), f"{pd_i:.6f}", f"{fa_i:.6g}"]

        original = in_dir / f"{stem}.pgm" if in_dir else None
        if original is not None and original.is_file() and anns:
            in_img = read_image(original)
            s_in = np.mean([scr(in_img, a, args.ring_margin) for a in anns])
            s_out = np.mean([scr(target_img, a, args.ring_margin) for a in anns])
            g = np.mean([scrg(in_img, target_img, a, args.ring_margin) for a in anns])
            s = np.mean([bsf(in_img, target_img, a, args.ring_margin) for a in anns])
            scrg_vals.append(g)
            bsf_vals.append(s)
            cells += [f"{s_in:.6f}", f"{s_out:.6f}", f"{g:.6f}", f"{s:.6f}"]
        else:
            cells += ["", "", "", ""]
        metric_lines.append(",".join(cells))

    curve = roc(target_images, ann_list, match_radius=args.match_radius)
    pd_all, fa_all = pd_fa(all_dets, all_anns, frame_px, match_radius=args.match_radius)

    atomic_write_bytes(out / "metrics.csv", ("\n".join(metric_lines) + "\n").encode())
    roc_lines = [CSV_HEADER, "threshold,fa,pd"]
    for tau, fa_v, pd_v in zip(curve.thresholds, curve.fa, curve.pd):
        roc_lines.append(f"{tau:.6g},{fa_v:.6g},{pd_v:.6f}")
    atomic_write_bytes(out / "roc.csv", ("\n".join(roc_lines) + "\n").encode())

    mean_scrg = np.mean(scrg_vals) if scrg_vals else float("nan")
    mean_bsf = np.mean(bsf_vals) if bsf_vals else float("nan")
    summary = [
        CSV_HEADER,
        "auc,mean_scrg,mean_bsf,pd,fa",
        f"{curve.auc:.6f},{mean_scrg:.6f},{mean_bsf:.6f},{pd_all:.6f},{fa_all:.6g}",
    ]
    atomic_write_bytes(out / "summary.csv", ("\n".join(summary) + "\n").encode())
    print(f"frames={len(frame_dirs)} auc={curve.auc:.4f} pd={pd_all:.4f} fa={fa_all:.3g}")
    return 0


def _parse_scene_spec(text: str) -> tuple[SceneSpec, int]:
    keys = {
        "width": int, "height": int, "background": str, "base_level": float,
        "noise_sigma": float, "seed": int, "frames": int, "targets": str,
    }
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in keys:
            raise ValueError(f"line {lineno}: unknown spec key {key!r}")
        values[key] = keys[key](val)

    frames = values.pop("frames", 1)
    if frames < 1:
        raise ValueError("frames must be >= 1")
    targets = []
    for chunk in values.pop("targets", "").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [float(p) for p in chunk.split(",")]
        if len(parts) != 4:
            raise ValueError(f"target spec needs cx,cy,amplitude,sigma: {chunk!r}")
        targets.append(TargetSpec(cx=parts[0], cy=parts[1], amplitude=parts[2], sigma=parts[3]))
    return SceneSpec(targets=tuple(targets), **values), frames


def cmd_synth(args) -> int:
    try:
        spec, frames = _parse_scene_spec(Path(args.spec).read_text())
    except (OSError, ValueError) as exc:
        print(f"error: invalid scene spec: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ann_lines = [CSV_HEADER, f"# rng={RNG_NAME} base_seed={spec.seed}", "frame,cx,cy,a,b"]
    for idx in range(frames):
        frame_spec = SceneSpec(
            width=spec.width, height=spec.height, background=spec.background,
            base_level=spec.base_level, targets=spec.targets,
            noise_sigma=spec.noise_sigma, seed=spec.seed + idx,
        )
        img, anns = generate(frame_spec)
        stem = f"scene_{idx:03d}"
        write_pgm(out / f"{stem}.pgm", img)
        for a in anns:
            ann_lines.append(f"{stem},{a.cx:.3f},{a.cy:.3f},{a.a},{a.b}")
    atomic_write_bytes(out / "annotations.csv", ("\n".join(ann_lines) + "\n").encode())
    print(f"frames={frames} out={out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dwmgipt", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dwmgipt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="run detection on images")
    p_detect.add_argument("--config", help="key=value config file (defaults when omitted)")
    p_detect.add_argument("--in", dest="infile", required=True, help="image file or directory")
    p_detect.add_argument("--out", required=True, help="output directory")
    p_detect.add_argument("--trace", action="store_true", help="write per-iteration trace.csv")
    p_detect.set_defaults(func=cmd_detect)

    p_eval = sub.add_parser("eval", help="score detection outputs against ground truth")
    p_eval.add_argument("--pred", required=True, help="detect output directory")
    p_eval.add_argument("--gt", required=True, help="annotations CSV (frame,cx,cy,a,b)")
    p_eval.add_argument("--out", required=True, help="output directory")
    p_eval.add_argument("--in", dest="infile", help="directory of original images for SCR/BSF")
    p_eval.add_argument("--match-radius", type=float, default=4.0)
    p_eval.add_argument("--ring-margin", type=int, default=65)
    p_eval.set_defaults(func=cmd_eval)

    p_synth = sub.add_parser("synth", help="generate synthetic scenes")
    p_synth.add_argument("--spec", required=True, help="scene spec file")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
