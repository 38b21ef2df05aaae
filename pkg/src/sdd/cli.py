"""The ``sdd`` command-line tool.

Subcommands::

    sdd synth  --spec scene.json --out DIR
    sdd asce   --in SEQ --out DIR [--sigma S] [--alpha A]
    sdd detect --in SEQ --out DIR [--config FILE] [--KEY VALUE ...]
    sdd eval   --detections CSV --gt CSV --orig SEQ --target SEQ [--out DIR]
    sdd roc    --scores SEQ --gt CSV [--out DIR]

A config file holds ``key = value`` lines (``#`` starts a comment) naming
fields of the solver, pipeline and ASCE settings; ``lambda`` is accepted
for ``lam``.  Any key may also be given as ``--key value`` on the command
line, which wins over the file.  Every run prints its resolved settings.

Exit codes: 0 success, 1 input/output error, 2 usage or config error,
3 solver failure.  ``SDD_THREADS`` caps the number of cubes decomposed in
parallel (0 means one per CPU, unset means 1).
"""

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import io as sio
from .errors import ArgumentError, SceneSpecError, SDDError, SolverFailure, UndefinedMetricError
from .metrics import TargetAnnotation, _windows, bsf, cg, gscr, roc
from .pipeline import PipelineConfig, detect_sequence
from .saliency import AsceParams, asce
from .solver import SolverConfig
from .synth import SceneSpec, generate, standard_scene, target_box

__all__ = ["main", "run", "parse_config_text", "resolve_config", "format_config",
           "CONFIG_KEYS", "EXIT_OK", "EXIT_IO", "EXIT_USAGE", "EXIT_SOLVER"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
ALIASES = {"lambda": "lam"}
# metrics are computed on the 8-bit intensity scale
METRIC_SCALE = 255.0


class UsageError(Exception):
    pass


def _groups():
    return {
        "solver": [f for f in fields(SolverConfig)],
        "pipeline": [f for f in fields(PipelineConfig) if f.name not in ("solver", "asce")],
        "asce": [f for f in fields(AsceParams)],
    }


CONFIG_KEYS = {f.name: group for group, fs in _groups().items() for f in fs}
ASCE_KEYS = [f.name for f in fields(AsceParams)]


def _canonical(key):
    key = key.strip().replace("-", "_")
    return ALIASES.get(key, key)


def _parse_value(key, text):
    text = text.strip()
    default = {**{f.name: f.default for f in fields(SolverConfig)},
               **{f.name: f.default for f in fields(PipelineConfig) if f.name not in ("solver", "asce")},
               **{f.name: f.default for f in fields(AsceParams)}}[key]
    try:
        if key == "alpha":
            parts = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
            if len(parts) == 1:
                parts *= 3
            return tuple(parts)
        if key == "stride":
            return None if text.lower() in ("", "none") else int(text)
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        return float(text)
    except ValueError:
        raise UsageError(f"bad value for config key '{key}': {text!r}") from None


def parse_config_text(text, source="config"):
    """``{key: value}`` from ``key = value`` lines; unknown keys raise UsageError."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        name = _canonical(key)
        if name not in CONFIG_KEYS:
            raise UsageError(f"unknown config key '{key.strip()}' ({source}:{lineno})")
        out[name] = _parse_value(name, value)
    return out


def _parse_overrides(tokens):
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise UsageError(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, value = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise UsageError(f"missing value for {tok}")
            key, value = tok[2:], tokens[i + 1]
            i += 2
        name = _canonical(key)
        if name not in CONFIG_KEYS:
            raise UsageError(f"unknown config key '{key}'")
        out[name] = _parse_value(name, value)
    return out


def resolve_config(values):
    """Build a PipelineConfig from flat ``{key: value}`` settings over the defaults."""
    grouped = {"solver": {}, "pipeline": {}, "asce": {}}
    for key, value in values.items():
        grouped[CONFIG_KEYS[key]][key] = value
    try:
        return PipelineConfig(solver=SolverConfig(**grouped["solver"]),
                              asce=AsceParams(**grouped["asce"]),
                              **grouped["pipeline"])
    except ArgumentError as exc:
        raise UsageError(f"invalid config: {exc}") from exc


def _fmt(value):
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value)


def format_config(cfg):
    lines = []
    for group, obj in (("solver", cfg.solver), ("pipeline", cfg), ("asce", cfg.asce)):
        lines.append(f"# {group}")
        for f in _groups()[group]:
            name = "lambda" if f.name == "lam" else f.name
            lines.append(f"{name} = {_fmt(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def _threads():
    raw = os.environ.get("SDD_THREADS")
    if raw is None or raw.strip() == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SDD_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError("SDD_THREADS must be >= 0")
    return n


def _frame_name(k, suffix):
    return f"frame_{k:04d}{suffix}"


# ---------------------------------------------------------------- synth

def cmd_synth(args, extra):
    if extra:
        raise UsageError(f"unexpected arguments {extra}")
    if (args.spec is None) == (args.standard is None):
        raise UsageError("synth needs exactly one of --spec or --standard")
    if args.spec is not None:
        try:
            spec = SceneSpec.from_dict(json.loads(Path(args.spec).read_text()))
        except OSError as exc:
            raise SDDError(f"{args.spec}: {exc.strerror or exc}") from exc
        except (json.JSONDecodeError, TypeError) as exc:
            raise UsageError(f"{args.spec}: not a scene description ({exc})") from exc
    else:
        spec = standard_scene(args.standard, scr_in=args.scr, noise_std=args.noise)
    frames, gt = generate(spec)
    resolved = json.dumps(spec.to_dict(), indent=2, sort_keys=True)
    print(resolved)
    out = Path(args.out)
    suffix = "." + args.format
    for k, frame in enumerate(frames):
        arr = frame if frame.dtype == np.uint8 else np.rint(np.clip(frame, 0, 255)).astype(np.uint8)
        sio.write_image(out / "frames" / _frame_name(k, suffix), arr)
    rows = [(k, f"{r:.6f}", f"{c:.6f}") for k, cents in enumerate(gt.centroids) for r, c in cents]
    sio.write_csv(out / "gt.csv", ("frame", "row", "col"), rows)
    sio.write_bytes(out / "scene.json", (resolved + "\n").encode())
    return EXIT_OK


# ---------------------------------------------------------------- asce

def cmd_asce(args, extra):
    values = _load_config_file(args.config)
    values.update(_parse_overrides(extra))
    for key in ("sigma", "alpha", "delta"):
        if getattr(args, key) is not None:
            values[key] = _parse_value(key, getattr(args, key))
    bad = [k for k in values if k not in ASCE_KEYS]
    if bad:
        raise UsageError(f"config key '{bad[0]}' does not apply to asce")
    params = resolve_config(values).asce
    print("\n".join(f"{k} = {_fmt(getattr(params, k))}" for k in ASCE_KEYS))
    frames = sio.load_sequence(args.inp)
    out = Path(args.out)
    suffix = "." + args.format
    for k, frame in enumerate(frames):
        sio.write_unit_image(out / _frame_name(k, suffix), asce(frame, params))
    return EXIT_OK


# ---------------------------------------------------------------- detect

def _load_config_file(path):
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SDDError(f"{path}: {exc.strerror or exc}") from exc
    return parse_config_text(text, str(path))


def _write_detect_outputs(out, result, suffix):
    det_rows = []
    for d in result.detections:
        r0, c0, r1, c1 = d.bbox
        det_rows.append((d.frame, f"{d.centroid[0]:.6f}", f"{d.centroid[1]:.6f}",
                         f"{d.score:.6f}", d.area, r0, c0, r1, c1))
    sio.write_csv(out / "detections.csv",
                  ("frame", "row", "col", "score", "area", "r0", "c0", "r1", "c1"), det_rows)
    trace_rows = []
    for ci, trace in enumerate(result.traces):
        if trace is None:
            continue
        for rec in trace.records:
            trace_rows.append((ci, rec.iteration, f"{rec.rel_change:.9e}", f"{rec.residual:.9e}",
                               rec.inner_iters, f"{rec.group_term:.9e}", f"{rec.l1_term:.9e}",
                               f"{rec.temporal_term:.9e}", f"{rec.target_term:.9e}"))
    sio.write_csv(out / "trace.csv",
                  ("cube", "iteration", "rel_change", "residual", "inner_iters",
                   "group_term", "l1_term", "temporal_term", "target_term"), trace_rows)
    for k, (t, f, m) in enumerate(zip(result.target_frames, result.background_frames,
                                      result.masks)):
        if t is None:
            continue
        sio.write_unit_image(out / "target" / _frame_name(k, suffix), t)
        sio.write_unit_image(out / "background" / _frame_name(k, suffix), f)
        sio.write_mask(out / "mask" / _frame_name(k, suffix), m)


def cmd_detect(args, extra):
    values = _load_config_file(args.config)
    values.update(_parse_overrides(extra))
    cfg = resolve_config(values)
    text = format_config(cfg)
    print(text, end="")
    workers = _threads()
    frames = sio.load_sequence(args.inp)
    out = Path(args.out)
    sio.write_bytes(out / "config.txt", text.encode())
    suffix = "." + args.format
    try:
        result = detect_sequence(frames, cfg, workers=workers)
    except SolverFailure as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None:
            _write_detect_outputs(out, partial, suffix)
        print(f"sdd: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write_detect_outputs(out, result, suffix)
    print(f"{len(result.detections)} detections on {len(frames)} frames")
    return EXIT_OK


# ---------------------------------------------------------------- eval / roc

def _read_gt(path, shape, sigma):
    anns = []
    for i, row in enumerate(sio.read_csv(path)):
        try:
            k, r, c = int(row["frame"]), float(row["row"]), float(row["col"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{path}: row {i + 2} is not frame,row,col") from exc
        anns.append(TargetAnnotation(frame=k, bbox=target_box((r, c), sigma, shape),
                                     centroid=(r, c)))
    if not anns:
        raise UsageError(f"{path}: no ground-truth rows")
    return anns


def _read_detections(path):
    dets = {}
    for i, row in enumerate(sio.read_csv(path)):
        try:
            box = tuple(int(row[k]) for k in ("r0", "c0", "r1", "c1"))
            dets.setdefault(int(row["frame"]), []).append(box)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{path}: row {i + 2} is not a detection record") from exc
    return dets


def _safe(fn, *a):
    try:
        return fn(*a)
    except UndefinedMetricError:
        return math.nan


def _num(v):
    return "nan" if not math.isfinite(v) else f"{v:.6f}"


def cmd_eval(args, extra):
    if extra:
        raise UsageError(f"unexpected arguments {extra}")
    print(f"window = {args.window}\nsigma = {args.sigma!r}\nscale = {METRIC_SCALE!r}")
    orig = sio.load_sequence(args.orig)
    target = sio.load_sequence(args.target)
    if len(orig) != len(target) or orig[0].shape != target[0].shape:
        raise SDDError("original and target sequences differ in length or frame size")
    shape = orig[0].shape
    anns = _read_gt(args.gt, shape, args.sigma)
    dets = _read_detections(args.detections)
    rows, stats = [], []
    total_false = 0
    by_frame = {}
    for ann in anns:
        if not 0 <= ann.frame < len(orig):
            raise UsageError(f"ground-truth frame {ann.frame} outside the sequence")
        by_frame.setdefault(ann.frame, []).append(ann)
    for k in range(len(orig)):
        o = orig[k] * METRIC_SCALE
        t = target[k] * METRIC_SCALE
        frame_anns = by_frame.get(k, [])
        wins = _windows(shape, frame_anns, args.window)
        boxes = dets.get(k, [])
        hits = [any(w[r0:r1, c0:c1].any() for r0, c0, r1, c1 in boxes) for w in wins]
        false = sum(1 for r0, c0, r1, c1 in boxes
                    if not any(w[r0:r1, c0:c1].any() for w in wins))
        total_false += false
        for ann, hit in zip(frame_anns, hits):
            vals = (bsf(o, t, ann), _safe(gscr, o, t, ann), _safe(cg, o, t, ann))
            stats.append((*vals, float(hit)))
            r, c = ann.center
            rows.append((k, f"{r:.6f}", f"{c:.6f}", *(_num(v) for v in vals), int(hit), false))
            false = 0  # count a frame's false alarms once
    arr = np.array(stats, dtype=np.float64)
    means = [np.nanmean(arr[:, j]) if np.isfinite(arr[:, j]).any() else math.nan
             for j in range(arr.shape[1])]
    n_false = total_false
    rows.append(("mean", "", "", *(_num(v) for v in means[:3]), _num(means[3]),
                 _num(n_false / len(orig))))
    out = Path(args.out)
    sio.write_csv(out / "metrics.csv",
                  ("frame", "row", "col", "bsf", "gscr", "cg", "detected", "false_alarms"), rows)
    print(f"mean bsf {_num(means[0])}, gscr {_num(means[1])}, cg {_num(means[2])}, "
          f"pd {_num(means[3])}, fa/frame {_num(n_false / len(orig))}")
    return EXIT_OK


def cmd_roc(args, extra):
    if extra:
        raise UsageError(f"unexpected arguments {extra}")
    print(f"window = {args.window}")
    maps = sio.load_sequence(args.scores)
    anns = _read_gt(args.gt, maps[0].shape, 1.0)
    curve = roc(maps, anns, window=args.window)
    rows = [("point", f"{fa:.6f}", f"{pd:.6f}", "") for fa, pd in curve.points]
    rows.append(("auc_raw", "", "", f"{curve.auc_raw:.6f}"))
    rows.append(("auc_normalized", "", "", f"{curve.auc_normalized:.6f}"))
    sio.write_csv(Path(args.out) / "roc.csv", ("kind", "fa", "pd", "value"), rows)
    print(f"auc_raw {curve.auc_raw:.6f}, auc_normalized {curve.auc_normalized:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------- entry

def build_parser():
    p = argparse.ArgumentParser(prog="sdd", description="Infrared small-target detection.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="render a synthetic scene")
    s.add_argument("--spec", help="scene description (JSON)")
    s.add_argument("--standard", type=int, metavar="SEED", help="seeded benchmark scene")
    s.add_argument("--scr", type=float, default=8.0, help="target SCR for --standard")
    s.add_argument("--noise", type=float, default=5.0, help="noise std for --standard")
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=("pgm", "png"), default="pgm")
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("asce", help="saliency maps of a sequence")
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--config")
    a.add_argument("--sigma")
    a.add_argument("--alpha", help="one value or three comma-separated values")
    a.add_argument("--delta")
    a.add_argument("--format", choices=("pgm", "png"), default="png")
    a.set_defaults(func=cmd_asce)

    d = sub.add_parser("detect", help="detect targets in a sequence",
                       epilog="Any config key may be passed as --KEY VALUE.")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--config")
    d.add_argument("--format", choices=("pgm", "png"), default="png")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="per-frame BSF / G_SCR / CG")
    e.add_argument("--detections", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--orig", required=True)
    e.add_argument("--target", required=True)
    e.add_argument("--out", default=".")
    e.add_argument("--sigma", type=float, default=1.0, help="target sigma for the GT boxes")
    e.add_argument("--window", type=int, default=5)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("roc", help="ROC curve of score maps")
    r.add_argument("--scores", required=True)
    r.add_argument("--gt", required=True)
    r.add_argument("--out", default=".")
    r.add_argument("--window", type=int, default=5)
    r.set_defaults(func=cmd_roc)
    return p


def run(argv=None):
    """Run the tool and return its exit code."""
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if extra and args.command not in ("detect", "asce"):
        print(f"sdd {args.command}: unexpected arguments {' '.join(extra)}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, extra)
    except UsageError as exc:
        print(f"sdd {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"sdd {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (SceneSpecError, ArgumentError) as exc:
        print(f"sdd {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SDDError as exc:
        print(f"sdd {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
