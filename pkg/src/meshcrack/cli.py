"""Command-line interface: ``meshcrack {detect,score,evaluate,ablate,bench}``."""

import argparse
import logging
import statistics
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DimensionError,
    EmptyObjectError,
    FitError,
    ParameterError,
    UndefinedCorrelationError,
)
from .evaluation import evaluate
from .frames import list_sequence, read_frame, write_png8
from .integration import (
    DEFAULT_BG_TOL,
    DEFAULT_C2,
    DEFAULT_STRIDE,
    crop,
    object_bounding_box,
    pool_external_map,
    score_sequence,
)
from .pcd import (
    PcdConfig,
    ablation_variants,
    compute_crack_map,
    crack_artifact_score,
)
from .qa_models import METRICS, read_qmap

logger = logging.getLogger("meshcrack")

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3

# config-file key -> (parser, default)
_PCD_DEFAULTS = {f.name: f.default for f in fields(PcdConfig)}
SETTINGS = {
    "tad_threshold": (float, _PCD_DEFAULTS["tad_threshold"]),
    "c1": (float, _PCD_DEFAULTS["c1"]),
    "t1": (float, _PCD_DEFAULTS["t1"]),
    "contrast_modulation": ("bool", True),
    "laplacian_modulation": ("bool", True),
    "window_size": (int, _PCD_DEFAULTS["window_size"]),
    "window_sigma": (float, _PCD_DEFAULTS["window_sigma"]),
    "c2": (float, DEFAULT_C2),
    "bg": ("bg", None),
    "bg_tol": (float, DEFAULT_BG_TOL),
    "stride": (int, DEFAULT_STRIDE),
    "threads": (int, 1),
}


class UsageError(Exception):
    pass


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _parse_bg(text):
    if text is None or str(text).strip().lower() == "auto":
        return None
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise UsageError(f"--bg must be in [0, 1] or 'auto', got {text}")
    return v


def _convert(key, raw):
    kind = SETTINGS[key][0]
    try:
        if kind == "bool":
            return _parse_bool(raw)
        if kind == "bg":
            return _parse_bg(raw)
        return kind(raw)
    except ValueError:
        raise UsageError(f"bad value for {key}: {raw!r}") from None


def read_config(path):
    """Read a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SETTINGS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def resolve_settings(args):
    """Defaults, overridden by ``--config``, overridden by explicit flags."""
    settings = {k: default for k, (_, default) in SETTINGS.items()}
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for key in SETTINGS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = _convert(key, value) if isinstance(value, str) else value
    if settings["stride"] < 1:
        raise UsageError("--stride must be >= 1")
    if settings["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    if settings["c2"] <= 0:
        raise UsageError("--c2 must be positive")
    if settings["bg_tol"] < 0:
        raise UsageError("--bg-tol must be nonnegative")
    return settings


def pcd_config(settings):
    return PcdConfig(**{f.name: settings[f.name] for f in fields(PcdConfig)})


def _add_common(p):
    g = p.add_argument_group("detector")
    g.add_argument("--config", help="flat key=value file overriding defaults")
    g.add_argument("--tad-threshold", dest="tad_threshold", type=float,
                   help="zero absolute differences below this (default 0.1)")
    g.add_argument("--c1", type=float, help="contrast stabilizer (default 0.01)")
    g.add_argument("--t1", type=float, help="sigmoid knee (default 2.0)")
    g.add_argument("--no-contrast", dest="contrast_modulation", action="store_const",
                   const=False, help="skip contrast modulation")
    g.add_argument("--no-laplacian", dest="laplacian_modulation", action="store_const",
                   const=False, help="skip Laplacian modulation")
    g.add_argument("--window-size", dest="window_size", type=int,
                   help="local contrast window (default 5)")
    g.add_argument("--window-sigma", dest="window_sigma", type=float,
                   help="local contrast Gaussian sigma (default 1.5)")
    g = p.add_argument_group("pooling")
    g.add_argument("--c2", type=float, help="weight stabilizer (default 0.0001)")
    g.add_argument("--bg", help="background intensity in [0, 1] or 'auto' (default)")
    g.add_argument("--bg-tol", dest="bg_tol", type=float,
                   help="foreground tolerance around the background (default 0.02)")
    g.add_argument("--stride", type=int, help="score every N-th frame (default 10)")
    g.add_argument("--threads", type=int, help="worker threads (default 1)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="meshcrack",
        description="Crack artifact detection and crack-weighted quality scoring "
                    "for rendered 3D mesh snapshots.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress log output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="crack map and CAS for one frame pair")
    p.add_argument("ref")
    p.add_argument("dist")
    p.add_argument("-o", "--output", help="write the crack map as 8-bit PNG")
    p.add_argument("--crop", action="store_true",
                   help="crop both frames to the object's bounding box first")
    p.add_argument("--qmap", help="QMAP file to pool with the crack weights")
    _add_common(p)

    p = sub.add_parser("score", help="base and enhanced scores for two frame sequences")
    p.add_argument("ref_dir")
    p.add_argument("dist_dir")
    p.add_argument("-m", "--metric", action="append", choices=sorted(METRICS),
                   help="base metric (repeatable; default: all)")
    p.add_argument("--full-frame", action="store_true",
                   help="score full frames instead of object crops")
    _add_common(p)

    p = sub.add_parser("evaluate", help="correlate predictions with MOS over a manifest")
    p.add_argument("manifest")
    p.add_argument("-m", "--metric", action="append", choices=sorted(METRICS))
    p.add_argument("--json", dest="json_out", default="report.json")
    p.add_argument("--csv", dest="csv_out", default="report.csv")
    p.add_argument("--full-frame", action="store_true")
    _add_common(p)

    p = sub.add_parser("ablate", help="crack maps of the four ablation variants")
    p.add_argument("ref")
    p.add_argument("dist")
    p.add_argument("out_dir")
    _add_common(p)

    p = sub.add_parser("bench", help="time crack-map computation on random frames")
    p.add_argument("--width", type=int, default=650)
    p.add_argument("--height", type=int, default=550)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    return parser


def _load_pair(ref, dist):
    x = read_frame(ref)
    y = read_frame(dist)
    if x.shape != y.shape:
        raise DimensionError(
            f"{ref} is {x.shape[1]}x{x.shape[0]} but {dist} is {y.shape[1]}x{y.shape[0]}"
        )
    return x, y


def cmd_detect(args, settings, out):
    cfg = pcd_config(settings)
    x, y = _load_pair(args.ref, args.dist)
    if args.qmap:
        base, enhanced = pool_external_map(
            x, y, read_qmap(args.qmap), cfg, settings["c2"], settings["bg"],
            settings["bg_tol"], crop_to_object=args.crop,
        )
    if args.crop:
        rect = object_bounding_box(x, y, settings["bg"], settings["bg_tol"])
        x, y = crop(x, rect), crop(y, rect)
    m = compute_crack_map(x, y, cfg)
    if args.output:
        write_png8(args.output, m)
    print(f"CAS={crack_artifact_score(m):.6f}", file=out)
    if args.qmap:
        print(f"base={base:.6f} enhanced={enhanced:.6f}", file=out)
    return EXIT_OK


def cmd_score(args, settings, out):
    metrics = args.metric or sorted(METRICS)
    ref_paths = list_sequence(args.ref_dir)
    dist_paths = list_sequence(args.dist_dir)
    seq = score_sequence(
        ref_paths, dist_paths, metrics, pcd_config(settings), settings["c2"],
        settings["bg"], settings["bg_tol"], settings["stride"], settings["threads"],
        crop_to_object=not args.full_frame,
    )
    for name in metrics:
        print(f"metric={name} base={seq.base[name]:.6f} "
              f"enhanced={seq.enhanced[name]:.6f} cas={seq.cas:.6f}", file=out)
    return EXIT_OK


def cmd_evaluate(args, settings, out):
    report = evaluate(
        args.manifest, args.metric or sorted(METRICS), pcd_config(settings),
        settings["stride"], settings["c2"], settings["bg"], settings["bg_tol"],
        settings["threads"], crop_to_object=not args.full_frame,
    )
    report.write_json(args.json_out)
    report.write_csv(args.csv_out)
    for r in report.rows:
        if r.error:
            print(f"{r.metric} {r.variant} n={r.n} error={r.error}", file=out)
        else:
            print(f"{r.metric} {r.variant} n={r.n} r_s={r.srcc:.6f} r_p={r.plcc:.6f}",
                  file=out)
    return EXIT_NUMERIC if report.failed() else EXIT_OK


def cmd_ablate(args, settings, out):
    x, y = _load_pair(args.ref, args.dist)
    out_dir = Path(args.out_dir)
    for name, cfg in ablation_variants(pcd_config(settings)).items():
        m = compute_crack_map(x, y, cfg)
        write_png8(out_dir / f"{name}.png", m)
        print(f"variant={name} t1={cfg.t1:g} flagged={int(np.count_nonzero(m))} "
              f"CAS={crack_artifact_score(m):.6f}", file=out)
    return EXIT_OK


def cmd_bench(args, settings, out):
    if args.width < 1 or args.height < 1 or args.iterations < 1:
        raise UsageError("width, height and iterations must be positive")
    cfg = pcd_config(settings)
    rng = np.random.default_rng(args.seed)
    times = []
    for _ in range(args.iterations):
        ref = rng.random((args.height, args.width))
        dist = np.clip(ref + rng.normal(0.0, 0.2, ref.shape), 0.0, 1.0)
        t0 = time.perf_counter()
        compute_crack_map(ref, dist, cfg)
        times.append((time.perf_counter() - t0) * 1000.0)
    print(f"size={args.width}x{args.height} iterations={args.iterations} "
          f"min_ms={min(times):.3f} median_ms={statistics.median(times):.3f} "
          f"mean_ms={statistics.fmean(times):.3f}", file=out)
    return EXIT_OK


COMMANDS = {
    "detect": cmd_detect,
    "score": cmd_score,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "bench": cmd_bench,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](args, settings, out)
    except (FitError, UndefinedCorrelationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ParameterError, DimensionError, EmptyObjectError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
