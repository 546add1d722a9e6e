"""``eegbench`` command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError, EEGBenchError, FormatError
from ..models import ARCHITECTURES
from .config import METHODS, load_config_file, make_config
from .pipeline import cmd_benchmark, cmd_generate, evaluate_job, train_job
from .report import cmd_report

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=_u64, help="single repetition seed (overrides the seed list)")
    p.add_argument("--scale", choices=("desk", "paper"))
    p.add_argument("--artifact", choices=("ocular", "myogenic"))
    p.add_argument("--surrogate", action="store_true", default=None, help="use synthetic signal banks")
    p.add_argument("--out", help="output directory")
    p.add_argument("--models", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--data-root", help="dataset directory (default: $EEGBENCH_DATA)")
    p.add_argument("--workers", type=int)


def build_parser():
    ap = argparse.ArgumentParser(prog="eegbench", description="EEG artifact-removal benchmark")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (
        ("generate", "write train/val/test sets for one seed"),
        ("train", "train the selected networks"),
        ("evaluate", "score methods on the test split"),
        ("benchmark", "full repetition protocol with aggregation"),
    ):
        _common(sub.add_parser(name, help=text))
    rp = sub.add_parser("report", help="plot-ready series from a results directory")
    rp.add_argument("results_dir")
    rp.add_argument("--no-svg", action="store_true")
    return ap


def config_from_args(args):
    file_values = load_config_file(args.config) if args.config else {}
    flags = {
        "scale": args.scale,
        "artifact_type": args.artifact,
        "surrogate": args.surrogate,
        "out": args.out,
        "data_root": args.data_root,
        "workers": args.workers,
    }
    if args.seed is not None:
        flags["seeds"] = (args.seed,)
    if args.models:
        flags["models"] = tuple(m.strip() for m in args.models.split(",") if m.strip())
    return make_config(file_values, **flags)


def _run_each(cfg, methods, fn):
    ok = 0
    for seed in cfg.seeds:
        for m in methods:
            try:
                fn(cfg, m, seed)
                ok += 1
            except ConfigError:
                raise
            except Exception as exc:  # noqa: BLE001
                logging.getLogger("eegbench").error("%s seed %d failed: %s", m, seed, exc)
    return EXIT_OK if ok else EXIT_FAILURE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            out = cmd_report(args.results_dir, svg=not args.no_svg)
            print(out)
            return EXIT_OK
        cfg = config_from_args(args)
        if args.command == "generate":
            print(cmd_generate(cfg, args.seed))
            return EXIT_OK
        if args.command == "train":
            archs = [m for m in cfg.models if m in ARCHITECTURES]
            if not archs:
                raise ConfigError("no trainable networks selected")
            return _run_each(cfg, archs, train_job)
        if args.command == "evaluate":
            return _run_each(cfg, cfg.models, evaluate_job)
        return cmd_benchmark(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except EEGBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
