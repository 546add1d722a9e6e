"""Turn a benchmark results directory into plot-ready series."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .pipeline import METRICS, read_pairs_csv, run_dir
from .svgplot import line_plot


def _read_csv(path):
    if not path.is_file():
        raise FormatError(f"missing results file {path}", field=str(path))
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except (csv.Error, UnicodeDecodeError) as exc:
        raise FormatError(f"corrupt CSV {path}: {exc}", field=str(path)) from None


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def quartiles(values):
    """``(min, q1, median, q3, max)`` with linear interpolation between order statistics."""
    v = np.asarray(values, dtype=float)
    return tuple(float(q) for q in np.percentile(v, [0, 25, 50, 75, 100]))


def cmd_report(results_dir, svg: bool = True) -> Path:
    results_dir = Path(results_dir)
    mpath = results_dir / "manifest.json"
    if not mpath.is_file():
        raise FormatError(f"missing results file {mpath}", field=str(mpath))
    try:
        manifest = json.loads(mpath.read_text())
        runs = [r for r in manifest["runs"] if r["status"] == "ok"]
        methods = manifest["config"]["models"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise FormatError(f"corrupt manifest {mpath}: {exc}", field=str(mpath)) from None
    out = results_dir / "report"
    out.mkdir(exist_ok=True)

    # loss curves: mean over repetitions, one row per epoch
    curves = {}
    for method in methods:
        files = [run_dir(results_dir, method, r["seed"]) / "convergence.csv" for r in runs if r["method"] == method]
        if not files or not files[0].exists():
            continue
        tables = [_read_csv(f) for f in files]
        n_epochs = len(tables[0])
        if any(len(t) != n_epochs for t in tables):
            raise FormatError(f"convergence files for {method} have differing lengths", field=method)
        tr = np.mean([[float(r["train_loss"]) for r in t] for t in tables], axis=0)
        va = np.mean([[float(r["val_loss"]) for r in t] for t in tables], axis=0)
        _write(out / f"loss_{method}.csv", ["epoch", "train_loss", "val_loss"],
               [[i + 1, repr(float(a)), repr(float(b))] for i, (a, b) in enumerate(zip(tr, va))])
        curves[method] = (tr, va)

    agg = _read_csv(results_dir / "aggregate.csv")
    agg.sort(key=lambda r: (methods.index(r["method"]), float(r["snr_db"])))
    _write(out / "metric_vs_snr.csv", ["method", "snr_db"] + [f"{m}_mean" for m in METRICS],
           [[r["method"], r["snr_db"]] + [r[f"{m}_mean"] for m in METRICS] for r in agg])

    box_rows = []
    for method in methods:
        vals = {m: [] for m in METRICS}
        for r in runs:
            if r["method"] != method:
                continue
            path = run_dir(results_dir, method, r["seed"]) / "pairs.csv"
            if not path.is_file():
                raise FormatError(f"missing results file {path}", field=str(path))
            for p in read_pairs_csv(path):
                for m in METRICS:
                    vals[m].append(p[m])
        for m in METRICS:
            if vals[m]:
                box_rows.append([method, m] + [repr(q) for q in quartiles(vals[m])])
    _write(out / "boxplot.csv", ["method", "metric", "min", "q1", "median", "q3", "max"], box_rows)

    examples = {}
    for r in runs:
        if r["method"] in examples:
            continue
        d = run_dir(results_dir, r["method"], r["seed"])
        examples[r["method"]] = {
            "seed": r["seed"],
            "pair_index": r.get("examples", {}),
            **{f"{tag}{suffix}": str((d / f"example_{tag}{suffix}.csv").relative_to(results_dir))
               for tag in ("best", "worst") for suffix in ("", "_psd")},
        }
    (out / "examples.json").write_text(json.dumps(examples, indent=1, sort_keys=True) + "\n")

    if svg:
        if curves:
            line_plot({f"{m} train": (np.arange(1, len(t) + 1), t) for m, (t, _) in curves.items()}
                      | {f"{m} val": (np.arange(1, len(v) + 1), v) for m, (_, v) in curves.items()},
                      out / "loss.svg", "MSE loss vs epoch", "epoch", "MSE")
        for metric in METRICS:
            series = {}
            for method in methods:
                rows = [r for r in agg if r["method"] == method]
                if rows:
                    series[method] = ([float(r["snr_db"]) for r in rows], [float(r[f"{metric}_mean"]) for r in rows])
            if series:
                line_plot(series, out / f"{metric}_vs_snr.svg", f"{metric} vs SNR", "SNR (dB)", metric)
    return out
