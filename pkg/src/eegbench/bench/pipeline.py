"""Generate, train, evaluate and aggregate: the repetition protocol."""
from __future__ import annotations

import csv
import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__, _kernels, baselines, dsp
from ..dataset import GenerationConfig, SegmentBank, generate_semisynthetic, load_published_banks, synth_surrogate
from ..errors import ConfigError
from ..metrics import EvalReport, anova_oneway, best_worst, evaluate
from ..models import ARCHITECTURES, Model, TrainConfig, build_model, denoise_batch, train
from ..signal_core import Segment
from .config import ExperimentConfig

log = logging.getLogger(__name__)

SURROGATE_BANK_SEED = 2021
METRICS = ("rrmse_t", "rrmse_s", "cc")
_ART_KIND = {"ocular": "EOG", "myogenic": "EMG"}


def _fmt(v) -> str:
    return repr(float(v))


def load_banks(cfg: ExperimentConfig):
    """``(eeg_bank, artifact_bank)`` for the configured task."""
    eeg_fs, eeg_len, art_fs, art_len, n_eeg, n_art = cfg.geometry
    kind = _ART_KIND[cfg.artifact_type]
    if cfg.surrogate:
        eeg = synth_surrogate("EEG", n_eeg, SURROGATE_BANK_SEED, fs=eeg_fs, seg_len=eeg_len)
        art = synth_surrogate(kind, n_art, SURROGATE_BANK_SEED, fs=art_fs, seg_len=art_len)
        return eeg, art
    root = cfg.resolved_data_root()
    try:
        banks = load_published_banks(root)
    except FileNotFoundError as exc:
        raise ConfigError(f"{exc}. Pass --surrogate to run on synthetic banks instead.") from None
    eeg, art = banks["EEG"], banks[kind]
    if cfg.scale == "desk":
        # desk runs on real data: subsample rows and resample to the desk geometry
        eeg = _shrink(eeg, n_eeg, eeg_fs, eeg_len)
        art = _shrink(art, n_art, art_fs, art_len)
    return eeg, art


def _shrink(bank: SegmentBank, rows: int, fs: int, seg_len: int) -> SegmentBank:
    small = SegmentBank(bank.kind, bank.matrix[:rows], bank.fs).resampled(fs)
    m = small.matrix[:, :seg_len]
    m = (m - m.mean(axis=1, keepdims=True)) / m.std(axis=1, keepdims=True)
    return SegmentBank(bank.kind, m, fs)


def build_sets(cfg: ExperimentConfig, seed: int):
    eeg, art = load_banks(cfg)
    gen = GenerationConfig(cfg.artifact_type, cfg.snr_levels, seed=seed)
    return generate_semisynthetic(eeg, art, gen)


def run_dir(out, method, seed) -> Path:
    return Path(out) / "runs" / method / f"seed{seed}"


def _write_series(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_examples(directory: Path, report: EvalReport, test, denoised: np.ndarray):
    best, worst = best_worst(report)
    fs = test.fs
    for tag, idx in (("best", best), ("worst", worst)):
        t = np.arange(test.seg_len) / fs
        _write_series(
            directory / f"example_{tag}.csv",
            ["time_s", "ground_truth", "contaminated", "denoised"],
            zip(t, test.x[idx], test.y[idx], denoised[idx]),
        )
        px, py, pd = (dsp.psd(Segment(v, fs)) for v in (test.x[idx], test.y[idx], denoised[idx]))
        _write_series(
            directory / f"example_{tag}_psd.csv",
            ["freq_hz", "ground_truth", "contaminated", "denoised"],
            zip(px.freqs, px.power, py.power, pd.power),
        )
    return {"best": int(best), "worst": int(worst)}


def _baseline_outputs(method, cfg, test):
    outs = []
    for i in range(len(test)):
        seg = Segment(test.y[i], test.fs)
        if method == "filter":
            outs.append(baselines.filter_denoise(seg, cfg.artifact_type).samples)
        else:
            outs.append(baselines.emd_denoise(seg, cfg.artifact_type).samples)
    return np.vstack(outs)


def train_job(cfg: ExperimentConfig, method: str, seed: int, sets=None):
    """Train one architecture for one repetition; writes convergence.csv and a checkpoint."""
    out = run_dir(cfg.out, method, seed)
    out.mkdir(parents=True, exist_ok=True)
    sets = sets or build_sets(cfg, seed)
    model = build_model(cfg.model_spec(method), seed=seed)
    tcfg = TrainConfig(
        epochs=cfg.epochs_for(method),
        batch_size=cfg.batch_size,
        lr=cfg.lr,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        seed=seed,
    )
    rec = train(model, sets.train, sets.val, tcfg)
    rec.to_csv(out / "convergence.csv")
    model.save(out / "checkpoint")
    return model


def evaluate_job(cfg: ExperimentConfig, method: str, seed: int, sets=None, model=None) -> dict:
    """Score one method on the test split of one repetition.

    Architectures without an in-memory ``model`` are restored from the run's checkpoint.
    """
    out = run_dir(cfg.out, method, seed)
    out.mkdir(parents=True, exist_ok=True)
    sets = sets or build_sets(cfg, seed)
    test = sets.test
    files = ["pairs.csv", "summary.json"]
    if method in ARCHITECTURES:
        if model is None:
            ckpt = out / "checkpoint"
            if not ckpt.is_dir():
                raise ConfigError(f"no checkpoint at {ckpt}; run 'train' first")
            model = Model.load(ckpt)
        files += ["convergence.csv", "checkpoint"]
        denoised = denoise_batch(model, test.y)
    else:
        denoised = _baseline_outputs(method, cfg, test)
    segs = [Segment(d, test.fs) for d in denoised]
    report = evaluate(None, test, name=method, seed=seed, denoised=segs)
    report.write_csv(out / "pairs.csv")
    report.write_json(out / "summary.json")
    examples = _write_examples(out, report, test, denoised)
    files += ["example_best.csv", "example_worst.csv", "example_best_psd.csv", "example_worst_psd.csv"]
    return {
        "method": method,
        "seed": seed,
        "status": "ok",
        "n_pairs": len(report.records),
        "n_failed": report.n_failed,
        "examples": examples,
        "files": [str(Path("runs") / method / f"seed{seed}" / f) for f in files],
    }


def run_job(cfg: ExperimentConfig, method: str, seed: int) -> dict:
    """One (method, repetition) run; writes its own subdirectory."""
    started = time.time()
    sets = build_sets(cfg, seed)
    model = train_job(cfg, method, seed, sets) if method in ARCHITECTURES else None
    result = evaluate_job(cfg, method, seed, sets, model)
    result["seconds"] = round(time.time() - started, 3)
    return result


def _safe_job(args):
    cfg, method, seed = args
    try:
        return run_job(cfg, method, seed)
    except Exception as exc:  # noqa: BLE001 - failure recorded in manifest
        log.exception("run %s/seed%s failed", method, seed)
        return {"method": method, "seed": seed, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}


def read_pairs_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (float(v) if k in ("snr_db",) + METRICS else v) for k, v in r.items()} for r in rows]


def aggregate(out, cfg: ExperimentConfig, runs: list):
    """Write aggregate, band-ratio and ANOVA tables from successful runs."""
    out = Path(out)
    ok = sorted((r for r in runs if r["status"] == "ok"), key=lambda r: (cfg.models.index(r["method"]), r["seed"]))
    per_method: dict = {m: [] for m in cfg.models}
    for r in ok:
        per_method[r["method"]].append(read_pairs_csv(run_dir(out, r["method"], r["seed"]) / "pairs.csv"))

    rows = []
    for method in cfg.models:
        runs_m = per_method[method]
        if not runs_m:
            continue
        for lvl in sorted({p["snr_db"] for run in runs_m for p in run}):
            row = [method, _fmt(lvl)]
            for metric in METRICS:
                means = [np.mean([p[metric] for p in run if p["snr_db"] == lvl]) for run in runs_m]
                row += [_fmt(np.mean(means)), _fmt(np.std(means))]
            row.append(len(runs_m))
            rows.append(row)
    cols = ["method", "snr_db"] + [f"{m}_{s}" for m in METRICS for s in ("mean", "std")] + ["n_runs"]
    with open(out / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        w.writerows(rows)

    # ANOVA over pooled per-pair values: omnibus plus every method pair
    anova_rows = []
    pooled = {
        m: {k: [p[k] for run in per_method[m] for p in run if np.isfinite(p[k])] for k in METRICS}
        for m in cfg.models
        if per_method[m]
    }
    names = list(pooled)
    for metric in METRICS:
        tests = [("ALL", names)] if len(names) > 2 else []
        tests += [(f"{a}|{b}", [a, b]) for a, b in itertools.combinations(names, 2)]
        for label, group in tests:
            try:
                F, p = anova_oneway([pooled[g][metric] for g in group])
                anova_rows.append([metric, label, _fmt(F), _fmt(p)])
            except Exception as exc:  # noqa: BLE001
                anova_rows.append([metric, label, "nan", "nan"])
                log.warning("ANOVA %s %s skipped: %s", metric, label, exc)
    with open(out / "anova.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "groups", "F", "p"])
        w.writerows(anova_rows)

    band_rows = []
    for r in ok:
        summary = json.loads((run_dir(out, r["method"], r["seed"]) / "summary.json").read_text())
        if summary.get("band_ratios"):
            band_rows.append((r["method"], summary["band_ratios"]))
    if band_rows:
        table = {}
        gt = [b["ground_truth"] for _, b in band_rows if b.get("ground_truth")]
        ct = [b["contaminated"] for _, b in band_rows if b.get("contaminated")]
        for method in cfg.models:
            vals = [b["denoised"] for m, b in band_rows if m == method and b.get("denoised")]
            if vals:
                table[method] = np.mean(vals, axis=0)
        table["ground_truth"] = np.mean(gt, axis=0)
        table["contaminated"] = np.mean(ct, axis=0)
        with open(out / "band_ratios.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "delta", "theta", "alpha", "beta", "gamma"])
            for name, v in table.items():
                w.writerow([name] + [_fmt(x) for x in v])


def cmd_benchmark(cfg: ExperimentConfig) -> int:
    """Run every (method, seed) job, aggregate, write the manifest.

    Returns the process exit code: 0 if any run succeeded, 1 otherwise.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    load_banks(cfg)  # surface a missing dataset as a config error before any job starts
    jobs = [(cfg, m, s) for s in cfg.seeds for m in cfg.models]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(_safe_job, jobs))
    else:
        runs = [_safe_job(j) for j in jobs]
    if any(r["status"] == "ok" for r in runs):
        aggregate(out, cfg, runs)
    manifest = {
        "config": cfg.to_dict(),
        "code_version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "runs": runs,
        "outputs": ["aggregate.csv", "anova.csv"] + (["band_ratios.csv"] if (out / "band_ratios.csv").exists() else []),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return 0 if any(r["status"] == "ok" for r in runs) else 1


def cmd_generate(cfg: ExperimentConfig, seed: int | None = None) -> Path:
    seed = cfg.seeds[0] if seed is None else seed
    sets = build_sets(cfg, seed)
    return sets.save(cfg.out)
