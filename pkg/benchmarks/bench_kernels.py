"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel with the best-of-N wall time for each backend and
the speed-up, after checking that both backends agree numerically.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from eegbench import _kernels
from eegbench.baselines import emd
from eegbench.dataset import synth_surrogate


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
    c, p = _kernels.compiled, _kernels.python
    rng = np.random.default_rng(0)

    # paper-sized RNN batch: 64 segments x 512 steps, hidden size 1
    xw = rng.standard_normal((64, 512, 4))
    wh = rng.standard_normal((1, 4))
    dh = rng.standard_normal((64, 512, 1))
    fwd = c.lstm_forward(xw, wh)
    assert all(np.allclose(a, b, atol=1e-12) for a, b in zip(fwd, p.lstm_forward(xw, wh)))
    sig = rng.standard_normal(1024)
    assert all(np.array_equal(a, b) for a, b in zip(c.find_extrema(sig), p.find_extrema(sig)))

    cases = {
        "lstm_forward (64x512, H=1)": (lambda: c.lstm_forward(xw, wh), lambda: p.lstm_forward(xw, wh)),
        "lstm_backward (64x512, H=1)": (lambda: c.lstm_backward(dh, wh, *fwd), lambda: p.lstm_backward(dh, wh, *fwd)),
        "find_extrema (1024)": (lambda: c.find_extrema(sig), lambda: p.find_extrema(sig)),
        "count_zero_crossings (1024)": (lambda: c.count_zero_crossings(sig), lambda: p.count_zero_crossings(sig)),
    }

    bank = synth_surrogate("EEG", 10, 0)

    def emd_with(mod):
        saved = _kernels.find_extrema, _kernels.count_zero_crossings
        _kernels.find_extrema, _kernels.count_zero_crossings = mod.find_extrema, mod.count_zero_crossings
        try:
            for i in range(len(bank)):
                emd(bank.segment(i))
        finally:
            _kernels.find_extrema, _kernels.count_zero_crossings = saved

    cases["emd, 10 segments of 512"] = (lambda: emd_with(c), lambda: emd_with(p))

    print(f"{'kernel':32s} {'cython [ms]':>12s} {'python [ms]':>12s} {'speed-up':>9s}")
    for name, (fc, fp) in cases.items():
        tc, tp = best_time(fc, args.repeat), best_time(fp, args.repeat)
        print(f"{name:32s} {1e3 * tc:12.3f} {1e3 * tp:12.3f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
