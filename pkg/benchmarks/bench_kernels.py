"""Time the compiled kernels against the numpy reference backend.

Run from a checkout with the package installed:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --hidden 128 --length 2000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pdfinger.kernels import available_backends


def make_inputs(hidden: int, vocab: int, length: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    r = 1.0 / np.sqrt(hidden)
    wh = rng.uniform(-r, r, size=(4 * hidden, hidden))
    wx = rng.uniform(-r, r, size=(4 * hidden, vocab))
    b = rng.uniform(-r, r, size=4 * hidden)
    x = rng.integers(0, vocab, size=length)
    dh = rng.normal(size=(length, hidden))
    lam = rng.normal(size=(length, 5))
    sel = rng.integers(0, 3, size=length).astype(np.int8)
    up = rng.normal(size=(5, 5))
    down = rng.normal(size=(5, 5))
    dlogits = rng.normal(size=(length, 5))
    return dict(wh=wh, wx=wx, b=b, x=x, dh=dh, lam=lam, sel=sel,
                up=up, down=down, dlogits=dlogits)


def bench(fn, repeats: int) -> float:
    """Best wall time over ``repeats`` calls, in seconds."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_calls(module, inputs):
    h, c, gates = module.lstm_forward(inputs["wh"], inputs["wx"], inputs["b"], inputs["x"])
    yhat = module.transition_forward(inputs["lam"], inputs["sel"],
                                     inputs["up"], inputs["down"])
    return {
        "lstm_forward": lambda: module.lstm_forward(
            inputs["wh"], inputs["wx"], inputs["b"], inputs["x"]),
        "lstm_backward": lambda: module.lstm_backward(
            inputs["wh"], inputs["wx"], inputs["x"], h, c, gates, inputs["dh"]),
        "transition_forward": lambda: module.transition_forward(
            inputs["lam"], inputs["sel"], inputs["up"], inputs["down"]),
        "transition_backward": lambda: module.transition_backward(
            yhat, inputs["sel"], inputs["up"], inputs["down"], inputs["dlogits"]),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--hidden", type=int, default=64)
    parser.add_argument("--vocab", type=int, default=100)
    parser.add_argument("--length", type=int, default=1000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)

    backends = available_backends()
    inputs = make_inputs(args.hidden, args.vocab, args.length)
    print(f"hidden {args.hidden}, vocab {args.vocab}, length {args.length}, "
          f"best of {args.repeats}")
    print(f"backends: {', '.join(sorted(backends))}")
    if "fast" not in backends:
        print("compiled extension not built; timing the reference backend only")

    times: dict[str, dict[str, float]] = {}
    for name, module in sorted(backends.items()):
        calls = kernel_calls(module, inputs)
        times[name] = {kernel: bench(fn, args.repeats) for kernel, fn in calls.items()}

    header = f"{'kernel':22s} " + " ".join(f"{n + ' (ms)':>16s}" for n in sorted(times))
    if len(times) == 2:
        header += f" {'speedup':>9s}"
    print()
    print(header)
    for kernel in ("lstm_forward", "lstm_backward",
                   "transition_forward", "transition_backward"):
        row = f"{kernel:22s} "
        row += " ".join(f"{times[n][kernel] * 1e3:16.3f}" for n in sorted(times))
        if len(times) == 2:
            row += f" {times['reference'][kernel] / times['fast'][kernel]:8.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
