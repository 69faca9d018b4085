"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Reports the best-of-N wall time for one loss+gradient evaluation on a
70x9 batch (the default training subset) and for a full 20-run training
sweep, per available backend, plus the speedup of each over the fallback.
"""
import argparse
import timeit

from turnout import _backend
from turnout.dataset import dedupe, encode, split
from turnout.network import init
from turnout.synth import synthesize
from turnout.training import TrainConfig, train


def bench(kern, repeat):
    enc = encode(dedupe(synthesize(100, seed=0, rule="trust", noise=0.05)))
    parts = split(len(enc), (0.70, 0.15, 0.15), seed=0)
    mlp = init(9, 10, 3, seed=0)
    rows = list(parts.train)
    x, t = enc.inputs[rows], enc.targets[rows]
    params = mlp.params()

    number = 2000
    grad = min(timeit.repeat(lambda: kern.loss_grad(*params, x, t), number=number, repeat=repeat)) / number

    def sweep():
        for s in range(20):
            p = split(len(enc), (0.70, 0.15, 0.15), seed=s)
            train(init(9, 10, 3, seed=s), enc, p, TrainConfig(), kernels=kern)

    full = min(timeit.repeat(sweep, number=1, repeat=repeat))
    return grad, full


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5, help="timing repetitions (best is reported)")
    args = ap.parse_args(argv)

    results = {name: bench(_backend.load(name), args.repeat) for name in _backend.available()}
    base = results["python"]
    print(f"{'backend':<8} {'loss_grad (us)':>15} {'20-run sweep (s)':>17} {'speedup':>16}")
    for name, (grad, full) in results.items():
        print(f"{name:<8} {grad * 1e6:15.2f} {full:17.3f}   x{base[0] / grad:5.2f} / x{base[1] / full:5.2f}")
    if "cython" not in results:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
