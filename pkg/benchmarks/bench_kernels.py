"""Compare the compiled and numpy kernels on representative sizes.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from popper_sim import _backend


def _cases(rng):
    n = 2048
    src = rng.normal(size=n) + 1j * rng.normal(size=n)
    w = np.full(n, 2e-6)
    y = (np.arange(n) - n // 2) * 2e-6
    k = 2 * np.pi / 633e-9
    rows = rng.normal(size=(16, 32768)) + 1j * rng.normal(size=(16, 32768))
    return {
        "fresnel_direct 2048x2048": lambda m: m.fresnel_direct(src, w, y, y, k, 0.05),
        "accumulate_intensity 16x32768": lambda m: m.accumulate_intensity(rows),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    backends = _backend.available_backends()
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':32s}" + "".join(f"{name:>14s}" for name in backends) + "   speedup")
    for label, fn in cases.items():
        times = {}
        for name, mod in backends.items():
            fn(mod)  # warm-up
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{label:32s}" + "".join(f"{t * 1e3:12.2f}ms" for t in times.values())
        if "cython" in times:
            row += f"   {times['python'] / times['cython']:6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
