"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times the per-slot kernels on representative inputs and one complete
scenario (simulate, mask, STAP, score), then prints a table with the speedup.
"""
import argparse
import timeit

import numpy as np

from baton import kernels
from baton.config import ScenarioConfig
from baton.experiment import run_scenario
from baton.geometry import EPS_POS, link_arrays
from baton.sim import default_links


def cases():
    rng = np.random.default_rng(0)
    tx, rx = link_arrays(default_links(4))
    rows = rng.normal(0, 1, (11, 4))
    weight = rng.choice([0.0, 1.0], size=(11, 4))
    anchor = np.array([0.2, -0.3])
    v0 = np.array([0.5, 0.1])
    A, _ = kernels.fresnel_matrix(tx, rx, 0.2, -0.3, EPS_POS)
    r = rng.normal(size=4)
    w = np.ones(4)
    mask = np.array([1, 0, 0, 1], dtype=np.uint8)
    obs = np.where(mask, r, 0.0)
    ones = np.ones(4, dtype=np.uint8)
    pos = rng.uniform(-1, 1, (20, 2))
    vel = rng.normal(0, 1, (20, 2))
    omask = (rng.random((20, 4)) < 0.2).astype(np.uint8)
    robs = np.where(omask, rng.normal(size=(20, 4)), 0.0)
    config = ScenarioConfig(shape="eightshape", seed=1)
    return {
        "fresnel_matrix": lambda: kernels.fresnel_matrix(tx, rx, 0.2, -0.3, EPS_POS),
        "solve_velocity": lambda: kernels.solve_velocity(A, r, w, 1e-3, 2.0, 1e8),
        "dead_reckon (11 rows)": lambda: kernels.dead_reckon(anchor, rows, weight, tx, rx, 0.1, 1e-3, 2.0, 1e8, 4,
                                                             v0, EPS_POS),
        "offset_fit (20 rows)": lambda: kernels.offset_fit(pos, vel, robs, omask, tx, rx, 5.0, 3, EPS_POS),
        "fill_row": lambda: kernels.fill_row(obs, mask, r, ones, w * 0.5, r, r, True, 0.05, 2.0, kernels.MODE_FULL),
        "scenario (8 s, 4 links)": lambda: run_scenario(config),
    }


def measure(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = kernels.available_backends()
    before = kernels.BACKEND
    times = {}
    try:
        for b in backends:
            kernels.set_backend(b)
            for name, fn in cases().items():
                times[name, b] = measure(fn, args.repeat)
    finally:
        kernels.set_backend(before)
    names = list(cases())
    print(f"{'kernel':<26}" + "".join(f"{b:>14}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name in names:
        row = f"{name:<26}" + "".join(f"{times[name, b] * 1e6:>11.1f} us" for b in backends)
        if len(backends) > 1:
            row += f"{times[name, 'python'] / times[name, 'cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
