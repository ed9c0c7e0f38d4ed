"""Compare the compiled and NumPy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per kernel for each backend and the speedup.
"""
import argparse
import timeit

import numpy as np

from foilgen import _pykernels
from foilgen.aero import _contour_nodes
from foilgen.data import fixture_paths
from foilgen.geometry import canonicalize, read_profile

try:
    from foilgen import _ckernels
except ImportError:
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    profiles = [canonicalize(read_profile(p)) for p in fixture_paths()]
    stack = np.stack([p.points for p in profiles] * 8)  # 128 training profiles
    query = profiles[5].points.copy()
    a, b = rng.random((200, 2)), rng.random((200, 2))
    nodes = _contour_nodes(profiles[9])
    return {
        "chamfer (200 x 200 points)": lambda m: m.chamfer(a, b),
        "chamfer_one_to_many (1 vs 128 profiles)": lambda m: m.chamfer_one_to_many(query, stack),
        "vortex_stream_influence (199 nodes)": lambda m: m.vortex_stream_influence(nodes),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=10)
    args = ap.parse_args()
    backends = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled extension not built; timing the NumPy backend only")
    print(f"{'kernel':42s} " + " ".join(f"{name:>12s}" for name, _ in backends) + "   speedup")
    for label, fn in cases().items():
        times = []
        for _, mod in backends:
            t = min(timeit.repeat(lambda: fn(mod), repeat=args.repeat, number=args.number)) / args.number
            times.append(t)
        speed = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else ""
        print(f"{label:42s} " + " ".join(f"{t * 1e3:10.3f}ms" for t in times) + f"  {speed}")


if __name__ == "__main__":
    main()
