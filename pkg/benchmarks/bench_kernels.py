"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--samples 4096]

Each case builds a :class:`~polarqo.gcs.Rotator` on one reference state and
times ``rotate_batch`` on random angles and ``loop_phase`` on a circle.
"""

from __future__ import annotations

import argparse
import time
from fractions import Fraction

import numpy as np

from polarqo import kernels
from polarqo.fock import build_basis
from polarqo.gcs import GcsSpec, Rotator, reference_state

CASES = [
    ("semi m=1 p=3", GcsSpec("semi_coherent", p=3, mu=1), 1, 6),
    ("semi m=2 p=2 n=6", GcsSpec("semi_coherent", p=2, mu=0, n=6, t=1), 2, 6),
    ("glauber m=2", GcsSpec("glauber", alpha_plus=(0.6, 0.2j), alpha_minus=(0.3, -0.4)), 2, 14),
    ("x_biphoton m=2", GcsSpec("x_biphoton", p=Fraction(1, 2), zeta=0.2, kappa=0.1), 2, 14),
]


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--samples", type=int, default=4096)
    args = ap.parse_args(argv)

    backends = kernels.available()
    print(f"backends: {', '.join(backends)} (import default: {kernels.BACKEND})")
    rng = np.random.default_rng(0)
    th = rng.uniform(0, np.pi, args.samples)
    ph = rng.uniform(0, 2 * np.pi, args.samples)
    loop_ph = np.linspace(0, 2 * np.pi, args.samples + 1)
    loop_th = np.full_like(loop_ph, 1.0)

    header = f"{'case':<20} {'support':>7} {'kernel':<12}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>9}"
    print(header)
    for label, spec, m, n_max in CASES:
        basis = build_basis(m, n_max)
        psi0 = reference_state(spec, basis).vector
        rots = {b: Rotator(basis, psi0, backend=b) for b in backends}
        for kernel in ("rotate_batch", "loop_phase"):
            row = {}
            for b, rot in rots.items():
                if kernel == "rotate_batch":
                    row[b] = best_of(lambda: rot.batch_sub(th, ph), args.repeat)
                else:
                    row[b] = best_of(lambda: rot.loop_phase(loop_th, loop_ph), args.repeat)
            line = f"{label:<20} {rots[backends[0]].support_dim:>7} {kernel:<12}"
            line += "".join(f"{row[b] * 1e3:>10.2f}ms" for b in backends)
            if len(backends) == 2:
                line += f"{row['python'] / row['compiled']:>8.1f}x"
            print(line)


if __name__ == "__main__":
    main()
