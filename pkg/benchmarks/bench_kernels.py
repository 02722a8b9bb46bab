"""Compiled vs numpy-fallback averaging kernels.

Times one reciprocal-averaging step (``C^c v`` and ``Xu v``) and full
reciprocal-averaging / iterative-CCA runs at the 5,000 x 146 scale of a
disaggregated trade table. A dense ``Xd' (Xu v)`` product is shown for
reference. Usage: ``python3 benchmarks/bench_kernels.py [--n 5000 --m 146]``.
"""

import argparse
import timeit

import numpy as np

from complexity_cca import ca, cca, ingest, kernels, synth


def best_of(fn, number, repeat=5):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=5000, help="products")
    ap.add_argument("--m", type=int, default=146, help="countries")
    ap.add_argument("--density", type=float, default=0.1)
    ap.add_argument("--z", type=int, default=5, help="country variables for CCA")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    sm = synth.random_specialization(rng, args.n, args.m, args.density)
    raw = ingest.RawVariables(tuple(f"v{k}" for k in range(args.z)),
                              {c: tuple(rng.standard_normal(args.z)) for c in sm.country_labels})
    env = ingest.standardize_environment(raw, sm)
    v = rng.standard_normal(args.m)
    pp, pi, cp, ci = sm._prod_ptr, sm._prod_idx, sm._ctry_ptr, sm._ctry_idx
    print(f"matrix {args.n} x {args.m}, {sm.x_plus} ones; compiled extension built: "
          f"{kernels.BACKEND == 'cython'}")

    Xu, Xd = sm.Xu, sm.Xd
    t_dense = best_of(lambda: Xd.T @ (Xu @ v), 50)
    print(f"{'dense numpy reference':<28} step {1e6 * t_dense:9.1f} us")

    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    results = {}
    active = kernels._impl
    for name in backends:
        impl = kernels.implementation(name)
        step = best_of(lambda: kernels.reciprocal_step(pp, pi, cp, ci, v, impl), 200)
        kernels._impl = impl
        try:
            ra = best_of(lambda: ca.reciprocal_averaging(sm), 1, repeat=3)
            it = best_of(lambda: cca.cca_iterative(sm, env), 1, repeat=3)
        finally:
            kernels._impl = active
        results[name] = (step, ra, it)
        print(f"{name + ' kernels':<28} step {1e6 * step:9.1f} us   reciprocal averaging {ra:7.3f} s   "
              f"iterative CCA (z={args.z}) {it:7.3f} s")
    if len(results) == 2:
        (s0, r0, i0), (s1, r1, i1) = results["python"], results["cython"]
        print(f"speed-up (python / cython): step {s0 / s1:.2f}x, RA {r0 / r1:.2f}x, CCA {i0 / i1:.2f}x")
    t_eig = best_of(lambda: cca.cca_eigen(sm, env), 1, repeat=3)
    print(f"{'eigen CCA (reference)':<28} {t_eig:7.3f} s")


if __name__ == "__main__":
    main()
