"""Loss and distance-to-mean traces for the iterative solvers on one Sphere(2) sample.

The reference mean is a tight-tolerance BB solve.  Writes one SVG and one CSV
per solver into --out.
"""
import argparse
from pathlib import Path

from phimeans import ExpDecay, Measure, SolverConfig, Sphere, base_point, parse_phi, solve
from phimeans.artifacts import TRACE_COLUMNS, write_csv
from phimeans.plots import trace_svg
from phimeans.sampling import isotropic_sample

RUNS = {
    "gd-fixed": ("gradient-descent", SolverConfig(step_size=0.25)),
    "gd-bb": ("gradient-descent", SolverConfig(step_rule="bb")),
    "tangent-flip": ("tangent-flip", SolverConfig()),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--phi", default="power:2")
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/traces")
    args = ap.parse_args(argv)

    s2 = Sphere(2)
    phi = parse_phi(args.phi)
    mu = Measure(s2, isotropic_sample(s2, base_point(s2), ExpDecay(args.kappa), args.n, args.seed))
    ref = solve(phi, mu, "gradient-descent", SolverConfig(step_rule="bb", tol=1e-13)).estimate
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    init = s2.normalize([0.6, 0.0, -1.0])  # start well away from the mean
    for name, (method, cfg) in RUNS.items():
        rep = solve(phi, mu, method, cfg, init=init)
        dist = [float(s2.dist(row.point, ref)) for row in rep.trace]
        rows = [(r.iteration, r.loss, r.step, d) for r, d in zip(rep.trace, dist)]
        write_csv(out / f"{name}.csv", TRACE_COLUMNS, rows)
        (out / f"{name}.svg").write_text(
            trace_svg([r[0] for r in rows], [r[1] for r in rows], dist, f"{name}, {phi}"))
        print(f"{name:13s} {rep.termination.value:10s} iterations={rep.iterations:4d} "
              f"final distance={dist[-1]:.2e}")


if __name__ == "__main__":
    main()
