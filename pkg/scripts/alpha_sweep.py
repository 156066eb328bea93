"""Run the full pipeline and the verifier for several orders alpha.

    python scripts/alpha_sweep.py --alphas 0.25 0.5 0.75 --out results/alpha_sweep.csv
"""
import argparse
import csv
import time
from pathlib import Path

from nonsymkernel import Modulus, ProblemParams, build_counterexample, verify
from nonsymkernel.construction import ConstructionError


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--eta", default="power:1:0.1")
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--out", default="results/alpha_sweep.csv")
    args = ap.parse_args()

    rows = []

    for a in args.alphas:
        t0 = time.perf_counter()
        try:
            ce = build_counterexample(ProblemParams(a, 1.0, 2.0, args.n), Modulus.parse(args.eta))
            rep = verify(ce)
        except ConstructionError as exc:
            print(f"alpha = {a}: construction failed at {exc.stage}: {exc}")
            rows.append((a, "", "", "", "", "", "", f"construction failed at {exc.stage}"))
            continue
        status = "pass" if rep.passed else "FAIL " + ",".join(rep.failures)
        print(f"alpha = {a:<5} r = {ce.r:.3e}  C0 = {ce.C0:10.2f}  K = {ce.K_ramp:g}  "
              f"residual {rep.residual.value:.2e}/{rep.residual.tolerance:.2e}  {status}  "
              f"[{time.perf_counter() - t0:.0f}s]")
        rows.append((a, ce.r, ce.delta, ce.C0, ce.K_ramp, rep.residual.value, rep.residual.tolerance, status))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "r", "delta", "C0", "K_ramp", "residual", "residual_tol", "status"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
