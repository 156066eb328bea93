"""Command-line front end.

Subcommands ``build``, ``verify``, ``plotdata`` and ``sweep``.  Settings come
from an optional flat ``key = value`` file (``--config``) and are overridden
by flags of the same name.  Exit codes: 0 pass, 1 verification failure,
2 usage or validation error, 3 pipeline failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .construction import (ConstructionError, Counterexample, GridSpec, build_counterexample,
                           build_for_r, normalize)
from .operators import apply_L_direct, extremal
from .params import ProblemParams
from .profiles import Modulus
from .quadrature import QuadConfig
from .verify import TABLE_COLUMNS, VerifyConfig, verify

log = logging.getLogger("nonsymkernel")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_PIPELINE = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Every tunable of a run; keys double as config-file keys and flag names."""

    alpha: float = 0.5
    lam: float = 1.0
    Lam: float = 2.0
    n: int = 1
    epsilon: float | None = None
    C0: float | None = None
    eta: str = "power:1:0.1"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_panels: int = 100_000
    n_linear: int = 128
    exclusion: float = 1e-4
    kink_offset: float = 1e-6
    inner_per_dyad: int = 2
    delta_per_dyad: int = 32
    floor_exp: int = 40
    residual_rel: float = 1e-3
    tol_residual: float | None = None
    plot_points: int = 2048
    plot_xmin: float = -3.0
    plot_xmax: float = 3.0

    def params(self) -> ProblemParams:
        return ProblemParams(self.alpha, self.lam, self.Lam, self.n, C0=self.C0, epsilon=self.epsilon)

    def modulus(self) -> Modulus:
        return Modulus.parse(self.eta)

    def quad(self) -> QuadConfig:
        return QuadConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol, max_panels=self.max_panels)

    def grid(self) -> GridSpec:
        return GridSpec(n_linear=self.n_linear, exclusion=self.exclusion, kink_offset=self.kink_offset,
                        inner_per_dyad=self.inner_per_dyad, delta_per_dyad=self.delta_per_dyad,
                        floor_exp=self.floor_exp)

    def verify_cfg(self) -> VerifyConfig:
        return VerifyConfig(residual_rel=self.residual_rel, tol_residual=self.tol_residual)

    def to_dict(self) -> dict:
        return asdict(self)


# Flag spellings that differ from the field name.
_ALIASES = {"lam": "lambda", "Lam": "Lambda"}
_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(name: str, raw):
    if raw is None or raw == "" or (isinstance(raw, str) and raw.lower() == "none"):
        return None
    kind = str(_FIELDS[name].type)
    try:
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError as exc:
        raise UsageError(f"{name}: cannot parse {raw!r}") from exc
    return str(raw)


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; keys are field names or their flag aliases."""
    text = Path(path).read_text()
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string("[run]\n" + text)
    reverse = {v: k for k, v in _ALIASES.items()}
    out = {}
    for key, raw in cp["run"].items():
        name = reverse.get(key, key)
        if name not in _FIELDS:
            raise UsageError(f"unknown config key {key!r}")
        out[name] = _convert(name, raw)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = _convert(name, v)
    return RunConfig(**values)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    for name, f in _FIELDS.items():
        flag = "--" + _ALIASES.get(name, name)
        p.add_argument(flag, dest=name, default=None, help=f"(default {f.default})")


def _header(cfg: RunConfig, extra: dict | None = None) -> dict:
    return {"config": cfg.to_dict(), **(extra or {})}


def write_json(path, payload: dict) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not serialisable: {type(obj)}")


def write_csv(path, columns, rows, header: dict) -> None:
    """CSV with the run configuration as leading ``#`` comment lines."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in json.dumps(header, default=_json_default, sort_keys=True).splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def load_artifact(path) -> tuple[Counterexample, dict]:
    try:
        with open(path) as fh:
            payload = json.load(fh)
        return Counterexample.from_dict(payload["counterexample"]), payload.get("config", {})
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read artifact {path}: {exc}") from exc


def cmd_build(args) -> int:
    cfg = resolve_config(args)
    ce = build_counterexample(cfg.params(), cfg.modulus(), cfg.quad(), cfg.grid())
    write_json(args.out, {**_header(cfg), "counterexample": ce.to_dict()})
    log.info("wrote %s (r=%g, C0=%g, K=%g)", args.out, ce.r, ce.C0, ce.K_ramp)
    return EXIT_PASS


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    ce, built_with = load_artifact(args.artifact)
    rep = verify(ce, cfg.verify_cfg())
    header = _header(cfg, {"artifact": str(args.artifact), "artifact_config": built_with})
    write_json(args.report, {**header, "report": rep.to_dict()})
    if args.table:
        rows = zip(*(rep.table[c] for c in TABLE_COLUMNS))
        write_csv(args.table, TABLE_COLUMNS, rows, header)
    for c in rep.checks:
        print(f"{c.name:22s} {'pass' if c.passed else 'FAIL'}  value={c.value:.6g}  tol={c.tolerance:.6g}")
    print("overall", "pass" if rep.passed else "FAIL")
    return EXIT_PASS if rep.passed else EXIT_FAIL


PROFILE_COLUMNS = ("x1", "u", "u_raw", "u_bar", "u_r", "v", "w")
OPERATOR_COLUMNS = ("x1", "a", "c", "Lu", "M_plus", "M_minus")


def plot_grid(cfg: RunConfig, kinks) -> np.ndarray:
    xs = np.linspace(cfg.plot_xmin, cfg.plot_xmax, cfg.plot_points)
    for k in kinks:
        xs = xs[np.abs(xs - k) > cfg.kink_offset]
    return xs


def cmd_plotdata(args) -> int:
    cfg = resolve_config(args)
    ce, _ = load_artifact(args.artifact)
    out = Path(args.out_dir)
    xs = plot_grid(cfg, ce.u_raw.kinks)
    u_r, v = ce.u_bar.parts
    header = _header(cfg, {"artifact": str(args.artifact)})
    cols = [xs, ce.u.eval(xs), ce.u_raw.eval(xs), ce.u_bar.eval(xs), u_r.eval(xs), v.eval(xs), ce.w.eval(xs)]
    write_csv(out / "profiles.csv", PROFILE_COLUMNS, zip(*cols), header)

    xo = xs[(np.abs(xs) < 1.0) & (np.abs(xs) > cfg.exclusion)]
    consts = ce.consts
    lu = apply_L_direct(ce.u_raw, ce.a, ce.c, xo, consts).value
    mp = extremal(ce.u_raw, xo, consts, +1, ce.cfg).value
    mm = extremal(ce.u_raw, xo, consts, -1, ce.cfg).value
    write_csv(out / "operators.csv", OPERATOR_COLUMNS, zip(xo, ce.a(xo), ce.c(xo), lu, mp, mm), header)
    log.info("wrote %s/profiles.csv and operators.csv", out)
    return EXIT_PASS


SWEEP_COLUMNS = ("r", "alpha", "status", "C0", "drift_bound", "delta", "K_ramp", "C_w",
                 "a_margin", "c_margin", "ramp_margin", "normalized_gap", "eta_2r", "verified", "error")


def parse_number(text: str) -> float:
    """Float literal or a power such as ``2^-11``."""
    text = text.strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return float(base) ** float(exp)
    return float(text)


def parse_list(text: str | None) -> list[float]:
    if not text:
        return []
    return [parse_number(t) for t in text.split(",") if t.strip()]


def sweep_rows(cfg: RunConfig, r_values=(), alpha_values=(), check: bool = False):
    """One row per run; a failed run is recorded and the sweep continues."""
    jobs = [(r, cfg.alpha) for r in r_values] + [(None, a) for a in alpha_values]
    for r, alpha in jobs:
        row = dict.fromkeys(SWEEP_COLUMNS, "")
        row.update(r=r if r is not None else "", alpha=alpha)
        try:
            p = ProblemParams(alpha, cfg.lam, cfg.Lam, cfg.n, C0=cfg.C0,
                              epsilon=cfg.epsilon if alpha == cfg.alpha else None)
            eta = cfg.modulus()
            if r is None:
                ce = build_counterexample(p, eta, cfg.quad(), cfg.grid())
                row["r"] = ce.r
            else:
                ce = normalize(build_for_r(p, r, eta, cfg.quad(), cfg.grid()))
            m = ce.margins
            row.update(status="ok", C0=ce.C0, drift_bound=m["drift_bound_measured"], delta=ce.delta,
                       K_ramp=ce.K_ramp, C_w=ce.C_w, a_margin=m["a_margin"], c_margin=m["c_margin"],
                       ramp_margin=m["ramp_margin"], normalized_gap=m["normalized_gap"],
                       eta_2r=m["eta_2r"])
            if check:
                row["verified"] = verify(ce, cfg.verify_cfg()).passed
        except (ConstructionError, ValueError) as exc:
            row.update(status="failed", error=str(exc))
        log.info("sweep row %s", row)
        yield row


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    r_values, alpha_values = parse_list(args.r), parse_list(args.alphas)
    if not r_values and not alpha_values:
        raise UsageError("sweep needs --r or --alphas")
    rows = list(sweep_rows(cfg, r_values, alpha_values, args.check))
    header = _header(cfg, {"r_values": r_values, "alpha_values": alpha_values})
    write_csv(args.out, SWEEP_COLUMNS, ([row[c] for c in SWEEP_COLUMNS] for row in rows), header)
    bad = [row for row in rows if row["status"] != "ok" or row["verified"] is False]
    return EXIT_FAIL if bad else EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonsymkernel", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct the counterexample and write its JSON record")
    _add_config_flags(b)
    b.add_argument("--out", default="counterexample.json")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="check a JSON record and write the report")
    v.add_argument("artifact")
    _add_config_flags(v)
    v.add_argument("--report", default="report.json")
    v.add_argument("--table", default="table.csv", help="per-point CSV ('' to skip)")
    v.set_defaults(func=cmd_verify)

    pl = sub.add_parser("plotdata", help="write CSV series of profiles and operators")
    pl.add_argument("artifact")
    _add_config_flags(pl)
    pl.add_argument("--out-dir", default="plotdata")
    pl.set_defaults(func=cmd_plotdata)

    s = sub.add_parser("sweep", help="rebuild over a list of r or alpha values")
    _add_config_flags(s)
    s.add_argument("--r", help="comma list, e.g. 2^-5,2^-8,2^-11")
    s.add_argument("--alphas", help="comma list of alpha values (full pipeline per row)")
    s.add_argument("--check", action="store_true", help="run the verifier on every row")
    s.add_argument("--out", default="sweep.csv")
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConstructionError as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
