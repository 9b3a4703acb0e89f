"""Command line: ``nashlab {verify,solve,sweep,radial,fit}``.

Exit codes: 0 success, 2 contract violation, 1 I/O or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_IO, EXIT_CONTRACT = 0, 1, 2


class ContractViolation(RuntimeError):
    pass


def _out_dir(args, default: str) -> Path:
    path = Path(args.out or default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(args):
    from .sweep import SweepConfig

    cfg = SweepConfig.from_toml(args.config) if args.config else SweepConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    return replace(cfg, **changes) if changes else cfg


# -- subcommands -------------------------------------------------------------


def cmd_verify(args) -> int:
    from .corpus import calibrated_closure, convolution_suite, dilated_bump_corpus, run_family
    from .inequalities import build_phi_integral, build_phi_log, build_upsilon, write_reports
    from .spectral import GridSpec

    out = _out_dir(args, "verify_out")
    grid = GridSpec(args.n)
    problems = []

    conv = convolution_suite(grid, n_f=args.samples, seed=args.seed or 0)
    write_reports(out / "convolution.jsonl", conv)
    worst = max(r.ratio for r in conv)
    print(f"convolution bound: {len(conv)} pairs, max ratio {worst:.4f}")
    if worst > 1 + 5e-2:
        problems.append(f"convolution ratio {worst:.4f} exceeds 1.05")

    results = [run_family(fam) for fam in dilated_bump_corpus(grid)]
    write_reports(out / "corpus.jsonl", [rep for res in results for rep in res.reports])
    for res in results:
        print(f"  {res.name:10s} K={res.mass_bound:.3f} projection={res.projection_constant:.4g} "
              f"nash={res.nash_constant:.4g}")
    closure = calibrated_closure(results)
    bad = [c for c in closure if not c["ok"]]
    print(f"calibrated closure: {len(closure)} members, {len(bad)} violations")
    if bad:
        problems.append(f"{len(bad)} closure violations")

    phi = build_phi_integral(lambda r: np.ones_like(np.asarray(r, dtype=float)), 1.0)
    ups = build_upsilon(phi)
    xs = np.geomspace(1.3e-4, 7e9, 57)
    rt = max(abs(ups(phi(x)) / x**2 - 1) for x in xs)
    plog = build_phi_log(1.0, 1.0)
    print(f"Phi round trip max rel err {rt:.2e}; log form L = {plog.extras['L']:.6f}")
    if rt > 1e-8:
        problems.append(f"Upsilon round trip error {rt:.2e}")

    with open(out / "verify_summary.json", "w") as fh:
        json.dump({"convolution_max_ratio": worst, "closure_violations": len(bad),
                   "phi_roundtrip": rt, "log_L": plog.extras["L"], "problems": problems}, fh, indent=2)
    if problems:
        raise ContractViolation("; ".join(problems))
    return EXIT_OK


def cmd_solve(args) -> int:
    from .sweep import run_one

    cfg = _load_config(args)
    nu = args.nu if args.nu is not None else cfg.nu_list[0]
    out = _out_dir(args, cfg.output_dir)
    rec = run_one(cfg, nu, out)
    print(json.dumps({k: getattr(rec, k) for k in ("nu", "zeta_total", "zeta_delta",
                                                   "energy0", "energyT", "balance_residual",
                                                   "status", "error")}, indent=2))
    if not rec.ok:
        raise ContractViolation(rec.error)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import run_sweep, verify_no_diracs

    cfg = _load_config(args)
    out = _out_dir(args, cfg.output_dir)
    records = run_sweep(cfg, out)
    for r in records:
        print(f"nu={r.nu:<10.4g} status={r.status:6s} zeta={r.zeta_total:.6g} "
              f"zeta_delta={r.zeta_delta:.6g} residual={r.balance_residual:.2e}")
    failed = [r for r in records if not r.ok]
    if failed:
        raise ContractViolation(f"{len(failed)} run(s) failed: {failed[0].error}")
    inverted = [r.nu for r in records if r.zeta_delta > r.zeta_total * (1 + 1e-12)]
    if inverted:
        raise ContractViolation(f"zeta_delta > zeta_total for nu in {inverted}")
    rep = verify_no_diracs(records)
    print(f"concentration at r={rep.radii[-1]:g}: {rep.smallest_radius_value:.4g} "
          f"(max {rep.max_value:.4g}, threshold check {'passed' if rep.ok else 'flagged'})")
    return EXIT_OK


def cmd_radial(args) -> int:
    from .radial import (
        UnitHeatFlow,
        anomalous_dissipation,
        anomalous_dissipation_direct,
        dissipation_hankel,
        make_annular_profile,
        write_zeta_table,
    )

    out = _out_dir(args, "radial_out")
    phi = make_annular_profile()
    if abs(phi.moment()) > 1e-10 or abs(phi.l1() - 1) > 1e-10:
        raise ContractViolation("annular profile misses its integral constraints")
    phi.write_csv(out / "profile.csv")
    flow = UnitHeatFlow(phi)
    rows = []
    for nu in args.nu:
        z = anomalous_dissipation(phi, nu, args.T, flow)
        rows.append((nu, z, "rescaled"))
        print(f"nu={nu:<8g} zeta={z:.10g}")
    c_inf = flow.limit()
    rows.append((0.0, c_inf, "limit"))
    c_hankel = dissipation_hankel(phi)
    rows.append((0.0, c_hankel, "hankel"))
    print(f"C_inf = {c_inf:.10g} (Hankel route {c_hankel:.10g})")
    if args.check_nu:
        direct = anomalous_dissipation_direct(phi, args.check_nu, args.T)
        resc = anomalous_dissipation(phi, args.check_nu, args.T, flow)
        rows.append((args.check_nu, direct, "direct"))
        rel = abs(direct - resc) / resc
        print(f"direct vs rescaled at nu={args.check_nu:g}: rel diff {rel:.2e}")
        if rel > 1e-3:
            raise ContractViolation(f"scaling cross-check off by {rel:.2e}")
    write_zeta_table(out / "zeta.csv", rows)
    return EXIT_OK


def cmd_fit(args) -> int:
    from .sweep import ConfigError, fit_log_rate, read_summary

    try:
        records = read_summary(args.summary)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{args.summary}: {exc}") from None
    try:
        fit = fit_log_rate(records, args.delta)
    except ValueError as exc:
        raise ContractViolation(str(exc)) from None
    payload = fit.to_dict()
    print(json.dumps(payload, indent=2))
    if args.out:
        with open(_out_dir(args, args.out) / "fit.json", "w") as fh:
            json.dump(payload, fh, indent=2)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nashlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", type=Path, help="TOML configuration file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="override the configured seed (u64)")

    v = sub.add_parser("verify", help="inequality suites over the built-in corpora")
    common(v, config=False)
    v.add_argument("--n", type=int, default=128, help="grid size")
    v.add_argument("--samples", type=int, default=100, help="random f in the convolution suite")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", help="single solver run")
    common(s)
    s.add_argument("--nu", type=float, help="viscosity (default: first of nu_list)")
    s.set_defaults(func=cmd_solve, workers=None)

    w = sub.add_parser("sweep", help="multi-viscosity sweep")
    common(w)
    w.add_argument("--workers", type=int, help="concurrent runs")
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("radial", help="planar radial example with non-vanishing dissipation")
    common(r, config=False)
    r.add_argument("--nu", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005])
    r.add_argument("--T", type=float, default=1.0)
    r.add_argument("--check-nu", type=float, default=0.1,
                   help="viscosity for the direct cross-check (0 disables)")
    r.set_defaults(func=cmd_radial)

    f = sub.add_parser("fit", help="|log nu|^(-1/4) fit of an existing sweep summary")
    f.add_argument("summary", type=Path, help="summary.csv from a sweep")
    f.add_argument("--delta", type=float)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    from .sweep import ConfigError

    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_IO
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_IO
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
