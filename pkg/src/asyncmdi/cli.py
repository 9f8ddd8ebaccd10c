"""Command-line interface.

Subcommands::

    asyncmdi scan      --config FILE [--distance A:B:STEP] [--no-optimize]
    asyncmdi optimize  --config FILE [--distance D]
    asyncmdi mc        --config FILE [--distance D] [--n-sim N]
    asyncmdi hom       --delta-v A:B:STEP [--tau S]
    asyncmdi drift     --tc A:B:STEP --delta-v V[,V...] [--fiber-drift R]

Output is CSV (or JSON for ``optimize``) on stdout unless ``--output`` is
given. Exit codes: 0 success, 2 no feasible point, 3 configuration error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from asyncmdi.drift import effective_misalignment, hom_curve, intrinsic_error
from asyncmdi.exceptions import DomainError, NumericError, ParameterError
from asyncmdi.keyrate import evaluate
from asyncmdi.montecarlo import simulate, validate
from asyncmdi.optimizer import SearchSpace, optimize
from asyncmdi.scenario import ConfigError, ScenarioFile, load_scenario

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4

SCAN_COLUMNS = ["distance_km", "rate_per_pulse", "rate_bps", "ell_bits", "e11x", "phi11z", "Ez", "plob", "feasible"]
PARAM_COLUMNS = ["mu_a", "nu_a", "p_mu_a", "p_nu_a", "p_o_a", "p_ohat_a",
                 "mu_b", "nu_b", "p_mu_b", "p_nu_b", "p_o_b", "p_ohat_b"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _range(text: str, name: str) -> tuple[float, float, float]:
    try:
        parts = [float(p) for p in text.split(":")]
    except ValueError:
        raise ConfigError(f"{name} must look like START:STOP:STEP") from None
    if len(parts) != 3 or parts[2] <= 0:
        raise ConfigError(f"{name} must look like START:STOP:STEP with STEP > 0")
    return parts[0], parts[1], parts[2]


def _grid(start: float, stop: float, step: float) -> list[float]:
    if stop < start:
        return []
    count = int((stop - start) / step + 1e-9) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _search_space(sf: ScenarioFile, seed: int) -> SearchSpace:
    o = sf.optimizer
    return SearchSpace(mu_a=o.mu_bounds, nu_a=o.nu_bounds, mu_b=o.mu_bounds, nu_b=o.nu_bounds,
                       logit_lo=o.logit_bounds[0], logit_hi=o.logit_bounds[1], seed=seed,
                       population=o.population, generations=o.generations, repair_tries=o.repair_tries)


def _scan_point(sf: ScenarioFile, distance: float, seed: int, use_opt: bool, warm=None):
    sc = sf.scenario.at_distance(distance, min(sf.run.asymmetry_km, distance))
    if use_opt:
        res = optimize(sc, _search_space(sf, seed), warm)
        return res.result, res.source_a, res.source_b, res.genes
    return evaluate(sc), sc.source_a, sc.source_b, None


def _scan_row(distance, result, src_a, src_b, diagnostics: bool):
    d = result.diagnostics
    row = [distance, result.rate_per_pulse, result.rate_bps, result.ell, d["e11_x_upper"],
           d["phi11_z_upper"], d["E_z"], d["plob"], result.feasible]
    row += [src_a.as_dict()[k] for k in ("mu", "nu", "p_mu", "p_nu", "p_o", "p_ohat")]
    row += [src_b.as_dict()[k] for k in ("mu", "nu", "p_mu", "p_nu", "p_o", "p_ohat")]
    if diagnostics:
        row += [d[k] for k in sorted(d)]
    return row


def _pool_point(args):
    sf, distance, seed, use_opt = args
    result, a, b, _ = _scan_point(sf, distance, seed, use_opt)
    return result, a, b


def _apply_overrides(sf: ScenarioFile, args) -> ScenarioFile:
    run = sf.run
    if getattr(args, "seed", None) is not None:
        run = replace(run, seed=args.seed)
    sc = sf.scenario
    if getattr(args, "mode", None):
        sc = replace(sc, matching=replace(sc.matching, mode=args.mode))
    return ScenarioFile(sc, sf.optimizer, run)


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def cmd_scan(args) -> int:
    sf = _apply_overrides(load_scenario(args.config), args)
    if args.distance:
        distances = _grid(*_range(args.distance, "--distance"))
    else:
        distances = sf.run.distances()
    use_opt = sf.optimizer.enabled and not args.no_optimize
    seed = sf.run.seed
    results = []
    workers = args.workers or sf.run.workers
    if workers > 1 and len(distances) > 1:
        jobs = [(sf, d, _point_seed(seed, i), use_opt) for i, d in enumerate(distances)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_pool_point, jobs))
    else:
        warm = None
        for i, d in enumerate(distances):
            result, a, b, genes = _scan_point(sf, d, _point_seed(seed, i), use_opt,
                                              warm if sf.optimizer.warm_start else None)
            warm = genes if result.feasible else warm
            results.append((result, a, b))
    header = SCAN_COLUMNS + PARAM_COLUMNS
    if args.emit_diagnostics and results:
        header = header + [f"diag_{k}" for k in sorted(results[0][0].diagnostics)]
    rows = [_scan_row(d, r, a, b, args.emit_diagnostics) for d, (r, a, b) in zip(distances, results)]
    _write(_csv(header, rows), args.output)
    if distances and not any(r.feasible for r, _, _ in results):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _single_distance(sf: ScenarioFile, text: str | None) -> float:
    if text is None:
        return sf.run.distance_start
    try:
        return float(text)
    except ValueError:
        raise ConfigError("--distance must be a number for this command") from None


def cmd_optimize(args) -> int:
    sf = _apply_overrides(load_scenario(args.config), args)
    distance = _single_distance(sf, args.distance)
    result, a, b, _ = _scan_point(sf, distance, sf.run.seed, not args.no_optimize)
    report = {
        "distance_km": distance,
        "source_a": a.as_dict(),
        "source_b": b.as_dict(),
        "rate_per_pulse": result.rate_per_pulse,
        "rate_bps": result.rate_bps,
        "ell_bits": result.ell,
        "feasible": result.feasible,
        "eps_sec": result.eps_sec,
        "eps_total": result.eps_total,
        "Nbar_c2": result.Nbar_c2,
    }
    if args.emit_diagnostics:
        report["diagnostics"] = result.diagnostics
    _write(json.dumps(report, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_mc(args) -> int:
    sf = _apply_overrides(load_scenario(args.config), args)
    distance = _single_distance(sf, args.distance)
    sc = sf.scenario.at_distance(distance, min(sf.run.asymmetry_km, distance))
    n_sim = int(args.n_sim if args.n_sim is not None else sf.run.N_sim)
    sim = simulate(sc, n_sim, sf.run.seed)
    report = validate(sim)
    _write(report.to_csv(), args.output)
    failed = report.failures()
    print(f"{len(report.checks) - len(failed)}/{len(report.checks)} checks within "
          f"{report.significance:g} standard errors", file=sys.stderr)
    return EXIT_OK


def cmd_hom(args) -> int:
    dvs = _grid(*_range(args.delta_v, "--delta-v"))
    vis, err = hom_curve(np.asarray(dvs, dtype=float), args.tau)
    rows = [(dv, v, e) for dv, v, e in zip(dvs, np.atleast_1d(vis), np.atleast_1d(err))]
    _write(_csv(["delta_v_hz", "visibility", "error_rate"], rows), args.output)
    return EXIT_OK


def cmd_drift(args) -> int:
    from asyncmdi.drift import FREE, DriftConfig

    tcs = _grid(*_range(args.tc, "--tc"))
    try:
        dvs = [float(v) for v in args.delta_v.split(",")]
    except ValueError:
        raise ConfigError("--delta-v must be a comma-separated list of numbers") from None
    rows = []
    for dv in dvs:
        for tc in tcs:
            laser = math.pi * dv * tc
            total = effective_misalignment(FREE, tc, DriftConfig(FREE, dv, args.fiber_drift), 0.0)
            rows.append((tc, dv, laser, intrinsic_error(laser), total, intrinsic_error(total)))
    header = ["T_c_s", "delta_v_hz", "sigma_laser_rad", "intrinsic_error", "sigma_total_rad", "intrinsic_error_total"]
    _write(_csv(header, rows), args.output)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors count as configuration errors, not as infeasibility."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="asyncmdi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="scenario JSON file")
            sp.add_argument("--mode", choices=("arbitrary", "short"), help="override matching mode")
            sp.add_argument("--seed", type=int, help="override the scenario seed")
            sp.add_argument("--no-optimize", action="store_true", help="use the configured sources as given")
            sp.add_argument("--emit-diagnostics", action="store_true", help="include every intermediate quantity")
        sp.add_argument("--output", help="write to this file instead of stdout")

    s = sub.add_parser("scan", help="key rate versus distance")
    common(s)
    s.add_argument("--distance", help="START:STOP:STEP in km (default from the scenario)")
    s.add_argument("--workers", type=int, default=0, help="parallel worker processes (disables warm start)")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("optimize", help="best source parameters at one distance")
    common(s)
    s.add_argument("--distance", help="total distance in km")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("mc", help="Monte Carlo validation report")
    common(s)
    s.add_argument("--distance", help="total distance in km")
    s.add_argument("--n-sim", type=float, help="number of simulated time bins")
    s.set_defaults(func=cmd_mc)

    s = sub.add_parser("hom", help="HOM visibility versus frequency difference")
    common(s, config=False)
    s.add_argument("--delta-v", required=True, help="START:STOP:STEP in Hz")
    s.add_argument("--tau", type=float, default=1e-6, help="bin separation in s")
    s.set_defaults(func=cmd_hom)

    s = sub.add_parser("drift", help="misalignment and intrinsic error versus matching window")
    common(s, config=False)
    s.add_argument("--tc", required=True, help="START:STOP:STEP in s")
    s.add_argument("--delta-v", required=True, help="comma-separated frequency differences in Hz")
    s.add_argument("--fiber-drift", type=float, default=8e3, help="fiber phase drift in rad/s")
    s.set_defaults(func=cmd_drift)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParameterError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
