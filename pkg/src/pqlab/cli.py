"""Command-line surface.

Subcommands: solve, sweep, caccioppoli, moser, phase, hong, refine.
Configuration comes from a JSON file (--config) with flag overrides; flags
win.  Exit codes: 0 all checks pass, 1 any check failed, 2 usage or config
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import (ConfigError, InvalidInputError, NonConvergenceError,
                     NumericalBlowupError, OutOfRangeError,
                     UnsupportedRegimeError)
from .estimates import lipschitz_budget, moser_schedule, sup_gradient
from .experiments import (config_from_dict, config_from_json,
                          run_caccioppoli_sweep, run_hong_experiment,
                          run_refinement_study, run_sigma_sweep)
from .mesh import build_grid, field_to_csv
from .phase_diagram import (TABLE_N, TABLE_P, check_table1, classify,
                            render_table, table_text)
from .solver import (max_principle_check, minimality_probe, minimize,
                     mollify_boundary)
from .integrand import regularize


def _json_dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=str)


def _load_config(args) -> "ExperimentConfig":
    data = {"config_version": 1}
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{args.config}: parse error at line {exc.lineno}, "
                f"column {exc.colno}: {exc.msg}") from exc
    _apply_overrides(data, args)
    return config_from_dict(data)


def _apply_overrides(data: dict, args) -> None:
    spec = data.setdefault("integrand", {})
    for key in ("kind", "p", "q"):
        val = getattr(args, key, None)
        if val is not None:
            spec[key] = val
    if getattr(args, "sigma", None) is not None:
        data["sigma_list"] = [args.sigma]
    if getattr(args, "n", None) is not None:
        data.setdefault("grid", {})["n"] = args.n
    if getattr(args, "L", None) is not None:
        data.setdefault("grid", {})["L"] = args.L
    if getattr(args, "boundary", None) is not None:
        data["boundary"] = json.loads(args.boundary)
    if getattr(args, "epsilon", None) is not None:
        data.setdefault("eps_list", [])
        data["eps_list"] = [args.epsilon]
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "csv", None) is not None:
        data.setdefault("output", {})["csv"] = args.csv
    if getattr(args, "json_out", None) is not None:
        data.setdefault("output", {})["json"] = args.json_out
    data.setdefault("boundary", {"kind": "trig", "amplitude": 1.0,
                                 "frequencies": [3.141592653589793,
                                                 3.141592653589793]})


def _write_outputs(config, csv_text=None, json_obj=None) -> None:
    if csv_text is not None and config.csv_path:
        with open(config.csv_path, "w") as fh:
            fh.write(csv_text)
    if json_obj is not None and config.json_path:
        with open(config.json_path, "w") as fh:
            fh.write(_json_dump(json_obj) + "\n")


# -- subcommands ------------------------------------------------------------

def _cmd_solve(args) -> int:
    config = _load_config(args)
    grid = build_grid(config.grid_n, config.L)
    trace = mollify_boundary(config.boundary, config.eps_list[0], grid)
    f_sigma = config.integrand
    if not (f_sigma.params.p == f_sigma.params.q == 2 and args.sigma in (None, 0)):
        f_sigma = regularize(config.integrand, config.sigma_list[0])
    try:
        sol = minimize(f_sigma, trace, grid)
    except (NonConvergenceError, NumericalBlowupError) as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return 1
    mp = max_principle_check(sol)
    probe = minimality_probe(sol, trials=20, amplitude=1e-3, seed=config.seed)
    report = {
        "integrand": {"kind": f_sigma.kind, "p": f_sigma.params.p,
                      "q": f_sigma.params.q, "sigma": f_sigma.sigma},
        "grid": {"n": grid.n, "L": grid.L, "h": grid.h},
        "energy": sol.energy,
        "residual": sol.residual_norm,
        "iterations": sol.iterations,
        "max_principle": {"passed": mp.passed, "interior_max": mp.interior_max,
                          "boundary_max": mp.boundary_max},
        "minimality_worst": probe,
        "sup_gradient": sup_gradient(sol, config.R0 / 2),
    }
    print(_json_dump(report))
    if args.dump_field:
        field_to_csv(sol.field, args.dump_field)
    ok = mp.passed and probe >= -1e-12 * grid.node_count
    return 0 if ok else 1


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    ok = True
    for eps in config.eps_list:
        report = run_sigma_sweep(config, epsilon=eps)
        print(report.to_csv(), end="")
        print(_json_dump({"epsilon": eps, "verdicts": report.verdicts,
                          "failure": report.failure}))
        _write_outputs(config, csv_text=report.to_csv(),
                       json_obj=report.to_dict())
        ok = ok and report.all_pass
    return 0 if ok else 1


def _cmd_caccioppoli(args) -> int:
    config = _load_config(args)
    sweep = run_caccioppoli_sweep(config)
    print(sweep.to_csv(), end="")
    _write_outputs(config, csv_text=sweep.to_csv())
    return 0 if sweep.all_pass else 1


def _cmd_moser(args) -> int:
    schedule = moser_schedule(Fraction(args.p), Fraction(args.q), args.N,
                              n_max=args.n_max,
                              two_star_for_N2=(Fraction(args.two_star)
                                               if args.two_star else None))
    print(f"two_star = {schedule.two_star}")
    print(f"alpha0 = {schedule.alpha0}")
    head = ", ".join(str(a) for a in schedule.alphas[:6])
    print(f"alphas = {head}, ...")
    print(f"diverges = {schedule.diverges}")
    if schedule.limit_exponent is not None:
        print(f"limit exponent = {schedule.limit_exponent}")
        try:
            budget = lipschitz_budget(float(schedule.p), float(schedule.q),
                                      args.N, args.R0, args.sup_u, schedule)
            print(f"Gamma1 (up to constant) = {budget.gamma1!r}")
            print(f"bound (up to constant) = {budget.bound!r}")
        except UnsupportedRegimeError as exc:
            print(f"budget unavailable: {exc}")
    else:
        print("limit exponent = undefined (schedule does not diverge)")
    return 0


def _cmd_phase(args) -> int:
    if args.check_table1:
        mismatches = check_table1()
        cells = render_table()
        print(table_text(cells))
        if mismatches:
            for line in mismatches:
                print(f"MISMATCH {line}", file=sys.stderr)
            return 1
        print(f"table check passed: {len(cells)} cells match")
        return 0
    p_list = [Fraction(x) for x in args.p_list.split(",")]
    n_list = [int(x) for x in args.N_list.split(",")]
    if args.classify:
        p, q, N = args.classify.split(",")
        print(_json_dump(classify(Fraction(p), Fraction(q), int(N)).as_dict()))
        return 0
    cells = render_table(p_list, n_list)
    if args.format == "text":
        print(table_text(cells))
    elif args.format == "csv":
        print("criterion,p,N,cell,shaded")
        for c in cells:
            print(f"{c.criterion},{c.p},{c.N},{c.text},{c.shaded}")
    else:
        print(_json_dump([c.__dict__ for c in cells]))
    return 0


def _cmd_hong(args) -> int:
    n_list = tuple(int(x) for x in args.N_list.split(","))
    report = run_hong_experiment(n_list, grid_n=args.n or 33)
    print(_json_dump(report.to_dict()))
    return 0 if report.all_pass else 1


def _cmd_refine(args) -> int:
    config = _load_config(args)
    report = run_refinement_study(config)
    print(report.to_csv(), end="")
    _write_outputs(config, csv_text=report.to_csv(), json_obj=report.to_dict())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pqlab",
        description="numerical laboratory for (p,q)-growth minimization")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--kind", help="integrand kind override")
        sp.add_argument("--p", type=float, default=None)
        sp.add_argument("--q", type=float, default=None)
        sp.add_argument("--sigma", type=float, default=None)
        sp.add_argument("--n", type=int, default=None, help="grid nodes per side")
        sp.add_argument("--L", type=float, default=None, help="grid half-width")
        sp.add_argument("--boundary", help="boundary spec as inline JSON")
        sp.add_argument("--epsilon", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--csv", help="CSV output path")
        sp.add_argument("--json-out", dest="json_out", help="JSON output path")

    sp = sub.add_parser("solve", help="one minimization plus checks")
    add_common(sp)
    sp.add_argument("--dump-field", help="write the solution field as CSV")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("sweep", help="sigma sweep with limit checks")
    add_common(sp)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("caccioppoli", help="estimate reports over the alpha list")
    add_common(sp)
    sp.set_defaults(func=_cmd_caccioppoli)

    sp = sub.add_parser("moser", help="exponent schedule and gradient budget")
    sp.add_argument("--p", required=True)
    sp.add_argument("--q", required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--two-star", dest="two_star", default=None)
    sp.add_argument("--n-max", dest="n_max", type=int, default=20)
    sp.add_argument("--R0", type=float, default=1.0)
    sp.add_argument("--sup-u", dest="sup_u", type=float, default=1.0)
    sp.set_defaults(func=_cmd_moser)

    sp = sub.add_parser("phase", help="admissibility table and classification")
    sp.add_argument("--p-list", dest="p_list",
                    default=",".join(str(p) for p in TABLE_P))
    sp.add_argument("--N-list", dest="N_list",
                    default=",".join(str(n) for n in TABLE_N))
    sp.add_argument("--format", choices=("text", "csv", "json"), default="text")
    sp.add_argument("--check-table1", dest="check_table1", action="store_true",
                    help="compare against the embedded golden table")
    sp.add_argument("--classify", help="p,q,N triple to classify")
    sp.set_defaults(func=_cmd_phase)

    sp = sub.add_parser("hong", help="counterexample-model classification run")
    sp.add_argument("--N-list", dest="N_list", default="2,3,4,5,6,7")
    sp.add_argument("--n", type=int, default=None, help="grid for the 2-d solve")
    sp.set_defaults(func=_cmd_hong)

    sp = sub.add_parser("refine", help="grid refinement study")
    add_common(sp)
    sp.set_defaults(func=_cmd_refine)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InvalidInputError, OutOfRangeError, UnsupportedRegimeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
