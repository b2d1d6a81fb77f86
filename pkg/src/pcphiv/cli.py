"""Command-line interface.

Exit codes: 0 success, 1 domain error (threshold, invalid parameters or
config), 2 numerical failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import equilibria, stability
from .errors import DomainError, NumericalError
from .integrator import integrate
from .model import ModelVariant
from .reproduction import r0, r0_hiv_closed, r0_pcp_closed
from .scenarios import (
    CALIBRATION,
    _jsonable,
    load_config,
    run_scenario,
    trajectory_table,
    write_csv,
    write_json_table,
)
from .sensitivity import Target, sensitivity_table

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("pcphiv")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True,
                        help="YAML config path, or a built-in scenario name such as 'baseline'")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--grid", type=float, help="output grid step in years")
    common.add_argument("--horizon", type=float, help="simulation horizon in years")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="pcphiv", description="HIV/AIDS and PCP co-infection model toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="integrate one trajectory")
    sub.add_parser("r0", parents=[common], help="reproduction numbers")
    sub.add_parser("equilibria", parents=[common], help="equilibria and closed-form audit")
    sub.add_parser("stability", parents=[common], help="stability verdicts")
    sens = sub.add_parser("sensitivity", parents=[common], help="sensitivity indices")
    sens.add_argument("--target", choices=("r0h", "r0p"), required=True)
    sens.add_argument("--method", choices=("central-difference", "closed-form"),
                      default="central-difference")
    scen = sub.add_parser("scenario", parents=[common], help="run a scenario or sweep")
    scen.add_argument("--workers", type=int, default=1)
    return parser


def _spec(args):
    spec = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.grid is not None:
        changes["grid"] = args.grid
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if changes:
        from dataclasses import replace

        spec = replace(spec, **changes)
    return spec


def _emit(args, name: str, doc: dict) -> None:
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text + "\n")
    return text


def cmd_r0(args) -> int:
    spec = _spec(args)
    p = spec.parameters
    doc = {"R0H": r0_hiv_closed(p), "R0P": r0_pcp_closed(p), "R0": r0(ModelVariant.FULL, p),
           "calibration": CALIBRATION}
    text = _emit(args, "r0", doc)
    if args.format == "json":
        print(text)
    else:
        for key in ("R0H", "R0P", "R0"):
            print(f"{key:<4} = {doc[key]:.4f}")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    p = _spec(args).parameters
    table = sensitivity_table(Target.parse(args.target), p, args.method)
    rows = table.to_rows()
    _emit(args, f"sensitivity_{args.target}", {"target": args.target, "method": args.method, "rows": rows})
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    elif args.format == "csv":
        print("parameter,index,published")
        for r in rows:
            print(f"{r['parameter']},{r['index']:+.4f},{str(r['published']).lower()}")
    else:
        label = "R_0H" if table.target is Target.R0H else "R_0P"
        print(f"{'parameter':<10} sensitivity index ({label})")
        for r in rows:
            note = "" if r["published"] else "  (not in published table)"
            print(f"{r['parameter']:<10} {r['index']:+.4f}{note}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _spec(args)
    p = spec.parameters
    traj = integrate(spec.variant, p, spec.initial_state, spec.horizon)
    times, states = traj.sample(spec.grid)
    table = trajectory_table(p, times, states)
    fmt = args.format or "csv"
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"trajectory.{fmt}"
    (write_json_table if fmt == "json" else write_csv)(path, table)
    summary = {
        "variant": spec.variant.value,
        "parameters": p.as_dict(),
        "horizon": spec.horizon,
        "grid": spec.grid,
        "final_state": traj.final._asdict(),
        "accepted_steps": traj.accepted,
        "rejected_steps": traj.rejected,
        "invariant_breach": traj.invariant_breach,
        "trajectory": path.name,
    }
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    print(path)
    return EXIT_OK


def cmd_equilibria(args) -> int:
    spec = _spec(args)
    p = spec.parameters
    doc = {}
    for v in ModelVariant:
        entry = {"disease_free": equilibria.dfe(v, p).to_dict()}
        try:
            entry["numeric"] = equilibria.endemic_numeric(v, p, spec.initial_state if v is spec.variant else None).to_dict()
        except NumericalError as exc:
            entry["numeric_error"] = f"{type(exc).__name__}: {exc}"
        doc[v.value] = entry
    doc["closed_form_audit"] = equilibria.closed_form_audit(p)
    print(_emit(args, "equilibria", doc))
    return EXIT_OK


def cmd_stability(args) -> int:
    spec = _spec(args)
    p = spec.parameters
    doc = {}
    for v in ModelVariant:
        entry = {"disease_free": stability.local_stability(v, p, equilibria.dfe(v, p)).to_dict()}
        try:
            eq = equilibria.endemic_numeric(v, p)
            entry["endemic"] = stability.local_stability(v, p, eq).to_dict()
            if v is ModelVariant.HIV and eq.classification == equilibria.ENDEMIC:
                from .model import force_hiv

                rh = stability.routh_hurwitz_hiv(p, force_hiv(p, eq.state))
                entry["routh_hurwitz"] = rh.to_dict()
        except NumericalError as exc:
            entry["endemic_error"] = f"{type(exc).__name__}: {exc}"
        doc[v.value] = entry
    doc["castillo_chavez"] = stability.castillo_chavez_check(p, seed=spec.seed).to_dict()
    doc["multistart_probe"] = stability.global_stability_probe(
        spec.variant, p, spec.n_starts, spec.seed
    ).to_dict()
    print(_emit(args, "stability", doc))
    return EXIT_OK


def cmd_scenario(args) -> int:
    spec = _spec(args)
    art = run_scenario(spec, out_dir=args.out or f"run_{spec.scenario}", fmt=args.format or "csv",
                       workers=args.workers)
    rn = art.reproduction_numbers
    print(f"scenario {art.scenario}: R0H={rn['R0H']:.4f} R0P={rn['R0P']:.4f} R0={rn['R0']:.4f}")
    for m in art.members:
        status = m.error or f"I_HP+I_AP={m.terminal_coinfected:.6g} ({m.stability})"
        print(f"  {m.label}: {status}")
    print(art.summary_path)
    return EXIT_NUMERICAL if art.failed else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "r0": cmd_r0,
    "equilibria": cmd_equilibria,
    "stability": cmd_stability,
    "sensitivity": cmd_sensitivity,
    "scenario": cmd_scenario,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
