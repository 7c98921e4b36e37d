"""Command-line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 validation or budget
failure, 3 internal invariant failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import _backend
from .anneal import AnnealParams, solve, solve_exact
from .errors import BoundError, BudgetError, InvariantError, NormalizationError, ParseError
from .experiment import parse_spec, run_experiment, with_seed
from .hardware import load_profile, native_quantize, read_program, validate, write_program
from .ising import absorb_linear_terms, normalize, read_problem
from .multidigit import (
    MultiDigitConfig,
    coherence_violations,
    decode,
    map_problem,
    native_plan,
    read_plan,
    write_plan,
)

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _profile(spec: str):
    try:
        return load_profile(spec)
    except FileNotFoundError:
        raise ParseError(f"profile {spec!r} is neither built in nor a readable file") from None


def cmd_map(args) -> int:
    problem = read_problem(args.problem)
    profile = _profile(args.profile)
    normed, scale = normalize(problem)
    flat, ancilla = absorb_linear_terms(normed)
    if args.mapping == "native":
        program = native_quantize(flat, profile)
        plan = native_plan(flat, profile, program.K)
    else:
        if args.digits is None or args.q is None:
            raise ParseError("multidigit mapping needs --digits and --q")
        cfg = MultiDigitConfig(args.digits, args.q, args.penalty_weight)
        program, plan = map_problem(flat, profile, cfg)
    plan.ancilla = ancilla
    plan.scale = scale

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_program(program, out / "program.txt")
    write_plan(plan, out / "plan.json")

    report = validate(program, profile)
    print(f"spins used: {program.n_spins} / {profile.max_spins}")
    if report:
        for v in report:
            print(f"violation: {v}")
        return EXIT_VALIDATION
    print("validation: ok")
    return EXIT_OK


def cmd_solve(args) -> int:
    program = read_program(args.program)
    if args.exact:
        config, energy = solve_exact(program)
        result = {"config": [int(x) for x in config], "energy": energy, "energies": [energy]}
    else:
        params = AnnealParams(args.n_anneals, args.sweeps, args.beta_initial, args.beta_final, args.seed)
        r = solve(program, params)
        config = r.config
        result = {
            "config": [int(x) for x in r.config],
            "energy": r.energy,
            "energies": r.anneal_energies,
        }
    if args.plan:
        plan = read_plan(args.plan)
        if plan.n_device != program.n_spins:
            raise ParseError(f"plan covers {plan.n_device} spins, program has {program.n_spins}")
        decoded = decode(config, plan)
        if plan.ancilla is not None and decoded[plan.ancilla] < 0:
            decoded = -decoded
        result["decoded"] = [int(x) for x in decoded]
        result["coherence_violations"] = coherence_violations(config, plan)
    text = json.dumps(result, sort_keys=True)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_mimo_ber(args) -> int:
    try:
        text = Path(args.spec).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read spec: {exc}") from None
    spec = with_seed(parse_spec(text), args.seed)
    _, summary = run_experiment(spec, args.output_dir, jobs=args.jobs, profile=_profile(spec.profile))
    if summary["no_data"]:
        print("no data: zero trials run")
    for name, a in summary["arms"].items():
        ber = "n/a" if a["ber"] is None else f"{a['ber']:.4f}"
        line = f"{name:>12}: BER {ber}  trials {a['trials_run']}  mean spins {a['mean_spins']}"
        if a["budget_failures"]:
            line += f"  budget failures {a['budget_failures']}"
        print(line)
    return EXIT_OK


def cmd_validate(args) -> int:
    program = read_program(args.program)
    report = validate(program, _profile(args.profile))
    if not report:
        print("validation: ok")
        return EXIT_OK
    for v in report:
        print(f"violation: {v}")
    return EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdising", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="master seed (default 0; mimo-ber: spec's seed)")
    parser.add_argument("--output-dir", default=".", help="directory for output files")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for mimo-ber trials")
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({_backend.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("map", help="compile a problem file into a device program")
    p.add_argument("problem")
    p.add_argument("--profile", default="cobi", help="built-in name or profile file")
    p.add_argument("--mapping", choices=["native", "multidigit"], default="native")
    p.add_argument("--digits", type=int, choices=[2, 3])
    p.add_argument("--q", type=int)
    p.add_argument("--penalty-weight", type=int)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("solve", help="run the annealer on a device program")
    p.add_argument("program")
    p.add_argument("--plan", help="mapping plan JSON; adds decoded original spins")
    p.add_argument("--n-anneals", type=int, default=AnnealParams.n_anneals)
    p.add_argument("--sweeps", type=int, default=AnnealParams.sweeps_per_anneal)
    p.add_argument("--beta-initial", type=float, default=AnnealParams.beta_initial)
    p.add_argument("--beta-final", type=float, default=AnnealParams.beta_final)
    p.add_argument("--exact", action="store_true", help="exhaustive search (<= 24 spins)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("mimo-ber", help="run a BER experiment from a spec file")
    p.add_argument("spec")
    p.set_defaults(func=cmd_mimo_ber)

    p = sub.add_parser("validate", help="check a device program against a profile")
    p.add_argument("program")
    p.add_argument("--profile", default="cobi")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except (ParseError, NormalizationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetError, BoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
