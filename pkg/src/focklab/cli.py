"""Command-line entry point: ``focklab <command> [options]``.

Commands
--------
weight-class  restricted Muckenhoupt diagnostics of each instance's weight
carleson      Carleson criterion of each instance's measure and weight
criterion     G or H criterion (per instance kind) with decay verdicts
snorm         two-sided estimates for the Berezin-type operator
tnorm         two-sided estimates for the Toeplitz-type operator
verify        full equivalence-band verification of every instance

Without ``--config`` the built-in 24-instance sweep is used.  Exit codes:
0 all verdicts pass, 1 some verdict failed, 2 configuration error,
3 numerical divergence.
"""

import argparse
from dataclasses import replace
import json
import sys

from focklab.config import emit_config, load_config
from focklab.criteria import CriterionSpec, criterion_report
from focklab.errors import ConfigError, InvalidArgumentError, NumericalDomainError
from focklab.harness import default_sweep, verify_theorem
from focklab.measures import EXPECTED_VANISHING, measure_from_spec
from focklab.report import Report, emit_report
from focklab.weights import weight_class_report, weight_from_spec

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGENCE = 0, 1, 2, 3
COMMANDS = ("weight-class", "carleson", "criterion", "snorm", "tnorm", "verify")


def build_parser():
    parser = argparse.ArgumentParser(prog="focklab", description="Weighted Fock space operator laboratory.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", metavar="PATH", help="sweep configuration (default: built-in sweep)")
    parser.add_argument("--out", metavar="PATH", help="report path (default: standard output)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--seed", type=int, help="override the configuration seed")
    parser.add_argument("--grid-step", type=float, metavar="H", help="outer quadrature step for every instance")
    parser.add_argument("--grid-radius", type=float, metavar="R", help="radius of the centre grid for suprema")
    parser.add_argument("--theorem", help="restrict verify to one theorem regime")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary on standard error")
    return parser


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.grid_step is not None:
        if not args.grid_step > 0:
            raise ConfigError([f"--grid-step must be positive, got {args.grid_step}"])
        cfg = replace(cfg, instances=[replace(i, grid=replace(i.grid, h=args.grid_step)) for i in cfg.instances])
    if args.grid_radius is not None and not args.grid_radius > 0:
        raise ConfigError([f"--grid-radius must be positive, got {args.grid_radius}"])
    if args.theorem is not None:
        cfg = replace(cfg, theorem=args.theorem)
    return cfg


def _weight_class(cfg, args):
    records, failures = [], []
    R_sup = 8.0 if args.grid_radius is None else args.grid_radius
    for inst in cfg.instances:
        w = weight_from_spec(inst.weight, inst.n)
        rep = weight_class_report(w, max(inst.p, 1.0), 1.0, R_sup, inst.grid.mass_step)
        rec = {
            "instance_id": inst.instance_id, "weight_kind": w.kind, "p": rep.p, "r": rep.r,
            "ap_constant": rep.ap_constant, "a1_constant": rep.a1_constant,
            "doubling_constant": rep.doubling_constant, "lattice_growth_constant": rep.lattice_growth_constant,
            "in_a_infinity": rep.in_a_infinity,
            "verdict": "pass" if rep.in_a_infinity else "fail",
        }
        records.append(rec)
        if not rep.in_a_infinity:
            failures.append({"instance_id": inst.instance_id, "reason": "weight not in the restricted A-infinity class"})
    return records, None, failures


def _criterion_records(cfg, args, carleson):
    records, failures = [], []
    for inst in cfg.instances:
        mu = measure_from_spec(inst.measure, inst.n)
        w = weight_from_spec(inst.weight, inst.n)
        kind = "CM" if carleson else ("H" if inst.kind == "H" else "G")
        spec = CriterionSpec(kind, inst.p, inst.q, w, mu, inst.t if kind == "G" else None, 1.0, inst.grid.mass_step)
        rep = criterion_report(spec, args.grid_radius, inst.grid.fine_step)
        value = rep.sup_value if inst.p <= inst.q else rep.integral_value
        holds = rep.verdicts["bounded"] if inst.p <= inst.q else rep.verdicts["integrable"]
        expected = EXPECTED_VANISHING.get(mu.family.split("+")[0])
        ok = holds and (expected is None or rep.verdicts["vanishing"] == expected)
        rec = {
            "instance_id": inst.instance_id, "p": inst.p, "q": inst.q, "t": inst.t if kind == "G" else None,
            "alpha": inst.alpha, "beta": inst.beta, "weight_kind": w.kind, "measure_kind": mu.family,
            "kind": kind, "criterion": value, "verdict": "pass" if ok else "fail",
            "criterion_report": rep.to_dict(),
        }
        records.append(rec)
        if not ok:
            failures.append({"instance_id": inst.instance_id, "verdicts": rep.verdicts, "expected_vanishing": expected})
    return records, None, failures


def _norm_records(cfg, args, kind):
    insts = [replace(i, kind=kind, t=i.t if kind == "G" else 1.0, beta=i.beta if kind == "G" else i.alpha)
             for i in cfg.instances]
    rep = verify_theorem(replace(cfg, instances=insts, theorem="all"), R_sup=args.grid_radius)
    return rep.records, rep.band.to_dict(), rep.failures


def run(args):
    cfg = load_config(args.config) if args.config else default_sweep()
    cfg = _apply_overrides(cfg, args)
    if args.command == "weight-class":
        records, band, failures = _weight_class(cfg, args)
    elif args.command in ("carleson", "criterion"):
        records, band, failures = _criterion_records(cfg, args, args.command == "carleson")
    elif args.command == "snorm":
        records, band, failures = _norm_records(cfg, args, "G")
    elif args.command == "tnorm":
        records, band, failures = _norm_records(cfg, args, "H")
    else:
        rep = verify_theorem(cfg, R_sup=args.grid_radius)
        records, band, failures = rep.records, rep.band.to_dict(), rep.failures
    return Report(args.command, emit_config(cfg), records, band, failures)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report = run(args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "messages": exc.errors}), file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidArgumentError, FileNotFoundError) as exc:
        print(json.dumps({"error": "config", "messages": [str(exc)]}), file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDomainError as exc:
        pt = None if exc.point is None else exc.point.tolist()
        print(json.dumps({"error": "divergence", "message": str(exc), "point": pt}), file=sys.stderr)
        return EXIT_DIVERGENCE
    try:
        text = emit_report(report, args.format, args.out)
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    if args.out is None:
        sys.stdout.write(text)
    if not args.quiet:
        n_fail = len(report.failures)
        print(f"{args.command}: {len(report.records)} instances, {n_fail} failed", file=sys.stderr)
        if n_fail:
            print(json.dumps({"failures": report.failures}, default=str), file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
