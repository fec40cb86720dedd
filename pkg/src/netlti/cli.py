"""Command-line front end.

Exit codes: 0 certified yes, 1 certified no, 2 inconclusive, 3 malformed
input. Every JSON report carries a ``status`` field matching the exit code.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .construct import ConstructionError, ConstructOptions, construct_controllable, \
    construct_observable
from .criteria import full_analysis
from .ensemble import EnsembleSpec, generate_ensemble
from .io import DocumentError, read_model, read_stms, system_to_dict, to_jsonable, \
    write_json, write_model
from .lifted import Status, lift
from .model import IllPosedError, check_well_posedness, validate
from .numerics import Tolerances
from .selection import check_budget, min_local_io
from .spectra import NotFCNRError, invariant_zeros, make_block, zero_groups

EXIT_MALFORMED = 3
MALFORMED = "Malformed"


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}j"


def _tolerances(args) -> Tolerances:
    return Tolerances.from_env(rank_tol=args.rank_tol, zero_tol=args.zero_tol,
                               pd_margin=args.pd_margin)


def _worst(statuses) -> Status:
    statuses = list(statuses)
    for s in (Status.CERTIFIED_NO, Status.INCONCLUSIVE):
        if s in statuses:
            return s
    return Status.CERTIFIED_YES


def _load_valid(path, tol):
    system = read_model(path)
    report = validate(system)
    if not report.ok:
        raise DocumentError("; ".join(report.violations))
    return system


def cmd_validate(args, tol):
    system = read_model(args.model)
    report = validate(system)
    wp = check_well_posedness(system, tol) if report.ok else None
    lines = [f"{system.N} subsystem(s), dims x={system.dims.total('x')} "
             f"v={system.dims.total('v')} u={system.dims.total('u')} "
             f"z={system.dims.total('z')} y={system.dims.total('y')}"]
    lines += [f"violation: {v}" for v in report.violations]
    if wp is not None:
        lines.append(f"well-posed: {wp.ok} (sigma_min(I - Phi A_SS) = "
                     f"{wp.sigma_min:.3e}, tau = {wp.tau:.3e})")
    status = Status.CERTIFIED_YES if report.ok else None
    doc = {"status": status.value if status else MALFORMED,
           "violations": report.violations,
           "well_posed": None if wp is None else wp.ok}
    return (status.exit_code if status else EXIT_MALFORMED), lines, doc


def cmd_lift(args, tol):
    system = _load_valid(args.model, tol)
    try:
        L = lift(system, tol)
    except IllPosedError as exc:
        return Status.CERTIFIED_NO.exit_code, [str(exc)], \
            {"status": Status.CERTIFIED_NO.value, "error": str(exc)}
    lines = [f"lifted system: n={L.A.shape[0]} inputs={L.B.shape[1]} "
             f"outputs={L.C.shape[0]}"]
    for name in "ABCD":
        lines.append(f"{name} =\n{np.array2string(getattr(L, name), precision=6)}")
    doc = {"status": Status.CERTIFIED_YES.value,
           **{name: getattr(L, name) for name in "ABCD"}}
    return 0, lines, doc


def _mode_lines(r) -> list[str]:
    lines = [f"[{r.mode}] status: {r.status.value}"]
    for c in (r.necessary, r.sufficient):
        lines.append(f"  {c.name:22s} {c.outcome.value:12s} {c.reason}")
        for m in c.members:
            lines.append(f"    group {m.group + 1} lambda0={_fmt_complex(m.lambda0)} "
                         f"subsystem {m.subsystem + 1} p={m.p} "
                         f"eig in [{m.min_eig:.4g}, {m.max_eig:.4g}]")
        if c.individual_outcome is not None:
            lines.append(f"    per-member reading: {c.individual_outcome.value}")
    lines.append(f"  {'oracle':22s} {r.oracle.status.value:12s} min margin "
                 f"{r.oracle.min_margin:.3e}")
    if r.pencil is not None:
        lines.append(f"  {'M(lambda) rank':22s} {r.pencil.status.value:12s} min margin "
                     f"{r.pencil.min_margin:.3e}")
    sv = r.singular_values
    shown = ", ".join(f"{s:.4e}" for s in sv[:min(6, sv.size)])
    lines.append(f"  smallest singular values of the "
                 f"{'observability' if r.mode == 'observability' else 'controllability'}"
                 f" matrix: {shown}")
    for f in r.flags:
        lines.append(f"  CONSISTENCY FLAG: {f}")
    return lines


def cmd_analyze(args, tol):
    system = _load_valid(args.model, tol)
    modes = ("observability", "controllability") if args.mode == "both" \
        else (args.mode,)
    try:
        report = full_analysis(system, tol, modes)
    except IllPosedError as exc:
        return Status.CERTIFIED_NO.exit_code, [str(exc)], \
            {"status": Status.CERTIFIED_NO.value, "error": str(exc)}
    parts = [r for r in (report.observability, report.controllability) if r]
    status = _worst(r.status for r in parts)
    lines = [line for r in parts for line in _mode_lines(r)]
    doc = {"status": status.value, **report.to_dict()}
    return status.exit_code, lines, doc


def cmd_zeros(args, tol):
    system = _load_valid(args.model, tol)
    tag = "G1bar" if args.dual else "G1"
    lines, per = [], []
    try:
        for i in range(system.N):
            zs = invariant_zeros(make_block(system, i, tag), tol)
            per.append(zs)
            shown = ", ".join(_fmt_complex(z) for z in zs) or "none"
            lines.append(f"subsystem {i + 1} ({tag}): {shown}")
        groups = zero_groups(system, dual=args.dual, tol=tol)
    except NotFCNRError as exc:
        return Status.INCONCLUSIVE.exit_code, [str(exc)], \
            {"status": Status.INCONCLUSIVE.value, "error": str(exc)}
    for k, g in enumerate(groups, start=1):
        mem = ", ".join(str(j + 1) for j in g.members)
        lines.append(f"group {k}: lambda0={_fmt_complex(g.lambda0)} members=({mem}) "
                     f"p={','.join(str(p) for p in g.p)}")
    doc = {"status": Status.CERTIFIED_YES.value, "block": tag,
           "per_subsystem": per,
           "groups": [{"lambda0": g.lambda0,
                       "members": [j + 1 for j in g.members], "p": g.p,
                       "regular": [e.regular for e in g.entries]}
                      for g in groups]}
    return 0, lines, doc


def _parse_budget(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(b) for b in text.split(",")]
    except ValueError:
        raise DocumentError(f"--budget: expected comma-separated integers, "
                            f"got {text!r}") from None


def cmd_min_io(args, tol):
    stms = read_stms(args.stms)
    budget = _parse_budget(args.budget)
    res = check_budget(stms, budget, tol) if budget else min_local_io(stms, tol)
    lines = ["subsystem  n_x  p_max  min_outputs  min_inputs"
             + ("  budget  feasible" if budget else "")]
    for i, A in enumerate(stms):
        row = (f"{i + 1:9d}  {A.shape[0]:3d}  {res.p_max[i]:5d}  "
               f"{res.min_outputs[i]:11d}  {res.min_inputs[i]:10d}")
        if budget:
            row += f"  {budget[i]:6d}  {str(res.feasible[i]):8s}"
        lines.append(row)
    status = Status.CERTIFIED_YES if res.all_feasible else Status.CERTIFIED_NO
    return status.exit_code, lines, {"status": status.value, **res.to_dict()}


def cmd_construct(args, tol):
    stms = read_stms(args.stms)
    opts = ConstructOptions(kappa=args.kappa, max_iters=args.max_iters,
                            use_kappa_bound=args.use_kappa_bound,
                            budgets=_parse_budget(args.budget), seed=args.seed)
    fn = construct_controllable if args.mode == "controllability" \
        else construct_observable
    try:
        system, trace = fn(stms, None, opts, tol)
    except ConstructionError as exc:
        return Status.CERTIFIED_NO.exit_code, [str(exc)], \
            {"status": Status.CERTIFIED_NO.value, "error": str(exc)}
    status = Status.CERTIFIED_YES if trace.converged else Status.INCONCLUSIVE
    lines = [f"{args.mode} construction: "
             f"{'converged' if trace.converged else 'not converged'} after "
             f"{len(trace.iterations) - 1} scaling step(s)"]
    for s in trace.iterations:
        k = s.kappa if isinstance(s.kappa, float) else \
            "[" + ", ".join(f"{x:.4g}" for x in s.kappa) + "]"
        lines.append(f"  iter {s.index:3d}  kappa={k}  {s.status.value:12s} "
                     f"margin={s.margin:.3e}  max|A_SS|={s.max_abs_A_SS:.4g}")
    lines.append(f"  certified by subsystem-wise criterion: "
                 f"{trace.certified_by_criterion}")
    if args.output:
        write_model(system, args.output)
        lines.append(f"model written to {args.output}")
    doc = {"status": status.value, "trace": trace.to_dict(),
           "model": system_to_dict(system)}
    return status.exit_code, lines, doc


def cmd_ensemble(args, tol):
    spec = EnsembleSpec(N=(args.n_min, args.n_max), n_x=(1, args.nx_max),
                        density=args.density, seed=args.seed, count=args.count)
    systems = generate_ensemble(spec)
    docs = [system_to_dict(s) for s in systems]
    out = Path(args.output) if args.output else None
    lines = [f"generated {len(systems)} system(s) with seed {args.seed}"]
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for k, d in enumerate(docs):
            write_json(d, out / f"system_{k:04d}.json")
        lines.append(f"written to {out}/")
    return 0, lines, {"status": Status.CERTIFIED_YES.value, "count": len(docs),
                      "systems": docs if out is None else None}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank-tol", type=float, default=None,
                        help="absolute rank threshold (default: SVD rule)")
    common.add_argument("--zero-tol", type=float, default=None,
                        help="relative tolerance for merging zeros (default 1e-9)")
    common.add_argument("--pd-margin", type=float, default=None,
                        help="relative definiteness margin (default 1e-9)")
    common.add_argument("--json", metavar="OUT", default=None,
                        help="also write the report as JSON to OUT")

    p = argparse.ArgumentParser(prog="netlti", description="Observability and "
                                "controllability analysis of networked LTI systems")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a model document")
    s.add_argument("model")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("lift", parents=[common], help="print the lifted system")
    s.add_argument("model")
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("analyze", parents=[common], help="run every criterion")
    s.add_argument("model")
    s.add_argument("--mode", choices=("observability", "controllability", "both"),
                   default="observability")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("zeros", parents=[common], help="zeros and zero groups")
    s.add_argument("model")
    s.add_argument("--dual", action="store_true",
                   help="use the controllability blocks")
    s.set_defaults(func=cmd_zeros)

    s = sub.add_parser("min-io", parents=[common], help="minimal local I/O counts")
    s.add_argument("stms", help="STM list document or model document")
    s.add_argument("--budget", help="comma-separated per-subsystem budgets")
    s.set_defaults(func=cmd_min_io)

    s = sub.add_parser("construct", parents=[common],
                       help="synthesize an observable/controllable network")
    s.add_argument("stms")
    s.add_argument("--mode", choices=("observability", "controllability"),
                   default="observability")
    s.add_argument("--kappa", type=float, default=0.9)
    s.add_argument("--max-iters", type=int, default=50)
    s.add_argument("--use-kappa-bound", action="store_true")
    s.add_argument("--budget")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", help="write the synthesized model here")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("ensemble", parents=[common], help="random test systems")
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-min", type=int, default=2)
    s.add_argument("--n-max", type=int, default=4)
    s.add_argument("--nx-max", type=int, default=4)
    s.add_argument("--density", type=float, default=1.0)
    s.add_argument("-o", "--output", help="directory for one model file per system")
    s.set_defaults(func=cmd_ensemble)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    tol = _tolerances(args)
    try:
        code, lines, doc = args.func(args, tol)
    except ValueError as exc:  # DocumentError and bad option values
        code, lines, doc = EXIT_MALFORMED, [f"error: {exc}"], \
            {"status": MALFORMED, "error": str(exc)}
    print("\n".join(lines))
    if args.json:
        write_json(to_jsonable(doc), args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
