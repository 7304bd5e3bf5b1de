"""Command-line interface: ``renyi-lab <command> ...``.

Every command prints a JSON report on stdout (or a plain-text table with
``--format text``) and a short human summary on stderr. ``--output`` writes
the JSON report to a file, atomically.

Exit codes: 0 success, 1 at least one violation (failing instances are
written to ``--archive-dir`` for ``replay``), 2 unreadable input or invalid
arguments.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

from . import io, sampling, suites
from .channels import BUILTINS, RANDOM_FAMILIES, build_channel, classify_channel, random_channel
from .config import DEFAULT_DIMS, RunConfig, Tolerances
from .entropy import relative_entropy, renyi_entropy, segal_entropy
from .errors import RenyiLabError
from .integrals import QuadratureScheme, convergence_diagnostic, default_schedule
from .operators import BlockAlgebra, spectral_decompose, trace
from .theorems import preservation_test

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


class UsageError(RenyiLabError):
    pass


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.replace(" ", "").strip("[]").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad block dimensions {text!r}; use e.g. '2,3'")
    if not dims:
        raise argparse.ArgumentTypeError("empty block dimensions")
    return dims


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(" ", "").strip("[]").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list of numbers {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--output", help="also write the JSON report to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renyi-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="Renyi / Segal / relative entropy of a density file")
    p.add_argument("--density", required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--segal", action="store_true", help="also report tau(h ln h)")
    p.add_argument("--relative", metavar="K_JSON", help="also report D(h || k)")
    p.add_argument("--mirror", action="store_true",
                   help="mirror the upper triangle instead of rejecting non-Hermitian input")
    _common(p)

    p = sub.add_parser("channel-classify", help="structural flags of a channel file")
    p.add_argument("--channel", required=True)
    p.add_argument("--algebra", help="algebra JSON, when the channel file has none")
    _common(p)

    p = sub.add_parser("preservation-test", help="entropy preservation report")
    p.add_argument("--channel", required=True)
    p.add_argument("--density", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--algebra")
    p.add_argument("--tol", type=float, default=Tolerances.entropy)
    p.add_argument("--tol-struct", type=float, default=Tolerances.structural)
    _common(p)

    p = sub.add_parser("verify-suite", help="seeded property suites")
    p.add_argument("--suite", choices=(*suites.SUITES, "all"), default="all")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", type=_dims, action="append",
                   help="block dimensions, e.g. '2,3'; repeatable "
                        f"(default {[list(d) for d in DEFAULT_DIMS]})")
    p.add_argument("--weights", type=_floats, action="append",
                   help="trace weights matching each --dims, repeatable")
    p.add_argument("--alpha-grid", type=_floats, default=(0.5, 2.0, 3.0))
    p.add_argument("--archive-dir", default="violations",
                   help="where failing instances are written")
    p.add_argument("--inject-violation", action="store_true", help=argparse.SUPPRESS)
    _common(p)

    p = sub.add_parser("convergence-demo", help="quadrature or truncation schedule trace")
    p.add_argument("--density", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--schedule", default="default",
                   help="'default', 'm:M,m:M,...' cutoffs, or 'trunc:n1,n2,...'")
    p.add_argument("--panels", type=int, default=200)
    p.add_argument("--nodes", type=int, default=16)
    _common(p)

    p = sub.add_parser("generate", help="write a reproducible density or channel fixture")
    p.add_argument("kind", choices=("density", "channel"))
    p.add_argument("--dims", type=_dims, default=(2,))
    p.add_argument("--weights", type=_floats)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degenerate", action="store_true")
    p.add_argument("--family", choices=RANDOM_FAMILIES, default="haar_unitary_conjugation")
    p.add_argument("--builtin", choices=[b for b in BUILTINS if b not in
                                         ("mixture", "pinching", "unitary_conjugation",
                                          "block_permutation")],
                   help="parameter-free builtin instead of a random family")
    p.add_argument("--output", required=True)

    p = sub.add_parser("replay", help="re-run an archived failing instance")
    p.add_argument("--instance", required=True)
    _common(p)
    return parser


# -- helpers -----------------------------------------------------------------

def _emit(args, report: dict, text: str, summary: str) -> None:
    if args.format == "text":
        sys.stdout.write(text.rstrip("\n") + "\n")
    else:
        sys.stdout.write(io.dumps(report))
    if getattr(args, "output", None):
        io.save_json(args.output, report)
    sys.stderr.write(summary.rstrip("\n") + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}" if math.isfinite(x) else ("+inf" if x > 0 else "-inf")
    return str(x)


def _table(rows: Sequence[tuple[str, object]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {_fmt(v)}" for k, v in rows)


def _algebra_arg(path: str | None) -> BlockAlgebra | None:
    return io.load_algebra(path) if path else None


# -- commands ------------------------------------------------------------------

def cmd_entropy(args) -> int:
    h = io.load_density(args.density, mirror=args.mirror)
    report: dict = {"tau_h": trace(h)}
    rows, parts = [], []
    if args.alpha is not None:
        ev = renyi_entropy(h, args.alpha)
        report.update(ev.to_json())
        rows += [("alpha", ev.alpha), ("S_alpha", ev.value), ("tau(h)", ev.trace_h),
                 ("tau(h^alpha)", ev.trace_h_alpha)]
        parts.append(f"S_{ev.alpha:g}(h) = {ev.value:.6f} nats")
    if args.segal:
        sv = segal_entropy(h)
        report["segal"] = sv
        rows.append(("tau(h ln h)", sv))
        parts.append(f"tau(h ln h) = {sv:.6f}")
    if args.relative:
        k = io.load_density(args.relative, mirror=args.mirror)
        d = relative_entropy(h, k)
        report["relative_entropy"] = d if math.isfinite(d) else "inf"
        rows.append(("D(h||k)", d))
        parts.append(f"D(h||k) = {_fmt(d)}")
    if not parts:
        raise UsageError("nothing to compute: pass --alpha, --segal or --relative")
    _emit(args, report, _table(rows), "; ".join(parts))
    return EXIT_OK


def cmd_classify(args) -> int:
    ch = io.load_channel(args.channel, _algebra_arg(args.algebra))
    props = classify_channel(ch)
    report = props.to_json()
    rows = list(report.items())
    flags = [k for k in ("unital", "trace_preserving", "positive", "completely_positive",
                         "jordan_multiplicative", "injective") if report[k]]
    _emit(args, report, _table(rows), f"{ch!r}: {', '.join(flags) or 'no flags'}")
    return EXIT_OK


def cmd_preservation(args) -> int:
    alg = _algebra_arg(args.algebra)
    ch = io.load_channel(args.channel, alg)
    h = io.operator_from_json(io.load_json(args.density), density=True, algebra=ch.algebra)
    rep = preservation_test(ch, h, args.alpha, args.tol, args.tol_struct)
    report = rep.to_json()
    rows = [("alpha", rep.alpha), ("S before", rep.s_before.value),
            ("S after", rep.s_after.value), ("delta S", rep.delta_s),
            ("trace defect", rep.trace_equality_defect),
            ("operator defect", rep.operator_equality_defect),
            ("multiplicativity", rep.multiplicativity_defect),
            ("clusters", rep.n_clusters), ("cluster gap", rep.cluster_gap),
            ("verdict", rep.verdict)]
    _emit(args, report, _table(rows),
          f"{rep.verdict}: delta S_{rep.alpha:g} = {rep.delta_s:.5g}, "
          f"multiplicativity defect {rep.multiplicativity_defect:.3g}")
    return EXIT_OK


def _archive(violations, archive_dir: str, seed: int) -> list[str]:
    paths = []
    for n, v in enumerate(violations):
        path = Path(archive_dir) / f"{v.suite}-{v.check}-seed{seed}-{n:04d}.json"
        io.save_json(path, {**v.record, "suite": v.suite, "detail": v.detail})
        paths.append(str(path))
    return paths


def cmd_verify(args) -> int:
    dims = tuple(args.dims) if args.dims else DEFAULT_DIMS
    weights = tuple(args.weights) if args.weights else None
    if weights is not None and len(weights) != len(dims):
        raise UsageError("give one --weights per --dims")
    config = RunConfig("verify-suite", seed=args.seed, dims=dims, weights=weights,
                       alpha_grid=tuple(args.alpha_grid), output_path=args.output,
                       format=args.format)
    if args.instances < 0:
        raise UsageError("--instances must be nonnegative")
    names = suites.SUITES if args.suite == "all" else (args.suite,)
    algebras = suites.algebras_from(config.dims, config.weights)
    reports = suites.run_suites(names, args.instances, args.seed, algebras, config.tolerances,
                                config.alpha_grid, inject_violation=args.inject_violation)
    violations = [v for r in reports for v in r.violations]
    archived = _archive(violations, args.archive_dir, args.seed) if violations else []
    out = {"config": config.to_json(), "reports": [r.to_json() for r in reports],
           "violations": len(violations), "archived": archived}
    lines = [f"{'suite':<14}{'checks':>8}{'violations':>12}{'seconds':>10}"]
    lines += [f"{r.suite:<14}{r.checks:>8}{len(r.violations):>12}{r.seconds:>10.1f}"
              for r in reports]
    summary = (f"{sum(r.checks for r in reports)} checks, {len(violations)} violations"
               + (f"; instances archived under {args.archive_dir}/" if archived else ""))
    _emit(args, out, "\n".join(lines), summary)
    return EXIT_VIOLATION if violations else EXIT_OK


def _parse_schedule(text: str, panels: int, nodes: int):
    if text == "default":
        return default_schedule(panels, nodes)
    if text.startswith("trunc:"):
        return [float(x) for x in text[len("trunc:"):].split(",") if x]
    out = []
    for item in text.split(","):
        m, M = item.split(":")
        out.append(QuadratureScheme(float(m), float(M), panels, nodes))
    return out


def cmd_convergence(args) -> int:
    h = io.load_density(args.density)
    try:
        schedule = _parse_schedule(args.schedule, args.panels, args.nodes)
    except ValueError as exc:
        raise UsageError(f"bad --schedule {args.schedule!r}: {exc}") from exc
    trace = convergence_diagnostic(h, args.alpha, schedule)
    _emit(args, trace.to_json(), trace.to_table(),
          f"{trace.kind} schedule, alpha = {trace.alpha:g}: "
          f"{'monotone' if trace.monotone_flag else 'NOT monotone'}, "
          f"final gap {trace.gaps[-1]:.3e}")
    return EXIT_OK


def cmd_generate(args) -> int:
    alg = BlockAlgebra(args.dims, args.weights)
    if args.kind == "density":
        h = sampling.random_density(alg, sampling.rng_for(args.seed), degenerate=args.degenerate)
        data = io.operator_to_json(h)
        dec = spectral_decompose(h)
        summary = (f"density on dims {list(alg.block_dims)}: {dec.rank} clusters, "
                   f"multiplicities {_multiplicities(dec)}")
    else:
        if args.builtin:
            ch = build_channel(alg, args.builtin)
        else:
            ch = random_channel(alg, args.family, args.seed)
            ch.family = args.family
        data = io.channel_to_json(ch)
        summary = f"channel {ch!r}"
    io.save_json(args.output, data)
    sys.stderr.write(f"{summary} -> {args.output}\n")
    return EXIT_OK


def _multiplicities(dec) -> list[int]:
    return [int(sum((lab == i).sum() for lab in dec.labels)) for i in range(dec.rank)]


def cmd_replay(args) -> int:
    record = io.load_json(args.instance)
    ok, detail = suites.replay(record)
    report = {"check": record.get("check"), "passed": ok, "detail": detail}
    _emit(args, report, _table([("check", record.get("check")), ("passed", ok)]),
          f"replay of {record.get('check')}: {'passes' if ok else 'VIOLATION reproduced'}")
    return EXIT_OK if ok else EXIT_VIOLATION


COMMANDS = {"entropy": cmd_entropy, "channel-classify": cmd_classify,
            "preservation-test": cmd_preservation, "verify-suite": cmd_verify,
            "convergence-demo": cmd_convergence, "generate": cmd_generate,
            "replay": cmd_replay}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (RenyiLabError, KeyError, ValueError) as exc:
        sys.stderr.write(f"renyi-lab {args.command}: error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
