"""Command-line interface: ``closedtest {closure,bounds,permute,simulate,example}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import formats
from .bounds import claim_sentence, confidence_report
from .closure import DEFAULT_MAX_N, LocalTest, build_closure, subset_indices
from .constraints import tau_upper_constrained
from .errors import CapacityError, ClosedTestError, ParseError
from .example import DEFAULT_SEED, QUERY, worked_example
from .montecarlo import ResamplingConfig, simulate_composite_pvalues
from .permutation import (PermutationPlan, closed_bonferroni_permutation,
                          permutation_marginal_pvalues, westfall_young_minp)
from .shortcuts import fisher_shortcut_independent, hommel_shortcut, holm_shortcut

TESTS = ("bonferroni", "simes", "fisher", "fisher-mc")
SHORTCUTS = {"bonferroni": holm_shortcut, "simes": hommel_shortcut,
             "fisher": fisher_shortcut_independent}


def _alpha(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must be in (0, 1)")
    return value


def _subset(text: str) -> tuple[int, ...]:
    try:
        out = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad subset {text!r}; use e.g. 1,3") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("subsets are nonempty lists of 1-based indices")
    return out


def _count(text: str) -> int:
    value = int(float(text))
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="closedtest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats_, default):
        p.add_argument("--format", choices=formats_, default=default)
        p.add_argument("--out", type=Path, help="write here instead of stdout")

    def mc(p):
        p.add_argument("--cov", type=Path, help="correlation matrix CSV (fisher-mc)")
        p.add_argument("--sims", type=_count, default=1_000_000)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("closure", help="local and adjusted p-values for every intersection")
    p.add_argument("--input", type=Path, required=True, help="CSV with id,p columns")
    p.add_argument("--test", choices=TESTS, default="fisher")
    p.add_argument("--alpha", type=_alpha)
    p.add_argument("--constraints", type=Path)
    p.add_argument("--shortcut", action="store_true",
                   help="elementary adjusted p-values only, without enumeration")
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    mc(p)
    common(p, ("json", "csv", "dot", "text"), "json")

    p = sub.add_parser("bounds", help="true-null bounds and claim-level adjusted p-values")
    p.add_argument("--input", type=Path, required=True,
                   help="CSV with id,p columns or a closure JSON report")
    p.add_argument("--test", choices=TESTS, default="fisher")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--subset", type=_subset, action="append", required=True)
    p.add_argument("--k", type=int, help="report only the claim 'at least k false'")
    p.add_argument("--constraints", type=Path)
    mc(p)
    common(p, ("json", "text"), "json")

    p = sub.add_parser("permute", help="permutation p-values for two-group data")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--method", choices=("minp", "closed-bonferroni", "marginal"), default="minp")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--perms", type=_count)
    g.add_argument("--exhaustive", action="store_true")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--alpha", type=_alpha)
    p.add_argument("--workers", type=int, default=1)
    common(p, ("json", "csv", "text"), "json")

    p = sub.add_parser("simulate", help="Monte-Carlo Fisher p-values for every subset")
    p.add_argument("--input", type=Path, required=True)
    mc(p)
    common(p, ("json", "csv"), "json")

    p = sub.add_parser("example", help="three-mean worked example, free and constrained")
    p.add_argument("--sims", type=_count, default=1_000_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    common(p, ("text", "json", "dot"), "text")
    return parser


def _local_test(args, parser) -> LocalTest:
    if args.test == "fisher-mc":
        if args.cov is None:
            parser.error("--test fisher-mc needs --cov")
        cfg = ResamplingConfig(formats.read_matrix(args.cov), args.sims, args.seed)
        return LocalTest("fisher-montecarlo", config=cfg, workers=args.workers)
    if args.cov is not None:
        parser.error("--cov only applies to --test fisher-mc")
    return LocalTest.of(args.test)


def _mc_meta(args) -> dict | None:
    if getattr(args, "test", None) == "fisher-mc":
        return {"sims": args.sims, "seed": args.seed}
    return None


def _family(args):
    family = formats.read_pvalues(args.input)
    if args.constraints is not None:
        family = formats.read_constraints(args.constraints, family)
    return family


def cmd_closure(args, parser) -> str:
    family = _family(args)
    if args.shortcut:
        if args.test == "fisher-mc":
            parser.error("--shortcut is available for bonferroni, simes and fisher only")
        if args.constraints is not None:
            parser.error("--shortcut cannot be combined with --constraints")
        adj = SHORTCUTS[args.test](family.pvalues)
        rows = [{"id": lab, "p": p, "adjusted_p": float(a)}
                for lab, p, a in zip(family.labels, family.pvalues, adj)]
        if args.format == "json":
            return formats.dumps({"n": family.n, "test": LocalTest.of(args.test).kind,
                                  "elementary": rows})
        lines = ["id,p,adjusted_p"] + [f"{r['id']},{r['p']!r},{r['adjusted_p']!r}" for r in rows]
        return "\n".join(lines) + "\n"
    test = _local_test(args, parser)
    try:
        table = build_closure(family, test, max_n=args.max_n)
    except CapacityError as err:
        if args.test in SHORTCUTS:
            raise CapacityError(f"{err}; rerun with --shortcut") from None
        raise
    if args.format == "json":
        return formats.dumps(formats.closure_report(table, args.alpha, family, _mc_meta(args)))
    if args.format == "csv":
        return formats.closure_csv(table, args.alpha)
    if args.format == "dot":
        out = formats.closure_dot(table, args.alpha)
        if family.edges is not None:
            out += formats.distinct_dot(table, family, args.alpha)
        return out
    lines = [f"{'id':<12}{'p':>14}{'adjusted_p':>14}"]
    for i, lab in enumerate(table.labels):
        lines.append(f"{lab:<12}{family.pvalues[i]:>14.6g}{table.adjusted[1 << i]:>14.6g}")
    return "\n".join(lines) + "\n"


def cmd_bounds(args, parser) -> str:
    if args.input.suffix.lower() == ".json":
        try:
            obj = json.loads(args.input.read_text())
        except json.JSONDecodeError as err:
            raise ParseError(f"invalid JSON: {err.msg}", err.lineno) from None
        table = formats.table_from_json(obj)
        family = None
        if args.constraints is not None:
            from .closure import HypothesisFamily
            base = HypothesisFamily(tuple(table.local[1 << i] for i in range(table.n)),
                                    table.labels)
            family = formats.read_constraints(args.constraints, base)
    else:
        family = _family(args)
        table = build_closure(family, _local_test(args, parser))
    reports = []
    texts = []
    for subset in args.subset:
        bound = confidence_report(table, subset, args.alpha)
        if args.k is not None:
            if not 1 <= args.k <= len(bound.query):
                parser.error(f"--k must be between 1 and {len(bound.query)} for subset {subset}")
            bound = type(bound)(bound.query, bound.alpha, bound.tau_upper, bound.false_lower,
                                tuple(c for c in bound.claim_adjusted if c[0] == args.k))
        entry = bound.to_dict()
        if family is not None and family.edges is not None:
            entry["tau_upper_constrained"] = tau_upper_constrained(
                table, subset, args.alpha, family)
        reports.append(entry)
        names = ", ".join(table.labels[i - 1] for i in bound.query)
        text = (f"{{{names}}} at alpha={args.alpha:g}: true nulls in "
                f"{{{', '.join(map(str, bound.confidence_set))}}}, "
                f"at least {bound.false_lower} false")
        if "tau_upper_constrained" in entry:
            cset = ", ".join(map(str, range(entry["tau_upper_constrained"] + 1)))
            text += f"; with logical constraints {{{cset}}}"
        texts.append(text + "\n" + claim_sentence(bound, table.labels))
    if args.format == "json":
        return formats.dumps(reports)
    return "\n\n".join(texts) + "\n"


def cmd_permute(args, parser) -> str:
    data = formats.read_dataset(args.input)
    if args.perms is not None:
        plan = PermutationPlan("monte-carlo", args.perms, args.seed)
    else:
        plan = PermutationPlan("exhaustive")
    fn = {"minp": westfall_young_minp, "closed-bonferroni": closed_bonferroni_permutation,
          "marginal": permutation_marginal_pvalues}[args.method]
    try:
        adj = fn(data, plan, workers=args.workers)
    except CapacityError as err:
        raise CapacityError(f"{err} (--perms B)") from None
    marginal = adj if args.method == "marginal" else permutation_marginal_pvalues(
        data, plan, workers=args.workers)
    rows = []
    for lab, p, a in zip(data.labels, marginal, adj):
        row = {"variable": lab, "marginal_p": float(p), "adjusted_p": float(a)}
        if args.alpha is not None:
            row["rejected"] = bool(a <= args.alpha)
        rows.append(row)
    if args.format == "json":
        meta = {"method": args.method, "mode": plan.mode,
                "groups": list(data.group_names)}
        if plan.mode == "monte-carlo":
            meta.update(perms=plan.count, seed=plan.seed)
        return formats.dumps({"meta": meta, "variables": rows})
    if args.format == "csv":
        keys = list(rows[0])
        return "\n".join([",".join(keys)] + [
            ",".join(repr(r[k]) if isinstance(r[k], float) else str(r[k]).lower()
                     if isinstance(r[k], bool) else str(r[k]) for k in keys) for r in rows]) + "\n"
    return "\n".join(f"{r['variable']:<12}{r['marginal_p']:>12.6g}{r['adjusted_p']:>12.6g}"
                     for r in rows) + "\n"


def cmd_simulate(args, parser) -> str:
    if args.cov is None:
        parser.error("simulate needs --cov")
    family = formats.read_pvalues(args.input)
    cfg = ResamplingConfig(formats.read_matrix(args.cov), args.sims, args.seed)
    local = simulate_composite_pvalues(family.pvalues, cfg, workers=args.workers)
    order = formats.lattice_order(family.n)
    if args.format == "csv":
        return "subset,local_p\n" + "".join(
            f"{' '.join(map(str, subset_indices(m)))},{local[m]!r}\n" for m in order)
    return formats.dumps({
        "n": family.n, "labels": list(family.labels),
        "meta": {"sims": args.sims, "seed": args.seed},
        "subsets": [{"subset": list(subset_indices(m)), "local_p": float(local[m])}
                    for m in order]})


def render_example(result: dict, fmt: str) -> str:
    table, family, bound = result["table"], result["family"], result["bound"]
    alpha = result["alpha"]
    tau_free, tau_con = bound.tau_upper, result["tau_constrained"]
    if fmt == "dot":
        return formats.closure_dot(table, alpha) + formats.distinct_dot(table, family, alpha)
    if fmt == "json":
        return formats.dumps({
            "z": result["z"], "p": result["p"], "fisher": result["fisher"],
            "correlation": result["correlation"],
            "closure": formats.closure_report(
                table, alpha, family, {"sims": result["sims"], "seed": result["seed"]}),
            "query": list(QUERY),
            "tau_upper": tau_free, "tau_upper_constrained": tau_con,
            "bound": bound.to_dict(),
        })
    c = result["fisher"]
    lines = [
        "z = (" + ", ".join(f"{v:.3f}" for v in result["z"]) + ")",
        "p = (" + ", ".join(f"{v:.6f}" for v in result["p"]) + ")",
        "c = (" + ", ".join(f"{c[k]:.4f}" for k in ("12", "13", "23", "123")) + ")"
        "  [c12, c13, c23, c123]",
        "",
        f"Monte-Carlo Fisher closure ({result['sims']} simulations, seed {result['seed']}):",
        f"{'subset':<10}{'local p':>10}{'adjusted p':>12}",
    ]
    for mask in formats.lattice_order(table.n):
        name = "H" + "".join(map(str, subset_indices(mask)))
        lines.append(f"{name:<10}{table.local[mask]:>10.4f}{table.adjusted[mask]:>12.4f}")
    free = ", ".join(map(str, range(tau_free + 1)))
    con = ", ".join(map(str, range(tau_con + 1)))
    lines += [
        "",
        f"tau({{1,3}}) at alpha={alpha:g}, free combinations: {{{free}}}",
        f"tau({{1,3}}) at alpha={alpha:g}, logical constraints: {{{con}}}",
        claim_sentence(bound, table.labels),
    ]
    return "\n".join(lines) + "\n"


def cmd_example(args, parser) -> str:
    result = worked_example(args.sims, args.seed, args.alpha, args.workers)
    return render_example(result, args.format)


COMMANDS = {"closure": cmd_closure, "bounds": cmd_bounds, "permute": cmd_permute,
            "simulate": cmd_simulate, "example": cmd_example}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = COMMANDS[args.command](args, parser)
    except (ClosedTestError, OSError) as err:
        print(f"closedtest: error: {err}", file=sys.stderr)
        return 1
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
