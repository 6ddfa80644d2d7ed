"""Command-line harness: local bounds, table/figure reproduction, synthesis.

Every output file embeds the tool version, the command line, the seed, and
the working tolerance; reruns with the same seed are byte-identical except
for the timestamp line.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .bellexpr import BellExpression, EnumerationCapError, local_bound
from .graphwit import (
    CATALOG_NAMES,
    Graph,
    ParadoxCheckError,
    biseparable_saturation,
    build_paradox_expression,
    catalog,
    search_paradox_selections,
    three_setting_expression,
    verify_paradox,
)
from .seesaw import SeesawConfig, SeesawNumericalError, kproducible_lower_bound
from .witness_gamma import (
    GammaWitness,
    build_expression,
    dmin_rows,
    numeric_quantum_bound,
    optimal_quantum_bound,
    unbalanced_ghz_scan,
    w_state_margin_rows,
)

TIGHT_TOL = 1e-3
ANALYTIC_TOL = 1e-6
ONE_SIDED_SLACK = 1e-3

REPRODUCE_TARGETS = (
    "table1",
    "table2",
    "table3",
    "table4",
    "table5",
    "fig1",
    "fig2",
    "fig3",
)


def reference_values() -> dict:
    text = resources.files("bellwit").joinpath("data/reference_values.json").read_text()
    return json.loads(text)


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_output(path, fmt, command, seed, tolerance, rows):
    meta = {
        "tool": "bellwit",
        "version": __version__,
        "command": command,
        "seed": seed,
        "tolerance": tolerance,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(path)
    if fmt == "json":
        payload = dict(meta)
        payload["rows"] = rows
        path.write_text(json.dumps(payload, indent=1) + "\n")
        return
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    if rows:
        header = list(rows[0].keys())
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(_fmt(row.get(k, "")) for k in header))
    path.write_text("\n".join(lines) + "\n")


def _resolve_expression(args) -> BellExpression:
    sources = [args.catalog, args.expr, args.graph, args.gamma]
    if sum(s is not None for s in sources) != 1:
        raise ValueError("choose exactly one of --catalog, --expr, --graph, --gamma")
    if args.catalog is not None:
        return catalog(args.catalog).expression
    if args.expr is not None:
        return BellExpression.from_json(Path(args.expr).read_text())
    if args.graph is not None:
        graph = Graph.parse(Path(args.graph).read_text())
        if args.settings == 3:
            return three_setting_expression(graph, name="full_stabilizer").expression
        found = search_paradox_selections(graph)
        if not found:
            raise ValueError("no two-setting selection found for this graph")
        return build_paradox_expression(found[0], name="searched").expression
    if args.n is None:
        raise ValueError("--gamma requires --n")
    return build_expression(GammaWitness(n=args.n, gamma=args.gamma))


def _cmd_local_bound(args, command):
    expr = _resolve_expression(args)
    result = local_bound(expr)
    print(f"expression: {expr.name or '(unnamed)'}")
    print(f"local bound: {result.value:g}")
    strategy = "; ".join(
        f"party {i + 1}: " + " ".join(f"{s:+d}" for s in row)
        for i, row in enumerate(result.assignment)
    )
    print(f"maximizing strategy: {strategy}")
    if args.out:
        rows = [
            {
                "name": expr.name,
                "local_bound": result.value,
                "strategies_scanned": result.strategies_scanned,
                "assignment": strategy,
            }
        ]
        _write_output(args.out, args.format, command, args.seed, 1e-9, rows)
        print(f"wrote {args.out}")
    return 0


def _kprod_value(expr, k, ref, args):
    cfg = SeesawConfig(restarts=args.restarts, seed=args.seed)
    res = kproducible_lower_bound(
        expr, k, config=cfg, target=ref - 5e-5 if ref is not None else None
    )
    return res.value


def _reproduce_table_rows(table_name, fixtures, args):
    rows = []
    for ineq_name, cols in fixtures[table_name].items():
        ineq = catalog(ineq_name)
        for k_str, entry in sorted(cols.items(), key=lambda kv: int(kv[0])):
            k = int(k_str)
            ref = float(entry["value"])
            kind = entry["kind"]
            if kind == "exact":
                computed = local_bound(ineq.expression).value
                ok = abs(computed - ref) <= ANALYTIC_TOL
            elif kind == "tsirelson":
                computed = verify_paradox(ineq).total
                ok = abs(computed - ref) <= ANALYTIC_TOL
            elif kind == "tight":
                computed = _kprod_value(ineq.expression, k, ref, args)
                ok = abs(computed - ref) <= TIGHT_TOL
            else:  # one-sided upper bound
                computed = _kprod_value(ineq.expression, k, ref, args)
                ok = computed <= ref + ONE_SIDED_SLACK
            rows.append(
                {
                    "inequality": ineq_name,
                    "k": k,
                    "kind": kind,
                    "reference": ref,
                    "computed": computed,
                    "match": ok,
                }
            )
    return rows


def _reproduce(args, command):
    target = args.target
    fixtures = reference_values()
    seed = args.seed
    if target in ("table1", "table2", "table4", "table5"):
        rows = _reproduce_table_rows(target, fixtures, args)
    elif target == "table3":
        rows = []
        spots = fixtures["table3"]["spot_gamma2"]
        for n in (2, 3, 4, 5):
            for gamma in (0.5, 1.0, 1.5, 2.0):
                phi_c, closed = optimal_quantum_bound(n, gamma)
                phi_n, numeric = numeric_quantum_bound(n, gamma)
                ok = abs(closed - numeric) <= 1e-8
                if gamma == 2.0 and str(n) in spots:
                    ok = ok and abs(closed - spots[str(n)]) <= ANALYTIC_TOL
                rows.append(
                    {
                        "n": n,
                        "gamma": gamma,
                        "phi_star": phi_c,
                        "closed_form": closed,
                        "numeric": numeric,
                        "match": ok,
                    }
                )
    elif target == "fig1":
        gammas = [round(0.05 * j, 2) for j in range(1, 11)]
        cfg = SeesawConfig(restarts=args.restarts, seed=seed)
        rows = [
            {"n": n, "gamma": g, "margin_2prod": m}
            for n, g, m in w_state_margin_rows((3, 4, 5, 6), gammas, cfg)
        ]
    elif target == "fig2":
        if args.theta_grid:
            lo, hi, step = (float(t) for t in args.theta_grid.split(":"))
        else:
            lo, hi, step = 0.01, math.pi / 4, 0.01
        thetas = list(np.arange(lo, hi + 1e-12, step))
        cfg = SeesawConfig(restarts=args.restarts, seed=seed)
        rows = []
        for n in (3, 5):
            for r in unbalanced_ghz_scan(n, thetas, 2.0, cfg):
                rows.append(
                    {
                        "n": n,
                        "theta": r.theta,
                        "value": r.value,
                        "margin_gme": r.gme_margin,
                        "margin_nonlocality": r.nonlocality_margin,
                        "match": r.nonlocality_margin >= -1e-9,
                    }
                )
    elif target == "fig3":
        refs = fixtures["fig3"]["dmin_gamma2"]
        rows = []
        for n, d2, dstar, gstar in dmin_rows(range(3, 12)):
            ok = dstar <= d2
            if str(n) in refs:
                ok = ok and d2 == refs[str(n)]
            rows.append(
                {
                    "n": n,
                    "dmin_gamma2": d2,
                    "dmin_tuned": dstar,
                    "gamma_star": gstar,
                    "match": ok,
                }
            )
    else:
        raise ValueError(f"unknown target {target!r}")

    out = args.out or f"{target}.{args.format}"
    _write_output(out, args.format, command, seed, TIGHT_TOL, rows)
    bad = [r for r in rows if not r.get("match", True)]
    print(f"{target}: {len(rows)} rows, {len(rows) - len(bad)} matching -> {out}")
    return 0 if not bad else 3


def _cmd_synthesize(args, command):
    graph = Graph.parse(Path(args.graph).read_text())
    if graph.n > 6:
        raise ValueError("synthesis search supported for n <= 6")
    selections = search_paradox_selections(graph)
    if not selections:
        # only fixed-direction selections exist; report them annotated
        selections = search_paradox_selections(
            graph, require_two_settings_per_party=False
        )
    rows = []
    for idx, sel in enumerate(selections):
        ineq = build_paradox_expression(sel, name=f"search_{idx}")
        bound = local_bound(ineq.expression)
        saturated = bool(ineq.single_letter_parties)
        row = {
            "index": idx,
            "m": sel.m,
            "subsets": " | ".join(
                ",".join(str(v) for v in sorted(s)) for s in sel.subsets
            ),
            "local_bound": bound.value,
            "quantum_maximum": ineq.quantum_maximum,
            "fixed_setting_parties": ",".join(
                str(p) for p in ineq.single_letter_parties
            ),
            "biseparably_saturated": saturated,
            "terms": " ".join(
                f"{c:+g}*E{s}" for c, s in ineq.expression.terms
            ).replace(" ", ""),
            "letter_to_setting": json.dumps(
                [{k: v for k, v in m.items()} for m in ineq.letter_to_setting]
            ),
        }
        if saturated:
            row["biseparable_value"] = biseparable_saturation(
                ineq, party=ineq.single_letter_parties[0]
            ).value
        rows.append(row)
    out = args.out or "synthesized.json"
    _write_output(out, args.format, command, args.seed, 1e-9, rows)
    print(f"found {len(rows)} inequalities -> {out}")
    return 0


def _cmd_kprod(args, command):
    expr = _resolve_expression(args)
    dims = (args.d,) * expr.n if args.d else None
    cfg = SeesawConfig(restarts=args.restarts, seed=args.seed)
    res = kproducible_lower_bound(expr, args.k, dims=dims, config=cfg)
    print(f"expression: {expr.name or '(unnamed)'}")
    print(f"{args.k}-producible lower bound: {res.value!r}")
    print(f"best partition: {res.partition.groups}")
    if args.out:
        rows = [
            {
                "name": expr.name,
                "k": args.k,
                "value": res.value,
                "partition": str(res.partition.groups),
                "converged": res.converged,
            }
        ]
        _write_output(args.out, args.format, command, args.seed, cfg.tol, rows)
        print(f"wrote {args.out}")
    return 0


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--restarts", type=int, default=20)


def _add_sources(parser):
    parser.add_argument("--catalog", type=str, default=None, help=f"one of {', '.join(CATALOG_NAMES)}")
    parser.add_argument("--graph", type=str, default=None, help="graph file (edge list or adjacency)")
    parser.add_argument("--gamma", type=float, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--expr", type=str, default=None, help="expression JSON file")
    parser.add_argument(
        "--settings",
        type=int,
        choices=(2, 3),
        default=3,
        help="with --graph: 3 = full stabilizer sum, 2 = first searched selection",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellwit",
        description="Bell inequalities for multipartite entanglement-depth witnessing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("local-bound", help="exact local bound by strategy scan")
    _add_sources(p)
    _add_common(p)

    p = sub.add_parser("reproduce", help="recompute a reference table or figure")
    p.add_argument("--target", choices=REPRODUCE_TARGETS, required=True)
    p.add_argument("--theta-grid", type=str, default=None, help="A:B:STEP for fig2")
    _add_common(p)

    p = sub.add_parser("synthesize", help="search two-setting selections for a graph")
    p.add_argument("--graph", type=str, required=True)
    _add_common(p)

    p = sub.add_parser("kprod", help="k-producible see-saw lower bound")
    _add_sources(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, default=None, help="uniform local dimension")
    _add_common(p)

    return parser


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = "bellwit " + " ".join(argv)
    try:
        if args.command == "local-bound":
            return _cmd_local_bound(args, command)
        if args.command == "reproduce":
            return _reproduce(args, command)
        if args.command == "synthesize":
            return _cmd_synthesize(args, command)
        if args.command == "kprod":
            return _cmd_kprod(args, command)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, EnumerationCapError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SeesawNumericalError, ParadoxCheckError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
