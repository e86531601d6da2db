"""Command-line interface: generate, sparsify, eval, compare, oracle.

Every randomized operation takes a 64-bit seed and every output embeds the
exact run configuration, so any run repeats byte-for-byte.  Timing is logged
to stderr only, keeping the written artifacts deterministic.  Exit codes:
0 success, 1 domain error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from usparse import backbone as backbone_mod
from usparse import benchmarks, evaluation, lp
from usparse.config import RunConfig
from usparse.emd import emd_run
from usparse.gdb import Rule, gdb_run
from usparse.graph import (
    DiscrepancyMode,
    GraphFormatError,
    UncertainGraph,
    derive_rng,
    exact_query_probability,
    generate_synthetic,
    graph_entropy,
    load_graph,
    sampled_k_discrepancy_mae,
    save_graph,
)


def _worker_cap() -> int:
    try:
        return max(1, int(os.environ.get("USPARSE_THREADS", "1")))
    except ValueError:
        return 1


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def _probability_sampler(spec: str):
    """Parse --dist: uniform[:lo,hi] | beta:a,b | const:p."""
    name, _, args = spec.partition(":")
    if name == "uniform":
        lo, hi = (float(x) for x in args.split(",")) if args else (0.0, 1.0)
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError("uniform bounds must satisfy 0 <= lo < hi <= 1")

        def sampler(rng, size):
            draw = lo + (hi - lo) * (1.0 - rng.random(size))
            return np.clip(draw, np.nextafter(0.0, 1.0), 1.0)

        return sampler
    if name == "beta":
        a, b = (float(x) for x in args.split(","))

        def sampler(rng, size):
            return np.clip(rng.beta(a, b, size), np.nextafter(0.0, 1.0), 1.0)

        return sampler
    if name == "const":
        p = float(args)
        if not 0.0 < p <= 1.0:
            raise ValueError("const probability must be in (0, 1]")
        return lambda rng, size: np.full(size, p)
    raise ValueError(f"unknown probability distribution {spec!r}")


def cmd_generate(args) -> int:
    g = generate_synthetic(
        args.vertices, args.density, _probability_sampler(args.dist), seed=args.seed
    )
    save_graph(g, args.output)
    _log(f"generated n={g.n} m={g.m} -> {args.output}")
    return 0


# ---------------------------------------------------------------------------
# sparsify
# ---------------------------------------------------------------------------


def _gdb_rule(config: RunConfig) -> Rule:
    k = config.rule_cardinality()
    if k is None:
        return Rule("cut-all")
    if k == 1:
        return Rule("degree-rel" if config.mode == "rel" else "degree-abs")
    if config.mode == "rel":
        raise ValueError("cut rules with k>1 are defined for absolute discrepancies only")
    return Rule("cut-k", k)


def _make_backbone(g, config: RunConfig):
    if config.backbone == "random":
        return backbone_mod.random_backbone(g, config.alpha, seed=config.seed)
    return backbone_mod.build_backbone(
        g, config.alpha, alpha_prime=config.alpha_prime, seed=config.seed
    )


def run_sparsify(config: RunConfig) -> dict:
    """Execute one sparsification run; returns the manifest payload."""
    config.validate()
    g = load_graph(config.input)
    started = time.perf_counter()
    if config.method == "ni":
        theta = config.theta if config.theta is not None else benchmarks.DEFAULT_THETA
        out, info = benchmarks.ni_sparsify(g, config.alpha, theta=theta, seed=config.seed)
    elif config.method == "ss":
        out, info = benchmarks.ss_sparsify(g, config.alpha, seed=config.seed)
    else:
        bb = _make_backbone(g, config)
        if config.method == "lp":
            out, info = lp.lp_sparsify(g, bb)
        elif config.method == "emd":
            mode = DiscrepancyMode.RELATIVE if config.mode == "rel" else DiscrepancyMode.ABSOLUTE
            out, info = emd_run(
                g,
                bb,
                h=config.h,
                mode=mode,
                tau=config.tau,
                max_iters=config.max_iters,
                max_sweeps=config.max_sweeps,
            )
        else:
            out, info = gdb_run(
                g,
                bb,
                h=config.h,
                rule=_gdb_rule(config),
                tau=config.tau,
                max_sweeps=config.max_sweeps,
            )
    elapsed = time.perf_counter() - started
    save_graph(out, config.output)
    delta = g.degree_vector() - out.degree_vector()
    entropy_before = graph_entropy(g)
    entropy_after = graph_entropy(out)
    manifest = {
        "config": config.to_dict(),
        "vertices": g.n,
        "edges_original": g.m,
        "edges_sparsified": out.m,
        "degree_objective": float(np.dot(delta, delta)),
        "degree_mae": float(np.mean(np.abs(delta))),
        "entropy_before": entropy_before,
        "entropy_after": entropy_after,
        "relative_entropy": (entropy_after / entropy_before) if entropy_before > 0 else None,
        "method_info": info,
    }
    _write_json(_manifest_path(config.output), manifest)
    _log(f"{config.method}: {out.m} edges -> {config.output} ({elapsed:.2f}s)")
    return manifest


def _manifest_path(output_path: str) -> str:
    return str(output_path) + ".manifest.json"


def cmd_sparsify(args) -> int:
    if args.from_manifest:
        with open(args.from_manifest, "r", encoding="utf-8") as fh:
            config = RunConfig.from_dict(json.load(fh)["config"])
    else:
        if args.method is None or args.alpha is None:
            raise ValueError("sparsify requires --method and --alpha (or --from-manifest)")
        config = RunConfig(
            input=args.input,
            output=args.output,
            method=args.method,
            alpha=args.alpha,
            alpha_prime=args.alpha_prime,
            backbone=args.backbone,
            mode=args.mode,
            rule=args.rule,
            h=args.h,
            tau=args.tau,
            theta=args.theta,
            seed=args.seed,
            max_sweeps=args.max_sweeps,
            max_iters=args.max_iters,
        )
    run_sparsify(config)
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def _unit_id(unit) -> str:
    return f"{unit[0]}-{unit[1]}" if isinstance(unit, tuple) else str(unit)


def run_eval(g, sparsified, kind, n_samples, n_runs, n_pairs, seed, with_variance=True):
    """Evaluate one query; returns (csv rows, summary dict)."""
    units = evaluation.default_units(g, kind, n_pairs=n_pairs, seed=seed)
    report = evaluation.emd_report(g, sparsified, kind, units, n_samples=n_samples, seed=seed)
    means_orig = evaluation.mc_point_estimates(g, kind, units, n_samples, seed)
    means_sparse = evaluation.mc_point_estimates(sparsified, kind, units, n_samples, seed)
    rows = [
        {
            "unit": _unit_id(unit),
            "mean_original": means_orig[unit],
            "mean_sparsified": means_sparse[unit],
            "emd": report.per_unit[unit],
        }
        for unit in units
        if unit in report.per_unit
    ]
    summary = {
        "query": kind.value,
        "units_evaluated": len(report.per_unit),
        "units_skipped": len(report.skipped_units),
        "emd_mean": report.mean,
        "emd_median": report.median,
        "emd_max": report.max,
    }
    if with_variance:
        var_orig = evaluation.variance_protocol(g, kind, units, n_samples, n_runs, seed)
        var_sparse = evaluation.variance_protocol(sparsified, kind, units, n_samples, n_runs, seed)
        total_orig = float(np.nansum(list(var_orig.values())))
        total_sparse = float(np.nansum(list(var_sparse.values())))
        summary["relative_variance"] = (
            total_sparse / total_orig if total_orig > 0 else None
        )
    return rows, summary


def cmd_eval(args) -> int:
    g = load_graph(args.input)
    sparsified = load_graph(args.sparsified, allow_zero=True)
    if g.n != sparsified.n:
        raise ValueError(
            f"vertex-count mismatch: original has {g.n}, sparsified has {sparsified.n}"
        )
    if args.samples < 2:
        _log("warning: a single sample makes distribution estimates degenerate")
    kind = evaluation.QueryKind(args.query)
    rows, summary = run_eval(
        g, sparsified, kind, args.samples, args.runs, args.pairs, args.seed,
        with_variance=not args.no_variance,
    )
    csv_path = args.output + ".csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["unit", "mean_original", "mean_sparsified", "emd"])
        writer.writeheader()
        writer.writerows(rows)
    summary["config"] = {
        "input": args.input,
        "sparsified": args.sparsified,
        "query": args.query,
        "samples": args.samples,
        "runs": args.runs,
        "pairs": args.pairs,
        "seed": args.seed,
    }
    _write_json(args.output + ".json", summary)
    _log(f"eval {args.query}: emd mean {summary['emd_mean']:.6g} -> {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

COMPARE_FIELDS = [
    "method",
    "alpha",
    "query",
    "mae_degree",
    "mae_cut_sampled",
    "relative_entropy",
    "mean_emd",
    "relative_variance",
    "error",
]


def _cut_mae_profile(g, sparsified, n_cuts, seed):
    """Average of sampled-cut MAEs over a small ladder of cut cardinalities."""
    ks = sorted({1, 2, max(1, g.n // 4), max(1, g.n // 2), max(1, (3 * g.n) // 4), g.n})
    values = [sampled_k_discrepancy_mae(g, sparsified, k, n_cuts, seed) for k in ks]
    return float(np.mean(values))


def _compare_cell(g, config, queries, args):
    """One (method, alpha) cell of the sweep; returns one row per query."""
    manifest = run_sparsify(config)
    sparsified = load_graph(config.output, allow_zero=True)
    base = {
        "method": config.method,
        "alpha": config.alpha,
        "mae_degree": manifest["degree_mae"],
        "mae_cut_sampled": _cut_mae_profile(g, sparsified, args.cut_samples, config.seed),
        "relative_entropy": manifest["relative_entropy"],
    }
    rows = []
    for query in queries:
        kind = evaluation.QueryKind(query)
        _, summary = run_eval(
            g, sparsified, kind, args.samples, args.runs, args.pairs, config.seed
        )
        rows.append(
            {
                **base,
                "query": query,
                "mean_emd": summary["emd_mean"],
                "relative_variance": summary["relative_variance"],
                "error": "",
            }
        )
    return rows


def cmd_compare(args) -> int:
    g = load_graph(args.input)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    alphas = [float(a) for a in args.alphas.split(",")]
    queries = [q.strip() for q in args.queries.split(",") if q.strip()]
    for q in queries:
        evaluation.QueryKind(q)
    out_dir = os.path.dirname(os.path.abspath(args.output))
    cells = []
    for method in methods:
        for alpha in alphas:
            cell_out = os.path.join(out_dir, f".compare_{method}_{alpha:g}.el")
            cells.append(
                RunConfig(
                    input=args.input,
                    output=cell_out,
                    method=method,
                    alpha=alpha,
                    backbone=args.backbone,
                    mode=args.mode,
                    h=args.h,
                    seed=args.seed,
                )
            )

    def run_cell(config):
        try:
            return _compare_cell(g, config, queries, args)
        except Exception as exc:  # failures recorded per cell, sweep continues
            return [
                {
                    "method": config.method,
                    "alpha": config.alpha,
                    "query": query,
                    "mae_degree": "",
                    "mae_cut_sampled": "",
                    "relative_entropy": "",
                    "mean_emd": "",
                    "relative_variance": "",
                    "error": str(exc),
                }
                for query in queries
            ]

    workers = _worker_cap()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(run_cell, cells))
    else:
        per_cell = [run_cell(c) for c in cells]
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COMPARE_FIELDS)
        writer.writeheader()
        for rows in per_cell:
            writer.writerows(rows)
    _log(f"compare: {len(cells)} cells x {len(queries)} queries -> {args.output}")
    return 0


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


def cmd_oracle(args) -> int:
    g = load_graph(args.input)
    if args.query == "connected":
        value = exact_query_probability(g, lambda w: w.is_connected())
        payload = {"query": "connected", "probability": value}
    else:
        if args.source is None or args.target is None:
            raise ValueError("reachable query needs --source and --target")
        s, t = args.source, args.target
        value = exact_query_probability(g, lambda w: w.reachable(s, t))
        payload = {"query": "reachable", "source": s, "target": t, "probability": value}
    payload["edges"] = g.m
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usparse", description="Uncertain-graph sparsification toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="synthesize a random connected uncertain graph")
    p_gen.add_argument("-n", "--vertices", type=int, required=True)
    p_gen.add_argument("-d", "--density", type=float, required=True,
                       help="fraction of the complete graph's edges")
    p_gen.add_argument("--dist", default="uniform",
                       help="edge probability distribution: uniform[:lo,hi] | beta:a,b | const:p")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("-o", "--output", required=True)
    p_gen.set_defaults(func=cmd_generate)

    p_sp = sub.add_parser("sparsify", help="sparsify a graph with one method")
    p_sp.add_argument("-i", "--input", required=True)
    p_sp.add_argument("-o", "--output", required=True)
    p_sp.add_argument("-m", "--method", choices=("gdb", "emd", "lp", "ni", "ss"))
    p_sp.add_argument("-a", "--alpha", type=float, help="fraction of edges to keep")
    p_sp.add_argument("--alpha-prime", type=float, default=None,
                      help="spanning-forest quota (defaults per the method)")
    p_sp.add_argument("--backbone", choices=("spanning", "random"), default="spanning")
    p_sp.add_argument("--mode", choices=("abs", "rel"), default="abs")
    p_sp.add_argument("-k", "--rule", default="1",
                      help="cut cardinality to preserve: integer or 'all'")
    p_sp.add_argument("--h", type=float, default=0.05,
                      help="entropy step damping in [0,1]")
    p_sp.add_argument("--tau", type=float, default=None,
                      help="absolute convergence threshold on the objective")
    p_sp.add_argument("--theta", type=float, default=None,
                      help="epsilon calibration factor (ni only)")
    p_sp.add_argument("--max-sweeps", type=int, default=100)
    p_sp.add_argument("--max-iters", type=int, default=50)
    p_sp.add_argument("--seed", type=int, default=0)
    p_sp.add_argument("--from-manifest", default=None,
                      help="re-run the exact configuration stored in a manifest")
    p_sp.set_defaults(func=cmd_sparsify)

    p_ev = sub.add_parser("eval", help="compare a sparsified graph against its original")
    p_ev.add_argument("-i", "--input", required=True, help="original graph")
    p_ev.add_argument("-s", "--sparsified", required=True)
    p_ev.add_argument("-q", "--query", choices=("pr", "sp", "rl", "cc"), required=True)
    p_ev.add_argument("--samples", type=int, default=evaluation.DEFAULT_N_SAMPLES)
    p_ev.add_argument("--runs", type=int, default=evaluation.DEFAULT_N_RUNS)
    p_ev.add_argument("--pairs", type=int, default=evaluation.DEFAULT_N_PAIRS)
    p_ev.add_argument("--no-variance", action="store_true",
                      help="skip the repeated-run variance protocol")
    p_ev.add_argument("--seed", type=int, default=0)
    p_ev.add_argument("-o", "--output", required=True, help="prefix for .csv and .json")
    p_ev.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", help="sweep methods x alphas x queries into one CSV")
    p_cmp.add_argument("-i", "--input", required=True)
    p_cmp.add_argument("--methods", required=True, help="comma-separated subset of gdb,emd,lp,ni,ss")
    p_cmp.add_argument("--alphas", required=True, help="comma-separated ratios")
    p_cmp.add_argument("--queries", required=True, help="comma-separated subset of pr,sp,rl,cc")
    p_cmp.add_argument("--backbone", choices=("spanning", "random"), default="spanning")
    p_cmp.add_argument("--mode", choices=("abs", "rel"), default="abs")
    p_cmp.add_argument("--h", type=float, default=0.05)
    p_cmp.add_argument("--samples", type=int, default=evaluation.DEFAULT_N_SAMPLES)
    p_cmp.add_argument("--runs", type=int, default=evaluation.DEFAULT_N_RUNS)
    p_cmp.add_argument("--pairs", type=int, default=evaluation.DEFAULT_N_PAIRS)
    p_cmp.add_argument("--cut-samples", type=int, default=200,
                       help="sampled cuts per cardinality for the cut MAE column")
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("-o", "--output", required=True, help="consolidated CSV path")
    p_cmp.set_defaults(func=cmd_compare)

    p_or = sub.add_parser("oracle", help="exact possible-world probabilities on tiny graphs")
    p_or.add_argument("-i", "--input", required=True)
    p_or.add_argument("-q", "--query", choices=("connected", "reachable"), required=True)
    p_or.add_argument("--source", type=int, default=None)
    p_or.add_argument("--target", type=int, default=None)
    p_or.add_argument("-o", "--output", default=None)
    p_or.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError, GraphFormatError) as exc:
        _log(f"error: {exc}")
        return 2
    except (ValueError, RuntimeError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
