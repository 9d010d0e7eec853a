"""Command-line entry points: audit, sweep, simulate, report-plots.

Every command writes a versioned JSON report that embeds the full
configuration needed to reproduce it, and all randomness flows from the
single ``--seed`` flag through fixed substream derivations, so identical
invocations produce byte-identical reports.

Exit codes: 0 success, 2 data or configuration errors, 3 inference
undefined (no usable matched pairs), 4 infeasible synthetic world.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .calibration import calibrate_slates
from .core import PositionWeights, RankedSlate, ScoreModifier, rerank_with_modifier
from .errors import (
    AuditError,
    ConfigurationError,
    InfeasibleWorldError,
    InferenceUndefinedError,
    InputError,
)
from .inference import BootstrapConfig, bootstrap_ci, bootstrap_mean_ci, test_mpc_zero
from .ingest import (
    build_eval_slates,
    parse_movies,
    parse_ratings,
    read_slates,
    temporal_split,
    write_slates,
)
from .matching import PairConfig, epsilon_from_percentile
from .metrics import binned_mean_curve, calibration_curve, ndcg
from .svd import build_matrix, fit_svd, load_model, save_model
from .synthetic import SyntheticWorld, expected_relevance, generate
from . import plots

REPORT_SCHEMA_VERSION = 1
RULES = ("baseline", "boosted", "demoted", "calibrated")
CACHE_ENV = "RANKAUDIT_CACHE"

EXIT_OK = 0
EXIT_DATA = 2
EXIT_INFERENCE = 3
EXIT_INFEASIBLE = 4


def _derived_seed(master: int, *key: int) -> int:
    """Stable substream seed for a purpose identified by integer keys."""
    return int(np.random.SeedSequence(entropy=[int(master), *key]).generate_state(1)[0])


def _sanitize(obj):
    """Make a report JSON-safe: native types only, non-finite floats -> None."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _write_report(report: dict, path: str | Path) -> None:
    text = json.dumps(_sanitize(report), sort_keys=True, indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


CSV_COLUMNS = [
    "group",
    "rule",
    "mpc_point",
    "mpc_lo",
    "mpc_hi",
    "mpc_n_pairs",
    "mpc_epsilon",
    "mpc_variant",
    "ndcg_point",
    "ndcg_lo",
    "ndcg_hi",
    "test_statistic",
    "test_p_value",
    "test_reject",
]


def _write_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row["group"],
                    row["rule"],
                    row["mpc"]["point"],
                    row["mpc"]["interval"][0],
                    row["mpc"]["interval"][1],
                    row["mpc"]["n_pairs"],
                    row["mpc"]["epsilon"],
                    row["mpc"]["variant"],
                    row["ndcg"]["point"],
                    row["ndcg"]["interval"][0],
                    row["ndcg"]["interval"][1],
                    row["test"]["statistic"],
                    row["test"]["p_value"],
                    row["test"]["reject"],
                ]
            )


def _model_cache_path(ratings_path: Path, train_fraction: float, rank: int, seed: int) -> Path | None:
    cache_dir = os.environ.get(CACHE_ENV)
    if not cache_dir:
        return None
    digest = hashlib.sha256()
    digest.update(ratings_path.read_bytes())
    digest.update(f"|{train_fraction}|{rank}|{seed}".encode())
    return Path(cache_dir) / f"svd_{digest.hexdigest()[:20]}.npz"


def _load_input_slates(args, master_seed: int) -> tuple[list[RankedSlate], dict]:
    """Load slates either directly or through the SVD ranking pipeline."""
    if args.slates is not None:
        slates = read_slates(args.slates)
        if not slates:
            raise InputError(f"slate file {args.slates} contains no slates")
        echo = {"slates": str(args.slates), "ratings": None, "movies": None}
        return slates, echo

    ratings = parse_ratings(args.ratings)
    movies = {m.movie_id: m for m in parse_movies(args.movies)}
    train, evaluation = temporal_split(ratings, args.train_fraction)
    svd_seed = _derived_seed(master_seed, 3)

    model = None
    cache_path = _model_cache_path(Path(args.ratings), args.train_fraction, args.rank, svd_seed)
    if cache_path is not None and cache_path.exists():
        model = load_model(cache_path)
    if model is None:
        model = fit_svd(build_matrix(train), k=args.rank, seed=svd_seed)
        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            save_model(model, cache_path)

    slates = build_eval_slates(evaluation, model.score, movies)
    echo = {
        "slates": None,
        "ratings": str(args.ratings),
        "movies": str(args.movies),
        "rank": args.rank,
        "train_fraction": args.train_fraction,
    }
    return slates, echo


def _resolve_groups(args, slates: Sequence[RankedSlate]) -> list[str]:
    if args.group:
        return list(dict.fromkeys(args.group))
    if getattr(args, "all_groups", False):
        labels = sorted({g for s in slates for it in s.items for g in it.groups})
        if not labels:
            raise InputError("no group labels present in the input slates")
        return labels
    raise ConfigurationError("specify --group at least once, or --all-groups")


def _selection(args, slates: Sequence[RankedSlate], group: str) -> tuple[PairConfig, dict]:
    """Resolve the pair-selection config for one (group, slate collection)."""
    adjacent = bool(args.adjacent)
    both = bool(args.both_orientations)
    if args.epsilon is not None:
        config = PairConfig(epsilon=args.epsilon, adjacent=adjacent,
                            include_both_orientations=both)
        echo = {"method": "epsilon", "epsilon": args.epsilon, "percentile": None, "k": None}
    elif args.k_smallest is not None:
        config = PairConfig(k=args.k_smallest, adjacent=adjacent,
                            include_both_orientations=both)
        echo = {"method": "k_smallest", "epsilon": None, "percentile": None,
                "k": args.k_smallest}
    else:
        eps = epsilon_from_percentile(slates, group, args.epsilon_percentile)
        config = PairConfig(epsilon=eps, adjacent=adjacent,
                            include_both_orientations=both)
        echo = {"method": "percentile", "epsilon": eps,
                "percentile": args.epsilon_percentile, "k": None}
    echo["adjacent"] = adjacent
    echo["both_orientations"] = both
    return config, echo


def _mpc_payload(estimate) -> dict:
    return {
        "point": estimate.point,
        "interval": list(estimate.interval),
        "confidence": estimate.confidence,
        "n_pairs": estimate.n_pairs,
        "epsilon": estimate.epsilon,
        "variant": estimate.variant,
        "variance": estimate.variance,
        "method": estimate.method,
    }


def _test_payload(test) -> dict:
    return {
        "statistic": test.statistic,
        "p_value": test.p_value,
        "reject": test.reject,
        "method": test.method,
        "level": test.level,
    }


def _audit_one(
    slates: Sequence[RankedSlate],
    group: str,
    rule: str,
    args,
    master_seed: int,
    group_index: int,
    rule_index: int,
    weights: PositionWeights,
    alpha_applied: float | None,
) -> dict:
    """Run matching, MPC inference and NDCG for one (group, rule) row."""
    config, selection_echo = _selection(args, slates, group)
    cfg = BootstrapConfig(
        trials=args.trials,
        confidence=args.confidence,
        seed=_derived_seed(master_seed, 1, group_index, rule_index),
        resample_unit=args.resample_unit,
    )
    estimate = bootstrap_ci(slates, group, config, cfg)
    test = test_mpc_zero(estimate)
    ndcg_values = [ndcg(s, weights) for s in slates]
    ndcg_cfg = BootstrapConfig(
        trials=args.trials,
        confidence=args.confidence,
        seed=_derived_seed(master_seed, 2, group_index, rule_index),
    )
    ndcg_point, ndcg_interval = bootstrap_mean_ci(ndcg_values, ndcg_cfg)
    return {
        "group": group,
        "rule": rule,
        "config": {
            "seed": master_seed,
            "trials": args.trials,
            "confidence": args.confidence,
            "resample_unit": args.resample_unit,
            "selection": selection_echo,
            "alpha_applied": alpha_applied,
        },
        "mpc": _mpc_payload(estimate),
        "ndcg": {"point": ndcg_point, "interval": list(ndcg_interval)},
        "test": _test_payload(test),
    }


def _base_report(command: str, args, echo: dict, groups: list[str]) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": "rankaudit",
        "version": __version__,
        "command": command,
        "config": {
            "inputs": echo,
            "groups": groups,
            "seed": args.seed,
            "trials": args.trials,
            "confidence": args.confidence,
            "resample_unit": args.resample_unit,
            "epsilon": args.epsilon,
            "epsilon_percentile": args.epsilon_percentile,
            "k_smallest": args.k_smallest,
            "adjacent": bool(args.adjacent),
            "both_orientations": bool(args.both_orientations),
        },
        "rows": [],
    }


def cmd_audit(args) -> int:
    slates, echo = _load_input_slates(args, args.seed)
    groups = _resolve_groups(args, slates)
    weights = PositionWeights.log_discount(max(len(s) for s in slates))
    report = _base_report("audit", args, echo, groups)
    for gi, group in enumerate(groups):
        report["rows"].append(
            _audit_one(slates, group, "baseline", args, args.seed, gi, 0, weights, None)
        )
    _write_report(report, args.out)
    if args.csv:
        _write_csv(report["rows"], args.csv)
    return EXIT_OK


def cmd_sweep(args) -> int:
    slates, echo = _load_input_slates(args, args.seed)
    groups = _resolve_groups(args, slates)
    weights = PositionWeights.log_discount(max(len(s) for s in slates))
    scores = np.array([it.score for s in slates for it in s.items])
    alpha = args.alpha if args.alpha is not None else float(scores.std() / 3.0)

    report = _base_report("sweep", args, echo, groups)
    report["config"]["alpha"] = alpha
    for gi, group in enumerate(groups):
        rule_slates = {
            "baseline": list(slates),
            "boosted": rerank_with_modifier(slates, ScoreModifier(group, alpha)),
            "demoted": rerank_with_modifier(slates, ScoreModifier(group, -alpha)),
            "calibrated": calibrate_slates(slates, group),
        }
        applied = {"baseline": 0.0, "boosted": alpha, "demoted": -alpha,
                   "calibrated": None}
        for ri, rule in enumerate(RULES):
            report["rows"].append(
                _audit_one(
                    rule_slates[rule], group, rule, args, args.seed, gi, ri,
                    weights, applied[rule],
                )
            )
    _write_report(report, args.out)
    if args.csv:
        _write_csv(report["rows"], args.csv)
    return EXIT_OK


def _conditional_curves(dataset, bins: int = 10) -> dict[str, dict]:
    """Binned outcome curves keyed by 'query type/item type' strata."""
    strata: dict[str, tuple[list[float], list[float]]] = {}
    for slate in dataset.slates:
        qt = dataset.query_types[slate.query_id]
        for it in slate.items:
            ty = "1" if "type1" in it.groups else "2"
            xs, ys = strata.setdefault(f"query {qt} / type {ty}", ([], []))
            xs.append(it.score)
            ys.append(it.outcome)
    out = {}
    for name, (xs, ys) in sorted(strata.items()):
        edges, means, counts = binned_mean_curve(
            np.array(xs), np.array(ys), bins, 0.0, 1.0
        )
        mids = 0.5 * (edges[:-1] + edges[1:])
        out[name] = {
            "score": [float(v) for v in mids],
            "mean_outcome": [None if not math.isfinite(m) else float(m) for m in means],
            "count": [int(c) for c in counts],
        }
    return out


def cmd_simulate(args) -> int:
    mixture = tuple(args.mixture) if args.mixture else None
    world = SyntheticWorld(
        p_u=args.p_u,
        b_u1=args.bias[0],
        b_u2=args.bias[1],
        b_v1=args.bias[2],
        b_v2=args.bias[3],
        type_mixture=mixture,
        n=args.slate_size,
        seed=_derived_seed(args.seed, 0),
    )
    solved = world.mixture()  # validates feasibility up front (exit 4)
    dataset = generate(world, args.queries)
    if args.emit_slates:
        write_slates(dataset.slates, args.emit_slates)

    weights = PositionWeights.log_discount(world.n)
    group = "type1"
    report = _base_report("simulate", args, {"synthetic": True}, [group])
    report["config"]["world"] = {
        "p_u": world.p_u,
        "bias": {"u1": world.b_u1, "u2": world.b_u2, "v1": world.b_v1, "v2": world.b_v2},
        "type_mixture": list(solved),
        "slate_size": world.n,
        "queries": args.queries,
    }

    baseline_row = _audit_one(
        dataset.slates, group, "baseline", args, args.seed, 0, 0, weights, None
    )
    report["rows"].append(baseline_row)

    boost = baseline_row["mpc"]["point"]
    boosted_slates = rerank_with_modifier(dataset.slates, ScoreModifier(group, boost))
    report["rows"].append(
        _audit_one(boosted_slates, group, "boosted", args, args.seed, 0, 1, weights, boost)
    )

    items = [it for s in dataset.slates for it in s.items]
    member_curve, other_curve = calibration_curve(items, group, bins=10)
    report["curves"] = {
        "marginal_by_item_type": {
            "type1": {
                "score": list(member_curve.midpoints),
                "mean_outcome": list(member_curve.mean_outcome),
                "count": list(member_curve.counts),
            },
            "type2": {
                "score": list(other_curve.midpoints),
                "mean_outcome": list(other_curve.mean_outcome),
                "count": list(other_curve.counts),
            },
        },
        "conditional_by_query_type": _conditional_curves(dataset),
    }

    _write_report(report, args.out)
    if args.plots_dir:
        _simulate_plots(report, world, Path(args.plots_dir))
    return EXIT_OK


def _simulate_plots(report: dict, world: SyntheticWorld, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = [v / 100.0 for v in range(0, 101, 2)]
    true_curves = {}
    for qt in ("u", "v"):
        for ty in (1, 2):
            b = world.bias_of(qt, ty)
            true_curves[f"query {qt} / type {ty}"] = (
                grid,
                [expected_relevance(s, b) for s in grid],
            )
    plots.plot_curves(true_curves, out_dir / "true_relevance.svg",
                      xlabel="signal", ylabel="expected outcome")

    marg = report["curves"]["marginal_by_item_type"]
    plots.plot_curves(
        {
            name: (curve["score"], [m if m is not None else float("nan")
                                    for m in curve["mean_outcome"]])
            for name, curve in marg.items()
        },
        out_dir / "calibration_by_item_type.svg",
    )
    cond = report["curves"]["conditional_by_query_type"]
    plots.plot_curves(
        {
            name: (curve["score"], [m if m is not None else float("nan")
                                    for m in curve["mean_outcome"]])
            for name, curve in cond.items()
        },
        out_dir / "calibration_by_query_type.svg",
    )
    plots.plot_mpc_by_rule(report["rows"], out_dir / "mpc_by_rule.svg")
    plots.plot_ndcg_by_rule(report["rows"], out_dir / "ndcg_by_rule.svg")


def cmd_report_plots(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read report {args.report}: {exc}") from exc
    if report.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise InputError(
            f"unsupported report schema {report.get('schema_version')!r}"
        )
    rows = report.get("rows") or []
    if not rows:
        raise InputError("report contains no rows to plot")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plots.plot_mpc_by_rule(rows, out_dir / "mpc_by_rule.svg")
    plots.plot_ndcg_by_rule(rows, out_dir / "ndcg_by_rule.svg")
    plots.plot_mpc_vs_ndcg(rows, out_dir / "mpc_vs_ndcg.svg")
    return EXIT_OK


def _add_common_inference_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trials", type=int, default=201,
                        help="bootstrap trials (default 201)")
    parser.add_argument("--confidence", type=float, default=0.95,
                        help="interval confidence level (default 0.95)")
    parser.add_argument("--seed", type=int, default=0,
                        help="master seed; all randomness derives from it")
    parser.add_argument("--resample-unit", choices=["query", "pair"],
                        default="query", help="bootstrap resampling unit")
    parser.add_argument("--epsilon", type=float, default=None,
                        help="explicit matching threshold")
    parser.add_argument("--epsilon-percentile", type=float, default=1.0,
                        help="percentile of pooled gaps selecting epsilon (default 1)")
    parser.add_argument("--k-smallest", type=int, default=None,
                        help="use the K smallest-gap pairs instead of a threshold")
    parser.add_argument("--adjacent", action="store_true",
                        help="restrict pairs to adjacent slate positions")
    parser.add_argument("--both-orientations", action="store_true",
                        help="with --adjacent, also admit group-item-first pairs")


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ratings", type=Path, default=None,
                        help="ratings CSV (userId,movieId,rating,timestamp)")
    parser.add_argument("--movies", type=Path, default=None,
                        help="movies CSV (movieId,title,genres)")
    parser.add_argument("--slates", type=Path, default=None,
                        help="pre-scored slate file (JSON lines); bypasses the ranker")
    parser.add_argument("--rank", type=int, default=64,
                        help="SVD rank (default 64)")
    parser.add_argument("--train-fraction", type=float, default=0.8,
                        help="earliest fraction of ratings used for training")
    parser.add_argument("--group", action="append", default=None,
                        help="group label to audit (repeatable)")
    parser.add_argument("--all-groups", action="store_true",
                        help="audit every group label found in the data")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankaudit",
        description="Matched-pair bias audits for score-based ranking systems.",
    )
    parser.add_argument("--version", action="version", version=f"rankaudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_audit = sub.add_parser("audit", help="audit groups under the baseline scores")
    _add_data_flags(p_audit)
    _add_common_inference_flags(p_audit)
    p_audit.add_argument("--out", type=Path, required=True, help="JSON report path")
    p_audit.add_argument("--csv", type=Path, default=None, help="optional CSV report")
    p_audit.set_defaults(func=cmd_audit)

    p_sweep = sub.add_parser(
        "sweep", help="audit baseline, boosted, demoted and calibrated rules"
    )
    _add_data_flags(p_sweep)
    _add_common_inference_flags(p_sweep)
    p_sweep.add_argument("--alpha", type=float, default=None,
                         help="boost magnitude (default: score std / 3)")
    p_sweep.add_argument("--out", type=Path, required=True, help="JSON report path")
    p_sweep.add_argument("--csv", type=Path, default=None, help="optional CSV report")
    p_sweep.set_defaults(func=cmd_sweep)

    p_sim = sub.add_parser("simulate", help="run the confounded synthetic study")
    p_sim.add_argument("--queries", type=int, default=20000)
    p_sim.add_argument("--slate-size", type=int, default=10)
    p_sim.add_argument("--p-u", type=float, default=0.5,
                       help="probability of query type u")
    p_sim.add_argument("--bias", type=float, nargs=4,
                       default=[1.5, 1.1, 0.9, 0.7],
                       metavar=("BU1", "BU2", "BV1", "BV2"),
                       help="multiplicative biases for (u,1) (u,2) (v,1) (v,2)")
    p_sim.add_argument("--mixture", type=float, nargs=2, default=None,
                       metavar=("P1U", "P1V"),
                       help="type-1 mixture per query type (default: solved)")
    _add_common_inference_flags(p_sim)
    p_sim.add_argument("--out", type=Path, required=True, help="JSON report path")
    p_sim.add_argument("--plots-dir", type=Path, default=None,
                       help="directory for SVG figures")
    p_sim.add_argument("--emit-slates", type=Path, default=None,
                       help="also write the generated slates as a slate file")
    p_sim.set_defaults(func=cmd_simulate)

    p_plots = sub.add_parser("report-plots", help="render SVG figures from a report")
    p_plots.add_argument("--report", type=Path, required=True)
    p_plots.add_argument("--out-dir", type=Path, required=True)
    p_plots.set_defaults(func=cmd_report_plots)
    return parser


def _validate_inputs(args) -> None:
    if getattr(args, "func", None) in (cmd_audit, cmd_sweep):
        has_csv = args.ratings is not None or args.movies is not None
        if args.slates is not None and has_csv:
            raise ConfigurationError("pass either --slates or --ratings/--movies, not both")
        if args.slates is None:
            if args.ratings is None or args.movies is None:
                raise ConfigurationError(
                    "need --ratings and --movies together, or --slates"
                )
    if getattr(args, "epsilon", None) is not None and getattr(args, "k_smallest", None) is not None:
        raise ConfigurationError("pass at most one of --epsilon and --k-smallest")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate_inputs(args)
        return args.func(args)
    except InfeasibleWorldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InferenceUndefinedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFERENCE
    except (InputError, ConfigurationError, AuditError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
