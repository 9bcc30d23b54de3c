"""
Command-line entry point for scoring, comparing and stress-testing feature importance.

Usage (from repo root):
    python -m mci.cli.main score --table data/andor.json --method mci-exact
    python -m mci.cli.main compare --csv data/andor.csv --method mci-exact,shapley-exact,bivariate --relevant 0,1
    python -m mci.cli.main robustness --table data/andor.json --method shapley-exact
    python -m mci.cli.main sample-size --epsilon 0.1 --delta 0.05 --hypotheses 1000 --features 10

Results go to stdout as JSON (or to --out) and the ranked table to the other stream.
Logs are JSON lines on stderr; MCI_LOG_LEVEL controls verbosity.
"""

import argparse
import itertools
import json
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from mci.cli.errors import report_error, settings_error
from mci.cli.schemas import ExportReport, RunConfig, SampleSizeReport, build_run_config
from mci.core.config import HARD_FEATURE_CAP, Settings, get_settings
from mci.core.errors import InvalidParameter, MciError
from mci.core.logging import get_logger, init_logging
from mci.importance.compute import compute_scores, default_plan
from mci.importance.scores import ImportanceScores, ScoreMethod
from mci.pac.bounds import PacParameters, sample_size
from mci.ranking.metrics import mkd, ndcg_at_k, rank
from mci.ranking.robustness import robustness_harness, seed_sensitivity
from mci.valuation.base import Valuation
from mci.valuation.diagnostics import check_valuation
from mci.valuation.mutual_information import load_csv_dataset, mutual_information_valuation
from mci.valuation.oracle import OracleValuation, oracle_valuation
from mci.valuation.table import dump_value_table, load_value_table
from mci.valuation.transforms import monotone_closure

logger = get_logger(__name__)

_CONTEXT_METHODS = {ScoreMethod.MCI_EXACT, ScoreMethod.MCI_K, ScoreMethod.MCI_BNB, ScoreMethod.MCI_SAMPLED}


def _int_list(raw: str) -> List[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{raw}'") from exc


def _method_list(raw: str) -> List[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


class Loaded:
    """A valuation plus the display names of its features; leaving the block flushes oracle replies."""

    def __init__(self, valuation: Valuation, names: Sequence[str]) -> None:
        self.valuation = valuation
        self.names = list(names)

    def name(self, feature: int) -> str:
        return self.names[feature] if feature < len(self.names) else str(feature)

    def __enter__(self) -> "Loaded":
        return self

    def __exit__(self, *exc_info: object) -> None:
        v = self.valuation
        if isinstance(v, OracleValuation):
            v.flush()
            logger.info(
                "oracle_usage",
                extra={"event": "oracle_usage", "invocations": v.invocations, "cache_hits": v.cache_hits,
                       "cache_writes": v.cache_writes, "cache_path": str(v.cache_path)},
            )


def load_valuation(config: RunConfig, settings: Settings) -> Loaded:
    if config.source == "table":
        v = load_value_table(config.table, cap=settings.enumeration_cap)
        return Loaded(v, [str(i) for i in range(v.n)])
    if config.source == "csv":
        dataset = load_csv_dataset(config.csv, target=config.target, bins=config.bins, binning=config.binning)
        v = mutual_information_valuation(dataset, max_features=HARD_FEATURE_CAP)
        return Loaded(v, dataset.columns)
    v = oracle_valuation(config.oracle, config.n_features, timeout_seconds=settings.oracle_timeout_seconds)
    return Loaded(v, [str(i) for i in range(v.n)])


def format_scores_table(scores: ImportanceScores, loaded: Loaded) -> str:
    """Rows sorted by score descending, 4 decimals; MCI methods add the context set."""
    show_context = scores.method in _CONTEXT_METHODS and scores.contexts is not None
    header = f"{'rank':<5} {'feature':<16} {'score':>10}"
    if scores.intervals is not None:
        header += f"  {'interval':<21}"
    if show_context:
        header += "  context"
    lines = [f"# {scores.method.value} ({scores.bound_kind.value})", header]
    for position, feature in enumerate(rank(scores).order, start=1):
        line = f"{position:<5} {loaded.name(feature):<16} {scores.scores[feature]:>10.4f}"
        if scores.intervals is not None:
            lo, hi = scores.intervals[feature]
            line += f"  [{lo:.4f}, {hi:.4f}]".ljust(23)
        if show_context:
            context = scores.contexts[feature]
            members = "-" if context is None else "{" + ",".join(loaded.name(i) for i in context.indices()) + "}"
            line += f"  {members}"
        lines.append(line)
    return "\n".join(lines)


def emit(payload: Dict[str, object], text: Optional[str], out: Optional[Path]) -> None:
    body = json.dumps(payload, indent=2)
    if out is None:
        sys.stdout.write(body + "\n")
        if text:
            sys.stderr.write(text + "\n")
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(body + "\n", encoding="utf-8")
    if text:
        sys.stdout.write(text + "\n")


def _resolve_ks(ks: Optional[List[int]], n: int) -> List[int]:
    chosen = ks or list(range(1, n + 1))
    bad = [k for k in chosen if not 1 <= k <= n]
    if bad:
        raise InvalidParameter(f"--ks values must lie in 1..{n}", context={"ks": bad})
    return chosen


def _single_method(config: RunConfig, command: str) -> ScoreMethod:
    if len(config.methods) != 1:
        raise InvalidParameter(f"{command} takes exactly one --method")
    return config.methods[0]


def _warn_unused_k(config: RunConfig) -> None:
    if config.k is not None and ScoreMethod.MCI_K not in config.methods:
        logger.warning("unused_k", extra={"event": "unused_k", "k": config.k})


def cmd_score(config: RunConfig, settings: Settings) -> int:
    method = _single_method(config, "score")
    _warn_unused_k(config)
    with load_valuation(config, settings) as loaded:
        plan = default_plan(loaded.valuation.n, seed=config.seed, count=config.permutations) if method.sampled else None
        scores = compute_scores(
            loaded.valuation, method, k=config.k, tolerance=config.tolerance, plan=plan,
            workers=config.workers, cap=settings.enumeration_cap,
        )
        payload = scores.as_dict()
        payload["features"] = loaded.names
        emit(payload, format_scores_table(scores, loaded), config.out)
        return 0


def cmd_compare(config: RunConfig, settings: Settings) -> int:
    if len(config.methods) < 2:
        raise InvalidParameter("compare needs at least two methods")
    _warn_unused_k(config)
    with load_valuation(config, settings) as loaded:
        n = loaded.valuation.n
        if config.relevant is not None:
            if not config.relevant:
                raise InvalidParameter("--relevant must list at least one feature")
            outside = [f for f in config.relevant if not 0 <= f < n]
            if outside:
                raise InvalidParameter(f"--relevant ids must lie in 0..{n - 1}", context={"relevant": outside})
        ks = _resolve_ks(config.ks, n)
        plan = default_plan(n, seed=config.seed, count=config.permutations)

        results: Dict[ScoreMethod, ImportanceScores] = {}
        for method in dict.fromkeys(config.methods):
            results[method] = compute_scores(
                loaded.valuation, method, k=config.k, tolerance=config.tolerance,
                plan=plan if method.sampled else None, workers=config.workers, cap=settings.enumeration_cap,
            )
        rankings = {method: rank(scores) for method, scores in results.items()}

        pairwise: Dict[str, Dict[str, float]] = {}
        for first, second in itertools.combinations(results, 2):
            pairwise[f"{first.value}|{second.value}"] = {
                str(k): mkd(rankings[first].prefix(k), rankings[second].prefix(k), range(n)) for k in ks
            }
        payload: Dict[str, object] = {
            "features": loaded.names,
            "methods": [method.value for method in results],
            "scores": {method.value: scores.as_dict() for method, scores in results.items()},
            "rankings": {method.value: list(r.order) for method, r in rankings.items()},
            "mkd_at_k": pairwise,
        }
        if config.relevant is not None:
            payload["relevant"] = sorted(set(config.relevant))
            payload["ndcg_at_k"] = {
                method.value: {str(k): ndcg_at_k(r, config.relevant, k) for k in ks} for method, r in rankings.items()
            }
        text = "\n\n".join(format_scores_table(scores, loaded) for scores in results.values())
        emit(payload, text, config.out)
        return 0


def cmd_robustness(config: RunConfig, settings: Settings) -> int:
    method = _single_method(config, "robustness")
    _warn_unused_k(config)
    with load_valuation(config, settings) as loaded:
        report = robustness_harness(
            loaded.valuation, method, config.copies, config.ks, k=config.k, tolerance=config.tolerance,
            seed=config.seed, permutations=config.permutations, workers=config.workers, cap=settings.enumeration_cap,
        )
        csv_path = config.out.with_suffix(".csv") if config.out is not None else Path("robustness.csv")
        if config.out is not None and config.out.suffix == ".csv":
            csv_path = config.out.with_name(f"{config.out.stem}-plot.csv")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(report.plot_rows(), columns=["k", "mkd"]).to_csv(csv_path, index=False)
        payload = report.as_dict()
        payload["plot_csv"] = str(csv_path)
        lines = [f"# robustness {method.value}: feature {loaded.name(report.duplicated_feature)} x{report.copies}"]
        lines += [f"k={k:<4} mkd={d:.4f}" for k, d in report.mkd_at_k.items()]
        emit(payload, "\n".join(lines), config.out)
        return 0


def cmd_sensitivity(config: RunConfig, settings: Settings) -> int:
    method = _single_method(config, "sensitivity")
    with load_valuation(config, settings) as loaded:
        report = seed_sensitivity(
            loaded.valuation, method, config.seeds or [], config.ks,
            permutations=config.permutations, workers=config.workers,
        )
        lines = [f"# seed sensitivity {method.value} over seeds {report.seeds}"]
        lines += [f"k={k:<4} mean_mkd={d:.4f}" for k, d in report.mean_mkd_at_k.items()]
        emit(report.as_dict(), "\n".join(lines), config.out)
        return 0


def cmd_check(config: RunConfig, settings: Settings) -> int:
    if config.repair and config.out is None:
        raise InvalidParameter("--repair needs --out for the repaired table")
    with load_valuation(config, settings) as loaded:
        report = check_valuation(loaded.valuation, k=config.k, cap=settings.check_cap)
        payload = report.as_dict()
        if config.repair:
            repaired = monotone_closure(loaded.valuation, cap=settings.check_cap)
            payload["repaired_table"] = str(dump_value_table(repaired, config.out, cap=settings.check_cap))
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        return 0


def cmd_export_table(config: RunConfig, settings: Settings) -> int:
    if config.out is None:
        raise InvalidParameter("export-table needs --out")
    with load_valuation(config, settings) as loaded:
        before = loaded.valuation.evaluations
        path = dump_value_table(loaded.valuation, config.out, cap=settings.enumeration_cap)
        report = ExportReport(
            path=str(path),
            n=loaded.valuation.n,
            entries=1 << loaded.valuation.n,
            valuation_calls=loaded.valuation.evaluations - before,
        )
        sys.stdout.write(report.model_dump_json(indent=2) + "\n")
        return 0


def cmd_sample_size(args: argparse.Namespace) -> int:
    params = PacParameters.build(
        epsilon=args.epsilon,
        delta=args.delta,
        hypothesis_count=args.hypotheses,
        feature_count=args.features,
    )
    report = SampleSizeReport(**params.model_dump(), m=sample_size(params))
    sys.stdout.write(report.model_dump_json(indent=2) + "\n")
    return 0


def _source_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_argument_group("valuation source")
    source.add_argument("--table", type=Path, help="JSON value table")
    source.add_argument("--csv", type=Path, help="CSV dataset scored by mutual information")
    source.add_argument("--target", help="Target column of --csv (default: last column)")
    source.add_argument("--oracle", help="Command answering one subset key per invocation")
    source.add_argument("--n-features", type=int, help="Feature count for --oracle")
    source.add_argument("--bins", type=int, help="Bins for numeric CSV columns")
    source.add_argument("--binning", choices=["quantile", "width"])
    common.add_argument("--out", type=Path, help="Write the JSON result here")
    common.add_argument("--workers", type=int, help="Thread workers (results do not depend on this)")
    return common


def _method_options(parser: argparse.ArgumentParser, *, required: bool = True) -> None:
    parser.add_argument("--method", type=_method_list, required=required, help="Method name(s), comma-separated")
    parser.add_argument("--k", type=int, help="Context size bound for mci-k")
    parser.add_argument("--tolerance", type=float, default=0.0, help="Interval width at which mci-bnb stops")
    parser.add_argument("--seed", type=int, help="Permutation seed for sampled methods")
    parser.add_argument("--permutations", type=int, help="Permutation count for sampled methods")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mci", description="Marginal contribution feature importance toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _source_parser()

    score = sub.add_parser("score", parents=[common], help="Score features with one method")
    _method_options(score)
    score.set_defaults(handler=cmd_score)

    compare = sub.add_parser("compare", parents=[common], help="Compare rankings of several methods")
    _method_options(compare)
    compare.add_argument("--ks", type=_int_list, help="Prefix lengths (default 1..n)")
    compare.add_argument("--relevant", type=_int_list, help="Relevant feature ids for NDCG")
    compare.set_defaults(handler=cmd_compare)

    robustness = sub.add_parser("robustness", parents=[common], help="Duplicate the top feature and re-rank")
    _method_options(robustness)
    robustness.add_argument("--copies", type=int, default=3)
    robustness.add_argument("--ks", type=_int_list, help="Prefix lengths (default 1..n)")
    robustness.set_defaults(handler=cmd_robustness)

    sensitivity = sub.add_parser("sensitivity", parents=[common], help="MKD between runs under different seeds")
    _method_options(sensitivity)
    sensitivity.add_argument("--seeds", type=_int_list, required=True)
    sensitivity.add_argument("--ks", type=_int_list, help="Prefix lengths (default 1..n)")
    sensitivity.set_defaults(handler=cmd_sensitivity)

    check = sub.add_parser("check", parents=[common], help="Diagnose valuation properties")
    check.add_argument("--k", type=int, help="Also check k-size submodularity")
    check.add_argument("--repair", action="store_true", help="Write the monotone closure to --out")
    check.set_defaults(handler=cmd_check)

    export = sub.add_parser("export-table", parents=[common], help="Materialize the valuation as a JSON table")
    export.set_defaults(handler=cmd_export_table)

    size = sub.add_parser("sample-size", help="PAC sample size for estimating MCI")
    size.add_argument("--epsilon", type=float, required=True)
    size.add_argument("--delta", type=float, required=True)
    size.add_argument("--hypotheses", type=int, required=True, help="|H|, largest hypothesis class size")
    size.add_argument("--features", type=int, required=True, help="|F|, feature count")
    size.set_defaults(handler=None)
    return parser


def _run_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    methods = [ScoreMethod.parse(name) for name in (getattr(args, "method", None) or [])]
    return build_run_config(
        table=args.table,
        csv=args.csv,
        target=args.target,
        oracle=args.oracle,
        n_features=args.n_features,
        methods=methods,
        k=getattr(args, "k", None),
        tolerance=getattr(args, "tolerance", 0.0),
        copies=getattr(args, "copies", 3),
        seed=settings.default_seed if getattr(args, "seed", None) is None else args.seed,
        permutations=settings.default_permutations if getattr(args, "permutations", None) is None else args.permutations,
        bins=settings.default_bins if args.bins is None else args.bins,
        binning=settings.default_binning if args.binning is None else args.binning,
        relevant=getattr(args, "relevant", None),
        ks=getattr(args, "ks", None),
        seeds=getattr(args, "seeds", None),
        out=args.out,
        workers=settings.workers if args.workers is None else args.workers,
        repair=getattr(args, "repair", False),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        settings = get_settings()
    except ValidationError as exc:
        return report_error(settings_error(exc))
    init_logging(settings.log_level)

    try:
        if args.handler is None:
            return cmd_sample_size(args)
        handler: Callable[[RunConfig, Settings], int] = args.handler
        return handler(_run_config(args, settings), settings)
    except MciError as exc:
        logger.error("command_failed", extra={"event": "command_failed", "command": args.command, "error": exc.code})
        return report_error(exc)


if __name__ == "__main__":
    raise SystemExit(main())
