"""Headless pipeline runner: load a pipeline file, select a plan, execute, write JSON.

Exit codes: 0 success, 1 validation or configuration failure (diagnostics on
standard error), 2 no plan satisfies the policy constraint, 3 provider failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import _policy_line
from .executor import execute, stats_to_json
from .ingest import DatasetRegistry, IngestError, count_records
from .logical import LogicalPlan, PlanError, plan_from_json, validate_plan
from .optimizer import (
    MaxQuality,
    NoFeasiblePlan,
    Policy,
    PolicyError,
    policy_from_json,
    select_plan,
)
from .physical import (
    CardinalityModel,
    CatalogError,
    enumerate_physical_plans,
    load_catalog,
)
from .providers import (
    MockProvider,
    ProviderError,
    ProviderUnavailable,
    load_http_provider,
    load_mock_rules,
)
from .schema import record_to_json
from .serialize import dumps_canonical


class UsageError(ValueError):
    """Bad flags or an unusable pipeline/config document."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; 2 is reserved for infeasible
    # policies here, so surface flag errors as UsageError (exit 1) instead.
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="sempipe", description=__doc__)
    parser.add_argument("--pipeline", required=True, help="pipeline file (JSON)")
    parser.add_argument("--policy", help="policy JSON, overrides the pipeline file")
    parser.add_argument("--catalog", help="model catalog path, overrides the pipeline file")
    parser.add_argument("--mock-rules", help="mock provider rules path, forces mock mode")
    parser.add_argument("--data", help="dataset directory registered under the pipeline source id")
    parser.add_argument("--out", help="write output records JSON here (default: stdout)")
    parser.add_argument("--stats-out", help="write execution stats JSON here")
    parser.add_argument(
        "--explain",
        action="store_true",
        help="print enumerated plans, estimates, and the chosen plan; do not execute",
    )
    parser.add_argument("--workers", type=int, default=1, help="model-call pool size")
    return parser


def _load_doc(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read pipeline file: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"pipeline file is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise UsageError("pipeline file must be a JSON object")
    return doc


def _build_policy(args: argparse.Namespace, doc: dict) -> Policy:
    if args.policy is not None:
        try:
            policy_doc = json.loads(args.policy)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--policy is not valid JSON: {exc}")
        return policy_from_json(policy_doc)
    if doc.get("policy") is not None:
        return policy_from_json(doc["policy"])
    return MaxQuality()


def _build_provider(args: argparse.Namespace, doc: dict):
    provider_doc = doc.get("provider", {})
    if args.mock_rules is not None:
        return MockProvider(load_mock_rules(args.mock_rules))
    mode = provider_doc.get("mode", "mock")
    if mode == "mock":
        rules_path = provider_doc.get("rules_path")
        if rules_path is None:
            raise UsageError("no mock rules configured; pass --mock-rules or provider.rules_path")
        return MockProvider(load_mock_rules(rules_path))
    if mode == "real":
        config_path = provider_doc.get("config_path")
        if config_path is None:
            raise UsageError("real provider mode requires provider.config_path")
        return load_http_provider(config_path)
    raise UsageError(f"unknown provider mode: {mode!r}")


def _build_card(doc: dict, input_count: int) -> CardinalityModel:
    overrides = doc.get("cardinality_overrides") or {}
    kwargs = {"input_count": overrides.get("input_count", input_count)}
    if "filter_selectivity" in overrides:
        kwargs["filter_selectivity"] = overrides["filter_selectivity"]
    if "convert_fanout" in overrides:
        kwargs["convert_fanout"] = overrides["convert_fanout"]
    return CardinalityModel(**kwargs)


def _plan_row(index: int, key: str, cost: float, time_s: float, quality: float) -> str:
    return f"{index:>4}. {key} cost_usd={cost!r} time_s={time_s!r} quality={quality!r}"


def _explain(
    plan: LogicalPlan, policy: Policy, catalog, card: CardinalityModel, out=None
) -> None:
    out = out if out is not None else sys.stdout
    plans = enumerate_physical_plans(plan, catalog, card=card)
    print(f"PLANS ({len(plans)})", file=out)
    for i, phys in enumerate(plans, start=1):
        est = phys.estimate
        print(_plan_row(i, phys.key, est.cost_usd, est.time_s, est.quality), file=out)
    chosen = select_plan(plans, policy)
    index = next(i for i, p in enumerate(plans, start=1) if p.key == chosen.key)
    print(f"POLICY {_policy_line(policy)}", file=out)
    print("CHOSEN", file=out)
    est = chosen.estimate
    print(_plan_row(index, chosen.key, est.cost_usd, est.time_s, est.quality), file=out)


def _write_or_print(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        doc = _load_doc(args.pipeline)

        source_id = doc.get("source")
        if not isinstance(source_id, str) or not source_id:
            raise UsageError("pipeline file must name its source dataset id")
        data_path = args.data if args.data is not None else doc.get("source_path")
        if data_path is None:
            raise UsageError("no data directory; pass --data or set source_path")
        registry = DatasetRegistry()
        source = registry.register_dataset(source_id, data_path)

        plan = plan_from_json(doc, registry)
        diagnostics = validate_plan(plan)
        if diagnostics:
            for line in diagnostics:
                print(line, file=sys.stderr)
            return 1

        policy = _build_policy(args, doc)
        catalog_path = args.catalog if args.catalog is not None else doc.get("catalog_path")
        if catalog_path is None:
            raise UsageError("no model catalog; pass --catalog or set catalog_path")
        catalog = load_catalog(catalog_path)
        card = _build_card(doc, count_records(source))

        if args.explain:
            _explain(plan, policy, catalog, card)
            return 0

        provider = _build_provider(args, doc)
        result = execute(
            plan,
            policy,
            provider,
            catalog,
            registry,
            card=card,
            workers=args.workers,
        )
        records_text = dumps_canonical([record_to_json(r) for r in result.records])
        _write_or_print(records_text, args.out)
        if args.stats_out is not None:
            _write_or_print(dumps_canonical(stats_to_json(result.stats)), args.stats_out)
        return 0
    except NoFeasiblePlan as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProviderUnavailable as exc:
        print(f"error: provider failure: {exc}", file=sys.stderr)
        return 3
    except (
        UsageError,
        IngestError,
        PlanError,
        PolicyError,
        CatalogError,
        ProviderError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
