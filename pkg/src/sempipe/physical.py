"""Physical plan enumeration and estimation.

Each logical operator admits one or more physical implementations; a physical
plan picks one per operator. Enumeration is the Cartesian product over per-op
implementation sets, emitted in lexicographic (operator index, model id) order,
and every plan carries a PlanEstimate.

Estimation walks an estimated record count through the chain: filters multiply
by selectivity, one-to-many converts multiply by fanout after their own calls,
limits cap, aggregates collapse to one. Per-op cost is a single multiplication
(calls x rate) and totals use math.fsum, so fixture arithmetic is bit-exact.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from .logical import (
    ONE_TO_MANY,
    AggregateOp,
    ConvertOp,
    FilterOp,
    LimitOp,
    LogicalPlan,
    ScanOp,
    validate_plan,
)
from .schema import Record

# Per-record estimated seconds for implementations that call no model.
NON_MODEL_SECONDS_PER_RECORD = 0.001

IMPL_DIRECT_SCAN = "direct_scan"
IMPL_LLM_FILTER = "llm_filter"
IMPL_UDF_FILTER = "udf_filter"
IMPL_LLM_CONVERT = "llm_convert"
IMPL_IDENTITY_CONVERT = "identity_convert"
IMPL_EXACT_AGGREGATE = "exact_aggregate"
IMPL_PASS_LIMIT = "pass_limit"

# Callable record -> bool, resolved by name at execution time.
UdfRegistry = Mapping[str, Callable[[Record], bool]]


class CatalogError(ValueError):
    """Base class for catalog and estimation failures."""


class UnknownModel(CatalogError):
    pass


class UnknownUDF(CatalogError):
    pass


@dataclass(frozen=True)
class ModelProfile:
    """Pricing, latency, and quality profile for one model."""

    id: str
    usd_per_call: float
    seconds_per_call: float
    quality: float

    def __post_init__(self) -> None:
        if not self.id:
            raise CatalogError("model id must be non-empty")
        for label, rate in (("usd_per_call", self.usd_per_call), ("seconds_per_call", self.seconds_per_call)):
            if not math.isfinite(rate) or rate < 0:
                raise CatalogError(f"{label} must be finite and nonnegative, got {rate!r}")
        if not (0 < self.quality <= 1):
            raise CatalogError(f"quality must be in (0, 1], got {self.quality!r}")


def catalog_from_json(docs: list[dict]) -> list[ModelProfile]:
    return [
        ModelProfile(
            id=d["id"],
            usd_per_call=float(d["usd_per_call"]),
            seconds_per_call=float(d["seconds_per_call"]),
            quality=float(d["quality"]),
        )
        for d in docs
    ]


def load_catalog(path: str | Path) -> list[ModelProfile]:
    return catalog_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class PlanEstimate:
    """Predicted total cost, sequential runtime, and output quality."""

    cost_usd: float
    time_s: float
    quality: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.cost_usd) or self.cost_usd < 0:
            raise CatalogError(f"cost_usd must be finite and nonnegative, got {self.cost_usd!r}")
        if not math.isfinite(self.time_s) or self.time_s < 0:
            raise CatalogError(f"time_s must be finite and nonnegative, got {self.time_s!r}")
        if not (0 < self.quality <= 1):
            raise CatalogError(f"quality must be in (0, 1], got {self.quality!r}")


@dataclass(frozen=True)
class PhysicalOperator:
    """One implementation choice for the logical operator at index logical_ref."""

    logical_ref: int
    impl: str
    model_id: str | None = None
    udf_name: str | None = None

    @property
    def descriptor(self) -> str:
        if self.impl == IMPL_DIRECT_SCAN:
            return "scan"
        if self.impl == IMPL_LLM_FILTER:
            return f"filter:llm:{self.model_id}"
        if self.impl == IMPL_UDF_FILTER:
            return f"filter:udf:{self.udf_name}"
        if self.impl == IMPL_LLM_CONVERT:
            return f"convert:llm:{self.model_id}"
        if self.impl == IMPL_IDENTITY_CONVERT:
            return "convert:identity"
        if self.impl == IMPL_EXACT_AGGREGATE:
            return "aggregate:exact"
        if self.impl == IMPL_PASS_LIMIT:
            return "limit:pass"
        raise CatalogError(f"unknown impl: {self.impl!r}")


@dataclass(frozen=True)
class PhysicalPlan:
    """A logical plan with one implementation per operator plus its estimate."""

    logical: LogicalPlan
    ops: tuple[PhysicalOperator, ...]
    estimate: PlanEstimate

    def __post_init__(self) -> None:
        if len(self.ops) != len(self.logical.ops):
            raise CatalogError(
                f"plan has {len(self.ops)} physical ops for {len(self.logical.ops)} logical ops"
            )
        for i, op in enumerate(self.ops):
            if op.logical_ref != i:
                raise CatalogError(f"op {i} references logical index {op.logical_ref}")

    @property
    def logical_id(self) -> str:
        return self.logical.id

    @property
    def key(self) -> str:
        """Deterministic plan identity: impl descriptors joined in operator order."""
        return "|".join(op.descriptor for op in self.ops)


@dataclass(frozen=True)
class CardinalityModel:
    """Record-count assumptions driving estimates; never inspects the data."""

    input_count: int
    filter_selectivity: float = 0.5
    convert_fanout: float | None = None

    def __post_init__(self) -> None:
        if self.input_count < 0:
            raise CatalogError(f"input_count must be nonnegative, got {self.input_count!r}")
        if not (0 <= self.filter_selectivity <= 1):
            raise CatalogError(
                f"filter_selectivity must be in [0, 1], got {self.filter_selectivity!r}"
            )
        if self.convert_fanout is not None and self.convert_fanout < 0:
            raise CatalogError(f"convert_fanout must be nonnegative, got {self.convert_fanout!r}")

    def fanout_for(self, cardinality: str) -> float:
        if cardinality == ONE_TO_MANY:
            return 3.0 if self.convert_fanout is None else self.convert_fanout
        return 1.0


def _profiles_by_id(catalog: list[ModelProfile]) -> dict[str, ModelProfile]:
    return {m.id: m for m in catalog}


def _estimate(
    logical: LogicalPlan,
    ops: tuple[PhysicalOperator, ...],
    card: CardinalityModel,
    catalog: list[ModelProfile],
) -> PlanEstimate:
    profiles = _profiles_by_id(catalog)
    costs: list[float] = []
    times: list[float] = []
    qualities: list[float] = []
    n = float(card.input_count)
    for phys, logic in zip(ops, logical.ops):
        if phys.model_id is not None:
            profile = profiles.get(phys.model_id)
            if profile is None:
                raise UnknownModel(f"model {phys.model_id!r} not in catalog")
            costs.append(n * profile.usd_per_call)
            times.append(n * profile.seconds_per_call)
            qualities.append(profile.quality)
        else:
            costs.append(0.0)
            times.append(n * NON_MODEL_SECONDS_PER_RECORD)
        if isinstance(logic, FilterOp):
            n = n * card.filter_selectivity
        elif isinstance(logic, ConvertOp) and not logic.identity:
            # Fanout applies to the convert's outputs, not its own call count.
            n = n * card.fanout_for(logic.cardinality)
        elif isinstance(logic, AggregateOp):
            n = 1.0
        elif isinstance(logic, LimitOp):
            n = min(n, float(logic.n))
    return PlanEstimate(
        cost_usd=math.fsum(costs),
        time_s=math.fsum(times),
        quality=math.prod(qualities, start=1.0),
    )


def estimate_plan(
    plan: PhysicalPlan, card: CardinalityModel, catalog: list[ModelProfile]
) -> PlanEstimate:
    """Walk estimated record counts through the chain and total per-op figures."""
    return _estimate(plan.logical, plan.ops, card, catalog)


def _impl_choices(
    index: int, op, catalog: list[ModelProfile], udfs: UdfRegistry
) -> list[PhysicalOperator]:
    if isinstance(op, ScanOp):
        return [PhysicalOperator(index, IMPL_DIRECT_SCAN)]
    if isinstance(op, FilterOp):
        if op.udf_name is not None:
            if op.udf_name not in udfs:
                raise UnknownUDF(f"filter references unregistered udf {op.udf_name!r}")
            return [PhysicalOperator(index, IMPL_UDF_FILTER, udf_name=op.udf_name)]
        return [
            PhysicalOperator(index, IMPL_LLM_FILTER, model_id=m.id)
            for m in sorted(catalog, key=lambda m: m.id)
        ]
    if isinstance(op, ConvertOp):
        if op.identity:
            return [PhysicalOperator(index, IMPL_IDENTITY_CONVERT)]
        return [
            PhysicalOperator(index, IMPL_LLM_CONVERT, model_id=m.id)
            for m in sorted(catalog, key=lambda m: m.id)
        ]
    if isinstance(op, AggregateOp):
        return [PhysicalOperator(index, IMPL_EXACT_AGGREGATE)]
    if isinstance(op, LimitOp):
        return [PhysicalOperator(index, IMPL_PASS_LIMIT)]
    raise CatalogError(f"no implementations for operator {op!r}")


def enumerate_physical_plans(
    logical: LogicalPlan,
    catalog: list[ModelProfile],
    udfs: UdfRegistry | None = None,
    card: CardinalityModel | None = None,
) -> list[PhysicalPlan]:
    """All implementation combinations, estimated, in deterministic order."""
    diags = validate_plan(logical)
    if diags:
        raise CatalogError("invalid logical plan: " + "; ".join(diags))
    if not catalog:
        raise CatalogError("catalog must be non-empty")
    udfs = udfs or {}
    card = card or CardinalityModel(input_count=0)
    choice_sets = [
        _impl_choices(i, op, catalog, udfs) for i, op in enumerate(logical.ops)
    ]
    plans: list[PhysicalPlan] = []
    for combo in itertools.product(*choice_sets):
        ops = tuple(combo)
        estimate = _estimate(logical, ops, card, catalog)
        plans.append(PhysicalPlan(logical=logical, ops=ops, estimate=estimate))
    return plans
