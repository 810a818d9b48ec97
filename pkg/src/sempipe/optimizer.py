"""Policy-driven plan selection.

A policy names the optimization goal; select_plan ranks estimated physical
plans under it. Ties always break the same way (lower cost, then lower time,
then higher quality, then lexicographically smallest plan key), so selection
is deterministic and independent of input order. pareto_prune drops plans
dominated in the (cost down, time down, quality up) space; pruning never
changes the winner because a dominated plan loses to its dominator under
every policy and every stage of the tie chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .physical import PhysicalPlan


class PolicyError(ValueError):
    """Base class for policy construction and selection failures."""


class EmptyPlanSet(PolicyError):
    pass


class NoFeasiblePlan(PolicyError):
    """Constrained policy with no plan inside the budget."""


@dataclass(frozen=True)
class MaxQuality:
    pass


@dataclass(frozen=True)
class MinCost:
    pass


@dataclass(frozen=True)
class MinTime:
    pass


@dataclass(frozen=True)
class MaxQualityAtCost:
    budget_usd: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.budget_usd) or self.budget_usd <= 0:
            raise PolicyError(f"budget_usd must be positive, got {self.budget_usd!r}")


@dataclass(frozen=True)
class MaxQualityAtTime:
    latency_s: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.latency_s) or self.latency_s <= 0:
            raise PolicyError(f"latency_s must be positive, got {self.latency_s!r}")


Policy = MaxQuality | MinCost | MinTime | MaxQualityAtCost | MaxQualityAtTime


def policy_to_json(policy: Policy) -> dict:
    if isinstance(policy, MaxQuality):
        return {"type": "max_quality"}
    if isinstance(policy, MinCost):
        return {"type": "min_cost"}
    if isinstance(policy, MinTime):
        return {"type": "min_time"}
    if isinstance(policy, MaxQualityAtCost):
        return {"type": "max_quality_at_cost", "budget_usd": policy.budget_usd}
    if isinstance(policy, MaxQualityAtTime):
        return {"type": "max_quality_at_time", "latency_s": policy.latency_s}
    raise PolicyError(f"not a policy: {policy!r}")


def policy_from_json(doc: dict) -> Policy:
    kind = doc.get("type")
    if kind == "max_quality":
        return MaxQuality()
    if kind == "min_cost":
        return MinCost()
    if kind == "min_time":
        return MinTime()
    if kind == "max_quality_at_cost":
        return MaxQualityAtCost(budget_usd=float(doc["budget_usd"]))
    if kind == "max_quality_at_time":
        return MaxQualityAtTime(latency_s=float(doc["latency_s"]))
    raise PolicyError(f"unknown policy type: {kind!r}")


def _tie_key(plan: PhysicalPlan) -> tuple[float, float, float, str]:
    # Higher quality ranks before the key so the chain never prefers a plan that
    # pareto_prune would discard; selection is stable under pruning.
    est = plan.estimate
    return (est.cost_usd, est.time_s, -est.quality, plan.key)


def select_plan(plans: list[PhysicalPlan], policy: Policy) -> PhysicalPlan:
    """The best plan under the policy, fully deterministic via the tie chain."""
    if not plans:
        raise EmptyPlanSet("no plans to select from")
    if isinstance(policy, (MaxQualityAtCost, MaxQualityAtTime)):
        if isinstance(policy, MaxQualityAtCost):
            feasible = [p for p in plans if p.estimate.cost_usd <= policy.budget_usd]
            if not feasible:
                margin = min(p.estimate.cost_usd - policy.budget_usd for p in plans)
                raise NoFeasiblePlan(
                    f"no plan within budget_usd={policy.budget_usd!r}; "
                    f"the closest plan exceeds it by {margin!r} USD"
                )
        else:
            feasible = [p for p in plans if p.estimate.time_s <= policy.latency_s]
            if not feasible:
                margin = min(p.estimate.time_s - policy.latency_s for p in plans)
                raise NoFeasiblePlan(
                    f"no plan within latency_s={policy.latency_s!r}; "
                    f"the closest plan exceeds it by {margin!r} s"
                )
        return min(feasible, key=lambda p: (-p.estimate.quality, *_tie_key(p)))
    if isinstance(policy, MaxQuality):
        return min(plans, key=lambda p: (-p.estimate.quality, *_tie_key(p)))
    if isinstance(policy, MinCost):
        return min(plans, key=lambda p: (p.estimate.cost_usd, *_tie_key(p)))
    if isinstance(policy, MinTime):
        return min(plans, key=lambda p: (p.estimate.time_s, *_tie_key(p)))
    raise PolicyError(f"not a policy: {policy!r}")


def _dominates(a: PhysicalPlan, b: PhysicalPlan) -> bool:
    ea, eb = a.estimate, b.estimate
    if ea.cost_usd > eb.cost_usd or ea.time_s > eb.time_s or ea.quality < eb.quality:
        return False
    return ea.cost_usd < eb.cost_usd or ea.time_s < eb.time_s or ea.quality > eb.quality


def pareto_prune(plans: list[PhysicalPlan]) -> list[PhysicalPlan]:
    """Plans not dominated in (cost, time, quality), in their input order."""
    kept: list[PhysicalPlan] = []
    for i, plan in enumerate(plans):
        dominated = any(
            i != j and _dominates(other, plan) for j, other in enumerate(plans)
        )
        if not dominated:
            kept.append(plan)
    return kept
