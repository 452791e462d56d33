"""Scenario-group aggregation under statistical weights and relative scores.

Scenario-level scores roll up to scenario-group scores through a weight
table that encodes how relevant each (scenario, light) instance is in a
region's accident statistics. Frequency scores aggregate as a weighted
average; mitigation scores additionally weight each instance by its passive
impact power, so scenarios with more energy at stake count for more.

Relative scores compare two vehicles: their score ratio minus one. Ranked
pairwise matrices of these relativities are the campaign's primary output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .campaign import vehicle_sort_key
from .protocol import LIGHTS, ProtocolDefinition, ScenarioGroup
from .scoring import ScenarioScore, ScoreValue

METRIC_FREQ = "freq"
METRIC_MP = "MP"
METRICS = (METRIC_FREQ, METRIC_MP)

Instance = tuple[str, str]  # (scenario code, light)


class WeightTableError(ValueError):
    """Raised when a weight table is malformed or inconsistent."""


class AggregationError(ValueError):
    """Raised when aggregation preconditions fail."""


@dataclass(frozen=True)
class WeightTable:
    """Regional relevance weights and the group membership of instances."""

    region: str
    weights: Mapping[Instance, float]
    groups: Mapping[ScenarioGroup, tuple[Instance, ...]]

    def weight(self, instance: Instance) -> float:
        try:
            return self.weights[instance]
        except KeyError:
            raise WeightTableError(
                f"no weight for instance {instance} in region {self.region!r}"
            ) from None


def load_weight_table(source: str | Path | Mapping) -> WeightTable:
    doc = _read(source)
    region = doc.get("region")
    if not isinstance(region, str) or not region:
        raise WeightTableError("'region' must be a non-empty string")
    raw_weights = doc.get("weights")
    if not isinstance(raw_weights, list) or not raw_weights:
        raise WeightTableError("'weights' must be a non-empty array")
    weights: dict[Instance, float] = {}
    for i, entry in enumerate(raw_weights):
        where = f"weights[{i}]"
        if not isinstance(entry, Mapping):
            raise WeightTableError(f"{where}: expected an object")
        instance = _instance(entry, where)
        w = entry.get("w")
        if isinstance(w, bool) or not isinstance(w, (int, float)) or w < 0:
            raise WeightTableError(f"{where}: 'w' must be a number >= 0")
        if instance in weights:
            raise WeightTableError(f"{where}: duplicate instance {instance}")
        weights[instance] = float(w)

    raw_groups = doc.get("groups")
    if not isinstance(raw_groups, Mapping) or not raw_groups:
        raise WeightTableError("'groups' must be a non-empty object")
    groups: dict[ScenarioGroup, tuple[Instance, ...]] = {}
    for name, members in raw_groups.items():
        try:
            group = ScenarioGroup(name)
        except ValueError:
            raise WeightTableError(f"unknown scenario group {name!r}") from None
        if not isinstance(members, list) or not members:
            raise WeightTableError(f"groups.{name}: expected a non-empty array")
        instances = []
        for j, entry in enumerate(members):
            where = f"groups.{name}[{j}]"
            if not isinstance(entry, Mapping):
                raise WeightTableError(f"{where}: expected an object")
            instances.append(_instance(entry, where))
        groups[group] = tuple(instances)
        if not any(weights.get(inst, 0.0) > 0 for inst in instances):
            raise WeightTableError(f"groups.{name}: weights sum to zero")
    return WeightTable(region=region, weights=weights, groups=groups)


def _instance(entry: Mapping, where: str) -> Instance:
    code = entry.get("scenario")
    light = entry.get("light")
    if not isinstance(code, str) or not code:
        raise WeightTableError(f"{where}: 'scenario' must be a non-empty string")
    if light not in LIGHTS:
        raise WeightTableError(f"{where}: 'light' must be one of {LIGHTS}")
    return (code, light)


def _read(source: str | Path | Mapping) -> Mapping:
    if isinstance(source, Mapping):
        return source
    text = Path(source).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WeightTableError(f"weight table is not valid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise WeightTableError("weight table must be a JSON object")
    return doc


def check_weight_table(table: WeightTable, protocol: ProtocolDefinition) -> list[str]:
    """Instances referenced by the table that the protocol does not license."""
    licensed = set(protocol.licensed_pairs())
    problems = []
    for instance in table.weights:
        if instance not in licensed:
            problems.append(f"weighted instance {instance} is not licensed by the protocol")
    for group, instances in table.groups.items():
        for instance in instances:
            if instance not in licensed:
                problems.append(
                    f"group {group.value} instance {instance} is not licensed by the protocol"
                )
            if instance not in table.weights:
                problems.append(f"group {group.value} instance {instance} has no weight")
    return problems


@dataclass(frozen=True)
class GroupScore:
    """One vehicle's aggregated scores for a scenario group under one region."""

    vehicle: str
    group: ScenarioGroup
    region: str
    fs: ScoreValue
    mps: ScoreValue


def _indexed(scores: Iterable[ScenarioScore]) -> dict[Instance, ScenarioScore]:
    return {(s.scenario, s.light): s for s in scores}


def aggregate_fs(
    scores: Iterable[ScenarioScore],
    table: WeightTable,
    group: ScenarioGroup,
) -> ScoreValue:
    """Weighted average of scenario frequency scores over a group.

    Not-applicable instances drop out and their weight leaves the
    normalization, so the result stays a convex combination of what was
    actually testable.
    """
    by_instance = _indexed(scores)
    terms: list[tuple[float, ScoreValue]] = []
    for instance in table.groups.get(group, ()):
        score = by_instance.get(instance)
        if score is None:
            raise AggregationError(f"no scenario score for instance {instance}")
        if score.not_applicable:
            continue
        terms.append((table.weight(instance), score.fs))
    total = sum(w for w, _ in terms)
    if total <= 0:
        raise AggregationError(
            f"group {group.value} has zero total applicable weight in region {table.region!r}"
        )
    return ScoreValue(
        nominal=sum(w * s.nominal for w, s in terms) / total,
        lower=sum(w * s.lower for w, s in terms) / total,
        upper=sum(w * s.upper for w, s in terms) / total,
    )


def aggregate_mps(
    scores: Iterable[ScenarioScore],
    table: WeightTable,
    group: ScenarioGroup,
    passive_powers: Mapping[Instance, float],
) -> ScoreValue:
    """Passive-power-weighted average of scenario mitigation scores.

    Each instance's statistical weight is multiplied by its passive impact
    power, so mitigation in high-energy scenarios dominates the group score.
    """
    by_instance = _indexed(scores)
    terms: list[tuple[float, ScoreValue]] = []
    for instance in table.groups.get(group, ()):
        score = by_instance.get(instance)
        if score is None:
            raise AggregationError(f"no scenario score for instance {instance}")
        if score.not_applicable:
            continue
        power = passive_powers.get(instance)
        if power is None or power <= 0:
            raise AggregationError(f"passive power must be > 0 for instance {instance}")
        terms.append((table.weight(instance) * power, score.mps))
    total = sum(w for w, _ in terms)
    if total <= 0:
        raise AggregationError(
            f"group {group.value} has zero total power weight in region {table.region!r}"
        )
    return ScoreValue(
        nominal=sum(w * s.nominal for w, s in terms) / total,
        lower=sum(w * s.lower for w, s in terms) / total,
        upper=sum(w * s.upper for w, s in terms) / total,
    )


def relativity(score_x: float, score_y: float) -> float:
    """Relative performance of x against y: score ratio minus one.

    Both zero compares equal (0); a positive score against a zero one is
    infinitely better (inf); a zero score against a positive one is a full
    shortfall (-1, rendered as -100%).
    """
    if score_x < 0 or score_y < 0:
        raise AggregationError("relativity requires non-negative scores")
    if score_x == 0 and score_y == 0:
        return 0.0
    if score_y == 0:
        return math.inf
    if score_x == 0:
        return -1.0
    return score_x / score_y - 1.0


@dataclass(frozen=True)
class RelativityMatrix:
    """Ranked pairwise relative-score matrix for one metric, group, region."""

    metric: str
    group: ScenarioGroup
    region: str
    order: tuple[str, ...]  # vehicles, best performer first
    scores: Mapping[str, float]
    cells: Mapping[tuple[str, str], float]

    def cell(self, x: str, y: str) -> float:
        return self.cells[(x, y)]


def build_matrix(group_scores: Sequence[GroupScore], metric: str) -> RelativityMatrix:
    """Rank vehicles by nominal score and fill the pairwise relativity cells."""
    if metric not in METRICS:
        raise AggregationError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if not group_scores:
        raise AggregationError("no group scores to compare")
    groups = {gs.group for gs in group_scores}
    regions = {gs.region for gs in group_scores}
    if len(groups) != 1 or len(regions) != 1:
        raise AggregationError("group scores must share one group and one region")

    nominal = {
        gs.vehicle: (gs.fs if metric == METRIC_FREQ else gs.mps).nominal
        for gs in group_scores
    }
    order = tuple(
        sorted(nominal, key=lambda v: (-nominal[v], vehicle_sort_key(v)))
    )
    cells: dict[tuple[str, str], float] = {}
    for x in order:
        for y in order:
            cells[(x, y)] = 0.0 if x == y else relativity(nominal[x], nominal[y])
    return RelativityMatrix(
        metric=metric,
        group=groups.pop(),
        region=regions.pop(),
        order=order,
        scores=nominal,
        cells=cells,
    )
