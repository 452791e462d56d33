"""Scenario-level scores: collision frequency and impact-power mitigation.

Both scores compare the vehicle against a hypothetical passive one that
collides at full test speed in every configuration. The frequency score is
the weighted fraction of configurations avoided; the mitigation power score
is one minus the ratio of realized to passive impact power. Judged failures
count as collisions at full passive power.

Each score carries an uncertainty envelope: the speed at which the vehicle
stopped avoiding is assumed 5 km/h lower or higher than measured, and the
score is re-evaluated under both assumptions. The envelope only moves for
series that demonstrated a capability boundary (at least one avoided test
below the failure); a series failed outright has no boundary inside the
tested range and stays fixed. Measured impact speeds shift with the assumed
failure speed, clamped to the physical range. The reported mean and standard
deviation summarize the three evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .campaign import (
    CampaignLog,
    OutcomeKind,
    TestOutcome,
    series_key,
    validate_log,
)
from .impact import ImpactPowerModel, mu_pow, passive_mu_pow
from .protocol import LIGHTS, TestConfig, enumerate_configs

UNCERTAINTY_SHIFT_KMH = 5.0
_SHIFTS = (-UNCERTAINTY_SHIFT_KMH, 0.0, UNCERTAINTY_SHIFT_KMH)


class ScoringError(ValueError):
    """Raised when score inputs violate their preconditions."""


@dataclass(frozen=True)
class ScoreValue:
    """A score with its evaluations at the shifted failure speeds.

    ``lower``/``upper`` are the re-evaluations with the failure speed moved
    5 km/h down/up; they bracket the nominal value. ``mean`` and ``std`` are
    the average and population standard deviation of the three evaluations.
    """

    nominal: float
    lower: float
    upper: float

    @property
    def mean(self) -> float:
        return (self.lower + self.nominal + self.upper) / 3.0

    @property
    def std(self) -> float:
        if self.lower == self.nominal == self.upper:
            return 0.0
        m = self.mean
        return math.sqrt(
            ((self.lower - m) ** 2 + (self.nominal - m) ** 2 + (self.upper - m) ** 2) / 3.0
        )

    @staticmethod
    def zero() -> "ScoreValue":
        return ScoreValue(0.0, 0.0, 0.0)

    @staticmethod
    def constant(value: float) -> "ScoreValue":
        return ScoreValue(value, value, value)


@dataclass(frozen=True)
class ScenarioScore:
    """FS and MPS of one vehicle in one (scenario, light) instance."""

    vehicle: str
    scenario: str
    light: str
    fs: ScoreValue | None
    mps: ScoreValue | None
    configs_used: int
    not_applicable: bool = False


@dataclass(frozen=True)
class _SeriesBoundary:
    speed: float
    shiftable: bool  # the series avoided something below: a boundary was observed


def _boundaries(
    configs: Sequence[TestConfig], outcomes: Mapping[TestConfig, TestOutcome]
) -> dict[tuple, _SeriesBoundary]:
    failures: dict[tuple, list[float]] = {}
    capable: set[tuple] = set()
    for config in configs:
        key = series_key(config)
        if outcomes[config].kind is OutcomeKind.AVOIDED:
            capable.add(key)
        else:
            failures.setdefault(key, []).append(config.vut_speed)
    return {
        key: _SeriesBoundary(speed=min(speeds), shiftable=key in capable)
        for key, speeds in failures.items()
    }


def _is_avoided(
    config: TestConfig,
    outcome: TestOutcome,
    boundary: _SeriesBoundary | None,
    shift: float,
) -> bool:
    avoided = outcome.kind is OutcomeKind.AVOIDED
    if shift == 0.0 or boundary is None or not boundary.shiftable:
        return avoided
    f = boundary.speed
    v = config.vut_speed
    if (v < f) != (v < f + shift):
        return not avoided
    return avoided


def _check_inputs(
    configs: Sequence[TestConfig],
    outcomes: Mapping[TestConfig, TestOutcome],
    config_weights: Mapping[TestConfig, float] | None,
) -> dict[TestConfig, float]:
    if not configs:
        raise ScoringError("no configurations to score")
    weights = {}
    for config in configs:
        if config not in outcomes:
            raise ScoringError(f"missing outcome for configuration {config.key()}")
        w = 1.0 if config_weights is None else float(config_weights.get(config, 1.0))
        if w <= 0:
            raise ScoringError(f"config weight must be > 0, got {w} for {config.key()}")
        weights[config] = w
    return weights


def frequency_score(
    configs: Sequence[TestConfig],
    outcomes: Mapping[TestConfig, TestOutcome],
    config_weights: Mapping[TestConfig, float] | None = None,
) -> ScoreValue:
    """Weighted fraction of configurations avoided, with its envelope."""
    weights = _check_inputs(configs, outcomes, config_weights)
    boundaries = _boundaries(configs, outcomes)
    values = []
    for shift in _SHIFTS:
        num = 0.0
        den = 0.0
        for config in configs:
            w = weights[config]
            den += w
            if _is_avoided(config, outcomes[config], boundaries.get(series_key(config)), shift):
                num += w
        values.append(num / den)
    lower, nominal, upper = values
    return ScoreValue(nominal=nominal, lower=lower, upper=upper)


def mitigation_power_score(
    configs: Sequence[TestConfig],
    outcomes: Mapping[TestConfig, TestOutcome],
    model: ImpactPowerModel,
    vut_mass: float,
    config_weights: Mapping[TestConfig, float] | None = None,
) -> ScoreValue:
    """One minus the ratio of realized to passive impact power, with envelope.

    Avoided configurations contribute zero power; judged failures contribute
    the full passive power (no braking assumed); impacts contribute the power
    at the measured impact speed, shifted with the assumed failure speed and
    clamped to [0, test speed].
    """
    weights = _check_inputs(configs, outcomes, config_weights)
    boundaries = _boundaries(configs, outcomes)
    passive = {c: passive_mu_pow(model, c, vut_mass) for c in configs}
    denominator = sum(weights[c] * passive[c] for c in configs)
    if denominator <= 0.0:
        raise ScoringError("passive impact power is zero across all configurations")

    values = []
    for shift in _SHIFTS:
        realized = 0.0
        for config in configs:
            outcome = outcomes[config]
            boundary = boundaries.get(series_key(config))
            if _is_avoided(config, outcome, boundary, shift):
                contribution = 0.0
            elif outcome.kind is OutcomeKind.IMPACTED:
                if outcome.impact_speed is None:
                    raise ScoringError(
                        f"impacted record without impact_speed at {config.key()}"
                    )
                speed = outcome.impact_speed
                if boundary is not None and boundary.shiftable:
                    speed = min(max(speed - shift, 0.0), config.vut_speed)
                contribution = mu_pow(model, config, vut_mass, speed)
            else:
                contribution = passive[config]
            realized += weights[config] * contribution
        values.append(1.0 - realized / denominator)
    lower, nominal, upper = values
    return ScoreValue(nominal=nominal, lower=lower, upper=upper)


def score_campaign(
    log: CampaignLog,
    model: ImpactPowerModel,
    config_weights: Mapping[TestConfig, float] | None = None,
    validate: bool = True,
) -> list[ScenarioScore]:
    """Score every vehicle on every (scenario, light) instance of the protocol.

    Instances the protocol does not license come back marked not applicable.
    A licensed instance with no records at all means the vehicle never got
    past the scenario's entry bar and scores zero. Partial coverage of a
    licensed instance is an error: score either everything or nothing.
    """
    if validate:
        diagnostics = validate_log(log)
        if diagnostics:
            raise ScoringError(
                f"log has {len(diagnostics)} validation finding(s); first: {diagnostics[0]}"
            )
    masses = {v.id: v.mass for v in log.vehicles}
    by_instance: dict[tuple[str, str, str], dict[TestConfig, TestOutcome]] = {}
    for record in log.records:
        key = (record.vehicle, record.config.code, record.config.light)
        by_instance.setdefault(key, {})[record.config] = record.outcome

    scores: list[ScenarioScore] = []
    for vehicle in log.vehicle_ids():
        mass = masses.get(vehicle, 1500.0)
        for spec in log.protocol.scenarios:
            for light in LIGHTS:
                if light not in spec.lights:
                    scores.append(
                        ScenarioScore(vehicle, spec.code, light, None, None, 0, True)
                    )
                    continue
                outcomes = by_instance.get((vehicle, spec.code, light))
                if not outcomes:
                    scores.append(
                        ScenarioScore(
                            vehicle, spec.code, light, ScoreValue.zero(), ScoreValue.zero(), 0
                        )
                    )
                    continue
                configs = enumerate_configs(log.protocol, scenario=spec.code, light=light)
                fs = frequency_score(configs, outcomes, config_weights)
                mps = mitigation_power_score(configs, outcomes, model, mass, config_weights)
                scores.append(
                    ScenarioScore(vehicle, spec.code, light, fs, mps, len(configs))
                )
    return scores
