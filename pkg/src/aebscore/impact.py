"""Impact-power model: collision energy proxy and intervention speed projection.

The published scoring framework never discloses its impact-power formula, so
this module supplies a documented, pluggable default: a kinetic-energy proxy.
Car-to-car collisions use the reduced mass of the pair and the closing speed
along the impact axis; collisions with vulnerable road users or objects use
the full kinetic energy of the test vehicle. A geometry factor scales the
energy by the overlap between the vehicles. Only energy *ratios* enter the
mitigation scores, so any overall constant cancels downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .protocol import ScenarioGroup, TestConfig

KMH_TO_MS = 1.0 / 3.6

DEFAULT_TG_MASSES = {ScenarioGroup.C2C: 1500.0}  # kg
DEFAULT_VUT_MASS = 1500.0  # kg


class ImpactModelError(ValueError):
    """Raised for invalid impact-model inputs or configuration."""


GEOMETRY_RULES: dict[str, Callable[[float], float]] = {
    # Linear: energy transfer proportional to the geometric overlap.
    "linear": lambda overlap: overlap / 100.0,
    # Unit: geometry ignored, full frontal energy regardless of overlap.
    "unit": lambda overlap: 1.0,
}


@dataclass(frozen=True)
class ImpactPowerModel:
    """Pluggable impact-power quantity; strictly increasing in impact speed."""

    name: str = "kinetic-energy-proxy"
    tg_masses: Mapping[ScenarioGroup, float] = field(
        default_factory=lambda: dict(DEFAULT_TG_MASSES)
    )
    geometry_rule: str = "linear"

    def geometry_factor(self, overlap: float) -> float:
        try:
            rule = GEOMETRY_RULES[self.geometry_rule]
        except KeyError:
            raise ImpactModelError(f"unknown geometry rule {self.geometry_rule!r}") from None
        return rule(overlap)

    def tg_mass(self, group: ScenarioGroup) -> float:
        mass = self.tg_masses.get(group, DEFAULT_TG_MASSES.get(group, 0.0))
        if group is ScenarioGroup.C2C and mass <= 0:
            raise ImpactModelError("car-to-car target mass must be > 0")
        return mass


@dataclass(frozen=True)
class InterventionSample:
    """Vehicle state at the moment a safety driver took over."""

    speed_at_intervention: float  # km/h
    deceleration: float  # m/s^2, braking already applied
    distance_to_target: float  # m


def project_impact_speed(sample: InterventionSample) -> float:
    """Impact speed (km/h) projected from the dynamics before a takeover.

    Constant deceleration over the remaining distance; 0 means the projection
    predicts full avoidance.
    """
    for name in ("speed_at_intervention", "deceleration", "distance_to_target"):
        value = getattr(sample, name)
        if not math.isfinite(value):
            raise ImpactModelError(f"{name} must be finite")
        if value < 0:
            raise ImpactModelError(f"{name} must be >= 0")
    v_ms = sample.speed_at_intervention * KMH_TO_MS
    remaining = v_ms * v_ms - 2.0 * sample.deceleration * sample.distance_to_target
    return math.sqrt(max(0.0, remaining)) / KMH_TO_MS


def mu_pow(
    model: ImpactPowerModel,
    config: TestConfig,
    vut_mass: float,
    impact_speed: float,
) -> float:
    """Impact-power proxy (J) of a collision at ``impact_speed`` km/h.

    Car-to-car: half the reduced mass times the squared closing speed. The
    closing speed subtracts the target speed for same-axis targets and equals
    the impact speed for crossing targets. Other groups: half the VUT mass
    times the squared impact speed. All scaled by the geometry factor.
    """
    if impact_speed < 0:
        raise ImpactModelError(f"impact speed must be >= 0, got {impact_speed}")
    if vut_mass <= 0:
        raise ImpactModelError(f"VUT mass must be > 0, got {vut_mass}")
    group = config.scenario.group
    if group is ScenarioGroup.C2C:
        tg_mass = model.tg_mass(group)
        effective_mass = vut_mass * tg_mass / (vut_mass + tg_mass)
        if config.scenario.tg_crossing or config.tg_speed is None:
            closing = impact_speed
        else:
            # Same-axis target pulls away; no energy transfer at or below its speed.
            closing = max(0.0, impact_speed - config.tg_speed)
    elif group in (ScenarioGroup.C2VRU, ScenarioGroup.C2O):
        effective_mass = vut_mass
        closing = impact_speed
    else:  # pragma: no cover - enum is closed
        raise ImpactModelError(f"unknown scenario group {group!r}")
    v_ms = closing * KMH_TO_MS
    return 0.5 * effective_mass * v_ms * v_ms * model.geometry_factor(config.overlap)


def passive_mu_pow(model: ImpactPowerModel, config: TestConfig, vut_mass: float) -> float:
    """Impact power of a vehicle that never brakes: impact at the test speed."""
    return mu_pow(model, config, vut_mass, config.vut_speed)


def scenario_passive_power(
    configs,
    model: ImpactPowerModel,
    vut_mass: float,
    config_weights: Mapping[TestConfig, float] | None = None,
) -> float:
    """Weighted average passive impact power over a scenario's configurations."""
    num = 0.0
    den = 0.0
    for config in configs:
        w = 1.0 if config_weights is None else float(config_weights.get(config, 1.0))
        num += w * passive_mu_pow(model, config, vut_mass)
        den += w
    if den <= 0:
        raise ImpactModelError("no configurations to average over")
    return num / den
