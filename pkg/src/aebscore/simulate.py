"""Seeded campaign simulation against configurable braking oracles.

A simulation spec names the vehicle pool and gives each vehicle a braking
oracle: a deterministic rule mapping a test configuration to avoided or
impacted. The driver replays the full incremental procedure - pre-tests,
speed escalation, judged expansion above failures, and night tests judged
where the daylight counterpart failed. Randomized oracles derive all draws
from the seed and the configuration identity, so a seed fixes the log
byte for byte regardless of execution order.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .campaign import (
    CampaignLog,
    TestOutcome,
    TestRecord,
    VehicleProfile,
    run_scenario,
    series_failure_speed,
    series_key,
)
from .protocol import DAY, LIGHTS, NIGHT, ProtocolDefinition, TestConfig

KNOWN_SENSORS = ("radar", "corner_radar", "camera", "lidar")


class SimulationSpecError(ValueError):
    """Raised when a simulation spec is malformed."""


@dataclass(frozen=True)
class OracleSpec:
    kind: str
    fail_at: float | None = None
    rules: tuple[Mapping, ...] = ()
    impact_fraction: float = 0.6
    respond: bool = True
    pretest_fail_prob: float = 0.0
    never_prob: float = 0.25
    impact_fraction_range: tuple[float, float] = (0.3, 0.95)
    respond_prob: float = 0.9


@dataclass(frozen=True)
class SimulationSpec:
    seed: int
    vehicles: tuple[tuple[VehicleProfile, OracleSpec], ...]


def load_simulation_spec(source: str | Path | Mapping) -> SimulationSpec:
    if isinstance(source, Mapping):
        doc = source
    else:
        try:
            doc = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SimulationSpecError(f"simulation spec is not valid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise SimulationSpecError("simulation spec must be a JSON object")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise SimulationSpecError("'seed' must be an integer")
    raw_vehicles = doc.get("vehicles")
    if not isinstance(raw_vehicles, list) or not raw_vehicles:
        raise SimulationSpecError("'vehicles' must be a non-empty array")
    default_oracle = doc.get("default_oracle")

    vehicles = []
    seen = set()
    for i, entry in enumerate(raw_vehicles):
        where = f"vehicles[{i}]"
        if not isinstance(entry, Mapping):
            raise SimulationSpecError(f"{where}: expected an object")
        vid = entry.get("id")
        if not isinstance(vid, str) or not vid:
            raise SimulationSpecError(f"{where}: 'id' must be a non-empty string")
        if vid in seen:
            raise SimulationSpecError(f"{where}: duplicate vehicle id {vid!r}")
        seen.add(vid)
        mass = entry.get("mass", 1500.0)
        if isinstance(mass, bool) or not isinstance(mass, (int, float)) or mass <= 0:
            raise SimulationSpecError(f"{where}: 'mass' must be a number > 0")
        sensors = entry.get("sensors", [])
        if not isinstance(sensors, list) or any(s not in KNOWN_SENSORS for s in sensors):
            raise SimulationSpecError(f"{where}: 'sensors' must be a subset of {KNOWN_SENSORS}")
        profile = VehicleProfile(
            id=vid,
            mass=float(mass),
            model_year=entry.get("model_year"),
            sensors=frozenset(sensors),
            is_prototype=bool(entry.get("is_prototype", False)),
        )
        oracle_doc = entry.get("oracle", default_oracle)
        if oracle_doc is None:
            raise SimulationSpecError(f"{where}: no oracle and no default_oracle")
        vehicles.append((profile, _parse_oracle(oracle_doc, f"{where}.oracle")))
    return SimulationSpec(seed=seed, vehicles=tuple(vehicles))


_ORACLE_KINDS = ("always_avoid", "never_respond", "threshold", "random")


def _parse_oracle(doc, where: str) -> OracleSpec:
    if not isinstance(doc, Mapping):
        raise SimulationSpecError(f"{where}: expected an object")
    kind = doc.get("type")
    if kind not in _ORACLE_KINDS:
        raise SimulationSpecError(f"{where}: 'type' must be one of {_ORACLE_KINDS}")
    rules = doc.get("rules", [])
    if not isinstance(rules, list):
        raise SimulationSpecError(f"{where}: 'rules' must be an array")
    fraction_range = doc.get("impact_fraction_range", [0.3, 0.95])
    return OracleSpec(
        kind=kind,
        fail_at=doc.get("fail_at"),
        rules=tuple(rules),
        impact_fraction=float(doc.get("impact_fraction", 0.6)),
        respond=bool(doc.get("respond", True)),
        pretest_fail_prob=float(doc.get("pretest_fail_prob", 0.0)),
        never_prob=float(doc.get("never_prob", 0.25)),
        impact_fraction_range=(float(fraction_range[0]), float(fraction_range[1])),
        respond_prob=float(doc.get("respond_prob", 0.9)),
    )


def _stable_rng(*parts) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def build_oracle(spec: OracleSpec, seed: int, vehicle: str):
    """Deterministic braking oracle for one vehicle."""

    def threshold_for(config: TestConfig) -> float | None:
        for rule in spec.rules:
            if rule.get("scenario") not in (None, config.code):
                continue
            if rule.get("light") not in (None, config.light):
                continue
            if rule.get("overlap") not in (None, config.overlap):
                continue
            if rule.get("tg_speed", "any") not in ("any", config.tg_speed):
                continue
            return rule.get("fail_at")
        return spec.fail_at

    def oracle(config: TestConfig) -> TestOutcome:
        if spec.kind == "always_avoid":
            return TestOutcome.avoided()
        if spec.kind == "never_respond":
            return TestOutcome.impacted(config.vut_speed, intervention=False)
        if spec.kind == "threshold":
            fail_at = threshold_for(config)
            if fail_at is None or config.vut_speed < fail_at:
                return TestOutcome.avoided()
            impact = max(min(spec.impact_fraction, 1.0), 1e-3) * config.vut_speed
            return TestOutcome.impacted(impact, intervention=spec.respond)
        # Random oracle: every draw is keyed by the series identity, so the
        # answer for a configuration never depends on visit order.
        scenario_rng = _stable_rng(seed, vehicle, "pretest", config.code, config.light)
        if scenario_rng.random() < spec.pretest_fail_prob:
            return TestOutcome.impacted(config.vut_speed, intervention=False)
        rng = _stable_rng(seed, vehicle, config.code, config.light, config.overlap, config.tg_speed)
        lattice = _series_speeds(config)
        fail_index = len(lattice) if rng.random() < spec.never_prob else rng.randrange(len(lattice))
        fraction = rng.uniform(*spec.impact_fraction_range)
        respond = rng.random() < spec.respond_prob
        fail_speed = lattice[fail_index] if fail_index < len(lattice) else None
        if fail_speed is None or config.vut_speed < fail_speed:
            return TestOutcome.avoided()
        return TestOutcome.impacted(
            max(fraction * config.vut_speed, 1e-3), intervention=respond
        )

    return oracle


def _series_speeds(config: TestConfig) -> tuple[float, ...]:
    settings = config.scenario.settings(config.light)
    for variant in settings.variants:
        if variant.tg_speed == config.tg_speed:
            return variant.speeds
    return (config.vut_speed,)


def simulate_campaign(
    protocol: ProtocolDefinition,
    spec: SimulationSpec,
    stop_on_impact: bool = True,
) -> CampaignLog:
    """Replay the incremental procedure for every vehicle in the spec."""
    records: list[TestRecord] = []
    for profile, oracle_spec in spec.vehicles:
        oracle = build_oracle(oracle_spec, spec.seed, profile.id)
        for scenario in protocol.scenarios:
            day_failures: dict[tuple[float, float | None], float] = {}
            for light in LIGHTS:
                if light not in scenario.lights:
                    continue
                settings = scenario.settings(light)
                for overlap in settings.overlaps:
                    judge_from = None
                    if light == NIGHT and day_failures:
                        judge_from = {
                            tg: speed
                            for (ov, tg), speed in day_failures.items()
                            if ov == overlap
                        }
                    slice_records = run_scenario(
                        oracle,
                        scenario,
                        overlap,
                        light,
                        requires_pretest=scenario.requires_pretest,
                        vehicle=profile.id,
                        stop_on_impact=stop_on_impact,
                        judge_from=judge_from,
                    )
                    records.extend(slice_records)
                    if light == DAY:
                        by_series: dict[tuple, list[TestRecord]] = {}
                        for record in slice_records:
                            by_series.setdefault(series_key(record.config), []).append(record)
                        for key, series_records in by_series.items():
                            failure = series_failure_speed(series_records)
                            if failure is not None:
                                day_failures[(overlap, key[3])] = failure[0]
    return CampaignLog(
        protocol=protocol,
        vehicles=tuple(profile for profile, _ in spec.vehicles),
        records=tuple(records),
    )
