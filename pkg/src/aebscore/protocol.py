"""Test protocol model: scenario catalogue and test-configuration enumeration.

A protocol is an ordered list of collision scenarios. Each scenario carries
the approach-speed ranges of the vehicle under test (VUT), optional target
(TG) speeds, a speed step, overlap percentages, and the light conditions it
is licensed for. Night settings may override the day settings (fewer
overlaps, a single TG speed, or shifted speed ranges).

Enumerating a protocol produces every concrete test configuration in a
deterministic order: scenario order, day before night, ascending overlap,
ascending VUT speed, ascending TG speed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping


DAY = "day"
NIGHT = "night"
LIGHTS = (DAY, NIGHT)


class ScenarioGroup(str, Enum):
    C2C = "C2C"  # car to car
    C2VRU = "C2VRU"  # car to vulnerable road user
    C2O = "C2O"  # car to object


class ProtocolError(ValueError):
    """Raised when a protocol document violates the schema or its invariants."""


@dataclass(frozen=True)
class SpeedRange:
    """Inclusive km/h range; (hi - lo) must be a multiple of the speed step."""

    lo: float
    hi: float

    def lattice(self, step: float) -> tuple[float, ...]:
        n = int(round((self.hi - self.lo) / step))
        return tuple(self.lo + k * step for k in range(n + 1))


@dataclass(frozen=True)
class LightOverride:
    """Per-light replacements for selected scenario settings (night rows)."""

    vut_speed_ranges: tuple[SpeedRange, ...] | None = None
    tg_speeds: tuple[float, ...] | None = None
    overlaps: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SeriesVariant:
    """One escalation series shape: a TG speed and the VUT speed lattice."""

    tg_speed: float | None
    speeds: tuple[float, ...]


@dataclass(frozen=True)
class LightSettings:
    """The settings a scenario licenses under one light condition."""

    overlaps: tuple[float, ...]
    variants: tuple[SeriesVariant, ...]

    def config_count(self) -> int:
        return len(self.overlaps) * sum(len(v.speeds) for v in self.variants)


@dataclass(frozen=True)
class ScenarioSpec:
    """One collision scenario with its licensed test settings.

    ``tg_paired`` pairs speed range i with TG speed i (dual-range crossing
    scenarios); otherwise every TG speed is crossed with the union lattice of
    all ranges. ``tg_crossing`` marks car-to-car scenarios whose target moves
    orthogonally to the impact axis, so its speed does not reduce the closing
    speed. ``night`` overrides individual settings for night tests.
    """

    code: str
    group: ScenarioGroup
    vut_speed_ranges: tuple[SpeedRange, ...]
    tg_speeds: tuple[float, ...] | None
    speed_step: float
    overlaps: tuple[float, ...]
    lights: tuple[str, ...]
    description: str = ""
    tg_paired: bool = False
    tg_crossing: bool = False
    requires_pretest: bool = False
    night: LightOverride | None = None

    def settings(self, light: str) -> LightSettings:
        if light not in self.lights:
            raise ProtocolError(f"scenario {self.code!r} is not licensed for {light!r}")
        ranges = self.vut_speed_ranges
        tg_speeds = self.tg_speeds
        overlaps = self.overlaps
        if light == NIGHT and self.night is not None:
            ranges = self.night.vut_speed_ranges or ranges
            tg_speeds = self.night.tg_speeds if self.night.tg_speeds is not None else tg_speeds
            overlaps = self.night.overlaps or overlaps
        return LightSettings(overlaps=overlaps, variants=self._variants(ranges, tg_speeds))

    def _variants(
        self, ranges: tuple[SpeedRange, ...], tg_speeds: tuple[float, ...] | None
    ) -> tuple[SeriesVariant, ...]:
        merged: dict[float | None, set[float]] = {}
        if self.tg_paired:
            assert tg_speeds is not None
            # Range i belongs to TG speed i; ranges sharing a TG merge into one series.
            for rng, tg in zip(ranges, tg_speeds):
                merged.setdefault(tg, set()).update(rng.lattice(self.speed_step))
        else:
            union = _union_lattice(ranges, self.speed_step)
            for tg in tg_speeds or (None,):
                merged.setdefault(tg, set()).update(union)
        return tuple(
            SeriesVariant(tg, tuple(sorted(speeds)))
            for tg, speeds in sorted(merged.items(), key=lambda kv: _tg_key(kv[0]))
        )

    def pretest_speed(self) -> float:
        """Probe speed below the scenario's range, used before non-standard tests."""
        lo = min(r.lo for r in self.vut_speed_ranges)
        probe = lo - self.speed_step
        return probe if probe > 0 else lo / 2.0


@dataclass(frozen=True)
class TestConfig:
    """One concrete test setting of a scenario."""

    scenario: ScenarioSpec
    vut_speed: float
    tg_speed: float | None
    overlap: float
    light: str

    @property
    def code(self) -> str:
        return self.scenario.code

    def key(self) -> tuple:
        return (self.scenario.code, self.light, self.overlap, self.vut_speed, self.tg_speed)


@dataclass(frozen=True)
class ProtocolDefinition:
    """Validated, immutable scenario catalogue."""

    scenarios: tuple[ScenarioSpec, ...]
    provenance: str = ""
    notes: str = ""
    _by_code: Mapping[str, ScenarioSpec] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_code", {s.code: s for s in self.scenarios})

    def scenario(self, code: str) -> ScenarioSpec:
        try:
            return self._by_code[code]
        except KeyError:
            raise ProtocolError(f"unknown scenario code {code!r}") from None

    def has_scenario(self, code: str) -> bool:
        return code in self._by_code

    def config_count(self) -> int:
        return len(enumerate_configs(self))

    def licensed_pairs(self) -> list[tuple[str, str]]:
        """(scenario code, light) pairs the protocol licenses, in output order."""
        return [(s.code, light) for s in self.scenarios for light in LIGHTS if light in s.lights]

    def config_index(self) -> dict[tuple, TestConfig]:
        return {c.key(): c for c in enumerate_configs(self)}


def _tg_key(tg: float | None) -> float:
    return float("-inf") if tg is None else tg


def _union_lattice(ranges: Iterable[SpeedRange], step: float) -> tuple[float, ...]:
    speeds: set[float] = set()
    for rng in ranges:
        speeds.update(rng.lattice(step))
    return tuple(sorted(speeds))


def speed_lattice(spec: ScenarioSpec, light: str | None = None) -> list[float]:
    """Ascending, de-duplicated VUT speeds across the scenario's ranges."""
    ranges = spec.vut_speed_ranges
    if light == NIGHT and spec.night is not None and spec.night.vut_speed_ranges:
        ranges = spec.night.vut_speed_ranges
    return list(_union_lattice(ranges, spec.speed_step))


def enumerate_configs(
    protocol: ProtocolDefinition,
    scenario: str | None = None,
    light: str | None = None,
    group: ScenarioGroup | str | None = None,
) -> list[TestConfig]:
    """Enumerate test configurations, optionally filtered.

    Order: scenario order as listed, day before night, then ascending
    overlap, ascending VUT speed, ascending TG speed.
    """
    if scenario is not None and not protocol.has_scenario(scenario):
        raise ProtocolError(f"unknown scenario code {scenario!r}")
    if light is not None and light not in LIGHTS:
        raise ProtocolError(f"unknown light {light!r}; expected one of {LIGHTS}")
    if group is not None:
        try:
            group = ScenarioGroup(group)
        except ValueError:
            raise ProtocolError(f"unknown scenario group {group!r}") from None

    configs: list[TestConfig] = []
    for spec in protocol.scenarios:
        if scenario is not None and spec.code != scenario:
            continue
        if group is not None and spec.group is not group:
            continue
        for lt in LIGHTS:
            if lt not in spec.lights or (light is not None and lt != light):
                continue
            settings = spec.settings(lt)
            cells = sorted(
                {
                    (overlap, speed, variant.tg_speed)
                    for overlap in settings.overlaps
                    for variant in settings.variants
                    for speed in variant.speeds
                },
                key=lambda t: (t[0], t[1], _tg_key(t[2])),
            )
            configs.extend(
                TestConfig(scenario=spec, vut_speed=speed, tg_speed=tg, overlap=overlap, light=lt)
                for overlap, speed, tg in cells
            )
    return configs


# ---------------------------------------------------------------------------
# Loading / serialization

_SCENARIO_KEYS = {
    "code",
    "group",
    "vut_speed_ranges",
    "tg_speeds",
    "speed_step",
    "overlaps",
    "lights",
    "description",
    "tg_paired",
    "tg_crossing",
    "requires_pretest",
    "night",
}


def load_protocol(source: str | Path | Mapping) -> ProtocolDefinition:
    """Load and validate a protocol document (path, JSON text, or mapping)."""
    doc = _read_document(source)
    if not isinstance(doc, Mapping):
        raise ProtocolError("protocol document must be a JSON object")
    raw_scenarios = doc.get("scenarios")
    if not isinstance(raw_scenarios, list):
        raise ProtocolError("protocol document needs a top-level 'scenarios' array")

    scenarios = []
    codes: set[str] = set()
    for i, entry in enumerate(raw_scenarios):
        spec = _parse_scenario(entry, f"scenarios[{i}]")
        if spec.code in codes:
            raise ProtocolError(f"scenarios[{i}]: duplicate scenario code {spec.code!r}")
        codes.add(spec.code)
        scenarios.append(spec)

    protocol = ProtocolDefinition(
        scenarios=tuple(scenarios),
        provenance=str(doc.get("provenance", "")),
        notes=str(doc.get("notes", "")),
    )
    expected = doc.get("expected_config_count")
    if expected is not None:
        actual = protocol.config_count()
        if actual != expected:
            raise ProtocolError(
                f"protocol declares {expected} configurations but enumerates {actual}"
            )
    return protocol


def _read_document(source: str | Path | Mapping) -> Mapping:
    if isinstance(source, Mapping):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"protocol document is not valid JSON: {exc}") from exc


def _parse_scenario(entry, where: str) -> ScenarioSpec:
    if not isinstance(entry, Mapping):
        raise ProtocolError(f"{where}: scenario entry must be an object")
    unknown = set(entry) - _SCENARIO_KEYS
    if unknown:
        raise ProtocolError(f"{where}: unknown field(s) {sorted(unknown)}")
    code = entry.get("code")
    if not isinstance(code, str) or not code:
        raise ProtocolError(f"{where}: 'code' must be a non-empty string")
    where = f"{where} ({code})"
    try:
        group = ScenarioGroup(entry.get("group"))
    except ValueError:
        raise ProtocolError(
            f"{where}: 'group' must be one of {[g.value for g in ScenarioGroup]}"
        ) from None

    step = _positive_number(entry.get("speed_step"), f"{where}.speed_step")
    ranges = _parse_ranges(entry.get("vut_speed_ranges"), step, f"{where}.vut_speed_ranges")
    tg_speeds = _parse_tg_speeds(entry.get("tg_speeds"), f"{where}.tg_speeds")
    overlaps = _parse_overlaps(entry.get("overlaps"), f"{where}.overlaps")
    lights = _parse_lights(entry.get("lights"), f"{where}.lights")
    tg_paired = bool(entry.get("tg_paired", False))
    if tg_paired:
        if tg_speeds is None or len(tg_speeds) != len(ranges):
            raise ProtocolError(
                f"{where}: tg_paired requires one tg speed per speed range"
            )

    night = None
    if entry.get("night") is not None:
        night = _parse_override(entry["night"], step, f"{where}.night")
        if NIGHT not in lights:
            raise ProtocolError(f"{where}: night overrides given but night is not licensed")

    return ScenarioSpec(
        code=code,
        group=group,
        vut_speed_ranges=ranges,
        tg_speeds=tg_speeds,
        speed_step=step,
        overlaps=overlaps,
        lights=lights,
        description=str(entry.get("description", "")),
        tg_paired=tg_paired,
        tg_crossing=bool(entry.get("tg_crossing", False)),
        requires_pretest=bool(entry.get("requires_pretest", False)),
        night=night,
    )


def _parse_override(raw, step: float, where: str) -> LightOverride:
    if not isinstance(raw, Mapping):
        raise ProtocolError(f"{where}: override must be an object")
    unknown = set(raw) - {"vut_speed_ranges", "tg_speeds", "overlaps"}
    if unknown:
        raise ProtocolError(f"{where}: unknown field(s) {sorted(unknown)}")
    ranges = None
    if raw.get("vut_speed_ranges") is not None:
        ranges = _parse_ranges(raw["vut_speed_ranges"], step, f"{where}.vut_speed_ranges")
    tg_speeds = None
    if raw.get("tg_speeds") is not None:
        tg_speeds = _parse_tg_speeds(raw["tg_speeds"], f"{where}.tg_speeds")
    overlaps = None
    if raw.get("overlaps") is not None:
        overlaps = _parse_overlaps(raw["overlaps"], f"{where}.overlaps")
    return LightOverride(vut_speed_ranges=ranges, tg_speeds=tg_speeds, overlaps=overlaps)


def _parse_ranges(raw, step: float, where: str) -> tuple[SpeedRange, ...]:
    if not isinstance(raw, list) or not raw:
        raise ProtocolError(f"{where}: expected a non-empty array of [min, max] pairs")
    ranges = []
    for j, pair in enumerate(raw):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ProtocolError(f"{where}[{j}]: expected a [min, max] pair")
        lo, hi = (_number(v, f"{where}[{j}]") for v in pair)
        if lo > hi:
            raise ProtocolError(f"{where}[{j}]: min {lo} exceeds max {hi}")
        span = hi - lo
        if abs(span / step - round(span / step)) > 1e-9:
            raise ProtocolError(
                f"{where}[{j}]: range {lo}-{hi} is not divisible by speed step {step}"
            )
        ranges.append(SpeedRange(lo, hi))
    return tuple(ranges)


def _parse_tg_speeds(raw, where: str) -> tuple[float, ...] | None:
    if raw is None:
        return None
    if not isinstance(raw, list) or not raw:
        raise ProtocolError(f"{where}: expected null or a non-empty array of speeds")
    return tuple(_number(v, where) for v in raw)


def _parse_overlaps(raw, where: str) -> tuple[float, ...]:
    if not isinstance(raw, list) or not raw:
        raise ProtocolError(f"{where}: expected a non-empty array of percentages")
    overlaps = tuple(_number(v, where) for v in raw)
    for o in overlaps:
        if not 0 < o <= 100:
            raise ProtocolError(f"{where}: overlap {o} outside (0, 100]")
    return overlaps


def _parse_lights(raw, where: str) -> tuple[str, ...]:
    if not isinstance(raw, list) or not raw:
        raise ProtocolError(f"{where}: expected a non-empty array of light conditions")
    for lt in raw:
        if lt not in LIGHTS:
            raise ProtocolError(f"{where}: unknown light {lt!r}")
    return tuple(lt for lt in LIGHTS if lt in raw)


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _positive_number(value, where: str) -> float:
    num = _number(value, where)
    if num <= 0:
        raise ProtocolError(f"{where}: must be > 0")
    return num


def protocol_to_dict(protocol: ProtocolDefinition) -> dict:
    """Serialize a protocol back into its document form (round-trip stable)."""
    out = {
        "provenance": protocol.provenance,
        "notes": protocol.notes,
        "expected_config_count": protocol.config_count(),
        "scenarios": [],
    }
    for s in protocol.scenarios:
        entry: dict = {
            "code": s.code,
            "group": s.group.value,
            "vut_speed_ranges": [[_plain(r.lo), _plain(r.hi)] for r in s.vut_speed_ranges],
            "tg_speeds": None if s.tg_speeds is None else [_plain(v) for v in s.tg_speeds],
            "speed_step": _plain(s.speed_step),
            "overlaps": [_plain(v) for v in s.overlaps],
            "lights": list(s.lights),
            "description": s.description,
        }
        if s.tg_paired:
            entry["tg_paired"] = True
        if s.tg_crossing:
            entry["tg_crossing"] = True
        if s.requires_pretest:
            entry["requires_pretest"] = True
        if s.night is not None:
            override: dict = {}
            if s.night.vut_speed_ranges is not None:
                override["vut_speed_ranges"] = [
                    [_plain(r.lo), _plain(r.hi)] for r in s.night.vut_speed_ranges
                ]
            if s.night.tg_speeds is not None:
                override["tg_speeds"] = [_plain(v) for v in s.night.tg_speeds]
            if s.night.overlaps is not None:
                override["overlaps"] = [_plain(v) for v in s.night.overlaps]
            entry["night"] = override
        out["scenarios"].append(entry)
    return out


def _plain(x: float):
    return int(x) if float(x).is_integer() else float(x)


def bundled_protocol_path() -> Path:
    return Path(__file__).parent / "data" / "protocol_swissre.json"
