"""Command-line interface: validate, stats, score, compare, simulate.

Exit codes: 0 clean, 1 validation findings, 2 unreadable or ill-formed
inputs. All paths are taken as given relative to the working directory;
no environment variables are consulted. Report files are written with
deterministic bytes for fixed inputs, so output trees can be diffed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Mapping, Sequence

from .aggregate import (
    METRICS,
    AggregationError,
    GroupScore,
    WeightTableError,
    aggregate_fs,
    aggregate_mps,
    build_matrix,
    check_weight_table,
    load_weight_table,
)
from .campaign import CampaignLog, completion_stats, validate_log, vehicle_sort_key
from .impact import (
    DEFAULT_VUT_MASS,
    GEOMETRY_RULES,
    ImpactModelError,
    ImpactPowerModel,
    scenario_passive_power,
)
from .logio import LogFormatError, read_log, write_log
from .protocol import (
    LIGHTS,
    ProtocolDefinition,
    ProtocolError,
    ScenarioGroup,
    enumerate_configs,
    load_protocol,
)
from .report import EXTENSIONS, FORMATS, completion_table, matrix_table, render, score_table
from .scoring import ScoringError, score_campaign
from .simulate import SimulationSpecError, load_simulation_spec, simulate_campaign

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_INPUT = 2

_INPUT_ERRORS = (
    ProtocolError,
    LogFormatError,
    WeightTableError,
    SimulationSpecError,
    ImpactModelError,
    ScoringError,
    AggregationError,
    OSError,
    json.JSONDecodeError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aebscore",
        description="Score and compare AEB track-test campaigns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="check a campaign log against the procedure")
    _common(validate, log=True)
    validate.set_defaults(func=cmd_validate)

    stats = sub.add_parser("stats", help="per-vehicle completion statistics")
    _common(stats, log=True)
    stats.add_argument("--out", type=Path, help="write CSV here instead of stdout")
    stats.set_defaults(func=cmd_stats)

    score = sub.add_parser("score", help="scenario-level score tables per region and light")
    _common(score, log=True, weights=True, out=True, formats=True)
    score.set_defaults(func=cmd_score)

    compare = sub.add_parser("compare", help="ranked relativity matrices per metric/group/region")
    _common(compare, log=True, weights=True, out=True, formats=True)
    compare.set_defaults(func=cmd_compare)

    simulate = sub.add_parser("simulate", help="generate a campaign log from braking oracles")
    _common(simulate)
    simulate.add_argument("--oracle", type=Path, required=True, help="simulation spec JSON")
    simulate.add_argument("--seed", type=int, help="override the spec's seed")
    simulate.add_argument("--out", type=Path, required=True, help="log file to write (.jsonl/.csv)")
    simulate.add_argument(
        "--continue-past-impact",
        action="store_true",
        help="keep escalating after impacts with a braking response",
    )
    simulate.set_defaults(func=cmd_simulate)
    return parser


def _common(parser, log=False, weights=False, out=False, formats=False) -> None:
    parser.add_argument("--protocol", type=Path, required=True, help="protocol JSON file")
    if log:
        parser.add_argument("--log", type=Path, required=True, help="campaign log (.jsonl/.csv)")
        parser.add_argument("--impact-model", type=Path, help="impact model config JSON")
    if weights:
        parser.add_argument(
            "--weights",
            type=Path,
            action="append",
            required=True,
            help="regional weight table JSON (repeatable)",
        )
    if out:
        parser.add_argument("--out", type=Path, required=True, help="output directory")
    if formats:
        parser.add_argument(
            "--format",
            default="csv",
            help=f"comma-separated subset of {','.join(FORMATS)} (default csv)",
        )


def _load_impact_config(path: Path | None) -> tuple[ImpactPowerModel, dict[str, float], float]:
    if path is None:
        return ImpactPowerModel(), {}, DEFAULT_VUT_MASS
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, Mapping):
        raise ImpactModelError("impact model config must be a JSON object")
    unknown = set(doc) - {"name", "tg_masses", "geometry_rule", "vut_masses", "default_vut_mass"}
    if unknown:
        raise ImpactModelError(f"unknown impact model field(s) {sorted(unknown)}")
    geometry_rule = doc.get("geometry_rule", "linear")
    if geometry_rule not in GEOMETRY_RULES:
        raise ImpactModelError(
            f"unknown geometry rule {geometry_rule!r}; expected one of {sorted(GEOMETRY_RULES)}"
        )
    tg_masses = {}
    for name, mass in dict(doc.get("tg_masses", {})).items():
        try:
            group = ScenarioGroup(name)
        except ValueError:
            raise ImpactModelError(f"unknown scenario group {name!r} in tg_masses") from None
        tg_masses[group] = float(mass)
    name = str(doc.get("name", "kinetic-energy-proxy"))
    if tg_masses:
        model = ImpactPowerModel(name=name, tg_masses=tg_masses, geometry_rule=geometry_rule)
    else:
        model = ImpactPowerModel(name=name, geometry_rule=geometry_rule)
    vut_masses = {str(k): float(v) for k, v in dict(doc.get("vut_masses", {})).items()}
    default_mass = float(doc.get("default_vut_mass", DEFAULT_VUT_MASS))
    if default_mass <= 0 or any(m <= 0 for m in vut_masses.values()):
        raise ImpactModelError("vehicle masses must be > 0")
    return model, vut_masses, default_mass


def _read_inputs(args) -> tuple[ProtocolDefinition, CampaignLog, ImpactPowerModel]:
    protocol = load_protocol(args.protocol)
    model, vut_masses, default_mass = _load_impact_config(getattr(args, "impact_model", None))
    log = read_log(args.log, protocol)
    vehicles = tuple(
        replace(v, mass=vut_masses.get(v.id, default_mass)) for v in log.vehicles
    )
    return protocol, replace(log, vehicles=vehicles), model


def _formats(args) -> list[str]:
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    if not formats:
        raise ValueError("at least one output format is required")
    for fmt in formats:
        if fmt not in FORMATS:
            raise ValueError(f"unknown format {fmt!r}; expected a subset of {','.join(FORMATS)}")
    return formats


def _write_tables(tables, out_dir: Path, formats: Sequence[str], stem_of) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for table_obj, stem in ((t, stem_of(t)) for t in tables):
        for fmt in formats:
            path = out_dir / f"{stem}.{EXTENSIONS[fmt]}"
            path.write_text(render(table_obj, fmt), encoding="utf-8")
            written.append(path)
    for path in written:
        print(path)
    return written


def cmd_validate(args) -> int:
    protocol = load_protocol(args.protocol)
    log = read_log(args.log, protocol)
    diagnostics = validate_log(log)
    for diagnostic in diagnostics:
        print(diagnostic)
    return EXIT_FINDINGS if diagnostics else EXIT_OK


def cmd_stats(args) -> int:
    protocol = load_protocol(args.protocol)
    log = read_log(args.log, protocol)
    table = completion_table(completion_stats(log))
    text = render(table, "csv")
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
        print(args.out)
    else:
        print(text, end="")
    return EXIT_OK


def _validated_inputs(args):
    protocol, log, model = _read_inputs(args)
    diagnostics = validate_log(log)
    if diagnostics:
        for diagnostic in diagnostics:
            print(diagnostic, file=sys.stderr)
        return None
    tables = [load_weight_table(p) for p in args.weights]
    for table in tables:
        problems = check_weight_table(table, protocol)
        if problems:
            raise WeightTableError(
                f"weight table {table.region!r}: " + "; ".join(problems[:3])
            )
    return protocol, log, model, tables


def cmd_score(args) -> int:
    formats = _formats(args)
    inputs = _validated_inputs(args)
    if inputs is None:
        return EXIT_FINDINGS
    protocol, log, model, weight_tables = inputs
    scores = score_campaign(log, model, validate=False)
    tables = [
        score_table(scores, protocol, metric, light, table.region)
        for table in weight_tables
        for light in LIGHTS
        for metric in METRICS
    ]
    _write_tables(tables, args.out, formats, lambda t: t.title.lower())
    return EXIT_OK


def cmd_compare(args) -> int:
    formats = _formats(args)
    inputs = _validated_inputs(args)
    if inputs is None:
        return EXIT_FINDINGS
    protocol, log, model, weight_tables = inputs
    scores = score_campaign(log, model, validate=False)
    by_vehicle: dict[str, list] = {}
    for s in scores:
        by_vehicle.setdefault(s.vehicle, []).append(s)
    masses = {v.id: v.mass for v in log.vehicles}

    matrices = []
    for table in weight_tables:
        for group, instances in table.groups.items():
            group_scores = []
            for vehicle in sorted(by_vehicle, key=vehicle_sort_key):
                mass = masses.get(vehicle, DEFAULT_VUT_MASS)
                passive_powers = {
                    (code, light): scenario_passive_power(
                        enumerate_configs(protocol, scenario=code, light=light), model, mass
                    )
                    for code, light in instances
                }
                group_scores.append(
                    GroupScore(
                        vehicle=vehicle,
                        group=group,
                        region=table.region,
                        fs=aggregate_fs(by_vehicle[vehicle], table, group),
                        mps=aggregate_mps(by_vehicle[vehicle], table, group, passive_powers),
                    )
                )
            for metric in METRICS:
                matrices.append(matrix_table(build_matrix(group_scores, metric)))
    _write_tables(matrices, args.out, formats, lambda t: t.title.lower())
    return EXIT_OK


def cmd_simulate(args) -> int:
    protocol = load_protocol(args.protocol)
    spec = load_simulation_spec(args.oracle)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    log = simulate_campaign(protocol, spec, stop_on_impact=not args.continue_past_impact)
    write_log(log, args.out)
    print(f"{args.out}: {len(log.records)} records for {len(log.vehicles)} vehicles")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
