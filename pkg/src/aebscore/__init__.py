"""Scenario-based AEB track-test campaign scoring and comparison toolkit."""

from .aggregate import (
    GroupScore,
    RelativityMatrix,
    WeightTable,
    aggregate_fs,
    aggregate_mps,
    build_matrix,
    load_weight_table,
    relativity,
)
from .campaign import (
    CampaignLog,
    CompletionStats,
    OutcomeKind,
    TestOutcome,
    TestRecord,
    VehicleProfile,
    completion_stats,
    expand_night_judgements,
    run_scenario,
    validate_log,
)
from .impact import (
    ImpactPowerModel,
    InterventionSample,
    mu_pow,
    passive_mu_pow,
    project_impact_speed,
)
from .logio import read_log, write_log
from .protocol import (
    ProtocolDefinition,
    ScenarioGroup,
    ScenarioSpec,
    TestConfig,
    bundled_protocol_path,
    enumerate_configs,
    load_protocol,
    speed_lattice,
)
from .scoring import (
    ScenarioScore,
    ScoreValue,
    frequency_score,
    mitigation_power_score,
    score_campaign,
)
from .simulate import load_simulation_spec, simulate_campaign

__version__ = "0.1.0"
