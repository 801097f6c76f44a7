"""gridinv: mine invariants from power-grid telemetry and monitor streams with them.

Pipeline: ingest CSV -> discretize to transactions -> mine frequent itemsets
-> generate association rules (support/confidence/lift filters) -> evaluate
the rules as anomaly monitors over record streams.
"""

from .ingest import AttributeSchema, RawDataset, RawRecord, infer_schema, parse_dataset
from .discretize import (
    BandDefinition,
    DiscretizationSpec,
    Item,
    ToleranceBand,
    Transaction,
    build_default_spec,
    discretize_dataset,
    discretize_value,
    prune_constants,
    resolve_transitions,
)
from .mine import FrequentItemsetTable, brute_force_frequent, mine_frequent, support
from .rules import (
    AssociationRule,
    MiningConfig,
    RuleSet,
    check_metric_consistency,
    export_rules,
    generate_rules,
    import_rules,
    remove_redundant,
)
from .detect import (
    RotationPolicy,
    Violation,
    evaluate_record,
    evaluate_stream,
    rotate_subset,
)
from .synth import (
    AttackSpec,
    CouplingRule,
    GridScenarioConfig,
    SignalConfig,
    generate_normal,
    inject_attack,
    planted_scenario,
)

__version__ = "0.1.0"
