"""Exact Shapley-value revenue allocation for assembled data sets.

Data owners contribute tables; a coalition plan joins and unions them into
the data set a buyer pays for. When each output tuple's utility is independent
and additive, every owner's Shapley value decomposes into per-tuple values
that depend only on the tuple's minimal witness sets, which this package
tracks during plan evaluation and exploits with closed forms and two
complementary exact algorithms.
"""

from .baselines import (
    UtilityEvaluator,
    brute_force_tuple_oracle,
    perm_shapley,
    trad_shapley,
)
from .bench import (
    CaseRates,
    RunConfig,
    RunReport,
    compute_case_rates,
    compute_error_rate,
    ingest_csv,
    load_assignment,
    run_benchmark,
    run_method,
    run_with_timeout,
    write_assignment,
)
from .datagen import (
    Assignment,
    AssignmentScenario,
    assign_owner_counts,
    assign_records,
    generate_assignment,
    sample_copy_count,
)
from .engine import (
    CoalitionSet,
    CoalitionTuple,
    OwnedTable,
    SourceTable,
    SynthesisSet,
    dump_coalition,
    evaluate_plan,
    load_coalition,
    minimalize,
    restrict_tables,
)
from .errors import (
    AssemblageError,
    CostLimitError,
    IngestError,
    PlanError,
    SynthesisLimitError,
    UndefinedMetricError,
    UniverseMismatchError,
)
from .model import Allocation, OwnerSet, Utility, as_utility
from .plans import (
    EquiJoin,
    NaturalJoin,
    PlanNode,
    Project,
    Scan,
    Union,
    load_plan,
    plan_from_dict,
    plan_from_json,
    plan_to_dict,
    plan_to_json,
)
from .shapley import (
    CaseStats,
    General,
    IusvResult,
    SingleOwnerOnly,
    SynthesisSplit,
    TupleCase,
    UniqueMultiOwner,
    classify_tuple,
    iusv_all,
    iusv_tuple,
    shapley_sc,
    shapley_single_owner_only,
    shapley_sl,
    shapley_unique_multi,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "AssemblageError",
    "Assignment",
    "AssignmentScenario",
    "CaseRates",
    "CaseStats",
    "CoalitionSet",
    "CoalitionTuple",
    "CostLimitError",
    "EquiJoin",
    "General",
    "IngestError",
    "IusvResult",
    "NaturalJoin",
    "OwnedTable",
    "OwnerSet",
    "PlanError",
    "PlanNode",
    "Project",
    "RunConfig",
    "RunReport",
    "Scan",
    "SingleOwnerOnly",
    "SourceTable",
    "SynthesisLimitError",
    "SynthesisSet",
    "SynthesisSplit",
    "TupleCase",
    "UndefinedMetricError",
    "Union",
    "UniqueMultiOwner",
    "UniverseMismatchError",
    "Utility",
    "UtilityEvaluator",
    "as_utility",
    "assign_owner_counts",
    "assign_records",
    "brute_force_tuple_oracle",
    "classify_tuple",
    "compute_case_rates",
    "compute_error_rate",
    "dump_coalition",
    "evaluate_plan",
    "generate_assignment",
    "ingest_csv",
    "iusv_all",
    "iusv_tuple",
    "load_assignment",
    "load_coalition",
    "load_plan",
    "minimalize",
    "perm_shapley",
    "plan_from_dict",
    "plan_from_json",
    "plan_to_dict",
    "plan_to_json",
    "restrict_tables",
    "run_benchmark",
    "run_method",
    "run_with_timeout",
    "sample_copy_count",
    "shapley_sc",
    "shapley_single_owner_only",
    "shapley_sl",
    "shapley_unique_multi",
    "trad_shapley",
    "write_assignment",
]
