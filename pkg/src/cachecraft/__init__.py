"""cachecraft: coded-caching placement optimization and delivery simulation."""

from .model import (
    CacheClasses,
    ConfigError,
    FeasibilityReport,
    Placement,
    StructuralError,
    SystemConfig,
    graded_catalog_config,
    load_config,
    load_placement,
    save_config,
    save_placement,
    uniform_config,
    validate_placement,
    zipf_popularities,
)
from .probability import (
    EnumerationCapError,
    OrderStatTable,
    binom,
    group_order_stat_pmf,
    order_stat_oracle,
    order_stat_pmf,
)
from .lp_core import (
    LinearProgram,
    LpSolution,
    SimplexOptions,
    check_solution,
    export_text,
    solve,
    solve_with_scipy,
)
from .formulations import BuiltProblem, SizeGuardError, build, solve_built
from .schemes import (
    GroupedScheme,
    decentralized_scheme,
    expand_to_placement,
    extract_grouped,
    random_class_baseline,
    random_length_baseline,
    random_popularity_baseline,
    theorem1_scheme,
)
from .evaluator import (
    CurvePoint,
    RateResult,
    expected_rate,
    rate_for_demand,
    sweep_curve,
)
from .delivery_sim import (
    BitCatalog,
    DecodeReport,
    TransmissionLog,
    decode_all,
    deliver,
    materialize,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
