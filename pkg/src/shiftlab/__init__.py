"""shiftlab: a numerical laboratory for transcendental and polynomial
shift-like maps on C^N.

Core pieces: a small closed catalog of entire functions with exact
derivatives (expressions), shift-like maps and a collapsed-boundary
quotient box (shiftlike), contour winding and covering-map
certificates (winding), orbit-separation entropy bounds and symbolic
word counts (entropy), and a worked three-dimensional map whose
translation-free part has a ladder of attracting basins (wandering).
A FastAPI service wraps the lot; the CLI is a thin client over the
same request models.
"""

__version__ = "0.1.0"

from .expressions import (
    Composition,
    Constant,
    CriticalOffset,
    EntireFunction,
    EvaluationRangeError,
    Exp,
    Power,
    Product,
    Sine,
    Sum,
    Var,
    conjugate_by_shift,
    const,
    evaluate,
    evaluate_derivative,
    evaluate_grid,
    parse_text,
    rescale,
    solve_critical_offset,
    to_text,
    var,
    wandering_base_function,
)
from .shiftlike import (
    COLLAPSED,
    Orbit,
    QuotientBox,
    QuotientClass,
    ShiftLikeMap,
    as_point,
    dilation_conjugate,
    iterate,
    map_from_json,
    map_to_json,
    orbit_to_csv,
    quotient_apply,
    quotient_metric,
    quotient_orbit_array,
    quotient_project,
    quotient_triangle_report,
    sup_dist,
    sup_norm,
)
from .winding import (
    INCONCLUSIVE,
    NO,
    YES,
    ExpansionCertificate,
    InconclusiveContour,
    ProbeReport,
    ProbeRow,
    TransitionTable,
    WindingResult,
    biholo_preimage_test,
    build_transition_table,
    dominated_cells,
    horseshoe_certificate,
    min_modulus_on_circle,
    rescaled_family_probe,
    table_from_json,
    table_to_json,
    transition_min_cardinality,
    winding_number,
    zero_count,
)
from .entropy import (
    CoveringSet,
    EntropyEstimate,
    EntropyReport,
    SeparatedSet,
    VolumeGrowth,
    WordCount,
    count_admissible_words,
    covering_upper,
    entropy_estimate,
    full_table,
    real_axis_grid,
    separated_lower,
    symbolic_entropy_lower,
    uniform_excluded_table,
    volume_growth,
    words_to_json,
)
from .wandering import (
    BasinGrid,
    EscapeCertificate,
    IdentityReport,
    PointLabel,
    SliceSpec,
    SpectrumReport,
    SweepReport,
    WanderingMap,
    attracting_range_sweep,
    build_example,
    classify_point,
    escape_certificate,
    fixed_point_spectrum,
    integer_fixed_point,
    render_basin_slice,
    verify_identities,
)

__all__ = [name for name in dir() if not name.startswith("_")]
