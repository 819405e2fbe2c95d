"""Ergodic optimization meets optimal transport.

Transfer operators and zero-temperature limits, calibrated subactions by
max-plus iteration, involution kernels with dual potentials and twist
checks, and the Kantorovich problem between maximizing measures with
full structural certification (duality, cyclical monotonicity, graph
property, Rockafellar-type potentials).
"""

from .dynamics import (
    DOUBLING,
    FULL_SHIFT2,
    MINUS_DOUBLING,
    ExtensionPoint,
    Ordering,
    PeriodicOrbit,
    SymbolWord,
    SystemKind,
    SystemSpec,
    apply_map,
    backward_step,
    extension_backward,
    extension_forward,
    gauss_system,
    inverse_branches,
    lex_compare,
    periodic_orbits,
    tau_push,
)
from .potentials import (
    GAUSS_LOG,
    LINEAR,
    QUAD_CONVEX,
    QUAD_DIRAC,
    QUAD_PERIOD2,
    PotentialSpec,
    gauss_log_potential,
    polynomial_potential,
)
from .thermo import EigenPair, GridFunction, eigen_measure, eigenpair, gamma_estimate, ruelle_apply, v_beta
from .ergopt import (
    CriticalValue,
    SubactionResult,
    calibrated_subaction,
    critical_value,
    deviation_I,
    lax_oleinik_step,
)
from .involution import (
    KernelSpec,
    TwistMethod,
    TwistReport,
    cocycle_delta,
    cohomology_residual,
    dual_potential,
    example5_kernel,
    example6_kernel,
    fundamental_kernel,
    gauss_log_kernel,
    quadratic_kernel,
    twist_check,
    twist_stability_probe,
)
from .transport import (
    AtomicMeasure,
    CostSpec,
    DualPair,
    RochetMode,
    TransportPlan,
    b_function,
    conjugate_transform,
    cyclical_monotonicity_check,
    duality_certificate,
    gamma_from_support,
    graph_check,
    maximizing_extension_measure,
    natural_extension_measure,
    rochet_potential,
    solve_kantorovich,
    twist_order_check,
)
from .presets import PRESETS, Preset, get_preset

__version__ = "0.1.0"
