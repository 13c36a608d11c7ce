"""Bipotentials from convex lagrangian covers, on sampled one-dimensional dual spaces.

The recipe ``b(x, y) = inf_lambda phi_lambda(x) + phi*_lambda(y)`` is built on
uniform grids, and the conditions under which it yields a bipotential (Fenchel
inequality, convexity in each argument, the subdifferential equivalences,
BB-graphs, implicit and Fan convexity, the minimax equality) are checked
numerically.
"""

from ._backend import BACKEND
from .conjugate import (
    SlopeInterval,
    biconjugate,
    conjugate,
    fenchel_gap,
    in_subdifferential,
    is_convex,
    subdifferential,
)
from .covers import (
    Cover,
    ParamSet,
    builtin_cover,
    continuity_jumps,
    cover_union_graph,
    load_tabulated_cover,
    write_tabulated_cover,
)
from .errors import BipoError, ConfigError, ConvexityError, EmptyDomainError
from .extgrid import INF, Grid1D, SampledFn, make_grid, pairing, sample
from .fancheck import (
    FanInstance,
    MinimaxReport,
    WitnessReport,
    check_bic,
    check_fan_bic,
    check_fan_convex,
    check_implicit_convex,
    minimax_verify,
)
from .graphs import OperatorGraph, bb_check, graph_of_potential, graphs_equal, sections
from .synth import (
    AxiomReport,
    BipotentialTable,
    check_cover_graph_identity,
    extract_graph,
    synth_table,
    synth_value,
    verify_axioms,
)

__version__ = "0.1.0"
