"""Lower bounds and feasible paths for shortest-path problems in graphs of convex sets."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .conic import ADMMBackend, ClarabelBackend, ConicProgram, ConicSolution, ProgramBuilder, solve_conic
from .core import (
    ConvexSet,
    CutState,
    GcsError,
    GcsGraph,
    HeuristicTable,
    InputError,
    InvariantError,
    NoPathError,
    SolverFailure,
    neighborhood,
    perspective_membership,
    reverse,
    set_distance,
)
from .heuristics import blend, classic_astar, h1_table, h2_expand_freeze, reseat_origin, sinit_from_astar
from .instances import gen_bars, gen_maze, gen_random, gen_village, load_instance, save_instance
from .oracle import check_admissible, exact_opt
from .relaxation import FeasibleSolution, RelaxedSolution, solve_fixed_path, solve_sppstar
from .search import (
    IterationRecord,
    RunResult,
    SearchOptions,
    optimality_gap,
    run_astar_gcs,
    run_baseline,
    two_step_feasible,
)
