"""Upper bounds and exact values for the fairness-accuracy Pareto frontier."""

from .cuts import CcpConfig, CutSearchResult, dc_objective, find_violated_cut
from .dist import (
    Dataset,
    GTable,
    JointModel,
    SchemaSpec,
    estimate_joint,
    impute_mode,
    inject_missing,
    load_dataset,
    posterior_g,
    quantize_dataset,
)
from .fairness import Thresholds, accuracy, max_eo_violation
from .frontier import FrontierConfig, FrontierPoint, SweepResult, approximate_frontier, sweep
from .lp import LinearProgram, LpSolution, solve_lp
from .master import Cut, CutPool, MasterResult, build_master, cut_rhs, cut_violation, solve_master
from .oracle import (
    OracleResult,
    bayes_accuracy,
    brute_force_deterministic,
    brute_force_randomized,
    exact_frontier,
)

__version__ = "0.1.0"
