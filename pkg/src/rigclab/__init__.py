"""rigclab: random intersection graphs with communities, theory vs simulation.

Exact construction of the bipartite matching and its community projection,
closed-form giant-component and percolation predictions through
generating-function fixed points, and the Monte Carlo machinery (including a
continuous-time exploration of the matching) that checks the two against each
other at desk scale.
"""

from . import errors
from .community import (
    CommunityCatalog,
    CommunityGraph,
    PercolationProfile,
    canonical_form,
    canonical_key,
    complete_graph,
    cycle_graph,
    path_graph,
    percolate_enumerate,
    percolate_sample,
    split_components,
)
from .components import (
    BcmGiantStats,
    GiantStats,
    bcm_components,
    giant_stats_bcm,
    giant_stats_rigc,
    rigc_components,
)
from .explore import (
    ComponentRecord,
    Trajectory,
    coupled_standard_hitting,
    giant_exploration_window,
    hitting_times,
    horizon,
    run_exploration,
    standard_death_process,
    trajectory_sup_error,
    zr_process,
)
from .model import (
    BcmGraph,
    ModelParams,
    RigcGraph,
    build_params,
    contract_to_cm,
    empirical_catalog,
    empirical_l_pmf,
    generate_bcm,
    project_rigc,
    sample_params,
)
from .percolation import (
    PercolatedCatalog,
    build_com_pi,
    critical_pi,
    critical_pi_bracket,
    harris_sweep,
    mu_pi_limit,
    percolate_rigc_graph,
    percolated_prediction,
    sizebiased_comsize_check,
)
from .pmf import Pmf, convolve_power, convolve_weights
from .theory import (
    BcmPrediction,
    GiantPrediction,
    TheoryInputs,
    active_halfedge_curve,
    bcm_predictions,
    bp_survival_sim,
    curve_table,
    edges_in_giant_from_joint,
    edges_in_giant_rigc,
    giant_prediction,
    hitting_time_curve,
    joint_degree_in_giant,
    joint_degree_in_giant_table,
    living_halfedge_curve,
    sleeping_halfedge_curve,
    solve_eta_l,
)

__version__ = "0.1.0"
