"""Simulation and audit toolkit for the CHSH inequality.

Hidden-variable models generate potential-outcome tables, statistical tests
check the assumptions behind the local bound, and a reorder engine replays
the column-permutation argument that turns such a table into a single joint
distribution (which cannot exceed the bound).
"""

from .core import (
    COLUMNS, SETTINGS, AssumptionProfile, CorrelationSet, Observable, OutcomeTable,
    Setting, TrialRow, Wing, chsh_expression, chsh_statistic, correlation, mean_product,
)
from .errors import (
    ContractBreach, ForgeError, OIMismatchError, PIMismatchError, SettingLeakageError,
)
from .models import (
    CHSH_OPTIMAL_ANGLES, HVModel, MODEL_NAMES, SettingSource, build_model, build_source,
    make_conspiracy_source, make_deterministic_local, make_memory_local, make_pr_box,
    make_quantum_singlet, make_signaling_model, make_time_dependent_local, make_uniform_source,
)
from .pipeline import analyse_table, prove_table, run_pipeline
from .reorder import (
    JointTable, ReorderAudit, ReorderStep, derive_joint, match_oi, match_pair_pi,
    replay_proof, verify_chain,
)
from .stats import (
    TestReport, chsh_tolerance, conspiracy_test, hoeffding_tolerance, multiset_equality_test,
    oi_empirical_test, pi_empirical_test, reorder_tolerance,
)
from .tabulator import (
    RunConfig, filtered_correlations, full_table_correlations, read_table_csv, run_experiment,
    validate_lifecycle, write_table_csv,
)

__version__ = "0.1.0"
