"""Age-of-information simulation for multihop networks.

Simulates update packets flowing from a gateway through a directed network
under several scheduling disciplines, measures per-node age, and checks
per-path and distributional orderings between disciplines.
"""

from .distributions import (
    Constant,
    Distribution,
    Erlang,
    Exponential,
    Gamma,
    Geometric,
    Hyperexponential,
    ShiftedExponential,
    is_nbu,
    is_nwu,
    parse_distribution,
)
from .engine import IndependentStreams, IndexedDraws, PoissonEpochs, Trace, run_simulation
from .errors import AoIError
from .experiments import (
    ExperimentConfig,
    emit_results,
    load_config,
    preset_fig4,
    preset_fig5,
    run_dominance,
    run_sweep,
    save_config,
)
from .harness import (
    CouplingStream,
    check_sample_path_dominance,
    coupled_run,
    empirical_stochastic_order,
    factor3_ratio,
    infinite_server_lower_bound,
)
from .metrics import (
    AgeProcess,
    age_process,
    average_age_penalty,
    average_peak_age,
    completion_times,
    peak_ages,
    time_average_age,
)
from .model import (
    INF,
    ArrivalSpec,
    ConstantDelay,
    Link,
    NetworkGraph,
    Packets,
    Scenario,
    TwoPointDelay,
    build_graph,
    generate_arrivals,
)
from .multiserver import MultiServerScenario, in_order_arrivals, run_multiserver_nwu
from .policies import PolicyKind, PolicySpec, parse_policy

__version__ = "0.1.0"
