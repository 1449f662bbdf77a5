"""Genetic structure search with per-target parameter tuning for compiling
families of unitaries or states into one shared circuit."""

__version__ = "0.1.0"

from .sim import (  # noqa: F401
    DenseOperator,
    PauliSum,
    Statevector,
    apply_gate,
    eigh,
    expm_hermitian,
    haar_random_unitary,
    inner_product,
    partial_trace_B,
    pauli_expectation,
    trace_norm,
)
from .genome import CircuitGenome, Gene, bind_and_run, metrics, random_genome, scheduled_depth  # noqa: F401
from .cost import (  # noqa: F401
    ParameterTable,
    TargetSet,
    expected_risk,
    kernel,
    magnetization,
    multi_target_loss,
    purity,
    uhlmann_fidelity,
    vqe_energy,
    weighted_sum_fidelity,
)
from .opt import AdamState, Objective, adam_step, nelder_mead, parameter_shift_grad, vqa_optimize  # noqa: F401
from .ga import GAConfig, GAResult, crossover, evaluate_fitness, ga_vqa_search, mutate, select_elite, test_risk  # noqa: F401
from .targets import (  # noqa: F401
    DynamicsSpec,
    ThermalSpec,
    dense_purified_state,
    domain_wall_state,
    exact_propagator,
    gibbs_state,
    haar_target_set,
    load_pauli_hamiltonians,
    td_hamiltonian,
    tfd_state,
    tfim_hamiltonian,
    trotter_circuit,
)
from .pipelines import RunConfig, RunResult, run_benchmark, run_dynamics, run_thermal, run_vqe  # noqa: F401
