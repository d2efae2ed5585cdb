"""Dynamic sparse topology training for parameterized quantum circuits."""

from .circuits import (
    Circuit,
    Gate,
    MeasurementSpec,
    build_encoder,
    build_template,
    circuit_stats,
    export_text,
    forward,
    forward_batch,
    with_encoder,
    with_measurement,
)
from .data import Dataset, load_dataset, synth_dataset, train_valid_split
from .gradients import GradientVector, finite_diff_grad, loss_and_grad_batch, param_shift_grad
from .hamiltonian import Hamiltonian, exact_ground_energy, load_hamiltonian, parse_hamiltonian, vqe_energy
from .losses import energy_loss, qml_loss, softmax
from .noise import NoiseModel, apply_readout_error, load_noise_model, noisy_forward, sample_error_insertions, trivial_model
from .qstate import apply_gate, basis_probabilities, expectation_pauli_string, init_zero_state
from .sparsity import (
    ExplorationLog,
    GradAccumulator,
    SparsityMask,
    UpdateSchedule,
    accumulator_update,
    dense_mask,
    f_decay,
    implicit_capacity,
    init_mask,
    new_accumulator,
    new_log,
    prune_grow_update,
    structured_mask,
)
from .training import QMLTask, RunResult, TrainConfig, VQETask, build_circuit, train

__version__ = "0.1.0"
