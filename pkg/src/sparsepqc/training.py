"""Task definitions and the training loop that drives the sparse exploration.

One run: initialize a (possibly sparse) mask, then per iteration either take
a parameter-shift gradient step or, every delta_t iterations while t < t_end,
swap topology via prune/grow.  No weight step happens on an update iteration,
and no topology changes happen once t reaches t_end (the exploration window
is the front ``exploration_fraction`` of training).  Everything is driven by
one integer seed: parameter init, mask init, batch order, topology
randomness, and per-iteration noise sub-seeds all derive from it, so a run is
bit-reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import circuits, sparsity
from .data import Dataset, train_valid_split
from .errors import ConfigError, ValidationError
from .gradients import GradientVector, _loss_and_grad_batch_impl
from .hamiltonian import Hamiltonian
from .losses import accuracy, energy_loss, qml_loss
from .noise import NoiseModel, noisy_forward_batch

QML_QUBITS = 4


@dataclass(frozen=True)
class QMLTask:
    dataset: Dataset
    name: str = "qml"


@dataclass(frozen=True)
class VQETask:
    hamiltonian: Hamiltonian
    name: str = "vqe"


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "noisefree"            # noisefree | noisy
    optimizer: str = "sgd_cosine"      # sgd_cosine | adam_warmup
    lr_start: float = 0.3
    lr_end: float = 0.03
    warmup_iterations: int = 0         # adam_warmup ramp length
    total_iterations: int = 250
    delta_t: int = 25
    exploration_fraction: float = 0.7
    gamma: float = 0.5
    batch_size: int = 32
    seed: int = 0
    sparsity: object = 0.5             # float in (0,1), or "dense"
    topology: str = "dynamic"          # dynamic | static | prune_at_end
    mask_init: str = "random"          # random | structured
    prune_criterion: str = "salience"
    grow_criterion: str = "hist_grad_random"
    tau: float = 0.9
    weight_decay: float = 0.0
    noise_model: Optional[NoiseModel] = None
    n_blocks: int = 8
    cu3_rule: str = "four_term"

    def __post_init__(self):
        if self.mode not in ("noisefree", "noisy"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "noisy" and self.noise_model is None:
            raise ConfigError("noisy mode requires a noise model")
        if self.optimizer not in ("sgd_cosine", "adam_warmup"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if not 0 < self.exploration_fraction <= 1:
            raise ConfigError("exploration_fraction must lie in (0, 1]")
        if self.topology not in ("dynamic", "static", "prune_at_end"):
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.total_iterations < 1:
            raise ConfigError("total_iterations must be >= 1")
        if self.sparsity != "dense" and not 0 < float(self.sparsity) < 1:
            raise ConfigError(f"sparsity must be 'dense' or in (0, 1), got {self.sparsity}")

    @property
    def t_end(self) -> int:
        return int(np.floor(self.exploration_fraction * self.total_iterations))

    @property
    def is_dense(self) -> bool:
        return self.sparsity == "dense"


@dataclass
class RunResult:
    params: np.ndarray
    mask: sparsity.SparsityMask
    log: sparsity.ExplorationLog
    records: list
    implicit_capacity: float
    wall_time: float
    final: dict
    metadata: dict


def build_circuit(task, circuit_kind: str, n_blocks: int) -> circuits.Circuit:
    """Template + task-appropriate encoder and measurement head."""
    if isinstance(task, VQETask):
        circuit = circuits.build_template(circuit_kind, task.hamiltonian.n_qubits, n_blocks)
        spec = circuits.MeasurementSpec(mode="pauli_hamiltonian", hamiltonian=task.hamiltonian)
        return circuits.with_measurement(circuit, spec)

    dataset = task.dataset
    if dataset.n_classes > QML_QUBITS:
        raise ConfigError(f"{dataset.n_classes} classes exceed {QML_QUBITS} readout qubits")
    circuit = circuits.build_template(circuit_kind, QML_QUBITS, n_blocks)
    encoder_task = {16: "image16", 10: "vowel10"}.get(dataset.features.shape[1])
    if encoder_task is None:
        raise ConfigError(f"no encoder for {dataset.features.shape[1]} features")
    circuit = circuits.with_encoder(circuit, circuits.build_encoder(encoder_task, QML_QUBITS))
    if dataset.n_classes == 2:
        spec = circuits.MeasurementSpec(mode="paired_sum_softmax", class_groups=((0, 1), (2, 3)))
    else:
        spec = circuits.MeasurementSpec(mode="per_qubit_z_softmax")
    return circuits.with_measurement(circuit, spec)


def _lr_at(config: TrainConfig, t: int) -> float:
    total = config.total_iterations
    if config.optimizer == "adam_warmup" and config.warmup_iterations > 0:
        if t <= config.warmup_iterations:
            return config.lr_start * t / config.warmup_iterations
        span = max(total - config.warmup_iterations, 1)
        frac = (t - config.warmup_iterations) / span
        return config.lr_end + (config.lr_start - config.lr_end) / 2 * (1 + np.cos(np.pi * frac))
    return config.lr_end + (config.lr_start - config.lr_end) / 2 * (1 + np.cos(np.pi * t / total))


class _Sgd:
    def step(self, params, grads: GradientVector, lr: float) -> None:
        params -= lr * grads.values

    def on_grown(self, slots) -> None:
        pass


class _Adam:
    def __init__(self, n_slots: int, weight_decay: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(n_slots)
        self.v = np.zeros(n_slots)
        self.k = 0
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def step(self, params, grads: GradientVector, lr: float) -> None:
        g = grads.values + self.weight_decay * params * grads.active
        self.k += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g**2
        m_hat = self.m / (1 - self.beta1**self.k)
        v_hat = self.v / (1 - self.beta2**self.k)
        params -= grads.active * lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def on_grown(self, slots) -> None:
        # grown slots restart from zero, moments included
        self.m[list(slots)] = 0.0
        self.v[list(slots)] = 0.0


def _magnitude_prune(mask: sparsity.SparsityMask, params: np.ndarray, target_sparsity: float):
    """One-shot per-block magnitude pruning, the prune-at-end baseline."""
    for b in range(mask.n_blocks):
        slots = mask.block_slots(b)
        keep = int(np.floor((1 - target_sparsity) * len(slots) + 0.5))
        order = np.argsort(-np.abs(params[slots]), kind="stable")
        mask.active[slots] = False
        mask.active[slots[order[:keep]]] = True
    mask.target_sparsity = np.full(mask.n_blocks, target_sparsity)


def _init_mask(config: TrainConfig, circuit, rng) -> sparsity.SparsityMask:
    if config.is_dense or config.topology == "prune_at_end":
        return sparsity.dense_mask(circuit)
    if config.mask_init == "structured":
        return sparsity.structured_mask(circuit, float(config.sparsity))
    return sparsity.init_mask(circuit, float(config.sparsity), rng)


def _loss_head(task, circuit):
    if isinstance(task, VQETask):
        return energy_loss(task.hamiltonian.coefficients)
    return qml_loss


def evaluate_dataset(circuit, params, mask, dataset: Dataset, model: NoiseModel | None = None):
    """(accuracy, mean loss) over a dataset, noiseless unless a model is given."""
    if model is None:
        scores = circuits.forward_batch(circuit, dataset.features, mask, params)
    else:
        scores = noisy_forward_batch(circuit, dataset.features, mask, params, model)
    losses = [qml_loss(row, int(y))[0] for row, y in zip(scores, dataset.labels)]
    return accuracy(scores, dataset.labels), float(np.mean(losses))


def evaluate_energy(circuit, params, mask, model: NoiseModel | None = None) -> float:
    ham = circuit.measurement.hamiltonian
    if model is None:
        outputs = circuits.forward(circuit, None, mask, params)
    else:
        from .noise import noisy_forward

        outputs = noisy_forward(circuit, None, mask, params, model)
    return float(ham.coefficients @ outputs)


def train(
    config: TrainConfig,
    task,
    circuit_kind: str,
    out_sink: Optional[Callable[[dict], None]] = None,
    inspect_hook: Optional[Callable] = None,
) -> RunResult:
    """Run the full loop; returns final parameters, mask, and metric series.

    out_sink receives each per-iteration metrics record as it is produced;
    inspect_hook(t, mask, params, event) fires right after a topology update.
    """
    start = time.perf_counter()
    circuit = build_circuit(task, circuit_kind, config.n_blocks)

    ss = np.random.SeedSequence(config.seed)
    init_ss, batch_ss, update_ss = ss.spawn(3)
    init_rng = np.random.default_rng(init_ss)
    batch_rng = np.random.default_rng(batch_ss)
    update_rng = np.random.default_rng(update_ss)

    params = init_rng.uniform(-np.pi, np.pi, circuit.n_params)
    mask = _init_mask(config, circuit, init_rng)
    acc = sparsity.new_accumulator(circuit.n_params, config.tau)
    log = sparsity.new_log(mask)
    grads = GradientVector(values=np.zeros(circuit.n_params), active=mask.active.copy())

    is_qml = isinstance(task, QMLTask)
    if is_qml:
        train_set, valid_set = train_valid_split(task.dataset, config.seed)
        if len(train_set) == 0:
            raise ValidationError("training split is empty")
    loss = _loss_head(task, circuit)
    model = config.noise_model if config.mode == "noisy" else None

    dynamic = config.topology == "dynamic" and not config.is_dense
    schedule = None
    if dynamic and config.delta_t <= config.t_end:
        schedule = sparsity.UpdateSchedule(config.delta_t, config.t_end, config.gamma)

    opt = (
        _Adam(circuit.n_params, config.weight_decay)
        if config.optimizer == "adam_warmup"
        else _Sgd()
    )

    records: list[dict] = []
    clamp_events = 0

    def emit(record: dict) -> None:
        records.append(record)
        if out_sink is not None:
            out_sink(record)

    for t in range(1, config.total_iterations + 1):
        lr = _lr_at(config, t)
        kappa = max(0.0, 1.0 - t / config.t_end) if config.t_end > 0 else 0.0
        is_update = schedule is not None and t % config.delta_t == 0 and t < config.t_end

        if is_update:
            sparsity.prune_grow_update(
                mask, params, grads, acc, t, schedule,
                config.prune_criterion, config.grow_criterion, update_rng, log,
            )
            event = log.update_events[-1]
            opt.on_grown(event.grown)
            if event.clamped_blocks:
                clamp_events += 1
            if inspect_hook is not None:
                inspect_hook(t, mask, params, event)
            emit(_record(t, "update", None, None, mask, log, lr, kappa))
            continue

        if config.topology == "prune_at_end" and not config.is_dense and t == config.t_end:
            _magnitude_prune(mask, params, float(config.sparsity))
            emit(_record(t, "update", None, None, mask, log, lr, kappa))
            continue

        if is_qml:
            n_train = len(train_set)
            idx = batch_rng.choice(n_train, size=config.batch_size, replace=config.batch_size > n_train)
            batch = [(train_set.features[i], int(train_set.labels[i])) for i in idx]
        else:
            batch = [(None, None)]
        model_t = model.reseeded(model.seed + t) if model is not None else None
        loss_val, grads, outputs = _loss_and_grad_batch_impl(
            circuit,
            None if not is_qml else np.asarray([b[0] for b in batch]),
            batch, params, mask, loss, model_t, config.cu3_rule,
        )
        opt.step(params, grads, lr)
        sparsity.accumulator_update(acc, grads)
        batch_acc = accuracy(outputs, np.array([b[1] for b in batch])) if is_qml else None
        emit(_record(t, "step", loss_val, batch_acc, mask, log, lr, kappa))

    # Final noiseless metric (plus the noisy one when a model is configured).
    final: dict = {}
    if is_qml:
        eval_set = valid_set if len(valid_set) > 0 else train_set
        final["kind"] = "accuracy"
        final["noiseless"], final["noiseless_loss"] = evaluate_dataset(circuit, params, mask, eval_set)
        train_acc, _ = evaluate_dataset(circuit, params, mask, train_set)
        final["train_accuracy"] = train_acc
        if model is not None:
            final["noisy"], _ = evaluate_dataset(circuit, params, mask, eval_set, model)
    else:
        final["kind"] = "energy"
        final["noiseless"] = evaluate_energy(circuit, params, mask)
        if model is not None:
            final["noisy"] = evaluate_energy(circuit, params, mask, model)
    final["metric"] = final.get("noisy", final["noiseless"])

    return RunResult(
        params=params,
        mask=mask,
        log=log,
        records=records,
        implicit_capacity=sparsity.implicit_capacity(log, mask),
        wall_time=time.perf_counter() - start,
        final=final,
        metadata={"cu3_rule": config.cu3_rule, "clamped_updates": clamp_events},
    )


def _record(t, kind, loss_val, batch_acc, mask, log, lr, kappa) -> dict:
    return {
        "iteration": t,
        "kind": kind,
        "loss": loss_val,
        "accuracy": batch_acc,
        "active": int(mask.active.sum()),
        "capacity": float(log.ever_active.sum() / max(mask.active.sum(), 1) - 1.0),
        "lr": float(lr),
        "kappa": float(kappa),
    }
