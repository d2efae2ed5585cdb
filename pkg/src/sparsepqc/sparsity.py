"""Sparse topology engine: mask init, cosine-decayed prune/grow, exploration log.

The per-parameter mask partitions slots by block.  Every update prunes the
rho_b lowest-scoring active slots of each block and grows the rho_b
highest-scoring inactive ones, where

    rho_b = round(f_decay(t) * (1 - s_b) * N_b),
    f_decay(t) = gamma/2 * (1 + cos(t * pi / t_end)).

Growth scores blend a uniform random draw with the min-max normalized
historical-gradient accumulator, kappa * r + (1 - kappa) * m_hat, with kappa
decaying linearly from 1 to 0 over [0, t_end].  Grown slots restart at
parameter value 0.  Active counts are conserved exactly; ties always break
toward the lower slot id so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSparsityError, ScheduleError, ValidationError

PRUNE_CRITERIA = ("weight", "gradient", "salience", "random", "hist_gradient")
GROW_CRITERIA = ("hist_grad_random", "hist_grad", "random")


@dataclass
class SparsityMask:
    active: np.ndarray          # bool per parameter slot
    block_of: np.ndarray        # slot -> block id
    target_sparsity: np.ndarray  # s_b per block
    block_sizes: np.ndarray     # N_b per block

    @property
    def n_blocks(self) -> int:
        return len(self.block_sizes)

    def block_slots(self, b: int) -> np.ndarray:
        return np.flatnonzero(self.block_of == b)

    def active_count(self, b: int | None = None) -> int:
        if b is None:
            return int(self.active.sum())
        return int(self.active[self.block_of == b].sum())

    def global_sparsity(self) -> float:
        return 1.0 - self.active.sum() / len(self.active)


@dataclass
class GradAccumulator:
    m: np.ndarray
    seen: np.ndarray
    tau: float = 0.9


def new_accumulator(n_slots: int, tau: float = 0.9) -> GradAccumulator:
    if not 0 <= tau < 1:
        raise ValidationError(f"tau {tau} outside [0, 1)")
    return GradAccumulator(m=np.zeros(n_slots), seen=np.zeros(n_slots, dtype=bool), tau=tau)


@dataclass(frozen=True)
class UpdateSchedule:
    delta_t: int
    t_end: int
    gamma: float = 0.5

    def __post_init__(self):
        if not 0 < self.delta_t <= self.t_end:
            raise ValidationError(f"need 0 < delta_t <= t_end, got {self.delta_t}, {self.t_end}")
        if not 0 < self.gamma <= 1:
            raise ValidationError(f"gamma {self.gamma} outside (0, 1]")


@dataclass(frozen=True)
class UpdateEvent:
    iteration: int
    pruned: tuple[int, ...]
    grown: tuple[int, ...]
    rho_per_block: tuple[int, ...]
    kappa: float
    clamped_blocks: tuple[int, ...] = ()

    def as_record(self, capacity: float) -> dict:
        return {
            "iteration": self.iteration,
            "pruned": list(self.pruned),
            "grown": list(self.grown),
            "rho_per_block": list(self.rho_per_block),
            "kappa": self.kappa,
            "clamped_blocks": list(self.clamped_blocks),
            "implicit_capacity": capacity,
        }


@dataclass
class ExplorationLog:
    ever_active: np.ndarray
    update_events: list = field(default_factory=list)


def new_log(mask: SparsityMask) -> ExplorationLog:
    return ExplorationLog(ever_active=mask.active.copy())


def _round_half_away(x: float) -> int:
    return int(np.floor(x + 0.5))


def _as_rng(rng_seed) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def _per_block_sparsity(sparsity, n_blocks: int) -> np.ndarray:
    s = np.asarray(sparsity, dtype=float)
    if s.ndim == 0:
        s = np.full(n_blocks, float(s))
    if len(s) != n_blocks:
        raise ValidationError(f"expected {n_blocks} sparsity values, got {len(s)}")
    return s


def init_mask(circuit, sparsity, rng_seed) -> SparsityMask:
    """Random init honoring the control-gate guarantee.

    Multi-slot controlled gates (cu3) each keep at least one random active
    slot; the remaining per-block budget is drawn uniformly without
    replacement.  Sparsities must lie strictly inside (0, 1); use
    ``dense_mask`` for the dense baseline.
    """
    rng = _as_rng(rng_seed)
    block_of = circuit.block_of_slots()
    s = _per_block_sparsity(sparsity, circuit.n_blocks)
    if np.any(s <= 0) or np.any(s >= 1):
        raise ValidationError(f"sparsity must be in (0, 1), got {s}")

    control_gates = [
        g for g in circuit.trainable_gates if len(g.wires) == 2 and len(g.param_slots) > 1
    ]
    active = np.zeros(len(block_of), dtype=bool)
    sizes = np.zeros(circuit.n_blocks, dtype=int)
    for b in range(circuit.n_blocks):
        slots = np.flatnonzero(block_of == b)
        sizes[b] = len(slots)
        target = _round_half_away((1 - s[b]) * len(slots))
        block_controls = [g for g in control_gates if g.block_id == b]
        if target < len(block_controls):
            raise InfeasibleSparsityError(
                f"block {b}: sparsity {s[b]} keeps {target} slots but "
                f"{len(block_controls)} controlled gates each need one"
            )
        chosen: list[int] = []
        for g in block_controls:
            chosen.append(int(rng.choice(np.asarray(g.param_slots))))
        pool = np.setdiff1d(slots, chosen)
        extra = rng.choice(pool, size=target - len(chosen), replace=False)
        active[chosen] = True
        active[extra.astype(int)] = True
    return SparsityMask(active=active, block_of=block_of, target_sparsity=s, block_sizes=sizes)


def dense_mask(circuit) -> SparsityMask:
    block_of = circuit.block_of_slots()
    sizes = np.array([(block_of == b).sum() for b in range(circuit.n_blocks)])
    return SparsityMask(
        active=np.ones(len(block_of), dtype=bool),
        block_of=block_of,
        target_sparsity=np.zeros(circuit.n_blocks),
        block_sizes=sizes,
    )


def structured_mask(circuit, sparsity) -> SparsityMask:
    """Deterministic evenly-strided keep pattern, the hand-designed baseline."""
    block_of = circuit.block_of_slots()
    s = _per_block_sparsity(sparsity, circuit.n_blocks)
    if np.any(s <= 0) or np.any(s >= 1):
        raise ValidationError(f"sparsity must be in (0, 1), got {s}")
    active = np.zeros(len(block_of), dtype=bool)
    sizes = np.zeros(circuit.n_blocks, dtype=int)
    for b in range(circuit.n_blocks):
        slots = np.flatnonzero(block_of == b)
        sizes[b] = len(slots)
        keep = _round_half_away((1 - s[b]) * len(slots))
        idx = (np.arange(keep) * len(slots)) // max(keep, 1)
        active[slots[idx]] = True
    return SparsityMask(active=active, block_of=block_of, target_sparsity=s, block_sizes=sizes)


def f_decay(t: int, schedule: UpdateSchedule) -> float:
    """Cosine-annealed changeable fraction: gamma/2 * (1 + cos(t*pi/t_end))."""
    if t < 0 or t > schedule.t_end:
        raise ScheduleError(f"t={t} outside [0, {schedule.t_end}]")
    return schedule.gamma / 2 * (1 + np.cos(t * np.pi / schedule.t_end))


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi - lo <= 0:
        return np.full(len(values), 0.5)
    return (values - lo) / (hi - lo)


def prune_grow_update(
    mask: SparsityMask,
    params: np.ndarray,
    grads,
    acc: GradAccumulator,
    t: int,
    schedule: UpdateSchedule,
    prune_criterion: str,
    grow_criterion: str,
    rng_seed,
    log: ExplorationLog,
):
    """In-place topology update; returns (mask, params, log) with the event logged."""
    if prune_criterion not in PRUNE_CRITERIA:
        raise ValidationError(f"unknown prune criterion {prune_criterion!r}")
    if grow_criterion not in GROW_CRITERIA:
        raise ValidationError(f"unknown grow criterion {grow_criterion!r}")
    if t % schedule.delta_t != 0 or not 0 < t < schedule.t_end:
        raise ScheduleError(
            f"update at t={t} violates (t mod {schedule.delta_t} == 0) and 0 < t < {schedule.t_end}"
        )
    rng = _as_rng(rng_seed)
    fraction = f_decay(t, schedule)
    kappa = 1.0 - t / schedule.t_end
    grad_values = grads.values if hasattr(grads, "values") else np.asarray(grads)

    all_pruned: list[int] = []
    all_grown: list[int] = []
    rho_per_block: list[int] = []
    clamped: list[int] = []
    for b in range(mask.n_blocks):
        slots = mask.block_slots(b)
        act = slots[mask.active[slots]]
        inact = slots[~mask.active[slots]]
        rho = _round_half_away(fraction * (1 - mask.target_sparsity[b]) * mask.block_sizes[b])
        bound = min(len(act), len(inact))
        if rho > bound:
            rho = bound
            clamped.append(b)
        rho_per_block.append(rho)
        if rho == 0:
            continue

        if prune_criterion == "weight":
            prune_scores = np.abs(params[act])
        elif prune_criterion == "gradient":
            prune_scores = np.abs(grad_values[act])
        elif prune_criterion == "salience":
            prune_scores = np.abs(params[act] * grad_values[act])
        elif prune_criterion == "hist_gradient":
            prune_scores = acc.m[act]
        else:
            prune_scores = rng.random(len(act))
        pruned = act[np.argsort(prune_scores, kind="stable")[:rho]]

        if grow_criterion == "random":
            grow_scores = rng.random(len(inact))
        elif grow_criterion == "hist_grad":
            grow_scores = _minmax(acc.m[inact])
        else:
            r = rng.random(len(inact))
            grow_scores = kappa * r + (1 - kappa) * _minmax(acc.m[inact])
        grown = inact[np.argsort(-grow_scores, kind="stable")[:rho]]

        mask.active[pruned] = False
        mask.active[grown] = True
        params[grown] = 0.0
        all_pruned.extend(int(i) for i in pruned)
        all_grown.extend(int(i) for i in grown)

    log.ever_active |= mask.active
    log.update_events.append(
        UpdateEvent(
            iteration=t,
            pruned=tuple(all_pruned),
            grown=tuple(all_grown),
            rho_per_block=tuple(rho_per_block),
            kappa=kappa,
            clamped_blocks=tuple(clamped),
        )
    )
    return mask, params, log


def accumulator_update(acc: GradAccumulator, grads) -> GradAccumulator:
    """m <- tau*m + (1-tau)*|g| on the slots active at evaluation time."""
    idx = grads.active
    acc.m[idx] = acc.tau * acc.m[idx] + (1 - acc.tau) * np.abs(grads.values[idx])
    acc.seen[idx] = True
    return acc


def implicit_capacity(log: ExplorationLog, mask: SparsityMask) -> float:
    """(# slots ever active) / (# slots currently active) - 1."""
    active = mask.active.sum()
    if active == 0:
        raise ValidationError("implicit capacity undefined for an empty mask")
    return float(log.ever_active.sum() / active - 1.0)
