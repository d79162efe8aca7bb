"""Sequential exposure process: transitions, rewards, health accounting.

Each trajectory walks a private view of the claim pool: the agent
judges the current claim, collects a signed confidence reward, and the
sampler picks the next claim. Supporting content steers the stream
toward similar unseen claims (top-k softmax over window similarity);
supporting a refuted claim additionally restricts the next draw to
refuted claims; refuting anything resets the stream to a uniform draw
and clears the similarity window. Showing one variant of a claim
removes the whole claim group, so no claim repeats within a trajectory.

Trajectories are independent units of work: each gets an rng derived
only from (master_seed, index) and a fresh pool view, so results are
identical no matter how many workers run them.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .corpus import ClaimPool, ClaimVariant, Label
from .embeddings import EmbeddingStore, WindowAggregate
from .errors import (
    DomainError,
    EmptyWindow,
    PoolExhausted,
    SimError,
    UnknownVariant,
)
from .personas import Judgment, PersonaBackend, Policy


class SamplerBranch(enum.Enum):
    INITIAL = "INITIAL"
    SIMILAR = "SIMILAR"
    SIMILAR_REFUTED = "SIMILAR_REFUTED"
    UNIFORM_RESET = "UNIFORM_RESET"


@dataclass
class SimConfig:
    """All environment knobs for one batch of runs."""

    k: int = 5
    window_size: int = 3
    horizon: int = 100
    softmax_temperature: float = 1.0
    policy: Policy = Policy.GREEDY
    n_trajectories: int = 100
    master_seed: int = 0
    h0: float = 0.0
    window_aggregate: WindowAggregate = WindowAggregate.MEAN
    # Escalation knob: keep the refuted-only restriction active until the
    # agent next refutes something, instead of for a single transition.
    refuted_sticky: bool = False

    def validate(self) -> None:
        for name in ("k", "window_size", "horizon", "n_trajectories"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if not self.softmax_temperature > 0:
            raise DomainError(
                f"softmax_temperature must be > 0, got {self.softmax_temperature}"
            )
        if not isinstance(self.master_seed, int):
            raise DomainError(f"master_seed must be an integer, got {self.master_seed!r}")


@dataclass
class TrajectoryStep:
    t: int
    variant_id: str
    judgment: Judgment
    correct: bool
    reward: float
    health_after: float
    sampler_branch: SamplerBranch


@dataclass
class Trajectory:
    persona: str
    seed: int
    h0: float
    steps: list[TrajectoryStep] = field(default_factory=list)
    terminal_health: float = 0.0
    terminated_early: bool = False
    error: Optional[str] = None


def compute_reward(judgment: Judgment, true_label: Label) -> float:
    """Signed confidence: +confidence when correct, -confidence when not.

    No temporal discounting is ever applied.
    """
    if judgment.action is true_label:
        return judgment.confidence
    return -judgment.confidence


class _PoolView:
    """Arrays binding one pool snapshot to embedding-store rows.

    The view owns the alive/unseen bookkeeping for a single trajectory;
    the underlying pool and store are shared read-only.
    """

    def __init__(self, pool: ClaimPool, store: EmbeddingStore) -> None:
        self.store = store
        self.variants: list[ClaimVariant] = list(pool.variants())
        missing = [v.variant_id for v in self.variants if v.variant_id not in store]
        if missing:
            raise UnknownVariant(
                f"{len(missing)} pool variants missing from embedding store "
                f"(first: {missing[:3]})"
            )
        n = len(self.variants)
        self.rows = np.array(
            [store.row(v.variant_id) for v in self.variants], dtype=np.int64
        )
        self.refuted = np.array(
            [v.true_label is Label.REFUTES for v in self.variants], dtype=bool
        )
        self.alive = np.ones(n, dtype=bool)
        self.n_alive = n
        self._group_positions: dict[str, list[int]] = {}
        for position, variant in enumerate(self.variants):
            self._group_positions.setdefault(variant.group_id, []).append(position)

    def alive_positions(self, refuted_only: bool = False) -> np.ndarray:
        if refuted_only:
            return np.flatnonzero(self.alive & self.refuted)
        return np.flatnonzero(self.alive)

    def remove_group(self, group_id: str) -> None:
        for position in self._group_positions[group_id]:
            if self.alive[position]:
                self.alive[position] = False
                self.n_alive -= 1


@dataclass
class SamplerState:
    view: _PoolView
    window: list[str] = field(default_factory=list)
    refuted_only_next: bool = False

    def push_window(self, variant_id: str, window_size: int) -> None:
        self.window.append(variant_id)
        if len(self.window) > window_size:
            del self.window[0]


def softmax_pick(scores: np.ndarray, temperature: float, rng: np.random.Generator) -> int:
    """Sample an index with probability exp(score/T) / sum exp(score/T)."""
    z = scores / temperature
    z = z - z.max()
    weights = np.exp(z)
    cumulative = np.cumsum(weights)
    draw = rng.random() * cumulative[-1]
    index = int(np.searchsorted(cumulative, draw, side="right"))
    return min(index, len(scores) - 1)


def _take(state: SamplerState, position: int, config: SimConfig) -> ClaimVariant:
    variant = state.view.variants[position]
    state.view.remove_group(variant.group_id)
    state.push_window(variant.variant_id, config.window_size)
    return variant


def select_next_claim(
    state: SamplerState,
    last_action: Label,
    last_claim: ClaimVariant,
    store: EmbeddingStore,
    config: SimConfig,
    rng: np.random.Generator,
) -> tuple[ClaimVariant, SamplerBranch]:
    """Pick the next claim per the transition dynamics.

    Refuting resets to a uniform draw and clears the window; supporting
    samples from the top-k most window-similar unseen claims via a
    softmax over similarity scores, restricted to refuted claims right
    after a refuted claim was supported. An empty restricted set falls
    back to a uniform draw without clearing the window. The chosen
    claim's whole group leaves the pool, and its id enters the window.
    """
    view = state.view
    if view.n_alive == 0:
        raise PoolExhausted("no unseen variants remain")

    if last_action is Label.REFUTES:
        state.refuted_only_next = False
        state.window.clear()
        alive = view.alive_positions()
        position = int(alive[rng.integers(len(alive))])
        return _take(state, position, config), SamplerBranch.UNIFORM_RESET

    restrict = last_claim.true_label is Label.REFUTES or (
        config.refuted_sticky and state.refuted_only_next
    )
    # Single-step mode consumes the restriction here; sticky mode carries
    # it until the agent next refutes something.
    state.refuted_only_next = restrict and config.refuted_sticky
    branch = SamplerBranch.SIMILAR_REFUTED if restrict else SamplerBranch.SIMILAR
    candidates = view.alive_positions(refuted_only=restrict)
    if len(candidates) == 0:
        # Restricted set exhausted: uniform fallback, window preserved.
        alive = view.alive_positions()
        position = int(alive[rng.integers(len(alive))])
        return _take(state, position, config), SamplerBranch.UNIFORM_RESET

    if not state.window:
        raise EmptyWindow("similarity branch reached with an empty window")
    window_rows = store.rows(state.window)
    window_rows.sort()
    scores = kernels.window_scores(
        store.matrix,
        view.rows[candidates],
        window_rows,
        centroid=config.window_aggregate is WindowAggregate.CENTROID,
    )
    picked = kernels.top_k(scores, store.id_rank[view.rows[candidates]], config.k)
    choice = picked[softmax_pick(scores[picked], config.softmax_temperature, rng)]
    return _take(state, int(candidates[choice]), config), branch


def _trajectory_seed(master_seed: int, index: int) -> int:
    """Deterministic per-trajectory seed mixed from (master_seed, index)."""
    sequence = np.random.SeedSequence([master_seed & 0xFFFFFFFFFFFFFFFF, index])
    return int.from_bytes(sequence.generate_state(4, dtype=np.uint32).tobytes(), "little")


def run_trajectory(
    pool: ClaimPool,
    store: EmbeddingStore,
    persona: PersonaBackend,
    config: SimConfig,
    trajectory_seed: int,
) -> Trajectory:
    """Run one trajectory to the horizon or pool exhaustion.

    The first claim is drawn uniformly at random. All randomness comes
    from one rng derived from ``trajectory_seed``. Backend failures
    abort the trajectory with a diagnostic record instead of raising.
    """
    rng = np.random.default_rng(trajectory_seed)
    state = SamplerState(view=_PoolView(pool, store))
    trajectory = Trajectory(persona=persona.name, seed=trajectory_seed, h0=config.h0)

    if state.view.n_alive == 0:
        raise PoolExhausted("cannot start a trajectory on an empty pool")
    alive = state.view.alive_positions()
    claim = _take(state, int(alive[rng.integers(len(alive))]), config)
    branch = SamplerBranch.INITIAL

    health = config.h0
    for t in range(1, config.horizon + 1):
        try:
            judgment = persona.judge(claim, rng)
        except SimError as exc:
            trajectory.error = f"backend failure at step {t}: {exc}"
            trajectory.terminated_early = True
            break
        correct = judgment.action is claim.true_label
        reward = compute_reward(judgment, claim.true_label)
        health += reward
        trajectory.steps.append(
            TrajectoryStep(
                t=t,
                variant_id=claim.variant_id,
                judgment=judgment,
                correct=correct,
                reward=reward,
                health_after=health,
                sampler_branch=branch,
            )
        )
        if t == config.horizon:
            break

        try:
            claim, branch = select_next_claim(
                state, judgment.action, claim, store, config, rng
            )
        except PoolExhausted:
            trajectory.terminated_early = True
            break

    trajectory.terminal_health = health
    return trajectory


def _worker_count(n_tasks: int) -> int:
    env_cap = os.environ.get("FRAMEREF_SIM_THREADS", "").strip()
    if env_cap:
        try:
            cap = int(env_cap)
        except ValueError:
            raise DomainError(f"FRAMEREF_SIM_THREADS must be an integer: {env_cap!r}")
        if cap < 1:
            raise DomainError(f"FRAMEREF_SIM_THREADS must be >= 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def run_monte_carlo(
    pool: ClaimPool,
    store: EmbeddingStore,
    persona: PersonaBackend,
    config: SimConfig,
) -> list[Trajectory]:
    """Run ``n_trajectories`` independent trajectories, ordered by index.

    Trajectory i is seeded from (master_seed, i) and gets a fresh pool
    view, so output is identical regardless of worker count.
    """
    config.validate()
    seeds = [_trajectory_seed(config.master_seed, i) for i in range(config.n_trajectories)]
    workers = _worker_count(config.n_trajectories)
    if workers == 1:
        return [run_trajectory(pool, store, persona, config, seed) for seed in seeds]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(run_trajectory, pool, store, persona, config, seed)
            for seed in seeds
        ]
        return [f.result() for f in futures]
