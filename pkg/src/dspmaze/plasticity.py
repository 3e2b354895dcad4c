"""Delayed synaptic plasticity: activation traces and episodic weight updates.

Each synapse carries a 4-counter trace of how often its (pre, post)
activation pair sat in state 00/01/10/11 during an episode. After the
episode the trace frequencies are thresholded to a 4-bit pattern which,
together with a +-1 reinforcement signal, indexes one of 32 discrete
weight-change entries. Updates are stabilized by rescaling every neuron's
full incoming weight vector to unit length.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .maze import GoalConfig, Maze, episodic_performance, run_episode
from .rnn import (
    DEFAULT_DIMS,
    RnnController,
    RnnDims,
    RnnHyper,
    RnnWeights,
    init_weights,
)

logger = logging.getLogger(__name__)

N_RULE_ENTRIES = 32

# Trace state index for a (pre, post) activation pair: 2*pre + post, i.e.
# 00 -> 0, 01 -> 1, 10 -> 2, 11 -> 3 (first bit pre-synaptic, second post).
_EYE4 = np.eye(4, dtype=np.int64)


def rule_index(pattern: tuple[int, int, int, int], m: int) -> int:
    """Row index of a (binary trace pattern, reinforcement) pair, 0..31.

    Patterns count in binary over the (00, 01, 10, 11) bits with the
    reinforcement sign as the least-significant slot (+1 -> 1).
    """
    b00, b01, b10, b11 = pattern
    return b00 * 16 + b01 * 8 + b10 * 4 + b11 * 2 + (1 if m > 0 else 0)


def binarize(freq: np.ndarray, theta: float) -> tuple[int, int, int, int]:
    """Threshold the four trace frequencies; strictly-above becomes 1."""
    f = np.asarray(freq)
    return tuple(int(v > theta) for v in f)  # type: ignore[return-value]


@dataclass(frozen=True)
class DspRule:
    """32 discrete weight-change entries plus the continuous parameters.

    ``delta`` is indexed by rule_index; entries are -1, 0 or +1. ``eta``
    scales the applied change, ``theta`` thresholds trace frequencies, and
    the alphas are the recurrent/feedback scalings of the controlled RNN.
    """

    delta: tuple[int, ...]
    eta: float
    theta: float
    alpha_h: float
    alpha_o: float
    rule_id: int = 0

    def __post_init__(self) -> None:
        if len(self.delta) != N_RULE_ENTRIES:
            raise ValueError(f"expected {N_RULE_ENTRIES} delta entries, got {len(self.delta)}")
        if any(d not in (-1, 0, 1) for d in self.delta):
            raise ValueError("delta entries must be -1, 0 or +1")
        for name in ("eta", "theta", "alpha_h", "alpha_o"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @property
    def hyper(self) -> RnnHyper:
        return RnnHyper(alpha_h=self.alpha_h, alpha_o=self.alpha_o)


def dsp_delta(rule: DspRule, freq: np.ndarray, m: int) -> int:
    """Weight change for one synapse from its finalized trace frequencies."""
    return rule.delta[rule_index(binarize(freq, rule.theta), m)]


class NatBlock:
    """Activation traces for one weight matrix.

    counts[i, j, s] is the number of recorded steps synapse (post i, pre j)
    spent in state s. ``freq`` is counts/steps after finalization.
    """

    def __init__(self, n_post: int, n_pre: int) -> None:
        self.counts = np.zeros((n_post, n_pre, 4), dtype=np.int64)
        self.freq: np.ndarray | None = None

    def record(self, pre: np.ndarray, post: np.ndarray) -> None:
        state = 2 * np.asarray(pre, dtype=np.int64)[None, :] + np.asarray(
            post, dtype=np.int64
        )[:, None]
        self.counts += _EYE4[state]

    def record_batch(self, pre_steps: np.ndarray, post_steps: np.ndarray) -> None:
        """Accumulate a whole (steps x units) activation history at once."""
        steps = pre_steps.shape[0]
        c11 = (post_steps.T @ pre_steps).astype(np.int64)
        pre_tot = pre_steps.sum(axis=0).astype(np.int64)
        post_tot = post_steps.sum(axis=0).astype(np.int64)
        self.counts[..., 3] += c11
        self.counts[..., 2] += pre_tot[None, :] - c11
        self.counts[..., 1] += post_tot[:, None] - c11
        self.counts[..., 0] += steps - (pre_tot[None, :] + post_tot[:, None] - c11)

    def finalize(self, steps: int) -> None:
        self.freq = self.counts / steps


class NatStore:
    """One trace per synapse, aligned with the four RNN weight matrices."""

    def __init__(self, dims: RnnDims = DEFAULT_DIMS) -> None:
        self.dims = dims
        self.hi = NatBlock(dims.n_hidden, dims.n_in + 1)
        self.h = NatBlock(dims.n_hidden, dims.n_hidden)
        self.ho = NatBlock(dims.n_hidden, dims.n_out)
        self.oh = NatBlock(dims.n_out, dims.n_hidden + 1)
        self.steps = 0
        self.finalized = False

    @property
    def blocks(self) -> tuple[NatBlock, NatBlock, NatBlock, NatBlock]:
        return (self.hi, self.h, self.ho, self.oh)

    def record_step(
        self,
        reading: np.ndarray,
        h_prev: np.ndarray,
        o_prev: np.ndarray,
        h_new: np.ndarray,
        o_new: np.ndarray,
    ) -> None:
        """Record the exact activation pairs one forward step consumed.

        Feed-forward synapses pair same-step activations; recurrent and
        feedback synapses pair the previous pre-synaptic state with the new
        post-synaptic one. Bias units are constant-1 pre-synaptic neurons.
        """
        x = np.concatenate(([1.0], np.asarray(reading, dtype=float)))
        self.hi.record(x, h_new)
        self.h.record(h_prev, h_new)
        self.ho.record(o_prev, h_new)
        self.oh.record(np.concatenate(([1.0], h_new)), o_new)
        self.steps += 1

    @classmethod
    def from_episode(
        cls,
        dims: RnnDims,
        inputs: np.ndarray,
        hidden: np.ndarray,
        outputs: np.ndarray,
    ) -> "NatStore":
        """Build a store from a full episode history in one pass.

        ``inputs`` is (steps, n_in); ``hidden``/``outputs`` are the post-step
        activations, (steps, n_hidden) and (steps, n_out). The zero state
        before the first step supplies the initial pre-synaptic activations.
        """
        inputs = np.asarray(inputs, dtype=float)
        hidden = np.asarray(hidden, dtype=float)
        outputs = np.asarray(outputs, dtype=float)
        steps = inputs.shape[0]
        ones = np.ones((steps, 1))
        h_prev = np.vstack([np.zeros((1, dims.n_hidden)), hidden[:-1]])
        o_prev = np.vstack([np.zeros((1, dims.n_out)), outputs[:-1]])

        store = cls(dims)
        store.hi.record_batch(np.hstack([ones, inputs]), hidden)
        store.h.record_batch(h_prev, hidden)
        store.ho.record_batch(o_prev, hidden)
        store.oh.record_batch(np.hstack([ones, hidden]), outputs)
        store.steps = steps
        return store

    def finalize(self, steps: int) -> None:
        """Convert counts to frequencies; counts stay intact for audit."""
        if steps < 1:
            raise ValueError(f"steps must be >= 1, got {steps}")
        if steps != self.steps:
            raise ValueError(f"finalize called with steps={steps}, recorded {self.steps}")
        for block in self.blocks:
            block.finalize(steps)
        self.finalized = True


def modulatory_signal(ep_now: float, ep_prev: float) -> int:
    """+1 (reward) when performance did not get worse, else -1 (punishment)."""
    return 1 if ep_now <= ep_prev else -1


def normalize_incoming(weights: RnnWeights) -> int:
    """Rescale each neuron's full incoming weight vector to unit length.

    A hidden neuron's incoming vector spans its w_hi, w_h and w_ho rows
    (bias included); an output neuron's spans its w_oh row. Neurons whose
    incoming vector is exactly zero are left untouched; returns how many
    were skipped. Mutates the arrays in place.
    """
    hidden_in = np.concatenate([weights.w_hi, weights.w_h, weights.w_ho], axis=1)
    h_norms = np.linalg.norm(hidden_in, axis=1)
    o_norms = np.linalg.norm(weights.w_oh, axis=1)
    skipped = int((h_norms == 0.0).sum() + (o_norms == 0.0).sum())
    h_scale = np.where(h_norms == 0.0, 1.0, h_norms)[:, None]
    o_scale = np.where(o_norms == 0.0, 1.0, o_norms)[:, None]
    weights.w_hi /= h_scale
    weights.w_h /= h_scale
    weights.w_ho /= h_scale
    weights.w_oh /= o_scale
    return skipped


def apply_update(
    weights: RnnWeights, store: NatStore, rule: DspRule, m: int
) -> RnnWeights:
    """Per-synapse discrete update scaled by eta, then incoming-norm rescale.

    Returns fresh weight arrays; the inputs are not modified. The w_h
    diagonal is pinned at zero.
    """
    if not store.finalized:
        raise ValueError("trace store must be finalized before applying an update")
    delta_table = np.asarray(rule.delta, dtype=np.int64)
    m_bit = 1 if m > 0 else 0

    def block_delta(block: NatBlock) -> np.ndarray:
        bits = block.freq > rule.theta
        idx = (
            bits[..., 0] * 16 + bits[..., 1] * 8 + bits[..., 2] * 4 + bits[..., 3] * 2
            + m_bit
        )
        return delta_table[idx]

    new = RnnWeights(
        w_hi=weights.w_hi + rule.eta * block_delta(store.hi),
        w_h=weights.w_h + rule.eta * block_delta(store.h),
        w_oh=weights.w_oh + rule.eta * block_delta(store.oh),
        w_ho=weights.w_ho + rule.eta * block_delta(store.ho),
    )
    np.fill_diagonal(new.w_h, 0.0)
    skipped = normalize_incoming(new)
    if skipped:
        logger.debug("normalization skipped for %d zero-norm neuron(s)", skipped)
    return new


@dataclass
class TrialResult:
    """Per-episode performance of one learning run for one goal."""

    ep_series: np.ndarray          # (episodes,) int
    best_ep: int
    reached: np.ndarray            # (episodes,) bool, goal reached that episode
    final_vector: np.ndarray | None = None   # hill-climb incumbent, if any

    @property
    def best_series(self) -> np.ndarray:
        return np.minimum.accumulate(self.ep_series)

    @property
    def ever_reached(self) -> bool:
        return bool(self.reached.any())


def fresh_weights(rng: np.random.Generator, dims: RnnDims = DEFAULT_DIMS) -> RnnWeights:
    """Uniform [-1, 1] draw followed by one incoming-norm rescale."""
    w = init_weights(rng, dims)
    normalize_incoming(w)
    return w


def dsp_trial(
    maze: Maze,
    goal: GoalConfig,
    rule: DspRule,
    episodes: int,
    resample_every: int | None = None,
    rng: np.random.Generator | None = None,
    dims: RnnDims = DEFAULT_DIMS,
    max_steps: int | None = None,
) -> TrialResult:
    """One learning run: a fresh random RNN trained by a plasticity rule.

    Each episode runs with fixed weights while traces accumulate; the
    update fires between episodes, driven by the sign of the performance
    change. With ``resample_every`` set, all weights are re-drawn every
    that many episodes while the best performance seen is retained.
    """
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    rng = rng if rng is not None else np.random.default_rng()
    weights = fresh_weights(rng, dims)
    hyper = rule.hyper
    kwargs = {} if max_steps is None else {"max_steps": max_steps}

    ep_series = np.zeros(episodes, dtype=np.int64)
    reached = np.zeros(episodes, dtype=bool)
    ep_prev = math.inf
    best = math.inf
    for e in range(1, episodes + 1):
        if resample_every and e > 1 and (e - 1) % resample_every == 0:
            weights = fresh_weights(rng, dims)
        ctrl = RnnController(weights, hyper, dims, record=True)
        trace = run_episode(maze, goal, ctrl, **kwargs)
        ep = episodic_performance(trace, maze, goal)
        m = modulatory_signal(ep, ep_prev)
        store = NatStore.from_episode(
            dims, np.asarray(ctrl.inputs, dtype=float), ctrl.hidden, ctrl.outputs
        )
        store.finalize(trace.steps_taken)
        weights = apply_update(weights, store, rule, m)
        ep_prev = ep
        best = min(best, ep)
        ep_series[e - 1] = ep
        reached[e - 1] = trace.goal_reached
    return TrialResult(ep_series=ep_series, best_ep=int(best), reached=reached)
