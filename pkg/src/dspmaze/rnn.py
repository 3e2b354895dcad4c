"""Binary recurrent controller: weights, forward dynamics, action decoding.

Hidden units receive the current 3-bit input (plus a constant-1 bias unit),
scaled recurrent input from the previous hidden state, and scaled feedback
from the previous output state. All activations are binary: a unit fires
iff its pre-activation is strictly positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .maze import Action, Pose, SensorReading


@dataclass(frozen=True)
class RnnDims:
    n_in: int = 3
    n_hidden: int = 20
    n_out: int = 4

    @property
    def synapse_count(self) -> int:
        # input->hidden (with bias), hidden->hidden (no self), hidden->output
        # (with bias), output->hidden; 624 at the defaults.
        return (
            (self.n_in + 1) * self.n_hidden
            + self.n_hidden * (self.n_hidden - 1)
            + (self.n_hidden + 1) * self.n_out
            + self.n_out * self.n_hidden
        )


DEFAULT_DIMS = RnnDims()


@dataclass
class RnnWeights:
    """Four synapse matrices; column 0 of w_hi and w_oh is the bias weight."""

    w_hi: np.ndarray   # (n_hidden, n_in + 1)
    w_h: np.ndarray    # (n_hidden, n_hidden), zero diagonal
    w_oh: np.ndarray   # (n_out, n_hidden + 1)
    w_ho: np.ndarray   # (n_hidden, n_out)

    @property
    def dims(self) -> RnnDims:
        return RnnDims(
            n_in=self.w_hi.shape[1] - 1,
            n_hidden=self.w_h.shape[0],
            n_out=self.w_oh.shape[0],
        )

    def copy(self) -> "RnnWeights":
        return RnnWeights(
            self.w_hi.copy(), self.w_h.copy(), self.w_oh.copy(), self.w_ho.copy()
        )


@dataclass(frozen=True)
class RnnHyper:
    """Scaling of recurrent (alpha_h) and feedback (alpha_o) inputs."""

    alpha_h: float
    alpha_o: float

    def __post_init__(self) -> None:
        for name in ("alpha_h", "alpha_o"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass
class RnnState:
    a_h: np.ndarray        # (n_hidden,) binary
    a_o: np.ndarray        # (n_out,) binary
    out_pre: np.ndarray    # (n_out,) output pre-activations, kept for decoding


def zero_state(dims: RnnDims = DEFAULT_DIMS) -> RnnState:
    return RnnState(
        a_h=np.zeros(dims.n_hidden),
        a_o=np.zeros(dims.n_out),
        out_pre=np.zeros(dims.n_out),
    )


def init_weights(rng: np.random.Generator, dims: RnnDims = DEFAULT_DIMS) -> RnnWeights:
    """All synapses i.i.d. uniform on [-1, 1]; no self-recurrence."""
    w_h = rng.uniform(-1.0, 1.0, (dims.n_hidden, dims.n_hidden))
    np.fill_diagonal(w_h, 0.0)
    return RnnWeights(
        w_hi=rng.uniform(-1.0, 1.0, (dims.n_hidden, dims.n_in + 1)),
        w_h=w_h,
        w_oh=rng.uniform(-1.0, 1.0, (dims.n_out, dims.n_hidden + 1)),
        w_ho=rng.uniform(-1.0, 1.0, (dims.n_hidden, dims.n_out)),
    )


def forward(
    weights: RnnWeights, hyper: RnnHyper, state: RnnState, reading: SensorReading
) -> RnnState:
    """One network step; returns a fresh state, inputs untouched."""
    n_in = weights.w_hi.shape[1] - 1
    x = np.empty(n_in + 1)
    x[0] = 1.0
    x[1:] = reading
    pre_h = (
        weights.w_hi @ x
        + hyper.alpha_h * (weights.w_h @ state.a_h)
        + hyper.alpha_o * (weights.w_ho @ state.a_o)
    )
    a_h = (pre_h > 0.0).astype(float)
    hvec = np.empty(weights.w_oh.shape[1])
    hvec[0] = 1.0
    hvec[1:] = a_h
    pre_o = weights.w_oh @ hvec
    a_o = (pre_o > 0.0).astype(float)
    return RnnState(a_h=a_h, a_o=a_o, out_pre=pre_o)


def decode_action(state: RnnState) -> Action:
    """Argmax over output pre-activations; Stop when no output fires.

    Ties go to the earliest action in Stop < Left < Right < Straight order.
    """
    pre = state.out_pre
    if pre.max() <= 0.0:
        return Action.STOP
    return Action(int(np.argmax(pre)))


class RnnController:
    """Adapts an RNN to the episode controller protocol.

    Holds the per-episode state (zeroed at construction). With
    ``record=True`` it keeps the per-step inputs and activations so a
    plasticity trace can be built after the episode.
    """

    def __init__(
        self,
        weights: RnnWeights,
        hyper: RnnHyper,
        dims: RnnDims | None = None,
        record: bool = False,
    ) -> None:
        self.weights = weights
        self.hyper = hyper
        self.dims = dims or weights.dims
        self.state = zero_state(self.dims)
        self.record = record
        self.inputs: list[SensorReading] = []
        self.hidden: list[np.ndarray] = []
        self.outputs: list[np.ndarray] = []

    def __call__(self, pose: Pose, reading: SensorReading) -> Action:
        self.state = forward(self.weights, self.hyper, self.state, reading)
        if self.record:
            self.inputs.append(reading)
            self.hidden.append(self.state.a_h)
            self.outputs.append(self.state.a_o)
        return decode_action(self.state)


def _offdiag_mask(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def flatten(weights: RnnWeights) -> np.ndarray:
    """Pack the four matrices into one vector, skipping the w_h diagonal.

    Order: w_hi row-major, w_h off-diagonal row-major, w_oh row-major,
    w_ho row-major.
    """
    return np.concatenate(
        [
            weights.w_hi.ravel(),
            weights.w_h[_offdiag_mask(weights.w_h.shape[0])],
            weights.w_oh.ravel(),
            weights.w_ho.ravel(),
        ]
    )


def unflatten(vector: np.ndarray, dims: RnnDims = DEFAULT_DIMS) -> RnnWeights:
    """Inverse of flatten; the w_h diagonal is restored as zeros."""
    vector = np.asarray(vector, dtype=float)
    if vector.ndim != 1 or vector.size != dims.synapse_count:
        raise ValueError(
            f"expected a vector of length {dims.synapse_count}, got shape {vector.shape}"
        )
    nh, ni, no = dims.n_hidden, dims.n_in, dims.n_out
    sizes = [(ni + 1) * nh, nh * (nh - 1), (no) * (nh + 1), no * nh]
    parts = np.split(vector, np.cumsum(sizes)[:-1])
    w_h = np.zeros((nh, nh))
    w_h[_offdiag_mask(nh)] = parts[1]
    return RnnWeights(
        w_hi=parts[0].reshape(nh, ni + 1).copy(),
        w_h=w_h,
        w_oh=parts[2].reshape(no, nh + 1).copy(),
        w_ho=parts[3].reshape(nh, no).copy(),
    )


def save_weights(path: str | Path, weights: RnnWeights) -> None:
    """Weight snapshot: dims header plus one decimal real per line."""
    dims = weights.dims
    lines = [f"dims={dims.n_in},{dims.n_hidden},{dims.n_out}"]
    lines.extend(format(v, ".17g") for v in flatten(weights))
    Path(path).write_text("\n".join(lines) + "\n")


def load_weights(path: str | Path) -> RnnWeights:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("dims="):
        raise ValueError("weight snapshot must start with a dims= header")
    try:
        n_in, n_hidden, n_out = (int(v) for v in lines[0][len("dims=") :].split(","))
    except ValueError as exc:
        raise ValueError(f"malformed dims header: {lines[0]!r}") from exc
    dims = RnnDims(n_in=n_in, n_hidden=n_hidden, n_out=n_out)
    values = np.array([float(v) for v in lines[1:] if v.strip()])
    return unflatten(values, dims)
