"""Hill-climbing baseline over directly-encoded RNN weight vectors.

The incumbent weight vector is perturbed with scaled Gaussian noise each
episode and replaced only on strict improvement. No activation traces, no
normalization; this is the knowledge-free counterpart of the plasticity
learner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maze import GoalConfig, Maze, episodic_performance, run_episode
from .plasticity import TrialResult
from .rnn import DEFAULT_DIMS, RnnController, RnnDims, RnnHyper, unflatten


@dataclass(frozen=True)
class HcParams:
    """Perturbation scale plus the RNN recurrent/feedback scalings."""

    sigma: float
    alpha_h: float
    alpha_o: float

    def __post_init__(self) -> None:
        for name in ("sigma", "alpha_h", "alpha_o"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @property
    def hyper(self) -> RnnHyper:
        return RnnHyper(alpha_h=self.alpha_h, alpha_o=self.alpha_o)


def perturb(best: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Candidate = incumbent + sigma * standard normal noise per dimension."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    return best + sigma * rng.standard_normal(best.shape)


def hc_trial(
    maze: Maze,
    goal: GoalConfig,
    params: HcParams,
    episodes: int,
    resample_every: int | None = None,
    rng: np.random.Generator | None = None,
    dims: RnnDims = DEFAULT_DIMS,
    max_steps: int | None = None,
) -> TrialResult:
    """One hill-climbing run; each episode evaluates one candidate vector.

    Episode 1 scores the uniform [-1, 1] initial vector. Afterwards the
    incumbent is perturbed and replaced only when the candidate scores
    strictly better (ties keep the incumbent). With ``resample_every`` set,
    the incumbent is re-drawn from the initial range every that many
    episodes while the best score seen is retained.
    """
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    rng = rng if rng is not None else np.random.default_rng()
    hyper = params.hyper
    kwargs = {} if max_steps is None else {"max_steps": max_steps}

    def evaluate(vec: np.ndarray) -> tuple[int, bool]:
        ctrl = RnnController(unflatten(vec, dims), hyper, dims)
        trace = run_episode(maze, goal, ctrl, **kwargs)
        return episodic_performance(trace, maze, goal), trace.goal_reached

    ep_series = np.zeros(episodes, dtype=np.int64)
    reached = np.zeros(episodes, dtype=bool)

    incumbent = rng.uniform(-1.0, 1.0, dims.synapse_count)
    incumbent_ep, hit = evaluate(incumbent)
    ep_series[0] = incumbent_ep
    reached[0] = hit
    best = incumbent_ep
    for e in range(2, episodes + 1):
        if resample_every and (e - 1) % resample_every == 0:
            incumbent = rng.uniform(-1.0, 1.0, dims.synapse_count)
            incumbent_ep, hit = evaluate(incumbent)
            ep = incumbent_ep
        else:
            candidate = perturb(incumbent, params.sigma, rng)
            ep, hit = evaluate(candidate)
            if ep < incumbent_ep:
                incumbent = candidate
                incumbent_ep = ep
        best = min(best, ep)
        ep_series[e - 1] = ep
        reached[e - 1] = hit
    return TrialResult(
        ep_series=ep_series, best_ep=int(best), reached=reached, final_vector=incumbent
    )
