"""Experiment orchestration: replays, comparisons, evolution runs, persistence.

Every run is a pure function of its configuration and master seed. Seeds
fan out through named spawn keys per (command, goal, trial) or
(generation, individual), so trials can execute on a worker pool without
changing any result byte.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .evolution import (
    EvolveResult,
    GaConfig,
    GenerationStats,
    Genotype,
    evaluate_dsp,
    evaluate_hc,
    evolve,
)
from .hillclimb import HcParams, hc_trial
from .maze import Action, GoalConfig, Maze, N_FINALS, episodic_performance, run_episode
from .plasticity import DspRule, TrialResult, dsp_trial
from .rulebundle import serialize_rule_bundle
from .stats import SummaryStats, summarize, wilcoxon_rank_sum

logger = logging.getLogger(__name__)

# Stable stream ids so each command draws from its own seed universe.
COMMAND_STREAMS = {
    "replay-dsp": 1,
    "replay-hc": 2,
    "evolve-dsp": 3,
    "evolve-hc": 4,
    "compare-dsp": 5,
    "compare-hc": 6,
    "baseline": 7,
}


@dataclass(frozen=True)
class ReplayConfig:
    episodes: int = 100
    trials_per_goal: int = 5
    goals: int = N_FINALS
    resample_every: int | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("episodes", "trials_per_goal", "goals", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.resample_every is not None and self.resample_every < 1:
            raise ValueError("resample_every must be >= 1 when set")


@dataclass
class ReplayTrial:
    goal: int
    trial: int
    result: TrialResult


@dataclass
class ReplayResult:
    run_id: str
    trials: list[ReplayTrial]

    def best_eps(self) -> list[int]:
        return [t.result.best_ep for t in self.trials]

    def reached_flags(self) -> list[bool]:
        return [t.result.ever_reached for t in self.trials]

    def summary(self) -> SummaryStats:
        return summarize(self.best_eps(), self.reached_flags())


def command_seeds(seed: int, command: str, n: int) -> list[np.random.SeedSequence]:
    root = np.random.SeedSequence(seed, spawn_key=(COMMAND_STREAMS[command],))
    return root.spawn(n)


def _replay_task(args) -> TrialResult:
    maze, kind, payload, goal, config, seed = args
    rng = np.random.default_rng(seed)
    if kind == "dsp":
        return dsp_trial(
            maze, GoalConfig(goal), payload, config.episodes, config.resample_every, rng
        )
    return hc_trial(
        maze, GoalConfig(goal), payload, config.episodes, config.resample_every, rng
    )


def run_replay(
    maze: Maze,
    kind: str,
    payload: DspRule | HcParams,
    config: ReplayConfig,
    command: str | None = None,
) -> ReplayResult:
    """Independent learning trials for every goal; deterministic in the seed."""
    if kind not in ("dsp", "hc"):
        raise ValueError(f"kind must be 'dsp' or 'hc', got {kind!r}")
    command = command or f"replay-{kind}"
    cells = [
        (goal, trial)
        for goal in range(1, config.goals + 1)
        for trial in range(1, config.trials_per_goal + 1)
    ]
    seeds = command_seeds(config.seed, command, len(cells))
    tasks = [
        (maze, kind, payload, goal, config, seed)
        for (goal, _), seed in zip(cells, seeds)
    ]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_replay_task, tasks))
    else:
        results = [_replay_task(t) for t in tasks]
    run_id = _run_id(command, payload, config)
    trials = [
        ReplayTrial(goal=goal, trial=trial, result=res)
        for (goal, trial), res in zip(cells, results)
    ]
    return ReplayResult(run_id=run_id, trials=trials)


def _run_id(command: str, payload: DspRule | HcParams, config: ReplayConfig) -> str:
    if isinstance(payload, DspRule):
        what = f"rule{payload.rule_id}"
    else:
        what = f"sigma{payload.sigma:.4f}"
    resample = f"-rs{config.resample_every}" if config.resample_every else ""
    return f"{command}-{what}-ep{config.episodes}{resample}-seed{config.seed}"


def random_policy_baseline(
    maze: Maze, episodes_per_goal: int = 125, seed: int = 0
) -> float:
    """Mean episodic performance of a uniformly random action policy.

    No learning and no best-of tracking: this is the level a trained agent
    must beat to demonstrate that anything was learned.
    """
    seeds = command_seeds(seed, "baseline", N_FINALS)
    total = 0.0
    count = 0
    for goal in range(1, N_FINALS + 1):
        rng = np.random.default_rng(seeds[goal - 1])

        def controller(pose, reading):
            return Action(int(rng.integers(len(Action))))

        cfg = GoalConfig(goal)
        for _ in range(episodes_per_goal):
            trace = run_episode(maze, cfg, controller)
            total += episodic_performance(trace, maze, cfg)
            count += 1
    return total / count


# ---------------------------------------------------------------------------
# Result files. All tables are CSV with a header row; rows are emitted in
# sorted key order so reruns and worker pools produce identical bytes.

def write_replay_files(out_dir: str | Path, replay: ReplayResult) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    episodes_path = out / "episodes.csv"
    with episodes_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run_id", "goal", "trial", "episode", "ep", "best_ep", "reached"])
        for t in replay.trials:
            best = t.result.best_series
            for e, (ep, b, hit) in enumerate(
                zip(t.result.ep_series, best, t.result.reached), start=1
            ):
                writer.writerow(
                    [replay.run_id, t.goal, t.trial, e, int(ep), int(b), int(hit)]
                )

    trials_path = out / "trials.csv"
    with trials_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run_id", "goal", "trial", "best_ep", "reached"])
        for t in replay.trials:
            writer.writerow(
                [replay.run_id, t.goal, t.trial, t.result.best_ep, int(t.result.ever_reached)]
            )

    summary_path = out / "summary.csv"
    write_summary_file(summary_path, [(replay.run_id, replay.summary())])
    return [episodes_path, trials_path, summary_path]


def write_summary_file(
    path: str | Path, rows: Iterable[tuple[str, SummaryStats]]
) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run_id", "n_trials", "mean_best_ep", "std_best_ep", "reach_fraction"])
        for run_id, s in rows:
            writer.writerow(
                [
                    run_id,
                    s.n_trials,
                    f"{s.mean_best_ep:.6f}",
                    f"{s.std_best_ep:.6f}",
                    f"{s.reach_fraction:.6f}",
                ]
            )
    return path


def serialize_genotype(genotype: Genotype) -> str:
    """Rule-bundle record for plasticity genotypes, bare parameters otherwise."""
    if genotype.discrete:
        return serialize_rule_bundle([genotype.to_rule()]).splitlines()[1]
    return " ".join(f"{c:.4f}" for c in genotype.continuous)


def run_evolution(
    maze: Maze,
    kind: str,
    config: GaConfig,
    seed: int,
    workers: int = 1,
    on_generation=None,
) -> EvolveResult:
    if kind not in ("dsp", "hc"):
        raise ValueError(f"kind must be 'dsp' or 'hc', got {kind!r}")
    command = f"evolve-{kind}"
    evaluator = evaluate_dsp if kind == "dsp" else evaluate_hc
    master = np.random.SeedSequence(seed, spawn_key=(COMMAND_STREAMS[command],))
    return evolve(
        config, maze, evaluator, master, workers=workers, on_generation=on_generation
    )


def write_evolution_files(
    out_dir: str | Path, result: EvolveResult, kind: str
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    log_path = out / "log.csv"
    with log_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", "best_fitness", "mean_fitness", "best_genotype"])
        for s in result.history:
            writer.writerow(
                [
                    s.generation,
                    f"{s.best_fitness:.6f}",
                    f"{s.mean_fitness:.6f}",
                    serialize_genotype(s.best_genotype),
                ]
            )

    best_path = out / "best_genotype.txt"
    if kind == "dsp":
        best_path.write_text(serialize_rule_bundle([result.best.genotype.to_rule()]))
    else:
        best_path.write_text(serialize_genotype(result.best.genotype) + "\n")
    return [log_path, best_path]


@dataclass
class CompareResult:
    dsp: ReplayResult
    hc: ReplayResult
    p_value: float
    mode: str

    @property
    def dsp_mean(self) -> float:
        return self.dsp.summary().mean_best_ep

    @property
    def hc_mean(self) -> float:
        return self.hc.summary().mean_best_ep


def run_compare(
    maze: Maze,
    rule: DspRule,
    hc_params: HcParams,
    config: ReplayConfig,
    mode: str = "trials",
    runs: int = 15,
) -> CompareResult:
    """Matched-budget replay of both learners plus a rank-sum comparison.

    ``trials`` mode tests the per-trial best performances of one replay per
    side; ``runs`` mode repeats both replays with shifted seeds and tests
    the per-run mean best performances.
    """
    dsp = run_replay(maze, "dsp", rule, config, command="compare-dsp")
    hc = run_replay(maze, "hc", hc_params, config, command="compare-hc")
    if mode == "trials":
        p = wilcoxon_rank_sum(dsp.best_eps(), hc.best_eps())
    elif mode == "runs":
        dsp_means = [dsp.summary().mean_best_ep]
        hc_means = [hc.summary().mean_best_ep]
        for r in range(1, runs):
            cfg = ReplayConfig(
                episodes=config.episodes,
                trials_per_goal=config.trials_per_goal,
                goals=config.goals,
                resample_every=config.resample_every,
                seed=config.seed + r,
                workers=config.workers,
            )
            dsp_means.append(
                run_replay(maze, "dsp", rule, cfg, command="compare-dsp").summary().mean_best_ep
            )
            hc_means.append(
                run_replay(maze, "hc", hc_params, cfg, command="compare-hc").summary().mean_best_ep
            )
        p = wilcoxon_rank_sum(dsp_means, hc_means)
    else:
        raise ValueError(f"mode must be 'trials' or 'runs', got {mode!r}")
    return CompareResult(dsp=dsp, hc=hc, p_value=p, mode=mode)


def write_compare_files(out_dir: str | Path, result: CompareResult) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for side, replay in (("dsp", result.dsp), ("hc", result.hc)):
        side_dir = out / side
        paths.extend(write_replay_files(side_dir, replay))

    compare_path = out / "compare.csv"
    with compare_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["mode", "dsp_mean_best_ep", "hc_mean_best_ep", "p_value", "n_dsp", "n_hc"]
        )
        writer.writerow(
            [
                result.mode,
                f"{result.dsp_mean:.6f}",
                f"{result.hc_mean:.6f}",
                f"{result.p_value:.6g}",
                len(result.dsp.trials),
                len(result.hc.trials),
            ]
        )
    paths.append(compare_path)
    return paths
