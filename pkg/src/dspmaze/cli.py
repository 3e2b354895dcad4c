"""Command-line entry point.

Subcommands: evolve-dsp, evolve-hc, replay-dsp, replay-hc, compare,
maze-check. Every run is reproducible from its flags plus --seed; result
tables land in --out as CSV.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .evolution import GaConfig
from .experiments import (
    ReplayConfig,
    random_policy_baseline,
    run_compare,
    run_evolution,
    run_replay,
    write_compare_files,
    write_evolution_files,
    write_replay_files,
)
from .hillclimb import HcParams
from .maze import Maze, MazeError, default_maze, load_maze, shortest_path_distance
from .rulebundle import default_rule_bundle, load_rule_bundle, rule_by_id

logger = logging.getLogger(__name__)

# Hill-climb parameters used when none are given: the matched control for
# the shipped rule 1 — identical recurrent/feedback scalings and a step
# scale equal to its learning rate, so only the update mechanism differs.
DEFAULT_HC = HcParams(sigma=0.05, alpha_h=0.1931, alpha_o=0.2376)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--maze", help="maze file (default: packaged layout)")
    parser.add_argument("--config", help="JSON file with flag defaults")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--out", help="output directory (default runs/<command>)")
    parser.add_argument("--workers", type=int, help="worker processes (default 1)")


def _add_replay_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--episodes", type=int, help="episodes per trial (default 100)")
    parser.add_argument("--trials", type=int, help="trials per goal (default 5)")
    parser.add_argument(
        "--resample-every",
        type=int,
        dest="resample_every",
        help="re-draw all weights every N episodes, keeping the best score",
    )


def _add_hc_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sigma", type=float, help=f"perturbation scale (default {DEFAULT_HC.sigma})")
    parser.add_argument("--alpha-h", type=float, dest="alpha_h", help="recurrent scaling")
    parser.add_argument("--alpha-o", type=float, dest="alpha_o", help="feedback scaling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dspmaze",
        description="Triple T-maze learning experiments: evolved delayed plasticity vs hill climbing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay-dsp", help="train fresh RNNs with a shipped/evolved rule")
    _add_common(p)
    _add_replay_flags(p)
    p.add_argument("--rule", type=int, help="rule id from the bundle (default 1)")
    p.add_argument("--rules", help="rule bundle file (default: packaged bundle)")

    p = sub.add_parser("replay-hc", help="train fresh RNNs with the hill climber")
    _add_common(p)
    _add_replay_flags(p)
    _add_hc_flags(p)

    p = sub.add_parser("compare", help="matched-budget DSP vs HC with a rank-sum test")
    _add_common(p)
    _add_replay_flags(p)
    _add_hc_flags(p)
    p.add_argument("--rule", type=int, help="rule id from the bundle (default 1)")
    p.add_argument("--rules", help="rule bundle file (default: packaged bundle)")
    p.add_argument("--mode", choices=("trials", "runs"), help="test unit (default trials)")
    p.add_argument("--runs", type=int, help="replays per side in runs mode (default 15)")

    for name, summary in (
        ("evolve-dsp", "evolve plasticity rules with the GA"),
        ("evolve-hc", "evolve hill-climb parameters with the GA"),
    ):
        p = sub.add_parser(name, help=summary)
        _add_common(p)
        p.add_argument("--generations", type=int, help="default 300")
        p.add_argument("--pop-size", type=int, dest="pop_size", help="default 14")
        p.add_argument("--elites", type=int, help="default 4")
        p.add_argument("--trials", type=int, help="trials per goal per evaluation (default 5)")
        p.add_argument("--episodes", type=int, help="episodes per trial (default 100)")
        p.add_argument("--goals", type=int, help="goal positions per evaluation (default 8)")

    p = sub.add_parser("maze-check", help="audit a maze file against all invariants")
    p.add_argument("--maze", help="maze file (default: packaged layout)")
    p.add_argument("--baseline", action="store_true", help="also print the random-policy score")
    p.add_argument("--seed", type=int, help="seed for --baseline (default 0)")

    return parser


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def _setting(args: argparse.Namespace, file_cfg: dict, name: str, default):
    """Priority: explicit CLI flag > config file entry > built-in default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in file_cfg:
        return file_cfg[name]
    return default


def _get_maze(args, file_cfg) -> Maze:
    path = _setting(args, file_cfg, "maze", None)
    return load_maze(path) if path else default_maze()


def _get_rule(args, file_cfg):
    path = _setting(args, file_cfg, "rules", None)
    rules = load_rule_bundle(path) if path else default_rule_bundle()
    return rule_by_id(rules, int(_setting(args, file_cfg, "rule", 1)))


def _get_hc_params(args, file_cfg) -> HcParams:
    return HcParams(
        sigma=float(_setting(args, file_cfg, "sigma", DEFAULT_HC.sigma)),
        alpha_h=float(_setting(args, file_cfg, "alpha_h", DEFAULT_HC.alpha_h)),
        alpha_o=float(_setting(args, file_cfg, "alpha_o", DEFAULT_HC.alpha_o)),
    )


def _get_replay_config(args, file_cfg) -> ReplayConfig:
    return ReplayConfig(
        episodes=int(_setting(args, file_cfg, "episodes", 100)),
        trials_per_goal=int(_setting(args, file_cfg, "trials", 5)),
        resample_every=_setting(args, file_cfg, "resample_every", None),
        seed=int(_setting(args, file_cfg, "seed", 0)),
        workers=int(_setting(args, file_cfg, "workers", 1)),
    )


def _get_out_dir(args, file_cfg, command: str) -> Path:
    return Path(_setting(args, file_cfg, "out", f"runs/{command}"))


def _cmd_replay(args, file_cfg, kind: str) -> int:
    maze = _get_maze(args, file_cfg)
    config = _get_replay_config(args, file_cfg)
    payload = _get_rule(args, file_cfg) if kind == "dsp" else _get_hc_params(args, file_cfg)
    replay = run_replay(maze, kind, payload, config)
    out = _get_out_dir(args, file_cfg, f"replay-{kind}")
    paths = write_replay_files(out, replay)
    s = replay.summary()
    print(
        f"{replay.run_id}: {s.n_trials} trials, mean best EP {s.mean_best_ep:.2f}, "
        f"reach {s.reach_fraction:.0%}"
    )
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_compare(args, file_cfg) -> int:
    maze = _get_maze(args, file_cfg)
    config = _get_replay_config(args, file_cfg)
    rule = _get_rule(args, file_cfg)
    hc_params = _get_hc_params(args, file_cfg)
    mode = _setting(args, file_cfg, "mode", "trials")
    runs = int(_setting(args, file_cfg, "runs", 15))
    result = run_compare(maze, rule, hc_params, config, mode=mode, runs=runs)
    out = _get_out_dir(args, file_cfg, "compare")
    paths = write_compare_files(out, result)
    print(
        f"DSP mean best EP {result.dsp_mean:.2f} vs HC {result.hc_mean:.2f} "
        f"(mode {result.mode}, p = {result.p_value:.4g})"
    )
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_evolve(args, file_cfg, kind: str) -> int:
    maze = _get_maze(args, file_cfg)
    base = {
        "generations": int(_setting(args, file_cfg, "generations", 300)),
        "pop_size": int(_setting(args, file_cfg, "pop_size", 14)),
        "elites": int(_setting(args, file_cfg, "elites", 4)),
        "trials_per_goal": int(_setting(args, file_cfg, "trials", 5)),
        "episodes_per_trial": int(_setting(args, file_cfg, "episodes", 100)),
        "goals": int(_setting(args, file_cfg, "goals", 8)),
    }
    config = GaConfig(**base) if kind == "dsp" else GaConfig.for_hc(**base)
    seed = int(_setting(args, file_cfg, "seed", 0))
    workers = int(_setting(args, file_cfg, "workers", 1))

    def report(stats):
        logger.info(
            "generation %d: best %.3f mean %.3f",
            stats.generation,
            stats.best_fitness,
            stats.mean_fitness,
        )

    result = run_evolution(maze, kind, config, seed, workers=workers, on_generation=report)
    out = _get_out_dir(args, file_cfg, f"evolve-{kind}")
    paths = write_evolution_files(out, result, kind)
    print(
        f"best fitness {result.best.fitness:.3f} at generation {result.best.generation}"
    )
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_maze_check(args) -> int:
    try:
        maze = load_maze(args.maze) if args.maze else default_maze()
    except (MazeError, OSError) as exc:
        print(f"maze check failed: {exc}", file=sys.stderr)
        return 1
    sx, sy = maze.start.x, maze.start.y
    print(f"maze OK: {maze.width}x{maze.height}, start ({sx}, {sy}) facing {maze.start.heading.name}")
    for idx in sorted(maze.finals):
        x, y = maze.finals[idx]
        d = shortest_path_distance(maze, (sx, sy), (x, y))
        print(f"final {idx} at ({x}, {y}): shortest path {d} steps")
    if args.baseline:
        score = random_policy_baseline(maze, seed=args.seed if args.seed is not None else 0)
        print(f"random-policy mean EP: {score:.2f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "maze-check":
        return _cmd_maze_check(args)
    try:
        file_cfg = _load_config_file(args.config)
    except (OSError, ValueError) as exc:
        print(f"bad config file: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "replay-dsp":
            return _cmd_replay(args, file_cfg, "dsp")
        if args.command == "replay-hc":
            return _cmd_replay(args, file_cfg, "hc")
        if args.command == "compare":
            return _cmd_compare(args, file_cfg)
        if args.command == "evolve-dsp":
            return _cmd_evolve(args, file_cfg, "dsp")
        if args.command == "evolve-hc":
            return _cmd_evolve(args, file_cfg, "hc")
    except (MazeError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
