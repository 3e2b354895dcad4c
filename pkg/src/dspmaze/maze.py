"""Triple T-maze gridworld: parsing, agent kinematics, sensing, episodes, scoring.

The maze is a 29x29 grid of cells loaded from a plain-text file
(`#` wall, `.` empty, `S` start, `1`-`8` final cells). One final cell is
designated the goal; the other seven act as pits. An agent occupies one
cell, faces one of four directions, and sees only a 3-bit wall indicator
for its left/front/right neighbor cells.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import IntEnum
from importlib import resources
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

MAZE_SIZE = 29
N_FINALS = 8
DEFAULT_MAX_STEPS = 100
PIT_PENALTY = 5


class MazeError(ValueError):
    """Raised when a maze file violates the layout contract."""


class Orientation(IntEnum):
    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3


# Unit step per orientation; y grows southward (row 0 is the north edge).
_DX = (0, 1, 0, -1)
_DY = (-1, 0, 1, 0)


class Action(IntEnum):
    # Order doubles as the decode tie-break order; do not reorder.
    STOP = 0
    LEFT = 1
    RIGHT = 2
    STRAIGHT = 3


class Pose(NamedTuple):
    x: int
    y: int
    heading: Orientation


class SensorReading(NamedTuple):
    """One bit per neighbor cell: 1 = wall, 0 = anything else."""

    left: int
    front: int
    right: int


@dataclass(frozen=True)
class GoalConfig:
    """Which of the eight final cells is the goal; the rest are pits."""

    goal_index: int

    def __post_init__(self) -> None:
        if not 1 <= self.goal_index <= N_FINALS:
            raise ValueError(f"goal_index must be in 1..{N_FINALS}, got {self.goal_index}")


@dataclass
class EpisodeTrace:
    steps_taken: int
    goal_reached: bool
    pit_entries: int
    final_pose: Pose
    max_steps: int = DEFAULT_MAX_STEPS


Controller = Callable[[Pose, SensorReading], Action]


@dataclass
class Maze:
    """Immutable after construction; safe to share across concurrent episodes."""

    width: int
    height: int
    walls: np.ndarray            # bool (height, width), True = wall
    start: Pose
    finals: dict[int, tuple[int, int]]   # final index 1..8 -> (x, y)
    _final_by_pos: dict[tuple[int, int], int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._final_by_pos = {pos: idx for idx, pos in self.finals.items()}

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_wall(self, x: int, y: int) -> bool:
        """Out-of-bounds counts as wall so kinematics never escape the grid."""
        if not self.in_bounds(x, y):
            return True
        return bool(self.walls[y, x])

    def final_index_at(self, x: int, y: int) -> int | None:
        return self._final_by_pos.get((x, y))

    def goal_cell(self, goal: GoalConfig) -> tuple[int, int]:
        return self.finals[goal.goal_index]


_CHARSET = set("#.S12345678")


def parse_maze(text: str) -> Maze:
    """Parse maze-file contents, enforcing every layout invariant.

    Raises MazeError naming the offending line/column (1-based) on the first
    violation found.
    """
    lines = text.splitlines()
    if len(lines) != MAZE_SIZE:
        raise MazeError(f"expected {MAZE_SIZE} lines, got {len(lines)}")

    walls = np.zeros((MAZE_SIZE, MAZE_SIZE), dtype=bool)
    start: tuple[int, int] | None = None
    finals: dict[int, tuple[int, int]] = {}

    for y, line in enumerate(lines):
        if len(line) != MAZE_SIZE:
            raise MazeError(f"line {y + 1}: expected {MAZE_SIZE} columns, got {len(line)}")
        for x, ch in enumerate(line):
            if ch not in _CHARSET:
                raise MazeError(f"line {y + 1}, column {x + 1}: unknown character {ch!r}")
            if ch == "#":
                walls[y, x] = True
            elif ch == "S":
                if start is not None:
                    raise MazeError(f"line {y + 1}, column {x + 1}: duplicate start cell")
                start = (x, y)
            elif ch.isdigit():
                idx = int(ch)
                if idx in finals:
                    raise MazeError(f"line {y + 1}, column {x + 1}: duplicate final cell {idx}")
                finals[idx] = (x, y)

    if start is None:
        raise MazeError("missing start cell 'S'")
    missing = sorted(set(range(1, N_FINALS + 1)) - set(finals))
    if missing:
        raise MazeError(f"missing final cells {missing}")

    for y in range(MAZE_SIZE):
        for x in range(MAZE_SIZE):
            on_border = x in (0, MAZE_SIZE - 1) or y in (0, MAZE_SIZE - 1)
            if on_border and not walls[y, x]:
                raise MazeError(f"line {y + 1}, column {x + 1}: border cell is not a wall")

    for idx in sorted(finals):
        if grid_distance(walls, start, finals[idx]) is None:
            raise MazeError(f"final cell {idx} is unreachable from start")

    maze = Maze(
        width=MAZE_SIZE,
        height=MAZE_SIZE,
        walls=walls,
        start=Pose(start[0], start[1], Orientation.NORTH),
        finals=finals,
    )
    return maze


def load_maze(path: str | Path) -> Maze:
    return parse_maze(Path(path).read_text())


def default_maze() -> Maze:
    """The canonical triple T-maze shipped with the package."""
    text = resources.files("dspmaze.data").joinpath("triple_t_maze.txt").read_text()
    return parse_maze(text)


def sense(maze: Maze, pose: Pose) -> SensorReading:
    """Wall bits for the three orientation-relative neighbor cells."""
    h = pose.heading
    left = (h - 1) % 4
    right = (h + 1) % 4

    def bit(d: int) -> int:
        return 1 if maze.is_wall(pose.x + _DX[d], pose.y + _DY[d]) else 0

    return SensorReading(left=bit(left), front=bit(h), right=bit(right))


def apply_action(maze: Maze, pose: Pose, action: Action) -> Pose:
    """One action step.

    Left/Right rotate the heading then advance one cell; Straight advances;
    Stop holds still. A blocked advance keeps the position but any heading
    change persists.
    """
    if action == Action.STOP:
        return pose
    h = pose.heading
    if action == Action.LEFT:
        h = Orientation((h - 1) % 4)
    elif action == Action.RIGHT:
        h = Orientation((h + 1) % 4)
    nx, ny = pose.x + _DX[h], pose.y + _DY[h]
    if maze.is_wall(nx, ny):
        return Pose(pose.x, pose.y, h)
    return Pose(nx, ny, h)


def run_episode(
    maze: Maze,
    goal: GoalConfig,
    controller: Controller,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> EpisodeTrace:
    """sense -> controller -> apply_action loop, ending early at the goal.

    Every transition onto a pit cell counts one pit entry (re-entries count
    again); standing still on a pit does not. Pits never end the episode.
    """
    pose = maze.start
    goal_cell = maze.goal_cell(goal)
    pit_entries = 0
    goal_reached = False
    steps = 0
    for step in range(1, max_steps + 1):
        reading = sense(maze, pose)
        action = controller(pose, reading)
        new_pose = apply_action(maze, pose, action)
        moved = (new_pose.x, new_pose.y) != (pose.x, pose.y)
        pose = new_pose
        steps = step
        if (pose.x, pose.y) == goal_cell:
            goal_reached = True
            break
        if moved and maze.final_index_at(pose.x, pose.y) is not None:
            pit_entries += 1
    return EpisodeTrace(
        steps_taken=steps,
        goal_reached=goal_reached,
        pit_entries=pit_entries,
        final_pose=pose,
        max_steps=max_steps,
    )


def grid_distance(
    walls: np.ndarray, src: tuple[int, int], dst: tuple[int, int]
) -> int | None:
    """A* shortest 4-connected path length on a wall grid; None if unreachable."""
    if src == dst:
        return 0
    height, width = walls.shape
    sx, sy = src
    dx, dy = dst

    def h(x: int, y: int) -> int:
        return abs(x - dx) + abs(y - dy)

    best_g = {src: 0}
    frontier: list[tuple[int, int, tuple[int, int]]] = [(h(sx, sy), 0, src)]
    while frontier:
        f, g, (x, y) = heapq.heappop(frontier)
        if (x, y) == dst:
            return g
        if g > best_g.get((x, y), g):
            continue
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if not (0 <= nx < width and 0 <= ny < height) or walls[ny, nx]:
                continue
            ng = g + 1
            if ng < best_g.get((nx, ny), ng + 1):
                best_g[(nx, ny)] = ng
                heapq.heappush(frontier, (ng + h(nx, ny), ng, (nx, ny)))
    return None


def shortest_path_distance(
    maze: Maze, src: tuple[int, int], dst: tuple[int, int]
) -> int | None:
    """Shortest wall-avoiding path length between two non-wall cells."""
    for name, (x, y) in (("src", src), ("dst", dst)):
        if maze.is_wall(x, y):
            raise ValueError(f"{name} cell {(x, y)} is a wall")
    return grid_distance(maze.walls, src, dst)


def episodic_performance(trace: EpisodeTrace, maze: Maze, goal: GoalConfig) -> int:
    """Minimized per-episode score.

    Goal reached: steps taken. Not reached: the step allowance plus the
    remaining shortest-path distance to the goal. Either way, plus 5 per
    pit entry.
    """
    penalty = PIT_PENALTY * trace.pit_entries
    if trace.goal_reached:
        return trace.steps_taken + penalty
    d = shortest_path_distance(
        maze, (trace.final_pose.x, trace.final_pose.y), maze.goal_cell(goal)
    )
    if d is None:
        raise ValueError("final pose cannot reach the goal cell")
    return trace.max_steps + d + penalty
