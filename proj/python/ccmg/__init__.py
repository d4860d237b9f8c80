"""Constrained correlated equilibria in finite-horizon Markov games.

Games and policies use the same JSON documents as the ``ccmg`` command-line
tool. Policies may be given as a ``{"policy": ...}`` mapping, a nested list
indexed ``[t][s][joint action]`` (or a flat list over joint actions for
one-shot games), or a numpy array of that shape.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterable, Mapping, Optional, Sequence

from . import _core
from ._core import (
    EmptyFeasibleSet,
    Game,
    ModeError,
    ParseError,
    ResourceCapError,
    ValidationError,
)

__version__ = _core.__version__

__all__ = [
    "EmptyFeasibleSet",
    "Game",
    "ModeError",
    "ParseError",
    "ResourceCapError",
    "ValidationError",
    "equivalence",
    "example_game",
    "feasibility",
    "find",
    "load_game",
    "occupancy",
    "parse_game",
    "reproduce",
    "slater",
    "solve_lp",
    "validate",
    "verify",
]


def _policy_text(policy: Any) -> str:
    if isinstance(policy, Mapping):
        return json.dumps(dict(policy))
    if hasattr(policy, "tolist"):
        policy = policy.tolist()
    return json.dumps({"policy": policy})


def load_game(path: str | os.PathLike) -> Game:
    return Game.load(os.fspath(path))


def parse_game(doc: str | Mapping) -> Game:
    """Builds a game from JSON text or an already decoded document."""
    return Game.from_json(doc if isinstance(doc, str) else json.dumps(dict(doc)))


def example_game(which: int) -> Game:
    return _core.example_game(which)


def validate(game: Game) -> dict:
    return json.loads(game.validate())


def occupancy(game: Game, policy: Any):
    """State-action occupancy d_t(s, a) as an array of shape (H, S, |A|)."""
    return _core.occupancy(game, _policy_text(policy))


def feasibility(game: Game, policy: Any, tol: float = 1e-9) -> dict:
    return json.loads(_core.feasibility(game, _policy_text(policy), tol))


def verify(game: Game, policy: Any, tol: float = 1e-9, cap: int = _core.DEFAULT_CAP) -> dict:
    """Equilibrium certificate: per-player gaps, slacks and the verdict."""
    return json.loads(_core.verify(game, _policy_text(policy), tol, cap))


def find(
    game: Game,
    seed: Optional[int] = None,
    max_iters: int = 10_000,
    tol: float = 1e-6,
    step: str = "half",
    selection: str = "max_gap",
    cap: int = _core.DEFAULT_CAP,
    trace: bool = False,
) -> dict:
    """Fixed-point search for a constrained equilibrium (common constraints).

    Without a seed the search starts from a phase-1 feasible occupancy.
    """
    return json.loads(_core.find(game, seed, max_iters, tol, step, selection, cap, trace))


def slater(
    game: Game,
    mode: str = "strong",
    samples: int = 100,
    seed: int = 0,
    cap: int = _core.DEFAULT_CAP,
) -> dict:
    return json.loads(_core.slater(game, mode, samples, seed, cap))


def equivalence(
    game: Game,
    player: Optional[int] = None,
    samples: int = 10,
    seed: int = 0,
    modifications: Iterable[Mapping] = (),
) -> dict:
    texts = [json.dumps(dict(m)) for m in modifications]
    return json.loads(_core.equivalence(game, player, samples, seed, texts))


def reproduce(only: str = "", seed: int = 0) -> dict:
    """Recomputes every stated property of the two bundled example games."""
    return json.loads(_core.reproduce(only, seed))


def solve_lp(
    objective: Sequence[float],
    rows: Iterable[tuple[Sequence[float], str, float]],
) -> dict:
    """Maximizes ``objective . x`` over x >= 0 and rows ``(coeffs, sense, rhs)``
    with sense one of ``">="``, ``"<="`` or ``"=="``."""
    return _core.solve_lp(list(objective), [(list(c), s, float(b)) for c, s, b in rows])
