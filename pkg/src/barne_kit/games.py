"""Finite games with explicit payoff oracles, plus the bundled fixtures."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Hashable, Optional, Tuple

from .errors import InvalidAssignmentError

Profile = Tuple[Hashable, ...]


@dataclass(frozen=True)
class GenericGame:
    """A finite n-player game given by an explicit payoff oracle.

    ``payoff(i, profile)`` must be defined for every joint pure profile in
    ``strategies ** n``.  ``symmetric`` asserts permutation invariance, which
    the count-based equilibrium checks rely on.  ``prescribed`` is the strategy
    honest agents always play; it defaults to the first strategy.
    """

    n: int
    strategies: Tuple[Hashable, ...]
    payoff: Callable[[int, Profile], float]
    symmetric: bool = False
    prescribed: Optional[Hashable] = None
    name: str = "game"
    oracle_assignment: Optional[Profile] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a game needs at least one player")
        if len(self.strategies) == 0:
            raise ValueError("a game needs at least one strategy")
        if len(set(self.strategies)) != len(self.strategies):
            raise ValueError("duplicate strategy identifiers")
        if self.prescribed is None:
            object.__setattr__(self, "prescribed", self.strategies[0])
        elif self.prescribed not in self.strategies:
            raise ValueError(f"prescribed strategy {self.prescribed!r} not in strategy set")


@dataclass(frozen=True)
class TypeAssignment:
    """A split of the player set into Byzantine (F), rational (G) and honest (rest)."""

    byzantine: frozenset
    rational: frozenset
    n: int
    prescribed: Hashable

    def __post_init__(self):
        object.__setattr__(self, "byzantine", frozenset(self.byzantine))
        object.__setattr__(self, "rational", frozenset(self.rational))
        players = set(range(self.n))
        if not self.byzantine <= players or not self.rational <= players:
            raise InvalidAssignmentError("type sets contain indices outside the player set")
        if self.byzantine & self.rational:
            raise InvalidAssignmentError(
                f"Byzantine and rational sets overlap: {sorted(self.byzantine & self.rational)}"
            )

    @property
    def honest(self) -> frozenset:
        return frozenset(range(self.n)) - self.byzantine - self.rational


def spot_check_symmetry(game: GenericGame, samples: int = 100, seed: int = 0) -> bool:
    """Spot-check permutation invariance: u_i(s) == u_{pi(i)}(s o pi^-1)."""
    rng = random.Random(seed)
    players = list(range(game.n))
    for _ in range(samples):
        profile = tuple(rng.choice(game.strategies) for _ in players)
        perm = players[:]
        rng.shuffle(perm)
        permuted = [None] * game.n
        for i in players:
            permuted[perm[i]] = profile[i]
        i = rng.choice(players)
        if game.payoff(i, profile) != game.payoff(perm[i], tuple(permuted)):
            return False
    return True


def congestion_game(n: int = 4, k: int = 2, u_safe: float = 1.0,
                    u_fast: float = 2.0, u_overload: float = 0.0) -> GenericGame:
    """Server-choice game: A is slow but safe, B pays more until over k users crash it."""
    if not u_fast > u_safe > u_overload:
        raise ValueError("congestion payoffs must satisfy u_fast > u_safe > u_overload")

    def payoff(i: int, profile: Profile) -> float:
        if profile[i] == "A":
            return u_safe
        return u_fast if sum(1 for s in profile if s == "B") <= k else u_overload

    return GenericGame(n=n, strategies=("A", "B"), payoff=payoff, symmetric=True,
                       prescribed="A", name=f"congestion(n={n},k={k})")


def congestion_candidate(n: int, k: int, f: int) -> Profile:
    """Rational joint profile that fills the fast server up to capacity: max(k-f, 0) on B."""
    g = n - f
    b = max(k - f, 0)
    if b > g:
        b = g
    return ("B",) * b + ("A",) * (g - b)


def prisoners_dilemma(reward: float = 3.0, temptation: float = 5.0,
                      sucker: float = 0.0, punishment: float = 1.0) -> GenericGame:
    """Two-player dilemma with strategies C and D, standard T > R > P > S payoffs."""
    if not (temptation > reward > punishment > sucker):
        raise ValueError("need temptation > reward > punishment > sucker")

    def payoff(i: int, profile: Profile) -> float:
        mine, theirs = profile[i], profile[1 - i]
        if mine == "C":
            return reward if theirs == "C" else sucker
        return temptation if theirs == "C" else punishment

    return GenericGame(n=2, strategies=("C", "D"), payoff=payoff, symmetric=True,
                       prescribed="C", name="prisoners_dilemma")


def game_from_json(spec: dict) -> GenericGame:
    """Build a game from a JSON description.

    Two forms are accepted: a named rule ("congestion" or "pd") with its
    parameters, or an explicit payoff table keyed by comma-joined profiles
    with one utility per player.
    """
    n = int(spec["players"])
    params = spec.get("params", {})
    rule = spec.get("rule")
    if rule == "congestion":
        k = int(params.get("k", 2))
        game = congestion_game(n=n, k=k,
                               u_safe=float(params.get("u_A", 1.0)),
                               u_fast=float(params.get("u_B1", 2.0)),
                               u_overload=float(params.get("u_B2", 0.0)))
        assignment = params.get("assignment")
        if assignment is not None:
            game = GenericGame(n=game.n, strategies=game.strategies, payoff=game.payoff,
                               symmetric=True, prescribed="A", name=game.name,
                               oracle_assignment=tuple(assignment))
        return game
    if rule == "pd":
        if n != 2:
            raise ValueError("the dilemma fixture is a two-player game")
        return prisoners_dilemma(reward=float(params.get("R", 3.0)),
                                 temptation=float(params.get("T", 5.0)),
                                 sucker=float(params.get("S", 0.0)),
                                 punishment=float(params.get("P", 1.0)))
    if "payoff_table" in spec:
        strategies = tuple(spec["strategies"])
        table = {}
        for key, utilities in spec["payoff_table"].items():
            profile = tuple(key.split(","))
            if len(profile) != n or len(utilities) != n:
                raise ValueError(f"table row {key!r} does not match {n} players")
            table[profile] = tuple(float(u) for u in utilities)

        def payoff(i: int, profile: Profile) -> float:
            return table[tuple(profile)][i]

        return GenericGame(n=n, strategies=strategies, payoff=payoff,
                           symmetric=bool(spec.get("symmetric", False)),
                           prescribed=spec.get("prescribed"),
                           name=spec.get("name", "table_game"))
    raise ValueError("game description needs either a known rule or a payoff_table")
