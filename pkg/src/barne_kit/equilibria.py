"""Equilibrium checks for populations mixing adversarial, honest and payoff-seeking agents.

All checks are exhaustive over pure joint profiles.  The adversarial worst case
is taken over pure joint deviations only: payoffs are multilinear in mixed
extensions, so the minimum over mixed adversary profiles is attained at a pure
vertex, and for pure-strategy analysis pure enumeration is exact by definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, product
from typing import Hashable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceededError, NoConvergenceError, SymmetryRequiredError
from .games import GenericGame, TypeAssignment
from .simplex import INFINITY, SimplexPoint, lattice_ball

EVAL_BUDGET = 10 ** 8


@dataclass(frozen=True)
class Violation:
    """Witness that a profile fails an equilibrium condition.

    ``kind`` is one of "best_response" (a rational has a better worst-case
    reply), "immunity" (an adversarial deviation hurts a non-Byzantine agent)
    or "coalition" (a rational coalition deviation strictly improves every
    member).  Payoffs are reported per listed agent, before and after.
    """

    kind: str
    agents: Tuple[int, ...]
    deviation: Tuple[Hashable, ...]
    byzantine_set: Tuple[int, ...]
    byzantine_profile: Tuple[Hashable, ...]
    payoff_before: Tuple[float, ...]
    payoff_after: Tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "agents": list(self.agents),
            "deviation": [str(s) for s in self.deviation],
            "byzantine_set": list(self.byzantine_set),
            "byzantine_profile": [str(s) for s in self.byzantine_profile],
            "payoff_before": [float(p) for p in self.payoff_before],
            "payoff_after": [float(p) for p in self.payoff_after],
        }


@dataclass(frozen=True)
class StabilityViolation:
    """A stability check failed at a specific population point."""

    f: int
    g: int
    inner: Violation

    def as_dict(self) -> dict:
        return {"f": self.f, "g": self.g, "inner": self.inner.as_dict()}


def _check_budget(estimate: float, what: str, budget: int = EVAL_BUDGET) -> None:
    if estimate > budget:
        raise BudgetExceededError(
            f"{what} needs about {estimate:.3g} payoff evaluations, budget is {budget:.3g}"
        )


def _byzantine_profiles(strategies: Sequence, f: int, symmetric: bool):
    """Joint adversary profiles; multisets suffice when payoffs are symmetric."""
    if f == 0:
        yield ()
        return
    if symmetric:
        yield from combinations_with_replacement(strategies, f)
    else:
        yield from product(strategies, repeat=f)


def barne_at_sets_violation(game: GenericGame, assign: TypeAssignment,
                            candidate: Sequence[Hashable]) -> Optional[Violation]:
    """Check the worst-case best-reply condition at an explicit type assignment.

    ``candidate`` lists the strategy of every rational agent, aligned with
    ``sorted(assign.rational)``.  Honest agents play ``assign.prescribed``.
    Returns None when every rational's strategy attains the max-min value
    (ties count as attainment), else a witness with the better reply.
    """
    if assign.n != game.n:
        raise ValueError(f"assignment is for {assign.n} players, game has {game.n}")
    byz = sorted(assign.byzantine)
    rationals = sorted(assign.rational)
    if len(candidate) != len(rationals):
        raise ValueError(f"candidate assigns {len(candidate)} strategies to {len(rationals)} rationals")
    if not rationals:
        return None

    strategies = game.strategies
    f, g = len(byz), len(rationals)
    _check_budget(len(strategies) ** f * len(strategies) * g, "best-reply enumeration")

    profile = [assign.prescribed] * game.n
    for pos, i in enumerate(rationals):
        profile[i] = candidate[pos]

    for pos, i in enumerate(rationals):
        own = candidate[pos]
        worst: dict = {}
        punisher: dict = {}
        for t in strategies:
            profile[i] = t
            value = None
            arg = ()
            for adversary in _byzantine_profiles(strategies, f, game.symmetric):
                for slot, s in zip(byz, adversary):
                    profile[slot] = s
                u = game.payoff(i, tuple(profile))
                if value is None or u < value:
                    value, arg = u, adversary
            worst[t] = value
            punisher[t] = arg
        profile[i] = own
        best = max(worst.values())
        if worst[own] < best:
            better = max(strategies, key=lambda t: worst[t])
            return Violation(
                kind="best_response",
                agents=(i,),
                deviation=(better,),
                byzantine_set=tuple(byz),
                byzantine_profile=tuple(punisher[own]),
                payoff_before=(worst[own],),
                payoff_after=(best,),
            )
    return None


def barne_at_sets(game: GenericGame, assign: TypeAssignment,
                  candidate: Sequence[Hashable]) -> bool:
    return barne_at_sets_violation(game, assign, candidate) is None


def _require_symmetric(game: GenericGame) -> None:
    if not game.symmetric:
        raise SymmetryRequiredError(f"{game.name} is not marked symmetric; count-based checks need symmetry")


def _canonical_assignment(game: GenericGame, f: int, g: int) -> TypeAssignment:
    if f < 0 or g < 0 or f + g > game.n:
        raise ValueError(f"(f={f}, g={g}) is not a valid split of {game.n} players")
    return TypeAssignment(byzantine=frozenset(range(f)),
                          rational=frozenset(range(f, f + g)),
                          n=game.n, prescribed=game.prescribed)


def barne_at_counts_violation(game: GenericGame, f: int, g: int,
                              sigma: Hashable) -> Optional[Violation]:
    """Symmetric check at population counts via one canonical type partition.

    Permutation invariance makes every (F, G) partition of the given sizes
    equivalent, so checking the canonical one decides them all.
    """
    _require_symmetric(game)
    if sigma not in game.strategies:
        raise ValueError(f"unknown strategy {sigma!r}")
    assign = _canonical_assignment(game, f, g)
    return barne_at_sets_violation(game, assign, (sigma,) * g)


def barne_at_counts(game: GenericGame, f: int, g: int, sigma: Hashable) -> bool:
    return barne_at_counts_violation(game, f, g, sigma) is None


def bar_strong_violation(game: GenericGame, f_bar: int, g_bar: int,
                         candidate: Sequence[Hashable]) -> Optional[Violation]:
    """Check joint-deviation robustness of a full candidate profile.

    Condition one (immunity): no adversarial joint deviation of up to f_bar
    agents may lower any other agent's payoff.  Condition two: for every
    adversarial context, every rational coalition of up to g_bar agents must
    leave at least one member weakly worse than not deviating.
    """
    n = game.n
    candidate = tuple(candidate)
    if len(candidate) != n:
        raise ValueError(f"candidate profile has {len(candidate)} entries for {n} players")
    strategies = game.strategies
    t = len(strategies)

    estimate = 0.0
    for fs in range(f_bar + 1):
        estimate += math.comb(n, fs) * t ** fs * n
        for gs in range(1, g_bar + 1):
            if fs + gs > n:
                continue
            estimate += math.comb(n, fs) * t ** fs * math.comb(n - fs, gs) * t ** gs * gs
    _check_budget(estimate, "joint-deviation enumeration")

    base = {i: game.payoff(i, candidate) for i in range(n)}

    for fs in range(1, f_bar + 1):
        for byz in combinations(range(n), fs):
            profile = list(candidate)
            for adversary in product(strategies, repeat=fs):
                for slot, s in zip(byz, adversary):
                    profile[slot] = s
                frozen = tuple(profile)
                for i in range(n):
                    if i in byz:
                        continue
                    after = game.payoff(i, frozen)
                    if after < base[i]:
                        return Violation(
                            kind="immunity",
                            agents=(i,),
                            deviation=(),
                            byzantine_set=byz,
                            byzantine_profile=adversary,
                            payoff_before=(base[i],),
                            payoff_after=(after,),
                        )
            for slot in byz:
                profile[slot] = candidate[slot]

    for fs in range(f_bar + 1):
        for byz in combinations(range(n), fs):
            others = [i for i in range(n) if i not in byz]
            for adversary in product(strategies, repeat=fs):
                context = list(candidate)
                for slot, s in zip(byz, adversary):
                    context[slot] = s
                frozen_context = tuple(context)
                reference = {i: game.payoff(i, frozen_context) for i in others}
                for gs in range(1, min(g_bar, len(others)) + 1):
                    for coalition in combinations(others, gs):
                        profile = list(frozen_context)
                        for joint in product(strategies, repeat=gs):
                            for slot, s in zip(coalition, joint):
                                profile[slot] = s
                            frozen = tuple(profile)
                            gains = [game.payoff(i, frozen) for i in coalition]
                            if all(after > reference[i] for i, after in zip(coalition, gains)):
                                return Violation(
                                    kind="coalition",
                                    agents=coalition,
                                    deviation=joint,
                                    byzantine_set=byz,
                                    byzantine_profile=adversary,
                                    payoff_before=tuple(reference[i] for i in coalition),
                                    payoff_after=tuple(gains),
                                )
                        for slot in coalition:
                            profile[slot] = frozen_context[slot]
    return None


def bar_strong(game: GenericGame, f_bar: int, g_bar: int,
               candidate: Sequence[Hashable]) -> bool:
    return bar_strong_violation(game, f_bar, g_bar, candidate) is None


def delta_stable_violation(game: GenericGame, sigma: Hashable, f_dot: int, g_dot: int,
                           delta: float, norm: str = INFINITY) -> Optional[StabilityViolation]:
    """Check that sigma stays an equilibrium on every lattice point of the delta ball."""
    _require_symmetric(game)
    center = SimplexPoint(f_dot, g_dot, game.n)
    for point in lattice_ball(center, delta, norm):
        inner = barne_at_counts_violation(game, point.f, point.g, sigma)
        if inner is not None:
            return StabilityViolation(f=point.f, g=point.g, inner=inner)
    return None


def delta_stable(game: GenericGame, sigma: Hashable, f_dot: int, g_dot: int,
                 delta: float, norm: str = INFINITY) -> bool:
    return delta_stable_violation(game, sigma, f_dot, g_dot, delta, norm) is None


def globally_stable_violation(game: GenericGame, sigma: Hashable, f_bar: int,
                              g_bar: int) -> Optional[StabilityViolation]:
    """Check that sigma stays an equilibrium at every (f, g) below the given bounds."""
    _require_symmetric(game)
    if f_bar + g_bar > game.n:
        raise ValueError(f"bounds (f_bar={f_bar}, g_bar={g_bar}) exceed n={game.n}")
    for f in range(f_bar + 1):
        for g in range(g_bar + 1):
            inner = barne_at_counts_violation(game, f, g, sigma)
            if inner is not None:
                return StabilityViolation(f=f, g=g, inner=inner)
    return None


def globally_stable(game: GenericGame, sigma: Hashable, f_bar: int, g_bar: int) -> bool:
    return globally_stable_violation(game, sigma, f_bar, g_bar) is None


def check_inclusion_chain(game: GenericGame, sigma: Hashable, f_bar: int, g_bar: int,
                          delta: int = 1) -> list:
    """Verify the implication chain between the solution concepts on one instance.

    Joint-deviation robustness must imply global stability; global stability
    at (f_bar, g_bar) must imply delta-stability at every centre at least
    delta below both bounds; delta-stability must imply the plain equilibrium
    at its centre.  Returns the failed implications, empty when the chain holds.
    """
    failures = []
    strong = bar_strong(game, f_bar, g_bar, (sigma,) * game.n)
    stable = globally_stable(game, sigma, f_bar, g_bar)
    if strong and not stable:
        failures.append(f"{game.name}: {sigma!r} joint-robust at ({f_bar},{g_bar}) "
                        f"but not globally stable")
    for f_dot in range(max(f_bar - delta, -1) + 1):
        for g_dot in range(max(g_bar - delta, -1) + 1):
            if f_dot + g_dot > game.n:
                continue
            locally = delta_stable(game, sigma, f_dot, g_dot, delta)
            if stable and not locally:
                failures.append(f"{game.name}: {sigma!r} globally stable at "
                                f"({f_bar},{g_bar}) but not {delta}-stable at "
                                f"({f_dot},{g_dot})")
            if locally and not barne_at_counts(game, f_dot, g_dot, sigma):
                failures.append(f"{game.name}: {sigma!r} {delta}-stable at "
                                f"({f_dot},{g_dot}) but not an equilibrium there")
    return failures


@dataclass(frozen=True)
class MixedStrategy:
    """A probability distribution over strategy identifiers."""

    weights: Mapping[Hashable, float]

    def __post_init__(self):
        total = 0.0
        for s, w in self.weights.items():
            if w < 0:
                raise ValueError(f"negative weight {w} on {s!r}")
            total += w
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, expected 1")

    def weight(self, strategy: Hashable) -> float:
        return float(self.weights.get(strategy, 0.0))

    def support(self) -> Tuple[Hashable, ...]:
        return tuple(s for s, w in self.weights.items() if w > 0)


def _multiset_counts(strategies: Sequence, size: int):
    """All multisets of the given size as count vectors over the strategy order."""
    k = len(strategies)
    if size == 0:
        yield (0,) * k
        return
    for combo in combinations_with_replacement(range(k), size):
        counts = [0] * k
        for idx in combo:
            counts[idx] += 1
        yield tuple(counts)


def find_symmetric_mixed_barne(game: GenericGame, f: int, g: int, tolerance: float,
                               *, max_iterations: int = 10_000, step: float = 0.5,
                               grid_resolution: int = 200,
                               budget: int = EVAL_BUDGET) -> MixedStrategy:
    """Search for a symmetric mixed strategy whose max-min regret is within tolerance.

    Regret of a mix x is  max_t W(t, x) - value(x),  where W(t, x) is the pure
    reply t's worst-case expected payoff over adversary joint pure profiles
    when the other g-1 rationals draw from x, and value(x) is the worst case
    of the mixture itself.  Pure candidates are tried first (prescribed
    strategy foremost), then damped best-reply iteration from the uniform mix,
    then an exhaustive simplex grid.  Raises NoConvergenceError, carrying the
    best iterate, when nothing reaches the tolerance.
    """
    _require_symmetric(game)
    if g < 1:
        raise ValueError("need at least one rational agent")
    if f + g > game.n:
        raise ValueError(f"(f={f}, g={g}) is not a valid split of {game.n} players")
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")

    strategies = game.strategies
    k = len(strategies)
    h = game.n - f - g
    byz_counts = list(_multiset_counts(strategies, f))
    peer_counts = list(_multiset_counts(strategies, g - 1))
    _check_budget(float(k) * len(byz_counts) * len(peer_counts), "mixed-reply table", budget)

    def build_profile(own_idx: int, byz: Tuple[int, ...], peers: Tuple[int, ...]) -> tuple:
        profile = []
        for idx, count in enumerate(byz):
            profile.extend([strategies[idx]] * count)
        profile.append(strategies[own_idx])
        for idx, count in enumerate(peers):
            profile.extend([strategies[idx]] * count)
        profile.extend([game.prescribed] * h)
        return tuple(profile)

    focal = f
    table = np.empty((k, len(byz_counts), len(peer_counts)), dtype=float)
    for ti in range(k):
        for bi, byz in enumerate(byz_counts):
            for pi, peers in enumerate(peer_counts):
                table[ti, bi, pi] = float(game.payoff(focal, build_profile(ti, byz, peers)))

    peer_matrix = np.array(peer_counts, dtype=float)
    coeffs = np.array([
        float(math.factorial(g - 1) // math.prod(math.factorial(c) for c in counts))
        for counts in peer_counts
    ])

    def peer_weights(mix: np.ndarray) -> np.ndarray:
        # multinomial weight of each peer multiset; 0 ** 0 == 1 keeps unused
        # strategies from zeroing multisets that never draw them
        return coeffs * np.prod(np.power(mix[None, :], peer_matrix), axis=1)

    def evaluate(mix: np.ndarray) -> tuple:
        w = peer_weights(mix)
        replies = table @ w                       # (k, byz)
        worst_per_pure = replies.min(axis=1)      # W(t, mix)
        value = float((mix @ replies).min())      # worst case of the mixture
        regret = float(worst_per_pure.max() - value)
        return regret, worst_per_pure

    def to_mixed(mix: np.ndarray) -> MixedStrategy:
        clipped = np.clip(mix, 0.0, None)
        clipped = clipped / clipped.sum()
        return MixedStrategy(dict(zip(strategies, (float(x) for x in clipped))))

    best_mix = None
    best_regret = math.inf

    def consider(mix: np.ndarray) -> bool:
        nonlocal best_mix, best_regret
        regret, _ = evaluate(mix)
        if regret < best_regret:
            best_regret, best_mix = regret, mix.copy()
        return regret <= tolerance

    order = [game.strategies.index(game.prescribed)]
    order += [i for i in range(k) if i != order[0]]
    for ti in order:
        pure = np.zeros(k)
        pure[ti] = 1.0
        if consider(pure):
            return to_mixed(pure)

    mix = np.full(k, 1.0 / k)
    for _ in range(max_iterations):
        regret, worst_per_pure = evaluate(mix)
        if regret < best_regret:
            best_regret, best_mix = regret, mix.copy()
        if regret <= tolerance:
            return to_mixed(mix)
        reply = np.zeros(k)
        reply[int(np.argmax(worst_per_pure))] = 1.0
        mix = (1.0 - step) * mix + step * reply

    resolution = grid_resolution
    while resolution > 1 and math.comb(resolution + k - 1, k - 1) > 25_000:
        resolution -= 1
    for counts in _multiset_counts(strategies, resolution):
        grid_mix = np.array(counts, dtype=float) / resolution
        if consider(grid_mix):
            return to_mixed(grid_mix)

    if best_regret <= tolerance:
        return to_mixed(best_mix)
    raise NoConvergenceError(to_mixed(best_mix).weights, best_regret)
