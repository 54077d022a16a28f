"""Analytic model of a quorum-based block endorsement stage game.

One agent per round proposes a block; every agent then either pays to check
its validity or not, and either endorses it or not.  A block joins the chain
once it collects at least Q endorsements.  Two optional protocol amendments
harden the game: fines for endorsing an invalid block, and deliberately
planted invalid "trap" blocks that make such fines a recurring threat.

All probabilities and utilities are computed with exact rational arithmetic so
that equilibrium-region boundaries and payoff ties are decided exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Mapping, Optional, Tuple

from .errors import BudgetExceededError, InvalidConfigError
from .games import GenericGame
from .simplex import SimplexPoint


class Amendment(Enum):
    BASE = "Base"
    FINES = "Fines"
    FINES_AND_TRAPS = "FinesAndTraps"

    @property
    def fines_active(self) -> bool:
        return self is not Amendment.BASE

    @property
    def traps_active(self) -> bool:
        return self is Amendment.FINES_AND_TRAPS


class Validity(Enum):
    VALID = "V"
    INVALID = "I"


class Acceptance(Enum):
    ACCEPTED = "A"   # accepted regardless of the focal agent's endorsement
    REJECTED = "R"   # rejected regardless of the focal agent's endorsement
    PIVOTAL = "P"    # the focal agent's endorsement decides acceptance


class Strategy(Enum):
    """The six pure behaviours available in the endorsement phase."""

    CHECK_ENDORSE = "ce"   # check, then endorse no matter the result
    CHECK_ABSTAIN = "c0"   # check, then never endorse
    HONEST = "h"           # check, endorse iff valid (the prescribed behaviour)
    SABOTAGE = "f"         # check, endorse iff invalid, and propose invalid blocks
    BLIND_ENDORSE = "e"    # skip the check, endorse everything
    ABSTAIN = "0"          # skip the check, endorse nothing

    @property
    def checks(self) -> bool:
        return self in (Strategy.CHECK_ENDORSE, Strategy.CHECK_ABSTAIN,
                        Strategy.HONEST, Strategy.SABOTAGE)

    def endorses(self, validity: Validity) -> bool:
        if self is Strategy.CHECK_ENDORSE or self is Strategy.BLIND_ENDORSE:
            return True
        if self is Strategy.CHECK_ABSTAIN or self is Strategy.ABSTAIN:
            return False
        if self is Strategy.HONEST:
            return validity is Validity.VALID
        return validity is Validity.INVALID


RATIONAL_CANDIDATES = (Strategy.HONEST, Strategy.BLIND_ENDORSE, Strategy.ABSTAIN)

REGION_HONEST = "HonestBARNE"
REGION_COLD_START = "ColdStartBARNE"
REGION_HONEST_VETO = "HonestVetoBARNE"
REGION_BREAKDOWN = "BreakdownBARNE"
REGION_THREATLESS = "ThreatlessBARNE"


@dataclass(frozen=True)
class BlockOutcome:
    acceptance: Acceptance
    validity: Validity


@dataclass(frozen=True)
class ProtocolParams:
    """One game instance: population size, quorum, and the economic constants.

    JSON keys follow the wire format: n, Q, r_e (endorsement reward), c_c
    (validity-check cost), L (chain-integrity loss when an invalid block is
    accepted), L_e (fine for endorsing an invalid block), p_prop (trap-block
    probability), amendments.
    """

    n: int
    quorum: int
    reward: float
    check_cost: float
    loss: float
    fine: float = 0.0
    trap_rate: float = 0.0
    amendments: Amendment = Amendment.BASE

    @classmethod
    def from_json(cls, data: Mapping) -> "ProtocolParams":
        try:
            amendments = Amendment(data.get("amendments", "Base"))
        except ValueError:
            raise InvalidConfigError(
                [f"unknown amendments level {data.get('amendments')!r}; "
                 f"expected one of {[a.value for a in Amendment]}"]
            )
        missing = [key for key in ("n", "Q", "r_e", "c_c", "L") if key not in data]
        if amendments.fines_active and "L_e" not in data:
            missing.append("L_e")
        if amendments.traps_active and "p_prop" not in data:
            missing.append("p_prop")
        if missing:
            raise InvalidConfigError([f"missing config key {key!r}" for key in missing])
        return cls(n=int(data["n"]), quorum=int(data["Q"]),
                   reward=float(data["r_e"]), check_cost=float(data["c_c"]),
                   loss=float(data["L"]), fine=float(data.get("L_e", 0.0)),
                   trap_rate=float(data.get("p_prop", 0.0)), amendments=amendments)

    def to_json(self) -> dict:
        return {"n": self.n, "Q": self.quorum, "r_e": self.reward,
                "c_c": self.check_cost, "L": self.loss, "L_e": self.fine,
                "p_prop": self.trap_rate, "amendments": self.amendments.value}


def validate_params(params: ProtocolParams, *, loss_factor: float = 10.0,
                    reward_factor: float = 10.0, fine_factor: float = 10.0,
                    quorum_guard: bool = True) -> list:
    """Return every violated invariant of a parameter set.

    The separation factors encode loss >> reward >> check cost (and
    fine >> reward under the fined amendments); callers may relax them.  The
    quorum guard rejects quorums that are tiny or nearly unanimous, either of
    which lets one side of the population decide blocks almost alone.
    """
    p = params
    violations = []
    if p.n < 2:
        violations.append(f"need at least 2 agents, got n={p.n}")
    if not 1 < p.quorum <= p.n:
        violations.append(f"quorum must satisfy 1 < Q <= n, got Q={p.quorum}, n={p.n}")
    if p.check_cost <= 0:
        violations.append(f"check cost must be positive, got c_c={p.check_cost}")
    if p.reward < reward_factor * p.check_cost:
        violations.append(
            f"reward r_e={p.reward} below {reward_factor} x check cost c_c={p.check_cost}")
    if p.loss < loss_factor * p.reward:
        violations.append(f"loss L={p.loss} below {loss_factor} x reward r_e={p.reward}")
    if p.amendments.fines_active:
        if p.fine < fine_factor * p.reward:
            violations.append(
                f"fine L_e={p.fine} below {fine_factor} x reward r_e={p.reward}")
    elif p.fine != 0:
        violations.append(f"fine L_e={p.fine} must be 0 without the fines amendment")
    if p.amendments.traps_active:
        if not 0 < p.trap_rate <= 1:
            violations.append(f"trap rate p_prop={p.trap_rate} must lie in (0, 1]")
        elif p.fine > 0 and p.trap_rate <= (p.reward + p.check_cost) / p.fine:
            violations.append(
                f"trap rate p_prop={p.trap_rate} must exceed "
                f"(r_e + c_c)/L_e = {(p.reward + p.check_cost) / p.fine}")
    elif p.trap_rate != 0:
        violations.append(
            f"trap rate p_prop={p.trap_rate} must be 0 without the traps amendment")
    if quorum_guard and p.n >= 2 and 1 < p.quorum <= p.n:
        if p.quorum < p.n / 4:
            violations.append(f"quorum Q={p.quorum} below n/4={p.n / 4} (too easy to fill)")
        ceiling = p.n - max(2.0, p.n / 20)
        if p.quorum > ceiling:
            violations.append(
                f"quorum Q={p.quorum} above n - max(2, n/20) = {ceiling} (nearly unanimous)")
    return violations


def stage_payoff(params: ProtocolParams, outcome: BlockOutcome,
                 strategy: Strategy) -> Fraction:
    """Utility of one round given the block's validity and acceptance class.

    A pivotal block resolves through the focal agent's own endorsement.  Under
    the fined amendments, endorsing an invalid block costs the fine whether or
    not the block is accepted.
    """
    invalid = outcome.validity is Validity.INVALID
    endorsed = strategy.endorses(outcome.validity)
    accepted = outcome.acceptance is Acceptance.ACCEPTED or (
        outcome.acceptance is Acceptance.PIVOTAL and endorsed)
    utility = Fraction(0)
    if accepted and endorsed:
        utility += Fraction(params.reward)
    if accepted and invalid:
        utility -= Fraction(params.loss)
    if strategy.checks:
        utility -= Fraction(params.check_cost)
    if params.amendments.fines_active and endorsed and invalid:
        utility -= Fraction(params.fine)
    return utility


def acceptance_class(params: ProtocolParams, point: SimplexPoint, sigma: Strategy,
                     validity: Validity) -> Acceptance:
    """Classify a block's fate relative to one focal rational agent.

    Counts the endorsements of everyone else: the h honest agents endorse
    valid blocks, the f saboteurs endorse invalid ones, and the g - 1 other
    rationals follow sigma.  At least Q is accepted outright, exactly Q - 1
    leaves the focal agent pivotal, anything lower is rejected outright.
    """
    if point.g < 1:
        raise ValueError("classification is relative to a rational agent; need g >= 1")
    peers = point.g - 1
    if validity is Validity.VALID:
        count = point.h + peers * int(sigma.endorses(Validity.VALID))
    else:
        count = point.f + peers * int(sigma.endorses(Validity.INVALID))
    if count >= params.quorum:
        return Acceptance.ACCEPTED
    if count == params.quorum - 1:
        return Acceptance.PIVOTAL
    return Acceptance.REJECTED


def proposer_proposes_valid(params: ProtocolParams, point: SimplexPoint,
                            sigma: Strategy) -> bool:
    """Whether a rational proposer prefers a valid block under the candidate profile.

    Compares the proposer's own stage payoff from proposing valid versus
    invalid, given the acceptance each would meet; ties go to valid.
    """
    u_valid = stage_payoff(
        params, BlockOutcome(acceptance_class(params, point, sigma, Validity.VALID),
                             Validity.VALID), sigma)
    u_invalid = stage_payoff(
        params, BlockOutcome(acceptance_class(params, point, sigma, Validity.INVALID),
                             Validity.INVALID), sigma)
    return u_valid >= u_invalid


@dataclass(frozen=True)
class BeliefMatrix:
    """Joint probabilities over (acceptance class, validity) for one focal agent."""

    accepted_valid: Fraction
    accepted_invalid: Fraction
    rejected_valid: Fraction
    rejected_invalid: Fraction
    pivotal_valid: Fraction
    pivotal_invalid: Fraction

    def cell(self, acceptance: Acceptance, validity: Validity) -> Fraction:
        return getattr(self, f"{acceptance.name.lower()}_{validity.name.lower()}")

    @property
    def p_valid(self) -> Fraction:
        return self.accepted_valid + self.rejected_valid + self.pivotal_valid

    @property
    def p_invalid(self) -> Fraction:
        return self.accepted_invalid + self.rejected_invalid + self.pivotal_invalid

    @property
    def p_accepted(self) -> Fraction:
        return self.accepted_valid + self.accepted_invalid

    @property
    def p_rejected(self) -> Fraction:
        return self.rejected_valid + self.rejected_invalid

    @property
    def p_pivotal(self) -> Fraction:
        return self.pivotal_valid + self.pivotal_invalid

    @property
    def total(self) -> Fraction:
        return self.p_valid + self.p_invalid

    def as_dict(self) -> dict:
        return {
            "p_AV": float(self.accepted_valid), "p_AI": float(self.accepted_invalid),
            "p_RV": float(self.rejected_valid), "p_RI": float(self.rejected_invalid),
            "p_PV": float(self.pivotal_valid), "p_PI": float(self.pivotal_invalid),
        }


def belief_matrix(params: ProtocolParams, point: SimplexPoint,
                  sigma: Strategy) -> BeliefMatrix:
    """Block-state beliefs when the other rationals play sigma.

    The round proposer is uniform over all n agents.  Saboteurs propose
    invalid blocks; honest agents propose valid ones; rational proposers
    choose by payoff (ties to valid).  Under the trap amendment every
    non-saboteur proposer is forced to propose an invalid trap block with
    probability p_prop, which floors the invalid-block mass at p_prop.
    """
    trap = Fraction(params.trap_rate) if params.amendments.traps_active else Fraction(0)
    rational_valid = proposer_proposes_valid(params, point, sigma)
    n = params.n
    valid_mass = (Fraction(point.h, n) + Fraction(point.g, n) * int(rational_valid)) * (1 - trap)
    invalid_mass = 1 - valid_mass

    cells = {(acc, val): Fraction(0) for acc in Acceptance for val in Validity}
    cells[(acceptance_class(params, point, sigma, Validity.VALID), Validity.VALID)] += valid_mass
    cells[(acceptance_class(params, point, sigma, Validity.INVALID), Validity.INVALID)] += invalid_mass
    return BeliefMatrix(
        accepted_valid=cells[(Acceptance.ACCEPTED, Validity.VALID)],
        accepted_invalid=cells[(Acceptance.ACCEPTED, Validity.INVALID)],
        rejected_valid=cells[(Acceptance.REJECTED, Validity.VALID)],
        rejected_invalid=cells[(Acceptance.REJECTED, Validity.INVALID)],
        pivotal_valid=cells[(Acceptance.PIVOTAL, Validity.VALID)],
        pivotal_invalid=cells[(Acceptance.PIVOTAL, Validity.INVALID)],
    )


def expected_payoff(params: ProtocolParams, beliefs: BeliefMatrix,
                    strategy: Strategy) -> Fraction:
    total = Fraction(0)
    for acceptance in Acceptance:
        for validity in Validity:
            mass = beliefs.cell(acceptance, validity)
            if mass:
                total += mass * stage_payoff(params, BlockOutcome(acceptance, validity), strategy)
    return total


def deviation_payoffs(params: ProtocolParams, point: SimplexPoint,
                      sigma: Strategy) -> Dict[Strategy, Fraction]:
    """Expected payoff of every pure reply against sigma-playing peers."""
    beliefs = belief_matrix(params, point, sigma)
    return {t: expected_payoff(params, beliefs, t) for t in Strategy}


def expected_payoffs(params: ProtocolParams, point: SimplexPoint,
                     sigma: Strategy) -> Dict[Strategy, Fraction]:
    """Expected payoffs of the three undominated replies against sigma-playing peers."""
    beliefs = belief_matrix(params, point, sigma)
    return {t: expected_payoff(params, beliefs, t) for t in RATIONAL_CANDIDATES}


class Sign(Enum):
    LT = "LT"
    EQ = "EQ"
    GT = "GT"


def _sign(value: Fraction) -> Sign:
    if value > 0:
        return Sign.GT
    if value < 0:
        return Sign.LT
    return Sign.EQ


@dataclass(frozen=True)
class InequalityLine:
    """One pairwise strategy comparison in threshold form.

    ``sign`` compares lhs to rhs; it must match the sign of the expected-payoff
    difference the threshold form was derived from (``payoff_gap``).
    """

    label: str
    lhs: Fraction
    rhs: Fraction
    sign: Sign
    payoff_gap: Fraction

    @property
    def consistent(self) -> bool:
        return self.sign is _sign(self.payoff_gap)

    def as_dict(self) -> dict:
        return {"label": self.label, "lhs": float(self.lhs), "rhs": float(self.rhs),
                "sign": self.sign.value, "payoff_gap": float(self.payoff_gap),
                "consistent": self.consistent}


@dataclass(frozen=True)
class InequalityReport:
    amendments: Amendment
    check_vs_abstain: InequalityLine
    check_vs_blind: InequalityLine
    abstain_vs_blind: InequalityLine

    @property
    def lines(self) -> Tuple[InequalityLine, ...]:
        return (self.check_vs_abstain, self.check_vs_blind, self.abstain_vs_blind)

    def as_dict(self) -> dict:
        return {"amendments": self.amendments.value,
                "lines": [line.as_dict() for line in self.lines]}


def inequality_report(params: ProtocolParams, point: SimplexPoint,
                      sigma: Strategy) -> InequalityReport:
    """The three threshold comparisons deciding best replies among h, e and 0.

    In each line a GT sign means the more diligent side wins: checking beats
    abstaining, checking beats blind endorsement, abstaining beats blind
    endorsement.  Under the fined amendments the left-hand sides gain the
    expected-fine term.
    """
    beliefs = belief_matrix(params, point, sigma)
    pays = {t: expected_payoff(params, beliefs, t) for t in RATIONAL_CANDIDATES}
    reward = Fraction(params.reward)
    loss = Fraction(params.loss)
    check_cost = Fraction(params.check_cost)
    fine_term = (beliefs.p_invalid * Fraction(params.fine)
                 if params.amendments.fines_active else Fraction(0))

    participation = InequalityLine(
        label="check_vs_abstain",
        lhs=(beliefs.accepted_valid + beliefs.pivotal_valid) * reward,
        rhs=check_cost,
        sign=_sign((beliefs.accepted_valid + beliefs.pivotal_valid) * reward - check_cost),
        payoff_gap=pays[Strategy.HONEST] - pays[Strategy.ABSTAIN],
    )
    diligence = InequalityLine(
        label="check_vs_blind",
        lhs=beliefs.pivotal_invalid * loss + fine_term,
        rhs=(beliefs.accepted_invalid + beliefs.pivotal_invalid) * reward + check_cost,
        sign=_sign(beliefs.pivotal_invalid * loss + fine_term
                   - (beliefs.accepted_invalid + beliefs.pivotal_invalid) * reward - check_cost),
        payoff_gap=pays[Strategy.HONEST] - pays[Strategy.BLIND_ENDORSE],
    )
    caution = InequalityLine(
        label="abstain_vs_blind",
        lhs=beliefs.pivotal_invalid * loss + fine_term,
        rhs=(beliefs.p_accepted + beliefs.p_pivotal) * reward,
        sign=_sign(beliefs.pivotal_invalid * loss + fine_term
                   - (beliefs.p_accepted + beliefs.p_pivotal) * reward),
        payoff_gap=pays[Strategy.ABSTAIN] - pays[Strategy.BLIND_ENDORSE],
    )
    return InequalityReport(amendments=params.amendments,
                            check_vs_abstain=participation,
                            check_vs_blind=diligence,
                            abstain_vs_blind=caution)


@dataclass(frozen=True)
class PointVerdict:
    """Equilibrium verdicts for the three undominated strategies at one point."""

    f: int
    g: int
    barne: Mapping[Strategy, bool]
    region: Mapping[Strategy, Optional[str]]

    def as_row(self) -> dict:
        return {
            "f": self.f, "g": self.g,
            "barne_h": self.barne[Strategy.HONEST],
            "barne_e": self.barne[Strategy.BLIND_ENDORSE],
            "barne_0": self.barne[Strategy.ABSTAIN],
            "region_h": self.region[Strategy.HONEST] or "",
            "region_e": self.region[Strategy.BLIND_ENDORSE] or "",
            "region_0": self.region[Strategy.ABSTAIN] or "",
        }


def _blind_region_label(params: ProtocolParams, f: int, g: int) -> str:
    if params.amendments is not Amendment.BASE:
        return REGION_THREATLESS
    if f + g < params.quorum:
        return REGION_HONEST_VETO
    if f + g > params.quorum:
        return REGION_BREAKDOWN
    return REGION_THREATLESS


def classify_point(params: ProtocolParams, f: int, g: int) -> PointVerdict:
    """Decide, for each undominated strategy, whether it is an equilibrium at (f, g).

    A candidate passes when it attains the maximum expected payoff over all
    six replies (weak argmax membership), with saboteurs held at their
    payoff-minimising behaviour.  Labels follow the named regions.
    """
    point = SimplexPoint(f, g, params.n)
    barne: Dict[Strategy, bool] = {}
    region: Dict[Strategy, Optional[str]] = {}
    for sigma in RATIONAL_CANDIDATES:
        pays = deviation_payoffs(params, point, sigma)
        best = max(pays.values())
        is_barne = pays[sigma] == best
        barne[sigma] = is_barne
        if not is_barne:
            region[sigma] = None
        elif sigma is Strategy.HONEST:
            region[sigma] = REGION_HONEST
        elif sigma is Strategy.ABSTAIN:
            region[sigma] = REGION_COLD_START
        else:
            region[sigma] = _blind_region_label(params, f, g)
    return PointVerdict(f=f, g=g, barne=barne, region=region)


class SpecialArea(Enum):
    """Simplex areas where one side of the population decides blocks alone."""

    BYZANTINE_QUORUM = "ByzantineQuorum"
    BYZANTINE_VETO = "ByzantineVeto"
    HONEST_QUORUM = "HonestQuorum"
    HONEST_VETO = "HonestVeto"


def special_areas(params: ProtocolParams, f: int, g: int) -> frozenset:
    SimplexPoint(f, g, params.n)
    n, quorum = params.n, params.quorum
    areas = set()
    if f >= quorum:
        areas.add(SpecialArea.BYZANTINE_QUORUM)
    if f > n - quorum:
        areas.add(SpecialArea.BYZANTINE_VETO)
    if f + g <= n - quorum:
        areas.add(SpecialArea.HONEST_QUORUM)
    if f + g < quorum:
        areas.add(SpecialArea.HONEST_VETO)
    return frozenset(areas)


@lru_cache(maxsize=200_000)
def _stage_value(params: ProtocolParams, own: Strategy,
                 profile_counts: Tuple[Tuple[str, int], ...]) -> Fraction:
    """Exact expected stage payoff of one agent given the full strategy multiset.

    Averages over the uniform proposer draw and, under the trap amendment, the
    trap draw of non-saboteur proposers.  Every agent, proposer included,
    endorses the block according to its own strategy, so the endorsement count
    of each validity is a pure function of the multiset.
    """
    counts = dict(profile_counts)
    n = params.n
    quorum = params.quorum
    trap = Fraction(params.trap_rate) if params.amendments.traps_active else Fraction(0)
    count_by_validity = {
        validity: sum(c for code, c in counts.items() if Strategy(code).endorses(validity))
        for validity in Validity
    }

    def round_value(validity: Validity) -> Fraction:
        accepted = count_by_validity[validity] >= quorum
        endorsed = own.endorses(validity)
        value = Fraction(0)
        if accepted and endorsed:
            value += Fraction(params.reward)
        if accepted and validity is Validity.INVALID:
            value -= Fraction(params.loss)
        if own.checks:
            value -= Fraction(params.check_cost)
        if params.amendments.fines_active and endorsed and validity is Validity.INVALID:
            value -= Fraction(params.fine)
        return value

    value_valid = round_value(Validity.VALID)
    value_invalid = round_value(Validity.INVALID)

    def prefers_valid(proposer: Strategy) -> bool:
        # the proposer's own payoff comparison, classifying acceptance against
        # the endorsements of the other n - 1 agents
        outcome = {}
        for validity in Validity:
            others = count_by_validity[validity] - int(proposer.endorses(validity))
            if others >= quorum:
                outcome[validity] = Acceptance.ACCEPTED
            elif others == quorum - 1:
                outcome[validity] = Acceptance.PIVOTAL
            else:
                outcome[validity] = Acceptance.REJECTED
        u_valid = stage_payoff(params, BlockOutcome(outcome[Validity.VALID], Validity.VALID), proposer)
        u_invalid = stage_payoff(params, BlockOutcome(outcome[Validity.INVALID], Validity.INVALID), proposer)
        return u_valid >= u_invalid

    total = Fraction(0)
    for code, count in counts.items():
        proposer = Strategy(code)
        if proposer is Strategy.SABOTAGE:
            total += count * value_invalid
        else:
            valid_weight = (1 - trap) if prefers_valid(proposer) else Fraction(0)
            total += count * (valid_weight * value_valid + (1 - valid_weight) * value_invalid)
    return total / n


def as_generic_game(params: ProtocolParams, f: int, g: int) -> GenericGame:
    """Wrap one stage of the endorsement game as a generic symmetric game.

    The payoff oracle enumerates proposer identity and trap draws exactly, and
    leaves every player's strategy free, so the generic exhaustive checkers
    can take the adversarial worst case over all six behaviours rather than
    assuming sabotage.  Exhaustive use is limited to small populations.
    """
    if params.n > 8:
        raise BudgetExceededError(
            f"exhaustive oracle supports n <= 8, got n={params.n}")
    SimplexPoint(f, g, params.n)

    def payoff(i: int, profile: tuple) -> Fraction:
        tally: Dict[str, int] = {}
        for s in profile:
            tally[s.value] = tally.get(s.value, 0) + 1
        key = tuple(sorted(tally.items()))
        return _stage_value(params, profile[i], key)

    return GenericGame(n=params.n, strategies=tuple(Strategy), payoff=payoff,
                       symmetric=True, prescribed=Strategy.HONEST,
                       name=f"endorsement(n={params.n},Q={params.quorum},"
                            f"{params.amendments.value})")
