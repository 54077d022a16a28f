"""Monte Carlo execution of the consensus rounds with a mixed-type population.

Each round draws a proposer uniformly, fixes the block's validity from the
proposer's type (with forced trap blocks under the second amendment), lets
every agent endorse according to its strategy, accepts on a quorum of
endorsements, and books rewards, losses and fines.  Rounds are independent,
so the whole run is vectorised; results are bit-reproducible from the seed.

Agent layout: indices [0, f) are Byzantine saboteurs, [f, f+g) rational and
[f+g, n) honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .endorsement import (
    Amendment,
    ProtocolParams,
    Strategy,
    Validity,
    expected_payoffs,
    proposer_proposes_valid,
    validate_params,
)
from .errors import InvalidConfigError, MismatchedConfigError
from .simplex import SimplexPoint


@dataclass(frozen=True)
class SimConfig:
    """One simulation request: game instance, population point, strategies, seed."""

    params: ProtocolParams
    point: SimplexPoint
    rational_strategy: Strategy
    rounds: int
    seed: int
    deviant: Optional[Tuple[int, Strategy]] = None

    def violations(self, **validate_kwargs) -> list:
        out = validate_params(self.params, **validate_kwargs)
        if self.point.n != self.params.n:
            out.append(f"point n={self.point.n} disagrees with params n={self.params.n}")
        if self.point.g < 1:
            out.append("need at least one rational agent (g >= 1)")
        if self.rounds < 1:
            out.append(f"rounds must be >= 1, got {self.rounds}")
        if not 0 <= self.seed < 2 ** 64:
            out.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.deviant is not None:
            index, _ = self.deviant
            low, high = self.point.f, self.point.f + self.point.g
            if not low <= index < high:
                out.append(
                    f"deviant index {index} is not a rational agent "
                    f"(rational indices are [{low}, {high}))")
        return out

    def validated(self, **validate_kwargs) -> "SimConfig":
        violations = self.violations(**validate_kwargs)
        if violations:
            raise InvalidConfigError(violations)
        return self

    @classmethod
    def from_json(cls, data: Mapping) -> "SimConfig":
        params = ProtocolParams.from_json(data)
        missing = [key for key in ("point", "rational_strategy", "rounds", "seed")
                   if data.get(key) is None]
        if missing:
            raise InvalidConfigError([f"missing config key {key!r}" for key in missing])
        point_data = data["point"]
        point = SimplexPoint(f=int(point_data["f"]), g=int(point_data["g"]), n=params.n)
        deviant = None
        if data.get("deviant") is not None:
            deviant = (int(data["deviant"]["index"]), Strategy(data["deviant"]["strategy"]))
        return cls(params=params, point=point,
                   rational_strategy=Strategy(data["rational_strategy"]),
                   rounds=int(data["rounds"]), seed=int(data["seed"]), deviant=deviant)

    def to_json(self) -> dict:
        out = self.params.to_json()
        out.update({
            "point": {"f": self.point.f, "g": self.point.g},
            "rational_strategy": self.rational_strategy.value,
            "deviant": None if self.deviant is None else
                {"index": self.deviant[0], "strategy": self.deviant[1].value},
            "rounds": self.rounds,
            "seed": self.seed,
        })
        return out


@dataclass(frozen=True)
class RoundRecord:
    """Everything that happened in one round."""

    index: int
    proposer: int
    proposer_type: str
    block_valid: bool
    is_trap: bool
    endorsements: frozenset
    accepted: bool
    fines_issued: frozenset
    utilities: Tuple[float, ...]


@dataclass(frozen=True)
class ClassStats:
    """Per-round payoff statistics of one strategy class."""

    mean: float
    variance: float
    agents: int

    def std_error(self, rounds: int) -> float:
        return math.sqrt(self.variance / rounds) if rounds > 0 else 0.0


@dataclass(frozen=True)
class SimResult:
    """Aggregate outcome of a run; totals are recomputable from the round records."""

    config: SimConfig
    per_agent_total: Tuple[float, ...]
    per_agent_mean: Tuple[float, ...]
    byzantine_stats: Optional[ClassStats]
    honest_stats: Optional[ClassStats]
    rational_stats: Dict[str, ClassStats]
    counts: Dict[str, int]
    seed: int
    records: Optional[Tuple[RoundRecord, ...]] = field(default=None, compare=False)

    def to_json(self) -> dict:
        def stats_dict(stats):
            return None if stats is None else {
                "mean": stats.mean, "variance": stats.variance, "agents": stats.agents}
        return {
            "config": self.config.to_json(),
            "per_agent_total": list(self.per_agent_total),
            "per_agent_mean": list(self.per_agent_mean),
            "byzantine": stats_dict(self.byzantine_stats),
            "honest": stats_dict(self.honest_stats),
            "rational": {code: stats_dict(s) for code, s in self.rational_stats.items()},
            "counts": dict(self.counts),
            "seed": self.seed,
        }


def _class_layout(config: SimConfig) -> List[Tuple[str, Strategy, List[int]]]:
    f, g, n = config.point.f, config.point.g, config.params.n
    deviant_index = config.deviant[0] if config.deviant else None
    classes: List[Tuple[str, Strategy, List[int]]] = []
    if f:
        classes.append(("byzantine", Strategy.SABOTAGE, list(range(f))))
    plain = [i for i in range(f, f + g) if i != deviant_index]
    if plain:
        classes.append((f"rational:{config.rational_strategy.value}",
                        config.rational_strategy, plain))
    if deviant_index is not None:
        classes.append((f"deviant:{config.deviant[1].value}",
                        config.deviant[1], [deviant_index]))
    if n - f - g:
        classes.append(("honest", Strategy.HONEST, list(range(f + g, n))))
    return classes


def _exact_stats(payoffs: np.ndarray, agents: int) -> ClassStats:
    """Mean and variance through the distinct payoff values, so runs whose
    payoff never varies report their constant exactly."""
    rounds = payoffs.size
    values, counts = np.unique(payoffs, return_counts=True)
    mean = sum(Fraction(float(v)) * int(c) for v, c in zip(values, counts)) / rounds
    mean_f = float(mean)
    if len(values) == 1 or rounds < 2:
        variance = 0.0
    else:
        variance = float(sum(int(c) * (float(v) - mean_f) ** 2
                             for v, c in zip(values, counts)) / (rounds - 1))
    return ClassStats(mean=mean_f, variance=variance, agents=agents)


def run_simulation(config: SimConfig, *, trace: bool = False,
                   validate: bool = True, **validate_kwargs) -> SimResult:
    """Run the configured number of rounds; deterministic given the seed."""
    if validate:
        config.validated(**validate_kwargs)
    params, point = config.params, config.point
    n, quorum, rounds = params.n, params.quorum, config.rounds
    f, g = point.f, point.g
    fines_on = params.amendments.fines_active
    trap_rate = params.trap_rate if params.amendments.traps_active else 0.0

    rng = np.random.Generator(np.random.Philox(key=config.seed))
    proposers = rng.integers(0, n, size=rounds)
    trap_rolls = rng.random(rounds)

    proposer_byz = proposers < f
    proposer_rational = (proposers >= f) & (proposers < f + g)
    is_trap = (trap_rolls < trap_rate) & ~proposer_byz
    rational_valid = proposer_proposes_valid(params, point, config.rational_strategy)
    valid = ~proposer_byz & ~is_trap & np.where(proposer_rational, rational_valid, True)
    invalid = ~valid

    classes = _class_layout(config)
    strategy_of = {}
    for _, strategy, members in classes:
        for i in members:
            strategy_of[i] = strategy
    count_valid = sum(int(s.endorses(Validity.VALID)) for s in strategy_of.values())
    count_invalid = sum(int(s.endorses(Validity.INVALID)) for s in strategy_of.values())
    endorsement_count = np.where(valid, count_valid, count_invalid)
    accepted = endorsement_count >= quorum

    reward, check_cost = params.reward, params.check_cost
    loss, fine = params.loss, params.fine

    per_agent_total = np.zeros(n)
    byz_stats = honest_stats = None
    rational_stats: Dict[str, ClassStats] = {}
    class_payoffs: Dict[str, np.ndarray] = {}
    for name, strategy, members in classes:
        endorsed = np.where(valid, strategy.endorses(Validity.VALID),
                            strategy.endorses(Validity.INVALID))
        payoff = (accepted * (endorsed * reward - invalid * loss)
                  - float(strategy.checks) * check_cost)
        if fines_on:
            payoff = payoff - (invalid & endorsed) * fine
        payoff = payoff.astype(float)
        class_payoffs[name] = payoff
        total = float(payoff.sum())
        for i in members:
            per_agent_total[i] = total
        stats = _exact_stats(payoff, len(members))
        if name == "byzantine":
            byz_stats = stats
        elif name == "honest":
            honest_stats = stats
        else:
            code = name.split(":", 1)[1]
            rational_stats[code] = stats

    fined_per_round = np.where(invalid & fines_on, count_invalid, 0)
    counts = {
        "rounds": rounds,
        "valid_blocks": int(valid.sum()),
        "accepted_blocks": int(accepted.sum()),
        "trap_blocks": int(is_trap.sum()),
        "byzantine_proposals": int(proposer_byz.sum()),
        "non_byzantine_proposals": int((~proposer_byz).sum()),
        "fines_issued": int(fined_per_round.sum()),
    }

    records = None
    if trace:
        records = tuple(_build_record(r, config, classes, proposers, valid, is_trap,
                                      accepted, class_payoffs, fines_on)
                        for r in range(rounds))

    return SimResult(
        config=config,
        per_agent_total=tuple(float(x) for x in per_agent_total),
        per_agent_mean=tuple(float(x) / rounds for x in per_agent_total),
        byzantine_stats=byz_stats,
        honest_stats=honest_stats,
        rational_stats=rational_stats,
        counts=counts,
        seed=config.seed,
        records=records,
    )


def _build_record(r: int, config: SimConfig, classes, proposers, valid, is_trap,
                  accepted, class_payoffs, fines_on) -> RoundRecord:
    f, g = config.point.f, config.point.g
    proposer = int(proposers[r])
    if proposer < f:
        proposer_type = "byzantine"
    elif proposer < f + g:
        proposer_type = "rational"
    else:
        proposer_type = "honest"
    validity = Validity.VALID if valid[r] else Validity.INVALID
    endorsers = set()
    utilities = [0.0] * config.params.n
    for name, strategy, members in classes:
        if strategy.endorses(validity):
            endorsers.update(members)
        for i in members:
            utilities[i] = float(class_payoffs[name][r])
    fined = frozenset(endorsers) if (fines_on and validity is Validity.INVALID) else frozenset()
    return RoundRecord(index=r, proposer=proposer, proposer_type=proposer_type,
                       block_valid=bool(valid[r]), is_trap=bool(is_trap[r]),
                       endorsements=frozenset(endorsers), accepted=bool(accepted[r]),
                       fines_issued=fined, utilities=tuple(utilities))


def accusation_check(record: RoundRecord, amendments: Amendment) -> frozenset:
    """Agents to fine for the round: endorsers of an invalid block, accepted or not.

    Without the fines amendment there is no fine mechanism and nobody is fined.
    The accusation proof is abstracted as always correct.
    """
    if record.block_valid or not amendments.fines_active:
        return frozenset()
    return frozenset(record.endorsements)


@dataclass(frozen=True)
class DeviationRow:
    strategy: Strategy
    empirical_mean: float
    analytic_mean: float
    std_error: float
    flagged: bool

    def as_dict(self) -> dict:
        return {"strategy": self.strategy.value, "empirical_mean": self.empirical_mean,
                "analytic_mean": self.analytic_mean, "std_error": self.std_error,
                "deviation": abs(self.empirical_mean - self.analytic_mean),
                "flagged": self.flagged}


@dataclass(frozen=True)
class DeviationReport:
    rows: Tuple[DeviationRow, ...]

    @property
    def any_flagged(self) -> bool:
        return any(row.flagged for row in self.rows)

    def as_dict(self) -> dict:
        return {"rows": [row.as_dict() for row in self.rows],
                "any_flagged": self.any_flagged}


def empirical_vs_analytic(result: SimResult, params: ProtocolParams,
                          point: SimplexPoint, sigma: Strategy,
                          sigma_limit: float = 4.0) -> DeviationReport:
    """Compare measured rational payoffs against the closed-form expectations.

    The result must come from a run under exactly (params, point, sigma); each
    rational strategy class present is compared to its analytic expected
    payoff and flagged beyond ``sigma_limit`` standard errors.  A class whose
    payoff never varied must match exactly.
    """
    config = result.config
    if (config.params != params or config.point != point
            or config.rational_strategy != sigma):
        raise MismatchedConfigError(
            "simulation was run under a different (params, point, sigma) triple")
    expectations = expected_payoffs(params, point, sigma)
    by_code = {s.value: s for s in expectations}
    rounds = config.rounds
    rows = []
    for code, stats in sorted(result.rational_stats.items()):
        strategy = by_code.get(code)
        if strategy is None:
            continue
        analytic = float(expectations[strategy])
        se = stats.std_error(rounds)
        deviation = abs(stats.mean - analytic)
        flagged = deviation > sigma_limit * se if se > 0 else deviation != 0
        rows.append(DeviationRow(strategy=strategy, empirical_mean=stats.mean,
                                 analytic_mean=analytic, std_error=se, flagged=flagged))
    return DeviationReport(rows=tuple(rows))
