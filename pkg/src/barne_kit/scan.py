"""Full-simplex equilibrium maps, their closed-form region counterparts, and serialization."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Optional, Tuple

from .endorsement import (
    Amendment,
    PointVerdict,
    ProtocolParams,
    Strategy,
    classify_point,
)
from .errors import BudgetExceededError, InvalidConfigError

SCAN_LIMIT = 500
SVG_COMMENT = "<!-- barne-kit simplex map, renderer v1 -->"

Point = Tuple[int, int]


def grid_points(n: int):
    """The integer simplex restricted to populations with at least one rational."""
    for f in range(n):
        for g in range(1, n - f + 1):
            yield f, g


@dataclass(frozen=True)
class SimplexMap:
    """Per-point equilibrium verdicts over the whole scaled simplex."""

    params: ProtocolParams
    verdicts: Tuple[PointVerdict, ...]

    def verdict_at(self, f: int, g: int) -> PointVerdict:
        return self._index()[(f, g)]

    def _index(self) -> Dict[Point, PointVerdict]:
        if not hasattr(self, "_cached_index"):
            object.__setattr__(self, "_cached_index",
                               {(v.f, v.g): v for v in self.verdicts})
        return self._cached_index

    def region(self, sigma: Strategy) -> FrozenSet[Point]:
        return frozenset((v.f, v.g) for v in self.verdicts if v.barne[sigma])

    def summary(self) -> dict:
        out = {}
        for sigma, key in ((Strategy.HONEST, "honest"),
                           (Strategy.BLIND_ENDORSE, "blind_endorse"),
                           (Strategy.ABSTAIN, "abstain")):
            points = self.region(sigma)
            entry = {"count": len(points),
                     "condition": region_condition(self.params, sigma)}
            if points:
                entry["f_range"] = [min(p[0] for p in points), max(p[0] for p in points)]
                entry["g_range"] = [min(p[1] for p in points), max(p[1] for p in points)]
            else:
                entry["f_range"] = None
                entry["g_range"] = None
            out[key] = entry
        return out

    def to_csv_string(self) -> str:
        lines = ["f,g,barne_h,barne_e,barne_0,region_h,region_e,region_0"]
        for v in self.verdicts:
            row = v.as_row()
            lines.append(
                f"{row['f']},{row['g']},"
                f"{str(row['barne_h']).lower()},{str(row['barne_e']).lower()},"
                f"{str(row['barne_0']).lower()},"
                f"{row['region_h']},{row['region_e']},{row['region_0']}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {"params": self.params.to_json(),
                "grid": [v.as_row() for v in self.verdicts],
                "summary": self.summary()}

    @classmethod
    def from_json_dict(cls, data: dict) -> "SimplexMap":
        params = ProtocolParams.from_json(data["params"])
        verdicts = []
        for row in data["grid"]:
            barne = {Strategy.HONEST: bool(row["barne_h"]),
                     Strategy.BLIND_ENDORSE: bool(row["barne_e"]),
                     Strategy.ABSTAIN: bool(row["barne_0"])}
            region = {Strategy.HONEST: row["region_h"] or None,
                      Strategy.BLIND_ENDORSE: row["region_e"] or None,
                      Strategy.ABSTAIN: row["region_0"] or None}
            verdicts.append(PointVerdict(f=int(row["f"]), g=int(row["g"]),
                                         barne=barne, region=region))
        return cls(params=params, verdicts=tuple(verdicts))


def simplex_scan(params: ProtocolParams) -> SimplexMap:
    """Classify every grid point with g >= 1; deterministic in grid order."""
    if params.n > SCAN_LIMIT:
        raise BudgetExceededError(f"full scans support n <= {SCAN_LIMIT}, got n={params.n}")
    verdicts = tuple(classify_point(params, f, g) for f, g in grid_points(params.n))
    return SimplexMap(params=params, verdicts=verdicts)


# -- closed-form regions -----------------------------------------------------
#
# Derived thresholds for where each candidate tops every reply, written with
# exact rational arithmetic so they can be compared to scans point by point.

def _econ(params: ProtocolParams):
    return (Fraction(params.reward), Fraction(params.check_cost),
            Fraction(params.loss), Fraction(params.fine))


def _invalid_mass(params: ProtocolParams, f: int) -> Fraction:
    # honest and rational proposers propose valid apart from forced traps
    trap = Fraction(params.trap_rate) if params.amendments.traps_active else Fraction(0)
    n = params.n
    return Fraction(f, n) + Fraction(n - f, n) * trap


def _honest_holds(params: ProtocolParams, f: int) -> bool:
    reward, check_cost, loss, fine = _econ(params)
    n, quorum = params.n, params.quorum
    if f > n - quorum:
        return False
    p_invalid = _invalid_mass(params, f)
    p_valid = 1 - p_invalid
    if p_valid * reward < check_cost:
        return False
    # versus blind endorsement, by the acceptance class invalid blocks meet
    if params.amendments.fines_active:
        if f <= quorum - 2:
            return p_invalid * fine >= check_cost
        if f == quorum - 1:
            return p_invalid * (loss + fine - reward) >= check_cost
        return p_invalid * (fine - reward) >= check_cost
    if f != quorum - 1:
        return False
    return p_invalid * (loss - reward) >= check_cost


def honest_region_points(params: ProtocolParams) -> FrozenSet[Point]:
    holds_by_f = {f: _honest_holds(params, f) for f in range(params.n)}
    return frozenset((f, g) for f, g in grid_points(params.n) if holds_by_f[f])


def abstain_region_points(params: ProtocolParams) -> FrozenSet[Point]:
    n, quorum = params.n, params.quorum
    points = set()
    for f, g in grid_points(n):
        if n - f - g > quorum - 2:
            continue
        if params.amendments is Amendment.BASE and f >= quorum:
            continue
        points.add((f, g))
    return frozenset(points)


def blind_region_points(params: ProtocolParams) -> FrozenSet[Point]:
    reward, check_cost, loss, fine = _econ(params)
    n, quorum = params.n, params.quorum
    if params.amendments.traps_active:
        return frozenset()
    points = set()
    for f, g in grid_points(n):
        p_invalid = Fraction(f, n)
        if params.amendments is Amendment.BASE:
            if f + g != quorum:
                points.add((f, g))
            elif (f <= n - quorum and p_invalid * (loss - reward) <= check_cost
                  and p_invalid * loss <= reward):
                points.add((f, g))
            continue
        # fined protocol: invalid endorsements must stay cheap enough
        if f + g < quorum:
            ok = (p_invalid * fine <= check_cost
                  and f <= n - quorum
                  and p_invalid * fine <= (1 - p_invalid) * reward)
        elif f + g > quorum:
            ok = (p_invalid * (fine - reward) <= check_cost
                  and f <= n - quorum
                  and p_invalid * fine <= reward)
        else:
            ok = (p_invalid * (loss + fine - reward) <= check_cost
                  and f <= n - quorum
                  and p_invalid * (loss + fine) <= reward)
        if ok:
            points.add((f, g))
    return frozenset(points)


def region_points(params: ProtocolParams, sigma: Strategy) -> FrozenSet[Point]:
    if sigma is Strategy.HONEST:
        return honest_region_points(params)
    if sigma is Strategy.ABSTAIN:
        return abstain_region_points(params)
    if sigma is Strategy.BLIND_ENDORSE:
        return blind_region_points(params)
    raise ValueError(f"no closed-form region for {sigma}")


def region_condition(params: ProtocolParams, sigma: Strategy) -> str:
    n, quorum = params.n, params.quorum
    if sigma is Strategy.HONEST:
        if params.amendments is Amendment.BASE:
            return f"f == Q-1 == {quorum - 1} and f <= n-Q == {n - quorum}"
        if params.amendments is Amendment.FINES:
            threshold = Fraction(params.check_cost * n) / Fraction(params.fine)
            return f"f >= n*c_c/L_e = {float(threshold):g} and f <= n-Q == {n - quorum}"
        return f"f <= n-Q == {n - quorum}"
    if sigma is Strategy.ABSTAIN:
        cap = f" and f < Q == {quorum}" if params.amendments is Amendment.BASE else ""
        return f"f+g > n-Q+1 == {n - quorum + 1}{cap}"
    if params.amendments.traps_active:
        return "empty"
    if params.amendments is Amendment.FINES:
        return "small-f leftovers of the threatless region"
    sliver = min(n - quorum,
                 int(Fraction(params.check_cost * n) / Fraction(params.loss - params.reward)))
    return (f"f+g != Q == {quorum}, plus the sliver f+g == Q with f <= {sliver}")


# -- rendering ----------------------------------------------------------------

_HATCHES = (
    (Strategy.HONEST, "hatch45", 45, "#1f4e9c"),
    (Strategy.BLIND_ENDORSE, "hatch135", 135, "#2e7d32"),
    (Strategy.ABSTAIN, "hatch90", 90, "#c62828"),
)
_LABELS = {Strategy.HONEST: "honest (h)", Strategy.BLIND_ENDORSE: "blind endorse (e)",
           Strategy.ABSTAIN: "abstain (0)"}


def render_svg(smap: SimplexMap, size: int = 640) -> str:
    """Draw the scan as a triangle with one hatch direction per strategy.

    The byzantine count runs along x and the rational count up y, both
    normalised by n, with axis ticks at 0, n-Q, Q and n.
    """
    n = smap.params.n
    quorum = smap.params.quorum
    margin = 70
    span = size - 2 * margin

    def x(f: float) -> float:
        return margin + span * f / n

    def y(g: float) -> float:
        return size - margin - span * g / n

    parts = ['<?xml version="1.0" encoding="UTF-8"?>']
    parts.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
                 f'viewBox="0 0 {size} {size}">')
    parts.append(SVG_COMMENT)
    parts.append("<defs>")
    for _, pattern_id, angle, color in _HATCHES:
        parts.append(
            f'<pattern id="{pattern_id}" width="6" height="6" patternUnits="userSpaceOnUse" '
            f'patternTransform="rotate({angle})">'
            f'<line x1="0" y1="0" x2="0" y2="6" stroke="{color}" stroke-width="1.4"/>'
            "</pattern>")
    parts.append("</defs>")
    parts.append(f'<rect width="{size}" height="{size}" fill="white"/>')

    cell = span / n
    for sigma, pattern_id, _, color in _HATCHES:
        for f, g in sorted(smap.region(sigma)):
            parts.append(
                f'<rect x="{x(f) - cell * 0.45:.2f}" y="{y(g) - cell * 0.45:.2f}" '
                f'width="{cell * 0.9:.2f}" height="{cell * 0.9:.2f}" '
                f'fill="url(#{pattern_id})" stroke="{color}" stroke-width="0.4"/>')

    parts.append(f'<path d="M {x(0):.2f} {y(0):.2f} L {x(n):.2f} {y(0):.2f} '
                 f'L {x(0):.2f} {y(n):.2f} Z" fill="none" stroke="black" stroke-width="1.5"/>')

    ticks = sorted({0, n - quorum, quorum, n})
    for tick in ticks:
        parts.append(f'<line x1="{x(tick):.2f}" y1="{y(0):.2f}" x2="{x(tick):.2f}" '
                     f'y2="{y(0) + 6:.2f}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{x(tick):.2f}" y="{y(0) + 22:.2f}" font-size="13" '
                     f'text-anchor="middle">{_tick_label(tick, n, quorum)}</text>')
        parts.append(f'<line x1="{x(0):.2f}" y1="{y(tick):.2f}" x2="{x(0) - 6:.2f}" '
                     f'y2="{y(tick):.2f}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{x(0) - 10:.2f}" y="{y(tick) + 4:.2f}" font-size="13" '
                     f'text-anchor="end">{_tick_label(tick, n, quorum)}</text>')
    parts.append(f'<text x="{x(n / 2):.2f}" y="{size - 14}" font-size="14" '
                 f'text-anchor="middle">byzantines (f)</text>')
    parts.append(f'<text x="18" y="{y(n / 2):.2f}" font-size="14" text-anchor="middle" '
                 f'transform="rotate(-90 18 {y(n / 2):.2f})">rationals (g)</text>')

    legend_y = margin - 40
    for idx, (sigma, pattern_id, _, color) in enumerate(_HATCHES):
        ly = legend_y + idx * 18
        parts.append(f'<rect x="{size - 230}" y="{ly}" width="14" height="14" '
                     f'fill="url(#{pattern_id})" stroke="{color}" stroke-width="0.6"/>')
        parts.append(f'<text x="{size - 210}" y="{ly + 12}" font-size="13">'
                     f'{_LABELS[sigma]}</text>')
    parts.append(f'<text x="{margin}" y="{margin - 44}" font-size="14">'
                 f'n={n}, Q={quorum}, {smap.params.amendments.value}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _tick_label(tick: int, n: int, quorum: int) -> str:
    if tick == 0:
        return "0"
    if tick == n:
        return "n"
    if tick == n - quorum:
        return "n-Q"
    if tick == quorum:
        return "Q"
    return str(tick)


def compare_maps(base: SimplexMap, fines: SimplexMap, traps: SimplexMap) -> dict:
    """Region growth and shrinkage across the three amendment levels.

    The scans must share n, Q and the base economics.  The report carries,
    per strategy, the region sizes and the point diffs between consecutive
    levels, plus the monotonicity facts the amendments are meant to deliver.
    """
    anchor = base.params
    for other in (fines.params, traps.params):
        mismatched = [name for name, a, b in (
            ("n", anchor.n, other.n), ("Q", anchor.quorum, other.quorum),
            ("r_e", anchor.reward, other.reward), ("c_c", anchor.check_cost, other.check_cost),
            ("L", anchor.loss, other.loss)) if a != b]
        if mismatched:
            raise InvalidConfigError(
                [f"scans disagree on {name}" for name in mismatched])

    report = {"params": {"n": anchor.n, "Q": anchor.quorum},
              "levels": [m.params.amendments.value for m in (base, fines, traps)],
              "strategies": {}}
    for sigma, key in ((Strategy.HONEST, "honest"),
                       (Strategy.BLIND_ENDORSE, "blind_endorse"),
                       (Strategy.ABSTAIN, "abstain")):
        regions = [m.region(sigma) for m in (base, fines, traps)]
        steps = []
        for before, after in zip(regions, regions[1:]):
            steps.append({"gained": len(after - before), "lost": len(before - after)})
        report["strategies"][key] = {
            "sizes": [len(r) for r in regions],
            "steps": steps,
        }
    honest = [m.region(Strategy.HONEST) for m in (base, fines, traps)]
    blind = [m.region(Strategy.BLIND_ENDORSE) for m in (base, fines, traps)]
    report["monotone_facts"] = {
        "honest_region_grows": honest[0] <= honest[1] <= honest[2],
        "blind_endorse_region_shrinks_to_empty":
            blind[0] >= blind[1] >= blind[2] and not blind[2],
    }
    report["identical"] = all(
        a.region(s) == b.region(s)
        for a, b in ((base, fines), (fines, traps))
        for s in (Strategy.HONEST, Strategy.BLIND_ENDORSE, Strategy.ABSTAIN))
    return report
