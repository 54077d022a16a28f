"""Command-line front end: classification, scans, simulation, fixture checks, diffs.

Exit codes are a stable contract: 0 success, 2 config violation, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .endorsement import (
    Amendment,
    ProtocolParams,
    Strategy,
    as_generic_game,
    classify_point,
    expected_payoffs,
    inequality_report,
    special_areas,
    validate_params,
)
from .equilibria import (
    bar_strong_violation,
    barne_at_counts,
    barne_at_counts_violation,
    check_inclusion_chain,
    delta_stable_violation,
    globally_stable_violation,
)
from .errors import InvalidConfigError
from .games import congestion_candidate, congestion_game, prisoners_dilemma
from .scan import SimplexMap, compare_maps, render_svg, simplex_scan
from .simplex import INFINITY, SimplexPoint
from .simulate import SimConfig, run_simulation


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError([f"config {path} is not valid JSON: {exc}"])


def _dump_json(data: dict, path: Optional[str]) -> None:
    text = json.dumps(data, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def _params_from_config(config: dict) -> ProtocolParams:
    params = ProtocolParams.from_json(config)
    violations = validate_params(params, **_validation_overrides(config))
    if violations:
        raise InvalidConfigError(violations)
    return params


def _validation_overrides(config: dict) -> dict:
    overrides = config.get("validation", {})
    allowed = {"loss_factor", "reward_factor", "fine_factor", "quorum_guard"}
    unknown = set(overrides) - allowed
    if unknown:
        raise InvalidConfigError([f"unknown validation override {key!r}" for key in sorted(unknown)])
    return dict(overrides)


def cmd_classify(args) -> int:
    config = _load_json(args.config)
    params = _params_from_config(config)
    missing = [key for key in ("f", "g") if key not in config]
    if missing:
        raise InvalidConfigError([f"missing config key {key!r}" for key in missing])
    f, g = int(config["f"]), int(config["g"])
    point = SimplexPoint(f, g, params.n)
    verdict = classify_point(params, f, g)
    payoffs = expected_payoffs(params, point, Strategy.HONEST)
    out = {
        "point": {"f": f, "g": g, "h": point.h},
        "verdict": verdict.as_row(),
        "special_areas": sorted(area.value for area in special_areas(params, f, g)),
        "expected_payoffs_vs_honest_peers": {
            s.value: float(u) for s, u in payoffs.items()},
        "inequalities_vs_honest_peers": inequality_report(params, point, Strategy.HONEST).as_dict(),
    }
    _dump_json(out, args.out_json)
    return 0


def cmd_scan(args) -> int:
    config = _load_json(args.config)
    params = _params_from_config(config)
    if params.amendments is Amendment.BASE and 2 * params.quorum > params.n + 1:
        print(f"warning: base protocol admits an honest equilibrium only when "
              f"Q <= (n+1)/2; Q={params.quorum} > {(params.n + 1) / 2} leaves the "
              f"honest region empty", file=sys.stderr)
    smap = simplex_scan(params)
    with open(args.out_csv, "w", encoding="utf-8") as handle:
        handle.write(smap.to_csv_string())
    _dump_json(smap.to_json_dict(), args.out_json)
    with open(args.out_svg, "w", encoding="utf-8") as handle:
        handle.write(render_svg(smap))
    return 0


def cmd_simulate(args) -> int:
    config = _load_json(args.config)
    if args.rounds is not None:
        config["rounds"] = args.rounds
    if args.seed is not None:
        config["seed"] = args.seed
    if config.get("seed") is None:
        raise InvalidConfigError(["simulation needs an explicit seed (config key or --seed)"])
    overrides = _validation_overrides(config)
    sim_config = SimConfig.from_json(config)
    violations = sim_config.violations(**overrides)
    if violations:
        raise InvalidConfigError(violations)
    result = run_simulation(sim_config, trace=args.trace is not None, validate=False)
    if args.trace is not None:
        _write_trace(result, args.trace)
    _dump_json(result.to_json(), args.out_json)
    return 0


def _write_trace(result, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("round,proposer,proposer_type,block_valid,is_trap,accepted,"
                     "endorsements,fines,utilities\n")
        for record in result.records:
            endorsers = "|".join(str(i) for i in sorted(record.endorsements))
            fined = "|".join(str(i) for i in sorted(record.fines_issued))
            utilities = "|".join(f"{u:g}" for u in record.utilities)
            handle.write(f"{record.index},{record.proposer},{record.proposer_type},"
                         f"{str(record.block_valid).lower()},{str(record.is_trap).lower()},"
                         f"{str(record.accepted).lower()},{endorsers},{fined},{utilities}\n")


_SMALL_FIXTURE_DEFAULTS = {"n": 6, "Q": 4, "r_e": 10.0, "c_c": 1.0, "L": 1000.0}


def _check_fixture(config: dict):
    name = config.get("fixture")
    params = config.get("params", {})
    if name == "congestion":
        n, k = int(params.get("n", 4)), int(params.get("k", 2))
        return congestion_game(n=n, k=k), {"n": n, "k": k}
    if name == "pd":
        return prisoners_dilemma(), {}
    if name == "endorsement-small":
        merged = dict(_SMALL_FIXTURE_DEFAULTS)
        merged.update(params)
        amendments = Amendment(merged.get("amendments", "Base"))
        if amendments.fines_active:
            merged.setdefault("L_e", 100.0)
        if amendments.traps_active:
            merged.setdefault("p_prop", 0.12)
        merged["amendments"] = amendments.value
        protocol = ProtocolParams.from_json(merged)
        violations = validate_params(protocol, quorum_guard=False)
        if violations:
            raise InvalidConfigError(violations)
        point = config.get("args", {})
        f, g = int(point.get("f", 1)), int(point.get("g", 2))
        return as_generic_game(protocol, f, g), {"params": protocol.to_json()}
    raise InvalidConfigError([f"unknown fixture {name!r}; "
                              f"expected congestion, pd or endorsement-small"])


def _check_strategy(game, raw):
    if any(isinstance(s, Strategy) for s in game.strategies):
        return Strategy(raw)
    return raw


def cmd_check(args) -> int:
    config = _load_json(args.config)
    game, fixture_info = _check_fixture(config)
    concept = config.get("concept")
    arguments = config.get("args", {})
    witness = None
    if concept == "barne":
        f, g = int(arguments["f"]), int(arguments["g"])
        sigma = _check_strategy(game, arguments["sigma"])
        violation = barne_at_counts_violation(game, f, g, sigma)
        verdict = violation is None
        witness = None if verdict else violation.as_dict()
    elif concept == "bar_strong":
        f_bar = int(arguments.get("f_bar", 1))
        g_bar = int(arguments.get("g_bar", game.n))
        candidate = arguments.get("candidate")
        if candidate is None:
            if game.name.startswith("congestion"):
                candidate = congestion_candidate(fixture_info["n"], fixture_info["k"], 0)
            else:
                candidate = (game.prescribed,) * game.n
        else:
            candidate = tuple(_check_strategy(game, s) for s in candidate)
        violation = bar_strong_violation(game, f_bar, g_bar, candidate)
        verdict = violation is None
        witness = None if verdict else violation.as_dict()
    elif concept == "delta_stable":
        sigma = _check_strategy(game, arguments["sigma"])
        violation = delta_stable_violation(game, sigma, int(arguments["f"]),
                                           int(arguments["g"]), float(arguments["delta"]),
                                           arguments.get("norm", INFINITY))
        verdict = violation is None
        witness = None if verdict else violation.as_dict()
    elif concept == "globally_stable":
        sigma = _check_strategy(game, arguments["sigma"])
        violation = globally_stable_violation(game, sigma, int(arguments["f_bar"]),
                                              int(arguments["g_bar"]))
        verdict = violation is None
        witness = None if verdict else violation.as_dict()
    elif concept == "inclusion_chain":
        f_bar = int(arguments.get("f_bar", 1))
        g_bar = int(arguments.get("g_bar", 2))
        failures = []
        for sigma in game.strategies:
            failures.extend(check_inclusion_chain(game, sigma, f_bar, g_bar))
        verdict = not failures
        witness = None if verdict else {"failed_implications": failures}
    else:
        raise InvalidConfigError([f"unknown concept {concept!r}"])
    out = {"fixture": config.get("fixture"), "concept": concept,
           "verdict": verdict, "witness": witness}
    out.update(fixture_info)
    _dump_json(out, args.out_json)
    return 0


def cmd_compare(args) -> int:
    config = _load_json(args.config)
    missing = [key for key in ("base", "fines", "traps") if key not in config]
    if missing:
        raise InvalidConfigError([f"missing config key {key!r}" for key in missing])
    maps = {key: SimplexMap.from_json_dict(_load_json(config[key]))
            for key in ("base", "fines", "traps")}
    report = compare_maps(maps["base"], maps["fines"], maps["traps"])
    _dump_json(report, args.out_json)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="barne-kit",
        description="equilibrium maps and simulations for quorum endorsement games")
    sub = parser.add_subparsers(dest="command", required=True)

    classify = sub.add_parser("classify", help="equilibrium verdicts at one (f, g) point")
    classify.add_argument("--config", required=True)
    classify.add_argument("--out-json")
    classify.set_defaults(handler=cmd_classify)

    scan = sub.add_parser("scan", help="classify the whole simplex and render it")
    scan.add_argument("--config", required=True)
    scan.add_argument("--out-csv", required=True)
    scan.add_argument("--out-json", required=True)
    scan.add_argument("--out-svg", required=True)
    scan.set_defaults(handler=cmd_scan)

    simulate = sub.add_parser("simulate", help="Monte Carlo run of the consensus rounds")
    simulate.add_argument("--config", required=True)
    simulate.add_argument("--out-json")
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--rounds", type=int)
    simulate.add_argument("--trace", help="write a per-round CSV trace to this path")
    simulate.set_defaults(handler=cmd_simulate)

    check = sub.add_parser("check", help="run a generic equilibrium check on a fixture")
    check.add_argument("--config", required=True)
    check.add_argument("--out-json")
    check.set_defaults(handler=cmd_check)

    compare = sub.add_parser("compare", help="diff scans across amendment levels")
    compare.add_argument("--config", required=True)
    compare.add_argument("--out-json")
    compare.set_defaults(handler=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except InvalidConfigError as exc:
        for violation in exc.violations:
            print(f"config violation: {violation}", file=sys.stderr)
        return 2
    except (KeyError, ValueError) as exc:
        print(f"config violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
