#!/usr/bin/env python3
"""
Remote Point Manager - command-line entry point

Key Features:
- One binary with subcommands: group, perm, smallbias, cayley, rpp and suite
- JSON on standard output, logs on standard error
- Machine-readable errors {"error": code, "detail": {...}}
- Optional run manifests recording inputs, versions and output digests
"""

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pydantic
from pydantic import BaseModel, ValidationError

from acceptance_suite import SuiteProfile, canonical_json, render_report, suite_run
from cayley_spectral import (
    CayleyGraph, ConfinementMethod, CosetSet, SpectrumMethod, confinement_probability, lambda_by_characters,
    lambda_numeric, random_walk, second_eigenvalue, walk_endpoints,
)
from group_core import (
    dimension, distance_to_subgroup, enumerate_subgroup, feasibility_check, hamming, inv, mul, weight,
)
from group_schema import (
    DEFAULT_CONFIG, BiasTooHigh, GroupSpec, InvalidParameter, RppConfiguration, RppError, Subgroup,
    TupleElement, VerificationFailed,
)
from perm_engine import (
    check_perm, coset_prefix_count, parse_perm, pointwise_stabilizer, projection_member, schreier_sims,
    subgroup_chain, subgroup_member,
)
from rpp_solver import (
    CoverStrategy, RppInstance, RppSolution, SolveMode, SolverAlgorithm, solve, verify_solution,
)
from smallbias import BIAS_TOLERANCE, BiasedSpace, construct_for_group, construct_random, measure_bias

logger = logging.getLogger(__name__)

__version__ = "0.1.0"
JSON_SAFE_INT = 2 ** 53


class RunManifest(BaseModel):
    command: List[str]
    seed: Optional[int] = None
    versions: Dict[str, str]
    input_digests: Dict[str, str] = {}
    wall_time_seconds: float
    output_sha256: str


def json_safe(value: Any) -> Any:
    """Integers beyond 2^53 become decimal strings; numpy scalars become Python values."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, int) and not isinstance(value, bool) and abs(value) > JSON_SAFE_INT:
        return str(value)
    return value


class RppManager:
    """Runs one CLI command; remembers the input files it read for the manifest."""

    def __init__(self):
        self.input_digests: Dict[str, str] = {}

    def load(self, value: str) -> Any:
        """A JSON literal, or the path of a JSON file."""
        path = Path(value)
        if not value.lstrip().startswith(("{", "[")) and path.is_file():
            raw = path.read_bytes()
            self.input_digests[str(path)] = hashlib.sha256(raw).hexdigest()
            return json.loads(raw)
        return json.loads(value)

    def group(self, value: str) -> GroupSpec:
        return GroupSpec.from_json(self.load(value))

    def subgroup(self, value: str, group: Optional[GroupSpec] = None) -> Subgroup:
        data = self.load(value)
        if group is None and "group" not in data:
            raise InvalidParameter("subgroup JSON has no group; pass --group")
        return Subgroup.from_json(data, group)

    def element(self, group: GroupSpec, value: str) -> TupleElement:
        return TupleElement(group=group, coords=tuple(self.load(value)))

    def space(self, value: str) -> BiasedSpace:
        return BiasedSpace.from_json(self.load(value))

    # group

    def run_group(self, args: argparse.Namespace) -> Dict[str, Any]:
        if args.action in ("enumerate", "dimension", "distance"):
            h = self.subgroup(args.subgroup, self.group(args.group) if args.group else None)
            if args.action == "enumerate":
                elements = sorted(enumerate_subgroup(h, args.cap))
                return {"order": len(elements), "elements": [list(e) for e in elements]}
            if args.action == "dimension":
                return dimension(h).model_dump()
            return {"distance": distance_to_subgroup(self.element(h.group, args.x), h, args.cap)}

        g = self.group(args.group)
        if args.action == "feasibility":
            report = feasibility_check(args.n, Fraction(args.k), args.r, Fraction(args.eps), g)
            return report.model_dump()
        x = self.element(g, args.x)
        if args.action == "mul":
            return {"result": mul(x, self.element(g, args.y)).to_json()}
        if args.action == "inv":
            return {"result": inv(x).to_json()}
        if args.action == "weight":
            return {"weight": weight(x)}
        return {"hamming": hamming(x, self.element(g, args.y))}

    # perm

    def _perm(self, text: str, degree: int):
        if text.lstrip().startswith("["):
            return check_perm(self.load(text))
        return parse_perm(text, degree)

    def _perm_group(self, args: argparse.Namespace):
        if args.subgroup:
            return subgroup_chain(self.subgroup(args.subgroup, self.group(args.group) if args.group else None))
        if not args.gens:
            raise InvalidParameter("pass --gens or --subgroup")
        gens = [self._perm(g, args.degree) for g in args.gens]
        degree = max([args.degree] + [len(g) for g in gens])
        return schreier_sims([tuple(g) + tuple(range(len(g), degree)) for g in gens], degree)

    def run_perm(self, args: argparse.Namespace) -> Dict[str, Any]:
        if args.action == "cosetcount":
            h = self.subgroup(args.subgroup, self.group(args.group) if args.group else None)
            prefix = self.load(args.prefix)
            return {"prefix": prefix, "count": coset_prefix_count(h, prefix),
                    "in_projection": projection_member(h, prefix)}
        if args.action == "member" and args.subgroup:
            h = self.subgroup(args.subgroup, self.group(args.group) if args.group else None)
            return {"member": subgroup_member(h, self.load(args.element))}

        pg = self._perm_group(args)
        if args.action == "order":
            return pg.to_json()
        if args.action == "member":
            g = self._perm(args.element, pg.degree)
            g = tuple(g) + tuple(range(len(g), pg.degree))
            return {"member": len(g) == pg.degree and pg.member(g)}
        stab = pointwise_stabilizer(pg, args.points)
        return {"points": sorted(set(args.points)), **stab.to_json()}

    # smallbias

    def run_smallbias(self, args: argparse.Namespace) -> Dict[str, Any]:
        if args.action == "verify":
            space = self.space(args.space)
            bias = measure_bias(space, args.sweep_limit)
            result = {"measured_bias": bias, "size": space.size, "epsilon": args.eps}
            if args.eps is not None and bias > float(Fraction(args.eps)) + BIAS_TOLERANCE:
                raise BiasTooHigh(f"measured bias {bias:.6g} exceeds {args.eps}", bias=bias, epsilon=args.eps)
            return result

        g = self.group(args.group)
        if args.construction == "random":
            space = construct_random(g, args.n, args.size, args.seed, args.sweep_limit)
        else:
            space = construct_for_group(g, args.n, Fraction(args.eps), args.sweep_limit)
        return space.to_json(include_space=not args.no_space)

    # cayley

    def run_cayley(self, args: argparse.Namespace) -> Dict[str, Any]:
        graph = CayleyGraph(space=self.space(args.space))
        if args.action == "lambda":
            if args.method == SpectrumMethod.CHARACTER.value:
                report = lambda_by_characters(graph, args.alpha)
            elif args.method == SpectrumMethod.NUMERIC.value:
                report = lambda_numeric(graph, args.alpha)
            else:
                report = second_eigenvalue(graph, args.alpha)
            return report.to_json()

        if args.action == "walk":
            trace = random_walk(graph, args.t, args.seed)
            ends = walk_endpoints(graph, args.t, args.trials, args.seed, start=trace.vertices[0])
            _, counts = np.unique(ends, return_counts=True)
            n_vertices = graph.vertex_count
            tv = 0.5 * (float(np.abs(counts / args.trials - 1 / n_vertices).sum())
                        + (n_vertices - len(counts)) / n_vertices)
            return {"t": args.t, "trials": args.trials, "seed": args.seed,
                    "walk": [list(v) for v in trace.vertices],
                    "distinct_endpoints": len(counts), "distance_from_uniform": tv}

        h = self.subgroup(args.subgroup, graph.group)
        report = confinement_probability(
            graph, CosetSet(h, self.load(args.shift) if args.shift else None), args.t,
            trials=args.trials, seed=args.seed, method=ConfinementMethod(args.method), alpha=args.alpha,
            confidence=args.confidence, jobs=args.jobs)
        return report.model_dump(mode="json")

    # rpp

    def run_rpp(self, args: argparse.Namespace) -> Dict[str, Any]:
        inst = RppInstance.from_json(self.load(args.instance))
        if args.mode:
            inst = inst.model_copy(update={"mode": SolveMode(args.mode)})
        if args.r is not None:
            inst = inst.model_copy(update={"r": args.r})
        if args.action == "verify":
            data = self.load(args.solution)
            try:
                sol = RppSolution.from_json(data, inst.group)
            except (ValidationError, ValueError, KeyError, TypeError) as e:
                raise VerificationFailed(f"malformed solution: {e}") from e
            return verify_solution(inst, sol, args.cap).model_dump()

        algorithm = SolverAlgorithm(args.algorithm)
        strategy = CoverStrategy(args.strategy)
        logger.info(f"solving r={inst.r} n={inst.n} over {inst.group.label()} with {algorithm.value}")
        sol = solve(inst, algorithm, c=args.c, strategy=strategy, cap=args.cap, sweep_limit=args.sweep_limit)
        data = sol.to_json()
        data["params"] = {"algorithm": algorithm.value, "mode": inst.mode.value, "c": args.c,
                          "strategy": strategy.value, "seed": args.seed}
        return data

    # suite

    def run_suite(self, args: argparse.Namespace) -> Dict[str, Any]:
        profile = SuiteProfile(args.profile)
        if args.quick:
            profile = SuiteProfile.QUICK
        if args.full:
            profile = SuiteProfile.FULL
        summary = suite_run(profile, args.seed, args.jobs, args.items)
        if args.report:
            Path(args.report).write_text(render_report(summary), encoding="utf-8")
            logger.info(f"acceptance report written to {args.report}")
        return summary.to_json()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpp", description="Remote Point Problem toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")
    parser.add_argument("--manifest", help="Write a run manifest JSON to this path")
    parser.add_argument("--enum-cap", type=int, help="Enumeration cap for subgroups and balls")
    parser.add_argument("--sweep-limit", type=int, help="Largest |G|^n swept exhaustively")
    parser.add_argument("--numeric-limit", type=int, help="Largest dense eigensolve")
    parser.add_argument("--exact-chain-limit", type=int, help="Largest exact Markov chain")
    parser.add_argument("--materialize-limit", type=int, help="Largest space written as JSON rows")
    commands = parser.add_subparsers(dest="command", required=True)

    group = commands.add_parser("group", help="Group arithmetic and subgroup oracles")
    group.add_argument("action", choices=["mul", "inv", "weight", "hamming", "enumerate", "dimension",
                                          "distance", "feasibility"])
    group.add_argument("--group", help='Group JSON, e.g. {"abelian":[2]}')
    group.add_argument("--subgroup", help="Subgroup JSON or file")
    group.add_argument("--x", help="Element as a JSON array")
    group.add_argument("--y", help="Second element as a JSON array")
    group.add_argument("--cap", type=int, help="Enumeration cap")
    group.add_argument("--n", type=int, help="Number of coordinates (feasibility)")
    group.add_argument("--k", default="0", help="Dimension bound (feasibility)")
    group.add_argument("--r", type=int, help="Radius (feasibility)")
    group.add_argument("--eps", default="1/10", help="Slack epsilon (feasibility)")

    perm = commands.add_parser("perm", help="Schreier-Sims on permutation groups")
    perm.add_argument("action", choices=["order", "member", "stab", "cosetcount"])
    perm.add_argument("--gens", nargs="+", help='Generators as cycles "(0 1 2)" or image arrays')
    perm.add_argument("--degree", type=int, default=0, help="Number of points")
    perm.add_argument("--group", help="Group JSON when --subgroup has none")
    perm.add_argument("--subgroup", help="Subgroup of G^n, used through its embedding")
    perm.add_argument("--element", help="Permutation, or a JSON tuple with --subgroup")
    perm.add_argument("--points", nargs="+", type=int, default=[], help="Points to fix (stab)")
    perm.add_argument("--prefix", default="[]", help="Prefix tuple as a JSON array (cosetcount)")

    small = commands.add_parser("smallbias", help="Small-bias spaces over abelian groups")
    small.add_argument("action", choices=["gen", "verify"])
    small.add_argument("--group", help="Group JSON")
    small.add_argument("--n", type=int, default=1)
    small.add_argument("--eps", help="Target bias, e.g. 1/4")
    small.add_argument("--construction", choices=["auto", "random"], default="auto")
    small.add_argument("--size", type=int, default=16, help="Size of a random space")
    small.add_argument("--seed", type=int, default=0)
    small.add_argument("--space", help="Space JSON or file (verify)")
    small.add_argument("--no-space", action="store_true", help="Omit the rows from the output")

    cayley = commands.add_parser("cayley", help="Cayley graph spectra and random walks")
    cayley.add_argument("action", choices=["lambda", "walk", "confine"])
    cayley.add_argument("--space", required=True, help="Symmetric space JSON or file")
    cayley.add_argument("--method", default="auto",
                        help="auto|character|numeric (lambda), auto|exact|monte_carlo (confine)")
    cayley.add_argument("--alpha", type=float, help="Target bias for the expander check")
    cayley.add_argument("--t", type=int, default=1)
    cayley.add_argument("--trials", type=int, default=10_000)
    cayley.add_argument("--seed", type=int, default=0)
    cayley.add_argument("--subgroup", help="Subgroup whose coset confines the walk")
    cayley.add_argument("--shift", help="Coset representative as a JSON array")
    cayley.add_argument("--confidence", type=float, default=0.99)
    cayley.add_argument("--jobs", type=int, default=1)

    rpp = commands.add_parser("rpp", help="Solve and verify remote point instances")
    rpp.add_argument("action", choices=["solve", "verify"])
    rpp.add_argument("--instance", required=True, help="Instance JSON or file")
    rpp.add_argument("--solution", help="Solution JSON or file (verify)")
    rpp.add_argument("--mode", choices=[m.value for m in SolveMode])
    rpp.add_argument("--r", type=int, help="Override the instance radius")
    rpp.add_argument("--algorithm", choices=[a.value for a in SolverAlgorithm],
                     default=SolverAlgorithm.GENERAL_K.value)
    rpp.add_argument("--strategy", choices=[s.value for s in CoverStrategy], default=CoverStrategy.RADIUS.value)
    rpp.add_argument("--c", type=float, default=1.0, help="Cover constant")
    rpp.add_argument("--seed", type=int, default=0, help="Recorded only; the solvers are deterministic")
    rpp.add_argument("--cap", type=int, help="Largest |H| checked by the distance oracle")

    suite = commands.add_parser("suite", help="Acceptance suite")
    suite.add_argument("action", choices=["run"])
    suite.add_argument("--profile", choices=[p.value for p in SuiteProfile], default=SuiteProfile.QUICK.value)
    suite.add_argument("--quick", action="store_true")
    suite.add_argument("--full", action="store_true")
    suite.add_argument("--seed", type=int, default=0)
    suite.add_argument("--jobs", type=int, default=1)
    suite.add_argument("--items", nargs="+", type=int, help="Run only these acceptance items")
    suite.add_argument("--report", help="Write a Markdown report to this path")
    return parser


CONFIG_FLAGS = {
    "enum_cap": "enumeration_cap",
    "sweep_limit": "sweep_limit",
    "numeric_limit": "numeric_limit",
    "exact_chain_limit": "exact_chain_limit",
    "materialize_limit": "materialize_limit",
    "log_level": "logging_level",
}


def _apply_config(args: argparse.Namespace) -> Dict[str, Any]:
    """Explicit flags override the environment; returns the previous values."""
    overrides = {field: getattr(args, flag) for flag, field in CONFIG_FLAGS.items()}
    merged = RppConfiguration.from_env(**overrides)
    previous = DEFAULT_CONFIG.model_dump()
    for field, value in merged.model_dump().items():
        setattr(DEFAULT_CONFIG, field, value)
    return previous


def _versions() -> Dict[str, str]:
    return {"rpp": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "pydantic": pydantic.VERSION}


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line interface for the remote point toolkit"""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    previous = _apply_config(args)
    logging.basicConfig(level=DEFAULT_CONFIG.logging_level, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")

    manager = RppManager()
    handlers = {
        "group": manager.run_group,
        "perm": manager.run_perm,
        "smallbias": manager.run_smallbias,
        "cayley": manager.run_cayley,
        "rpp": manager.run_rpp,
        "suite": manager.run_suite,
    }
    started = time.perf_counter()
    exit_code = 0
    try:
        result = handlers[args.command](args)
        if args.command == "rpp" and args.action == "verify" and not result["ok"]:
            exit_code = 1
        if args.command == "suite" and result["overall_status"] != "success":
            exit_code = 1
    except RppError as e:
        logger.error(f"{args.command} {args.action}: {e}")
        result, exit_code = e.to_json(), 1
    except (ValidationError, ValueError, KeyError, TypeError, OSError) as e:
        logger.error(f"{args.command} {args.action}: invalid input: {e}")
        result, exit_code = {"error": "invalid_input", "detail": {"message": str(e)}}, 2
    finally:
        for field, value in previous.items():
            setattr(DEFAULT_CONFIG, field, value)

    if args.command == "suite":
        output = canonical_json(json_safe(result))
    else:
        output = json.dumps(json_safe(result), indent=2, sort_keys=True)
    print(output)

    if args.manifest:
        manifest = RunManifest(
            command=["rpp"] + argv,
            seed=getattr(args, "seed", None),
            versions=_versions(),
            input_digests=manager.input_digests,
            wall_time_seconds=round(time.perf_counter() - started, 6),
            output_sha256=hashlib.sha256(output.encode("utf-8")).hexdigest(),
        )
        Path(args.manifest).write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
