"""Command-line front end.

Every subcommand reads one scenario JSON (see scenario.py) so a run is fully
reproducible from a single artifact.  ``--out`` picks CSV or JSON by file
extension; without it, results print to stdout.  Exit codes: 0 success,
2 validation error, 3 reliability failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import network as net
from .copula import Gaussian, Iid, MarshallOlkin, sample
from .covar import eci_analytic_model, eci_empirical
from .errors import (DomainError, ModelError, ReliabilityError, ScenarioError,
                     TailnetError)
from .harness import (covar_rows_to_csv, pair_law, rows_to_csv,
                      run_covar_study, run_tail_study, study_to_json)
from .mrv import mutual_ai_gaussian, pairwise_ai_gaussian, solve_qp
from .scenario import Scenario, load_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailnet",
        description="Heavy-tailed dependence models and CoVaR asymptotics "
                    "on bipartite risk networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("sample", "draw risk vectors and emit them as CSV"),
            ("tailprob", "tail-probability study over the grid"),
            ("qp", "solve the box-constrained quadratic program"),
            ("check-ai", "pairwise/mutual asymptotic-independence verdicts"),
            ("covar", "CoVaR study over the gamma grid"),
            ("eci", "extreme CoVaR index (analytic, optionally empirical)"),
            ("network-study", "network conditional-tail or CoVaR comparison")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario JSON path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the study seed")
        p.add_argument("--out", default=None,
                       help="output path; .csv or .json selects the format")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap; results do not depend on it")
        if name == "sample":
            p.add_argument("--n", type=int, default=None,
                           help="number of draws (default: study mc_budget)")
        if name == "eci":
            p.add_argument("--empirical", action="store_true",
                           help="add the slope-based empirical estimate")
    return parser


def _override_seed(scenario: Scenario, seed) -> Scenario:
    if seed is None or scenario.study is None:
        return scenario
    from dataclasses import replace
    return Scenario(scenario.model, scenario.network,
                    replace(scenario.study, seed=seed), scenario.raw)


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _study_seed(scenario: Scenario) -> int:
    return scenario.study.seed if scenario.study is not None else 0


def _cmd_sample(scenario: Scenario, args) -> str:
    n = args.n if args.n is not None else \
        (scenario.study.mc_budget if scenario.study else 10_000)
    z = sample(scenario.model, n, _study_seed(scenario), threads=args.threads)
    header = ",".join(f"z{j + 1}" for j in range(scenario.model.d))
    lines = [header]
    lines.extend(",".join(repr(float(v)) for v in row) for row in z)
    return "\n".join(lines) + "\n"


def _cmd_qp(scenario: Scenario, args) -> str:
    dep = scenario.model.dependence
    if not isinstance(dep, Gaussian):
        raise DomainError("qp needs a gaussian dependence scenario")
    sol = solve_qp(dep.sigma)
    doc = {"gamma": sol.gamma,
           "I": [i + 1 for i in sol.index_set],
           "e_star": [float(v) for v in sol.e_star],
           "h": [float(v) for v in sol.h]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cmd_check_ai(scenario: Scenario, args) -> str:
    dep = scenario.model.dependence
    if isinstance(dep, Gaussian):
        doc = {"family": "gaussian",
               "pairwise": pairwise_ai_gaussian(dep.sigma),
               "mutual": mutual_ai_gaussian(dep.sigma),
               "method": "exact subset criterion"}
    elif isinstance(dep, MarshallOlkin):
        doc = {"family": "marshall-olkin", "pairwise": True, "mutual": True,
               "method": "exact survival-copula factorization"}
    elif isinstance(dep, Iid):
        doc = {"family": "iid", "pairwise": True, "mutual": True,
               "method": "exact product copula"}
    else:
        raise ModelError("unsupported dependence for check-ai")
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cmd_eci(scenario: Scenario, args) -> str:
    if scenario.network is not None:
        law = pair_law(scenario)
        case = net.resolve_case(law, scenario.model)
        rep = net.network_eci(case, scenario.model, law)
        doc = {"case": case, "eci": rep.eci, "beta": rep.beta,
               "alpha1": rep.alpha1, "alpha2": rep.alpha2}
    else:
        rep = eci_analytic_model(scenario.model)
        doc = {"case": "bivariate", "eci": rep.eci, "beta": rep.beta,
               "alpha1": rep.alpha1, "alpha2": rep.alpha2}
    if getattr(args, "empirical", False):
        if scenario.study is None:
            raise DomainError("empirical eci needs a study section")
        study = scenario.study
        if scenario.network is not None:
            xs = net.sample_losses(pair_law(scenario), scenario.model,
                                   study.mc_budget, study.seed,
                                   threads=args.threads)
            y1, y2 = xs[:, 0], xs[:, 1]
        else:
            z = sample(scenario.model, study.mc_budget, study.seed,
                       threads=args.threads)
            y1, y2 = z[:, 0], z[:, 1]
        emp = eci_empirical(y1, y2, study.grid, study.upsilon)
        doc["empirical"] = {"eci": emp.eci, "beta": emp.beta,
                            "band_factor": emp.band_factor,
                            "points": emp.n_points}
    if math.isinf(doc["eci"]):
        doc["eci"] = "inf"
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _run(args) -> str:
    scenario = _override_seed(load_scenario(args.scenario), args.seed)
    cmd = args.command
    if cmd == "sample":
        return _cmd_sample(scenario, args)
    if cmd == "qp":
        return _cmd_qp(scenario, args)
    if cmd == "check-ai":
        return _cmd_check_ai(scenario, args)
    if cmd == "eci":
        return _cmd_eci(scenario, args)
    if cmd == "covar":
        rows = run_covar_study(scenario, threads=args.threads)
        if args.out and args.out.endswith(".json"):
            return study_to_json(scenario, rows, "covar")
        return covar_rows_to_csv(rows, scenario)
    if cmd in ("tailprob", "network-study"):
        if cmd == "network-study":
            if scenario.network is None:
                raise DomainError("network-study needs a network section")
            if scenario.study is not None and scenario.study.target == "covar":
                rows = run_covar_study(scenario, threads=args.threads)
                kind = "network-covar"
            else:
                rows = run_tail_study(scenario, threads=args.threads)
                kind = "network-tail"
        else:
            rows = run_tail_study(scenario, threads=args.threads)
            kind = "tail"
        if args.out and args.out.endswith(".json"):
            return study_to_json(scenario, rows, kind)
        if kind == "network-covar":
            return covar_rows_to_csv(rows, scenario)
        return rows_to_csv(rows)
    raise DomainError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = _run(args)
    except ReliabilityError as exc:
        print(f"reliability failure: {exc}", file=sys.stderr)
        return 3
    except (ScenarioError, ModelError, DomainError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except TailnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
