"""Scenario files: one JSON document describes the margin, the dependence
family, an optional network, and optional study parameters, so every run is
reproducible from a single artifact.

Validation errors carry the offending field path in the message.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .copula import CorrelationMatrix, RiskModel
from .errors import ModelError, ScenarioError
from .network import AdjacencyMatrix, BipartiteNetwork, WeightSpec


@dataclass(frozen=True)
class StudyParams:
    grid: tuple
    mc_budget: int
    seed: int
    target: str = "joint"          # "joint" | "cond" | "covar"
    upsilon: float = 0.5
    beta: Optional[float] = None   # level-function decay for covar targets
    thresholds: tuple = (1.0,)     # broadcast when a single value is given
    agents: tuple = (0, 1)         # 0-based agent pair for network runs


@dataclass(frozen=True)
class Scenario:
    model: RiskModel
    network: Optional[object]      # AdjacencyMatrix | BipartiteNetwork | None
    study: Optional[StudyParams]
    raw: dict = field(repr=False, default_factory=dict)


def _need(doc: dict, key: str, path: str):
    if key not in doc:
        raise ScenarioError(f"{path}.{key}" if path else key, "missing field")
    return doc[key]


def _number(doc, key, path, lo=None, hi=None):
    val = _need(doc, key, path)
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise ScenarioError(f"{path}.{key}", "must be a number")
    if lo is not None and val <= lo:
        raise ScenarioError(f"{path}.{key}", f"must be > {lo}")
    if hi is not None and val >= hi:
        raise ScenarioError(f"{path}.{key}", f"must be < {hi}")
    return float(val)


def _parse_dependence(dep: dict, alpha: float, theta: float) -> RiskModel:
    kind = _need(dep, "kind", "dependence")
    try:
        if kind == "iid":
            d = int(_number(dep, "d", "dependence", lo=0))
            return RiskModel.iid(d, alpha, theta)
        if kind == "gaussian":
            sigma = np.asarray(_need(dep, "sigma", "dependence"), dtype=float)
            return RiskModel.gaussian(CorrelationMatrix(sigma), alpha, theta)
        if kind == "mo":
            d = int(_number(dep, "d", "dependence", lo=0))
            variant = _need(dep, "mo_variant", "dependence")
            rates = None
            if variant == "general":
                raw = _need(dep, "rates", "dependence")
                rates = {}
                for key, val in raw.items():
                    coords = frozenset(int(c) - 1 for c in key.split(","))
                    rates[coords] = float(val)
            return RiskModel.marshall_olkin(d, variant, alpha, theta, rates)
    except ModelError as exc:
        raise ScenarioError("dependence", str(exc)) from exc
    raise ScenarioError("dependence.kind", f"unknown kind {kind!r}")


def _parse_network(net: dict, d_model: int):
    if "matrix" in net:
        try:
            mat = AdjacencyMatrix(np.asarray(net["matrix"], dtype=float))
        except ModelError as exc:
            raise ScenarioError("network.matrix", str(exc)) from exc
        if mat.entries.shape[1] != d_model:
            raise ScenarioError("network.matrix",
                                f"needs {d_model} columns to match the model")
        return mat
    q = int(_number(net, "q", "network", lo=0))
    d = int(_number(net, "d", "network", lo=0))
    if d != d_model:
        raise ScenarioError("network.d", f"must equal the model dimension {d_model}")
    wraw = _need(net, "weights", "network")
    try:
        weights = WeightSpec(_need(wraw, "kind", "network.weights"),
                             float(_need(wraw, "lo", "network.weights")),
                             float(_need(wraw, "hi", "network.weights")))
        return BipartiteNetwork(q, d, np.asarray(_need(net, "edge_prob", "network")),
                                weights)
    except ModelError as exc:
        raise ScenarioError("network", str(exc)) from exc


DEFAULT_T_GRID = (10.0, 100.0, 1000.0, 10000.0)
DEFAULT_GAMMA_GRID = (1e-2, 1e-3, 1e-4)


def _parse_study(study: dict) -> StudyParams:
    target_peek = study.get("target", "joint")
    grid = study.get("grid")
    if grid is None:
        grid = list(DEFAULT_GAMMA_GRID if target_peek == "covar"
                    else DEFAULT_T_GRID)
    if not isinstance(grid, list) or len(grid) < 1 or \
            any(not isinstance(g, (int, float)) for g in grid):
        raise ScenarioError("study.grid", "must be a nonempty list of numbers")
    vals = tuple(float(g) for g in grid)
    inc = all(a < b for a, b in zip(vals, vals[1:]))
    dec = all(a > b for a, b in zip(vals, vals[1:]))
    if not (inc or dec):
        raise ScenarioError("study.grid", "must be strictly monotone")
    budget = int(_number(study, "mc_budget", "study", lo=0))
    if budget < 10_000:
        raise ScenarioError("study.mc_budget", "must be at least 10000")
    seed = int(_number(study, "seed", "study", lo=-1))
    target = study.get("target", "joint")
    if target not in ("joint", "cond", "covar"):
        raise ScenarioError("study.target", f"unknown target {target!r}")
    upsilon = float(study.get("upsilon", 0.5))
    if upsilon <= 0:
        raise ScenarioError("study.upsilon", "must be > 0")
    beta = study.get("beta")
    if beta is not None:
        beta = float(beta)
        if beta < 0:
            raise ScenarioError("study.beta", "must be >= 0")
    thresholds = tuple(float(v) for v in study.get("thresholds", [1.0]))
    if any(v <= 0 for v in thresholds):
        raise ScenarioError("study.thresholds", "must be strictly positive")
    agents = tuple(int(a) - 1 for a in study.get("agents", [1, 2]))
    if len(agents) != 2 or agents[0] == agents[1] or min(agents) < 0:
        raise ScenarioError("study.agents", "must name two distinct agents (1-based)")
    return StudyParams(vals, budget, seed, target, upsilon, beta,
                       thresholds, agents)


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    margin = _need(doc, "margin", "")
    alpha = _number(margin, "alpha", "margin", lo=0.0)
    theta = _number(margin, "theta", "margin", lo=0.0)
    model = _parse_dependence(_need(doc, "dependence", ""), alpha, theta)
    network = None
    if doc.get("network") is not None:
        network = _parse_network(doc["network"], model.d)
    study = None
    if doc.get("study") is not None:
        study = _parse_study(doc["study"])
        if network is not None:
            q = network.q if isinstance(network, BipartiteNetwork) \
                else network.entries.shape[0]
            if max(study.agents) >= q:
                raise ScenarioError("study.agents", f"agent index exceeds q = {q}")
    return Scenario(model, network, study, raw=doc)


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(path, f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(path, f"invalid JSON: {exc}") from exc
    return parse_scenario(doc)
