"""Bipartite bank-asset layer: adjacency laws, loss vectors X = A Z, the
cone-selection combinatorics, pairwise/aggregate/one-vs-max limit measures,
conditional tail probabilities, CoVaR rates, and the extreme CoVaR index.

Agent losses are X_k = sum_j A_kj Z_j with A independent of Z.  Everything
pairwise is phrased for agent rows (0, 1) after row selection; higher-q
queries reduce to that through :func:`select_rows`, :func:`aggregate`, or
the one-vs-max construction.

Moment terms over a random adjacency law are Monte Carlo estimates over
ADJ_MC_DRAWS draws of the conditioned (no-trivial-row) law, with reported
standard errors; deterministic matrices evaluate exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Union

import numpy as np

from . import rng
from .copula import Gaussian, Iid, MarshallOlkin, RiskModel, sample
from .covar import EciReport, GSpec, gauss_level_function
from .errors import DispatchError, DomainError, ModelError
from .mrv import PowerLog

ADJ_MC_DRAWS = 100_000

CASE_OVERLAP = "overlap"
CASE_IID = "disjoint-iid"
CASE_MO_EQUAL = "disjoint-mo-equal"
CASE_MO_PROP = "disjoint-mo-proportional"
CASE_GAUSS = "disjoint-gaussian"


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """Per-edge weight law with support bounded away from zero."""

    kind: str
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in ("point", "uniform"):
            raise ModelError(f"unknown weight kind {self.kind!r}")
        if not 0 < self.lo <= self.hi:
            raise ModelError("weights need 0 < lo <= hi")
        if self.kind == "point" and self.lo != self.hi:
            raise ModelError("point weights need lo == hi")

    def draw(self, g: np.random.Generator, shape):
        if self.kind == "point" or self.lo == self.hi:
            return np.full(shape, self.lo)
        return self.lo + (self.hi - self.lo) * g.random(shape)


@dataclass(frozen=True, eq=False)
class BipartiteNetwork:
    """Random bipartite exposure law: Bernoulli edges times weights."""

    q: int
    d: int
    edge_prob: np.ndarray
    weights: WeightSpec

    def __post_init__(self):
        p = np.broadcast_to(np.asarray(self.edge_prob, dtype=float),
                            (self.q, self.d)).copy()
        if np.any(p < 0) or np.any(p > 1):
            raise ModelError("edge probabilities must lie in [0, 1]")
        if np.any(p.max(axis=1) <= 0):
            raise ModelError("every agent row needs some edge probability > 0")
        p.flags.writeable = False
        object.__setattr__(self, "edge_prob", p)


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """A realized exposure matrix; no agent row may be all zero."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2:
            raise ModelError("adjacency must be a matrix")
        if np.any(m < 0):
            raise ModelError("adjacency entries must be nonnegative")
        if np.any((m > 0).sum(axis=1) == 0):
            raise ModelError("adjacency has an all-zero agent row")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)


@dataclass(frozen=True, eq=False)
class AggregatedNetwork:
    """Random law of (e_S, e_T)' A for a random base network."""

    base: BipartiteNetwork
    rows_s: tuple
    rows_t: tuple


ALaw = Union[AdjacencyMatrix, BipartiteNetwork, AggregatedNetwork, np.ndarray]


def law_shape(law: ALaw):
    if isinstance(law, BipartiteNetwork):
        return law.q, law.d
    if isinstance(law, AggregatedNetwork):
        return 2, law.base.d
    m = law.entries if isinstance(law, AdjacencyMatrix) else np.asarray(law)
    return m.shape


def is_deterministic(law: ALaw) -> bool:
    return not isinstance(law, (BipartiteNetwork, AggregatedNetwork))


def law_matrix(law: ALaw) -> np.ndarray:
    if not is_deterministic(law):
        raise DomainError("random law has no fixed matrix")
    return law.entries if isinstance(law, AdjacencyMatrix) else \
        AdjacencyMatrix(np.asarray(law, dtype=float)).entries


def support(law: ALaw) -> np.ndarray:
    """Boolean q x d matrix: can entry (k, j) be positive?"""
    if isinstance(law, BipartiteNetwork):
        return law.edge_prob > 0
    if isinstance(law, AggregatedNetwork):
        base = law.base.edge_prob > 0
        return np.vstack([base[list(law.rows_s)].any(axis=0),
                          base[list(law.rows_t)].any(axis=0)])
    return law_matrix(law) > 0


def select_rows(law: ALaw, k: int, m: int) -> ALaw:
    q, _ = law_shape(law)
    if not (0 <= k < q and 0 <= m < q and k != m):
        raise DomainError("need two distinct agent rows")
    if isinstance(law, BipartiteNetwork):
        return BipartiteNetwork(2, law.d, law.edge_prob[[k, m], :], law.weights)
    if isinstance(law, AggregatedNetwork):
        raise DomainError("aggregated laws are already two-row")
    return AdjacencyMatrix(law_matrix(law)[[k, m], :])


def _draw_base(net: BipartiteNetwork, g: np.random.Generator, n: int) -> np.ndarray:
    edges = g.random((n, net.q, net.d)) < net.edge_prob
    w = net.weights.draw(g, (n, net.q, net.d))
    a = np.where(edges, w, 0.0)
    # condition on no trivial rows: redraw offending rows until nonzero
    while True:
        dead = (a > 0).sum(axis=2) == 0
        if not dead.any():
            return a
        idx = np.argwhere(dead)
        ne = g.random((len(idx), net.d))
        nw = net.weights.draw(g, (len(idx), net.d))
        a[idx[:, 0], idx[:, 1]] = np.where(ne < net.edge_prob[idx[:, 1]], nw, 0.0)


def _draw_law(law: ALaw, g: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(law, BipartiteNetwork):
        return _draw_base(law, g, n)
    if isinstance(law, AggregatedNetwork):
        a = _draw_base(law.base, g, n)
        return np.stack([a[:, list(law.rows_s), :].sum(axis=1),
                         a[:, list(law.rows_t), :].sum(axis=1)], axis=1)
    return np.broadcast_to(law_matrix(law), (n,) + law_matrix(law).shape)


def sample_adjacency(net: BipartiteNetwork, seed: int) -> AdjacencyMatrix:
    """One exposure matrix draw conditioned on no trivial rows."""
    g = rng.philox_stream(seed, rng.STREAM_ADJACENCY)
    return AdjacencyMatrix(_draw_base(net, g, 1)[0])


def sample_adjacency_batch(law: ALaw, seed: int, n: int,
                           stream: int = rng.STREAM_ADJACENCY) -> np.ndarray:
    g = rng.philox_stream(seed, stream)
    return _draw_law(law, g, n)


def sample_losses(law: ALaw, model: RiskModel, n: int, seed: int,
                  threads: int = 1, z_stream: int = rng.STREAM_RISK,
                  a_stream: int = rng.STREAM_ADJACENCY) -> np.ndarray:
    """(n, q) draws of X = A Z; fresh (A, Z) per draw when A is random."""
    q, d = law_shape(law)
    if d != model.d:
        raise ModelError("network object count must match model dimension")
    z = sample(model, n, seed, threads=threads, stream=z_stream)
    if is_deterministic(law):
        return z @ law_matrix(law).T
    a = rng.sample_blocked(n, seed, a_stream,
                           lambda g, size: _draw_law(law, g, size),
                           threads=threads)
    return np.einsum("nqd,nd->nq", a, z)


def cover_index(law: ALaw, k: int) -> int:
    """Minimum number of asset columns whose positive entries jointly cover
    at least k agent rows; equivalently, the largest cone order whose row-k
    scaling norm of A stays finite."""
    m = law_matrix(law)
    q, d = m.shape
    if not 1 <= k <= q:
        raise DomainError(f"k must lie in 1..{q}")
    col_rows = [frozenset(np.nonzero(m[:, c] > 0)[0].tolist()) for c in range(d)]
    for size in range(1, d + 1):
        for combo in combinations(range(d), size):
            covered = frozenset().union(*(col_rows[c] for c in combo))
            if len(covered) >= k:
                return size
    raise ModelError("columns cannot cover the requested number of rows")


@dataclass(frozen=True)
class OverlapProfile:
    """Whether two agents can share an asset, plus for Gaussian models the
    maximal correlation rho_vee and its agent-connected counterpart
    rho_star (the largest rho_lj over asset pairs the two agents can hold
    simultaneously)."""

    overlap: bool
    rho_vee: Optional[float] = None
    rho_star: Optional[float] = None


def overlap_profile(law: ALaw, model: Optional[RiskModel] = None,
                    k: int = 0, m: int = 1) -> OverlapProfile:
    q, _ = law_shape(law)
    pair = law if (k, m) == (0, 1) and q == 2 else select_rows(law, k, m)
    supp = support(pair)
    shares = bool(np.any(supp[0] & supp[1]))
    rho_vee = rho_star = None
    if model is not None and isinstance(model.dependence, Gaussian):
        sig = model.dependence.sigma.entries
        d = sig.shape[0]
        rho_vee = float(sig[~np.eye(d, dtype=bool)].max())
        best = -np.inf
        for ell in range(d):
            for j in range(d):
                if ell != j and supp[0, ell] and supp[1, j]:
                    best = max(best, sig[ell, j])
        rho_star = float(best) if best > -np.inf else None
    return OverlapProfile(shares, rho_vee, rho_star)


def resolve_case(law: ALaw, model: RiskModel, k: int = 0, m: int = 1) -> str:
    """Exactly one asymptotic regime applies to an agent pair."""
    prof = overlap_profile(law, model, k, m)
    if prof.overlap:
        return CASE_OVERLAP
    dep = model.dependence
    if isinstance(dep, Iid):
        return CASE_IID
    if isinstance(dep, MarshallOlkin):
        variant = dep.rates.variant
        if variant == "equal":
            return CASE_MO_EQUAL
        if variant == "proportional":
            return CASE_MO_PROP
        raise ModelError("disjoint asymptotics need the equal or proportional variant")
    if isinstance(dep, Gaussian):
        if prof.rho_star is None:
            raise ModelError("no asset pair connects the two agents")
        return CASE_GAUSS
    raise ModelError(f"unsupported dependence {type(dep).__name__}")


def _check_case(case: str, law: ALaw, model: RiskModel) -> None:
    actual = resolve_case(law, model)
    if case != actual:
        raise DispatchError(f"case {case!r} does not match the scenario ({actual!r})")


@dataclass(frozen=True)
class MomentEstimate:
    """A moment value with its Monte Carlo standard error (0 when exact)."""

    value: float
    stderr: float = 0.0

    def scaled(self, factor: float) -> "MomentEstimate":
        return MomentEstimate(self.value * factor, self.stderr * abs(factor))

    def powered(self, p: float) -> "MomentEstimate":
        val = self.value ** p
        se = abs(p * val / self.value) * self.stderr if self.value > 0 else 0.0
        return MomentEstimate(val, se)


def a_moment(law: ALaw, fn, n_a: int = ADJ_MC_DRAWS, seed: int = 0) -> MomentEstimate:
    """E[fn(A)] over the adjacency law; fn maps (m, q, d) batches to per-draw
    scalars.  Deterministic laws evaluate exactly (stderr 0)."""
    if is_deterministic(law):
        val = fn(law_matrix(law)[None, :, :])
        return MomentEstimate(float(np.asarray(val).ravel()[0]), 0.0)
    a = sample_adjacency_batch(law, seed, n_a, stream=rng.STREAM_A_MOMENTS)
    vals = np.asarray(fn(a), dtype=float)
    return MomentEstimate(float(vals.mean()),
                          float(vals.std(ddof=1) / math.sqrt(n_a)))


def row_moment_sum(law: ALaw, row: int, c: float, **kw) -> MomentEstimate:
    """sum_l E[a_{row,l}^c]."""
    return a_moment(law, lambda a: (a[:, row, :] ** c).sum(axis=1), **kw)


def _pair_product_sum(law, c1: float, c2: float, **kw) -> MomentEstimate:
    """sum_{l,j} E[a_{1l}^{c1} a_{2j}^{c2}] over rows (0, 1)."""
    return a_moment(
        law,
        lambda a: (a[:, 0, :] ** c1).sum(axis=1) * (a[:, 1, :] ** c2).sum(axis=1),
        **kw)


def _pair_thresholds(x):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (2,) or np.any(x <= 0):
        raise DomainError("x must be a strictly positive 2-vector")
    return float(x[0]), float(x[1])


def mu_bar_1(law: ALaw, model: RiskModel, x, **kw) -> MomentEstimate:
    """Limit mass of [0, x]^c at the one-large-asset order:
    sum_l E[max(a_{1l}/x1, a_{2l}/x2)^alpha]."""
    x1, x2 = _pair_thresholds(x)
    alpha = model.margin.alpha
    return a_moment(
        law,
        lambda a: (np.maximum(a[:, 0, :] / x1, a[:, 1, :] / x2) ** alpha).sum(axis=1),
        **kw)


def mu_bar_2_overlap(law: ALaw, model: RiskModel, x, **kw) -> MomentEstimate:
    """Joint-exceedance limit mass when the agents can share an asset:
    sum_l E[min(a_{1l}/x1, a_{2l}/x2)^alpha]."""
    if not overlap_profile(law).overlap:
        raise DispatchError(
            "agents share no asset almost surely; the shared-asset joint "
            "measure is identically zero - use the disjoint-case operations")
    x1, x2 = _pair_thresholds(x)
    alpha = model.margin.alpha
    return a_moment(
        law,
        lambda a: (np.minimum(a[:, 0, :] / x1, a[:, 1, :] / x2) ** alpha).sum(axis=1),
        **kw)


def _mo_max_exponent(variant: str, d: int) -> float:
    """Decay exponent carried by the larger of the two asset ratios."""
    return 0.5 if variant == "equal" else d / (2.0 * (d + 1.0))


def gauss_constant_c(rho: float, alpha: float) -> float:
    return (2.0 * math.pi) ** (-1.0 / (1.0 + rho)) * (2.0 * alpha) ** (rho / (1.0 + rho))


def _gauss_pair_mask(sigma: np.ndarray, rho: float) -> np.ndarray:
    d = sigma.shape[0]
    mask = np.abs(sigma - rho) <= 1e-12
    mask[np.eye(d, dtype=bool)] = False
    return mask


def gauss_constant_d(law: ALaw, model: RiskModel, rho: float,
                     **kw) -> MomentEstimate:
    """Pair-sum constant of the disjoint Gaussian limit measure at
    correlation level rho: (2 pi)^{-1} (1+rho)^{3/2} (1-rho)^{-1/2}
    sum_{(l,j): rho_lj = rho} E[a_{1l}^{alpha/(1+rho)} a_{2j}^{alpha/(1+rho)}]."""
    alpha = model.margin.alpha
    sigma = model.dependence.sigma.entries
    mask = _gauss_pair_mask(sigma, rho)
    c = alpha / (1.0 + rho)
    pre = (1.0 + rho) ** 1.5 / (2.0 * math.pi * math.sqrt(1.0 - rho))

    def fn(a):
        prod = (a[:, 0, :, None] ** c) * (a[:, 1, None, :] ** c)
        return (prod * mask).sum(axis=(1, 2))

    return a_moment(law, fn, **kw).scaled(pre)


def gaussian_mu_bar_2_thm_dispatch(law: ALaw, model: RiskModel, x,
                                   **kw) -> MomentEstimate:
    """Disjoint Gaussian joint-exceedance mass as the plain cone-2 dispatch
    computes it: the connected pair sum at the global maximum correlation.
    Identically zero when no maximally-correlated asset pair links the two
    agents, even though a slower nontrivial rate exists."""
    prof = overlap_profile(law, model)
    if prof.overlap:
        raise DispatchError("dispatch-level measure is for the disjoint case")
    x1, x2 = _pair_thresholds(x)
    rho = prof.rho_vee
    alpha = model.margin.alpha
    return gauss_constant_d(law, model, rho, **kw).scaled(
        (x1 * x2) ** (-alpha / (1.0 + rho)))


def disjoint_mu_bar_2(law: ALaw, model: RiskModel, x, **kw) -> MomentEstimate:
    """Joint-exceedance limit mass for agents holding a.s. disjoint assets,
    at the dependence-determined two-large-assets order.  For the Gaussian
    family the effective correlation is rho_star, the largest correlation
    among asset pairs the agents actually co-hold (unconnected columns drop
    out of the pair sum automatically)."""
    case = resolve_case(law, model)
    if case == CASE_OVERLAP:
        raise DispatchError("agents can share an asset; use the overlap measure")
    x1, x2 = _pair_thresholds(x)
    alpha = model.margin.alpha
    if case == CASE_IID:
        return _pair_product_sum(law, alpha, alpha, **kw).scaled((x1 * x2) ** -alpha)
    if case in (CASE_MO_EQUAL, CASE_MO_PROP):
        emax = alpha * _mo_max_exponent(model.dependence.rates.variant, model.d)

        def fn(a):
            r1 = a[:, 0, :, None] / x1
            r2 = a[:, 1, None, :] / x2
            return (np.minimum(r1, r2) ** alpha
                    * np.maximum(r1, r2) ** emax).sum(axis=(1, 2))

        return a_moment(law, fn, **kw)
    rho = overlap_profile(law, model).rho_star
    return gauss_constant_d(law, model, rho, **kw).scaled(
        (x1 * x2) ** (-alpha / (1.0 + rho)))


def network_alpha2(case: str, model: RiskModel,
                   law: Optional[ALaw] = None) -> float:
    """Regular-variation index of the joint-exceedance cone per case."""
    a = model.margin.alpha
    if case == CASE_OVERLAP:
        return a
    if case == CASE_IID:
        return 2.0 * a
    if case == CASE_MO_EQUAL:
        return 1.5 * a
    if case == CASE_MO_PROP:
        d = model.d
        return a * (3.0 * d + 2.0) / (2.0 * (d + 1.0))
    if case == CASE_GAUSS:
        rho = overlap_profile(law, model).rho_star
        return 2.0 * a / (1.0 + rho)
    raise DispatchError(f"unknown case {case!r}")


def network_b2_inv(case: str, model: RiskModel,
                   law: Optional[ALaw] = None) -> PowerLog:
    """Inverse scale function of the joint-exceedance cone per case."""
    a, th = model.margin.alpha, model.margin.theta
    a2 = network_alpha2(case, model, law)
    if case == CASE_GAUSS:
        rho = overlap_profile(law, model).rho_star
        cc = gauss_constant_c(rho, a)
        return PowerLog(c=cc * th ** (-2.0 / (1.0 + rho)), a=a2,
                        p=rho / (1.0 + rho), kappa=0.0, lam=1.0)
    return PowerLog(c=th ** (-a2 / a), a=a2)


def network_cond_prob(case: str, law: ALaw, model: RiskModel, x, t: float,
                      **kw) -> MomentEstimate:
    """Asymptotic conditional exceedance P(X1 > t x1 | X2 > t x2)."""
    _check_case(case, law, model)
    x1, x2 = _pair_thresholds(x)
    alpha, theta = model.margin.alpha, model.margin.theta
    if case != CASE_OVERLAP and not t > 1.0:
        raise DomainError("t must exceed 1 for the decaying factor")
    m2 = row_moment_sum(law, 1, alpha, **kw)
    if case == CASE_OVERLAP:
        return mu_bar_2_overlap(law, model, (x1, x2), **kw).scaled(
            x2 ** alpha / m2.value)
    if case == CASE_IID:
        return _pair_product_sum(law, alpha, alpha, **kw).scaled(
            theta * t ** -alpha * x1 ** -alpha / m2.value)
    if case in (CASE_MO_EQUAL, CASE_MO_PROP):
        eta = _mo_max_exponent(model.dependence.rates.variant, model.d)
        return disjoint_mu_bar_2(law, model, (x1, x2), **kw).scaled(
            (theta * t ** -alpha) ** eta * x2 ** alpha / m2.value)
    rho = overlap_profile(law, model).rho_star
    fac = (theta * t ** -alpha) ** ((1.0 - rho) / (1.0 + rho)) \
        * math.log(t) ** (-rho / (1.0 + rho)) \
        * x1 ** (-alpha / (1.0 + rho)) * x2 ** (alpha * rho / (1.0 + rho)) \
        / (gauss_constant_c(rho, alpha) * m2.value)
    return gauss_constant_d(law, model, rho, **kw).scaled(fac)


@dataclass(frozen=True)
class NetworkCovar:
    """Asymptotic CoVaR of X1 given X2 at level upsilon * g(gamma).

    ``low_upsilon`` is the branch valid below the (uncomputed) threshold
    upsilon_1*, ``high_upsilon`` the branch above upsilon_2* (Marshall-Olkin
    cases only; None elsewhere).  Studies report which branch the Monte
    Carlo estimate matches and flag the ambiguous middle region.
    """

    g: GSpec
    low_upsilon: MomentEstimate
    high_upsilon: Optional[MomentEstimate]
    var_gamma: float


def network_var_asymptotic(law: ALaw, model: RiskModel, gamma: float,
                           row: int = 1, **kw) -> float:
    """Asymptotic VaR of an agent loss: (theta sum_l E[a_l^alpha] / gamma)^(1/alpha)."""
    alpha, theta = model.margin.alpha, model.margin.theta
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")
    return (theta * row_moment_sum(law, row, alpha, **kw).value / gamma) ** (1.0 / alpha)


def network_covar(case: str, law: ALaw, model: RiskModel, gamma: float,
                  upsilon: float, var_gamma: Optional[float] = None,
                  **kw) -> NetworkCovar:
    """Asymptotic CoVaR displays per case; see :class:`NetworkCovar`."""
    _check_case(case, law, model)
    alpha, theta = model.margin.alpha, model.margin.theta
    if not 0 < gamma < 1 or not upsilon > 0:
        raise DomainError("need gamma in (0, 1) and upsilon > 0")
    m2 = row_moment_sum(law, 1, alpha, **kw).value
    if var_gamma is None:
        var_gamma = (theta * m2 / gamma) ** (1.0 / alpha)
    u = upsilon
    if case == CASE_OVERLAP:
        m1 = row_moment_sum(law, 0, alpha, **kw)
        val = m1.powered(1.0 / alpha).scaled(
            u ** (-1.0 / alpha) * m2 ** (-1.0 / alpha) * var_gamma)
        return NetworkCovar(GSpec(0.0), val, None, var_gamma)
    if case == CASE_IID:
        num = _pair_product_sum(law, alpha, alpha, **kw)
        val = num.powered(1.0 / alpha).scaled(
            u ** (-1.0 / alpha) * m2 ** (-2.0 / alpha) * var_gamma)
        return NetworkCovar(GSpec(1.0), val, None, var_gamma)
    if case in (CASE_MO_EQUAL, CASE_MO_PROP):
        eta = _mo_max_exponent(model.dependence.rates.variant, model.d)
        low = _pair_product_sum(law, alpha, alpha * eta, **kw).powered(
            1.0 / alpha).scaled(
            u ** (-1.0 / alpha) * m2 ** (-(1.0 + eta) / alpha) * var_gamma)
        high = _pair_product_sum(law, alpha * eta, alpha, **kw).powered(
            1.0 / (alpha * eta)).scaled(
            u ** (-1.0 / (alpha * eta))
            * m2 ** (-(1.0 + eta) / (alpha * eta)) * var_gamma)
        return NetworkCovar(GSpec(eta), low, high, var_gamma)
    rho = overlap_profile(law, model).rho_star
    val = gauss_constant_d(law, model, rho, **kw).powered(
        (1.0 + rho) / alpha).scaled(
        u ** (-(1.0 + rho) / alpha)
        * gauss_constant_c(rho, alpha) ** (-(1.0 + rho) / alpha)
        * m2 ** (-2.0 / alpha) * var_gamma)
    return NetworkCovar(gauss_level_function(rho, alpha), val, None, var_gamma)


def network_g(case: str, model: RiskModel, law: Optional[ALaw] = None) -> GSpec:
    """Level function keeping the case's CoVaR of VaR's order."""
    if case == CASE_OVERLAP:
        return GSpec(0.0)
    if case == CASE_IID:
        return GSpec(1.0)
    if case in (CASE_MO_EQUAL, CASE_MO_PROP):
        return GSpec(_mo_max_exponent(model.dependence.rates.variant, model.d))
    if case == CASE_GAUSS:
        rho = overlap_profile(law, model).rho_star
        return gauss_level_function(rho, model.margin.alpha)
    raise DispatchError(f"unknown case {case!r}")


def network_eci(case: str, model: RiskModel,
                law: Optional[ALaw] = None) -> EciReport:
    """Closed-form extreme CoVaR index per case."""
    a = model.margin.alpha
    if case == CASE_OVERLAP:
        return EciReport(math.inf, 0.0, a, a)
    if case == CASE_IID:
        return EciReport(1.0, 1.0, a, 2.0 * a)
    if case == CASE_MO_EQUAL:
        return EciReport(2.0, 0.5, a, 1.5 * a)
    if case == CASE_MO_PROP:
        d = model.d
        return EciReport(2.0 + 2.0 / d, d / (2.0 * d + 2.0), a,
                         a * (3.0 * d + 2.0) / (2.0 * (d + 1.0)))
    if case == CASE_GAUSS:
        rho = overlap_profile(law, model).rho_star
        return EciReport((1.0 + rho) / (1.0 - rho), (1.0 - rho) / (1.0 + rho),
                         a, 2.0 * a / (1.0 + rho))
    raise DispatchError(f"unknown case {case!r}")


def aggregate(law: ALaw, agents_s, agents_t) -> ALaw:
    """Two-row exposure of the aggregate pair (sum_{k in S} X_k,
    sum_{m in T} X_m); the pair equals A* Z with A* the row sums, so every
    pairwise operation applies to the result unchanged."""
    q, _ = law_shape(law)
    s = sorted(set(int(i) for i in agents_s))
    t = sorted(set(int(i) for i in agents_t))
    if not s or not t:
        raise DomainError("agent subsets must be nonempty")
    if any(i < 0 or i >= q for i in s + t):
        raise DomainError("agent index out of range")
    if is_deterministic(law):
        m = law_matrix(law)
        return AdjacencyMatrix(np.vstack([m[s].sum(axis=0), m[t].sum(axis=0)]))
    base = law.base if isinstance(law, AggregatedNetwork) else law
    if isinstance(law, AggregatedNetwork):
        raise DomainError("aggregating an aggregate is not supported")
    return AggregatedNetwork(base, tuple(s), tuple(t))


# ---------------------------------------------------------------------------
# one agent against the maximum of the others
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OneVsMaxReport:
    """Asymptotics of Y = (X_k, max_{m != k} X_m).

    Conditional probabilities are evaluated at the supplied (x, t); CoVaR
    values at (gamma, upsilon).  ``covar_2_given_1`` is None in the
    Marshall-Olkin disjoint cases, where only one direction has a stated
    display.  ECI applies to both directions.
    """

    case: str
    mu1_star: MomentEstimate
    mu2_star: MomentEstimate
    cond_prob_1_given_2: MomentEstimate
    cond_prob_2_given_1: MomentEstimate
    g: GSpec
    covar_1_given_2: NetworkCovar
    covar_2_given_1: Optional[NetworkCovar]
    eci: EciReport


def _max_others(a: np.ndarray, k: int) -> np.ndarray:
    others = [m for m in range(a.shape[1]) if m != k]
    return a[:, others, :].max(axis=1)


def one_vs_max_case(law: ALaw, model: RiskModel, k: int) -> str:
    """Overlap/disjoint regime for agent k against the rest."""
    q, _ = law_shape(law)
    if not 0 <= k < q or q < 2:
        raise DomainError("need q >= 2 and a valid agent index")
    supp = support(law)
    others = [m for m in range(q) if m != k]
    shares = bool(np.any(supp[k] & supp[others].any(axis=0)))
    if shares:
        return CASE_OVERLAP
    dep = model.dependence
    if isinstance(dep, Iid):
        return CASE_IID
    if isinstance(dep, MarshallOlkin):
        variant = dep.rates.variant
        if variant == "equal":
            return CASE_MO_EQUAL
        if variant == "proportional":
            return CASE_MO_PROP
        raise ModelError("disjoint asymptotics need the equal or proportional variant")
    if isinstance(dep, Gaussian):
        return CASE_GAUSS
    raise ModelError(f"unsupported dependence {type(dep).__name__}")


def _one_vs_max_rho_star(law: ALaw, model: RiskModel, k: int) -> float:
    sig = model.dependence.sigma.entries
    supp = support(law)
    q, d = law_shape(law)
    others = [m for m in range(q) if m != k]
    any_other = supp[others].any(axis=0)
    best = -np.inf
    for ell in range(d):
        for j in range(d):
            if ell != j and supp[k, ell] and any_other[j]:
                best = max(best, sig[ell, j])
    if best == -np.inf:
        raise ModelError("no asset pair connects agent k with the rest")
    return float(best)


def one_vs_max(law: ALaw, model: RiskModel, k: int, x, t: float,
               gamma: float, upsilon: float, **kw) -> OneVsMaxReport:
    """Limit measures, conditional tail probabilities, CoVaR and ECI for
    one agent against the maximum of all the others."""
    case = one_vs_max_case(law, model, k)
    x1, x2 = _pair_thresholds(x)
    alpha, theta = model.margin.alpha, model.margin.theta
    if case != CASE_OVERLAP and not t > 1.0:
        raise DomainError("t must exceed 1 for the decaying factor")

    def mk(a):
        return (a[:, k, :] ** alpha).sum(axis=1)

    def mmax(a):
        return (_max_others(a, k) ** alpha).sum(axis=1)

    m_k = a_moment(law, mk, **kw)
    m_max = a_moment(law, mmax, **kw)
    var2 = (theta * m_max.value / gamma) ** (1.0 / alpha)
    var1 = (theta * m_k.value / gamma) ** (1.0 / alpha)

    def fn_mu1(a):
        ratio = np.maximum(a[:, k, :] / x1, _max_others(a, k) / x2)
        return (ratio ** alpha).sum(axis=1)

    mu1 = a_moment(law, fn_mu1, **kw)

    if case == CASE_OVERLAP:
        def fn_mu2(a):
            others = [m for m in range(a.shape[1]) if m != k]
            mins = np.minimum(a[:, k, None, :] / x1, a[:, others, :] / x2)
            return (mins.max(axis=1) ** alpha).sum(axis=1)

        mu2 = a_moment(law, fn_mu2, **kw)
        c12 = mu2.scaled(x2 ** alpha / m_max.value)
        c21 = mu2.scaled(x1 ** alpha / m_k.value)
        g = GSpec(0.0)
        cv12 = NetworkCovar(g, m_k.powered(1.0 / alpha).scaled(
            upsilon ** (-1.0 / alpha) * m_max.value ** (-1.0 / alpha) * var2),
            None, var2)
        cv21 = NetworkCovar(g, m_max.powered(1.0 / alpha).scaled(
            upsilon ** (-1.0 / alpha) * m_k.value ** (-1.0 / alpha) * var1),
            None, var1)
        rep = EciReport(math.inf, 0.0, alpha, alpha)
        return OneVsMaxReport(case, mu1, mu2, c12, c21, g, cv12, cv21, rep)

    if case == CASE_IID:
        def fn_t(a):
            return mk(a) * mmax(a)

        tsum = a_moment(law, fn_t, **kw)
        mu2 = tsum.scaled((x1 * x2) ** -alpha)
        c12 = tsum.scaled(theta * t ** -alpha * x1 ** -alpha / m_max.value)
        c21 = tsum.scaled(theta * t ** -alpha * x2 ** -alpha / m_k.value)
        g = GSpec(1.0)
        cv12 = NetworkCovar(g, tsum.powered(1.0 / alpha).scaled(
            upsilon ** (-1.0 / alpha) * m_max.value ** (-2.0 / alpha) * var2),
            None, var2)
        cv21 = NetworkCovar(g, tsum.powered(1.0 / alpha).scaled(
            upsilon ** (-1.0 / alpha) * m_k.value ** (-2.0 / alpha) * var1),
            None, var1)
        rep = EciReport(1.0, 1.0, alpha, 2.0 * alpha)
        return OneVsMaxReport(case, mu1, mu2, c12, c21, g, cv12, cv21, rep)

    if case in (CASE_MO_EQUAL, CASE_MO_PROP):
        d = model.d
        eta = _mo_max_exponent(model.dependence.rates.variant, d)

        def fn_mu2(a):
            r1 = a[:, k, :, None] / x1
            r2 = _max_others(a, k)[:, None, :] / x2
            return (np.minimum(r1, r2) ** alpha
                    * np.maximum(r1, r2) ** (alpha * eta)).sum(axis=(1, 2))

        mu2 = a_moment(law, fn_mu2, **kw)
        fac = (theta * t ** -alpha) ** eta
        c12 = mu2.scaled(fac * x2 ** alpha / m_max.value)
        c21 = mu2.scaled(fac * x1 ** alpha / m_k.value)
        g = GSpec(eta)

        def fn_low(a):
            return (a[:, k, :] ** alpha).sum(axis=1) \
                * (_max_others(a, k) ** (alpha * eta)).sum(axis=1)

        def fn_high(a):
            return (a[:, k, :] ** (alpha * eta)).sum(axis=1) \
                * (_max_others(a, k) ** alpha).sum(axis=1)

        low = a_moment(law, fn_low, **kw).powered(1.0 / alpha).scaled(
            upsilon ** (-1.0 / alpha) * m_max.value ** (-(1.0 + eta) / alpha) * var2)
        high = a_moment(law, fn_high, **kw).powered(1.0 / (alpha * eta)).scaled(
            upsilon ** (-1.0 / (alpha * eta))
            * m_max.value ** (-(1.0 + eta) / (alpha * eta)) * var2)
        cv12 = NetworkCovar(g, low, high, var2)
        a2 = network_alpha2(case, model)
        rep = EciReport(alpha / (a2 - alpha), (a2 - alpha) / alpha, alpha, a2)
        return OneVsMaxReport(case, mu1, mu2, c12, c21, g, cv12, None, rep)

    rho = _one_vs_max_rho_star(law, model, k)
    sigma = model.dependence.sigma.entries
    mask = _gauss_pair_mask(sigma, rho)
    c = alpha / (1.0 + rho)
    pre = (1.0 + rho) ** 1.5 / (2.0 * math.pi * math.sqrt(1.0 - rho))

    def fn_dstar(a):
        prod = (a[:, k, :, None] ** c) * (_max_others(a, k)[:, None, :] ** c)
        return (prod * mask).sum(axis=(1, 2))

    dstar = a_moment(law, fn_dstar, **kw).scaled(pre)
    cc = gauss_constant_c(rho, alpha)
    mu2 = dstar.scaled((x1 * x2) ** (-alpha / (1.0 + rho)))
    fac = (theta * t ** -alpha) ** ((1.0 - rho) / (1.0 + rho)) \
        * math.log(t) ** (-rho / (1.0 + rho)) / cc
    c12 = dstar.scaled(fac * x1 ** (-alpha / (1.0 + rho))
                       * x2 ** (alpha * rho / (1.0 + rho)) / m_max.value)
    c21 = dstar.scaled(fac * x2 ** (-alpha / (1.0 + rho))
                       * x1 ** (alpha * rho / (1.0 + rho)) / m_k.value)
    g = gauss_level_function(rho, alpha)
    core = dstar.powered((1.0 + rho) / alpha).scaled(
        upsilon ** (-(1.0 + rho) / alpha) * cc ** (-(1.0 + rho) / alpha))
    cv12 = NetworkCovar(g, core.scaled(m_max.value ** (-2.0 / alpha) * var2),
                        None, var2)
    cv21 = NetworkCovar(g, core.scaled(m_k.value ** (-2.0 / alpha) * var1),
                        None, var1)
    rep = EciReport((1.0 + rho) / (1.0 - rho), (1.0 - rho) / (1.0 + rho),
                    alpha, 2.0 * alpha / (1.0 + rho))
    return OneVsMaxReport(case, mu1, mu2, c12, c21, g, cv12, cv21, rep)
