"""Closed-form RDP solver for Bernoulli vector sources.

Given component success probabilities q_1 >= ... >= q_n (each in [0, 1/2]
after normalization) and budgets (D, P) for total Hamming distortion and
total marginal-probability gap, the optimal rate decomposes into scalar
rates sum_i R(d_i, p_i, q_i) under sum d_i = D, sum p_i = P.  The (D, P)
plane splits into three regions:

  A: perception slack.  Reverse water-filling sets d_i = min(level, q_i)
     and the rate is the classic rate-distortion value.
  B: zero rate.  A reconstruction independent of the source is feasible.
  C: both budgets bind.  Each component solves a two-multiplier
     stationarity system inside its U region; the shared multipliers
     (alpha, beta) are tuned so the allocations meet the budgets.

Region boundaries are T(D) = sum_i d_i (1-2q_i)/(1-2d_i) at the
water-filled allocation (for D < sum q_i) and the piecewise-linear S(D)
(for D >= sum q_i).  Boundaries belong to A and B; C is the open
remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import ScalarRegion, rd_boundary, scalar_rdp
from .errors import ConvergenceError, DomainError

#: q entries equal to 1/2 are pulled inward by this much inside the solver;
#: several multiplier formulas divide by (1 - 2q).
HALF_CLAMP = 1e-9

#: Default relative tolerance on |sum d - D| and |sum p - P|.
BUDGET_RTOL = 1e-8

#: Iteration cap for any single root search.
MAX_ROOT_ITER = 200

#: Near the S(D) boundary both multipliers vanish and the stationarity
#: system is not resolvable in float64; inside this relative distance the
#: solver snaps to a perturbed boundary allocation instead.
SNAP_RTOL_S = 1e-4
#: Same idea at the T(D) boundary, where only the perception multiplier
#: vanishes; the full solve stays well conditioned much closer in.
SNAP_RTOL_A = 1e-9

_TINY = 1e-300


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class BernoulliVectorSource:
    """Normalized source: q sorted non-increasing, all entries in [0, 1/2].

    ``flip_mask`` records, per ORIGINAL component, whether the raw
    probability exceeded 1/2 and was complemented.  ``permutation[i]`` is
    the original index of sorted component i; together they round-trip the
    raw input.
    """

    q: np.ndarray
    flip_mask: np.ndarray
    permutation: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or q.size == 0:
            raise DomainError("source needs at least one component")
        if np.any(q < -1e-12) or np.any(q > 0.5 + 1e-12):
            raise DomainError("normalized q entries must lie in [0, 1/2]")
        if np.any(np.diff(q) > 1e-15):
            raise DomainError("normalized q must be sorted non-increasing")
        perm = np.asarray(self.permutation)
        if sorted(perm.tolist()) != list(range(q.size)):
            raise DomainError("permutation must be a bijection on [n]")
        object.__setattr__(self, "q", np.clip(q, 0.0, 0.5))
        object.__setattr__(self, "flip_mask", np.asarray(self.flip_mask, dtype=bool))
        object.__setattr__(self, "permutation", perm.astype(int))

    @property
    def n(self) -> int:
        return int(self.q.size)

    def raw(self) -> np.ndarray:
        """Reconstruct the raw probabilities that produced this source."""
        out = np.empty(self.n)
        out[self.permutation] = self.q
        return np.where(self.flip_mask, 1.0 - out, out)


@dataclass(frozen=True)
class BudgetPair:
    """Total distortion budget D and total perception budget P.

    P = inf is accepted and means the perception constraint is dropped.
    """

    D: float
    P: float

    def __post_init__(self):
        if not math.isfinite(self.D) or self.D < -1e-12:
            raise DomainError(f"D must be finite and >= 0, got {self.D!r}")
        if math.isnan(self.P) or self.P < -1e-12:
            raise DomainError(f"P must be >= 0, got {self.P!r}")
        object.__setattr__(self, "D", max(float(self.D), 0.0))
        object.__setattr__(self, "P", max(float(self.P), 0.0))


class PlaneRegion:
    """Labels for the (D, P) plane partition."""

    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class Allocation:
    """Optimal per-component budgets and the rates they induce (nats)."""

    d: np.ndarray
    p: np.ndarray
    per_component_rate: np.ndarray
    total_rate: float


@dataclass(frozen=True)
class KktCertificate:
    """Multipliers and per-component region labels witnessing optimality.

    nu and mu multiply the distortion and perception budget constraints;
    lam[i] >= 0 multiplies p_i >= 0 (complementary slack with p_i); gamma
    is identically zero because optimal d_i > 0 whenever D > 0.
    """

    nu: float
    mu: float
    lam: np.ndarray
    gamma: np.ndarray
    component_regions: tuple[ScalarRegion, ...]


@dataclass(frozen=True)
class RdpResult:
    rate: float
    region: str
    allocation: Allocation
    certificate: KktCertificate
    multiplier_iterations: int
    residuals: tuple[float, float]
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SCurvePoint:
    """S(D) value with the segment index, its distortion, and optimizers.

    ``k`` is the 1-based active segment (None on the zero plateau, where
    ``d_k`` is NaN).
    """

    value: float
    k: int | None
    d_k: float
    d: np.ndarray
    p: np.ndarray


# ---------------------------------------------------------------------------
# normalization and the plane partition


def normalize(raw_q) -> BernoulliVectorSource:
    """Canonicalize raw probabilities: complement entries above 1/2, then
    sort non-increasing, recording flips and the permutation."""
    raw = np.asarray(raw_q, dtype=float)
    if raw.ndim != 1 or raw.size == 0:
        raise DomainError("raw_q must be a non-empty 1-d sequence")
    if np.any(raw < -1e-12) or np.any(raw > 1.0 + 1e-12):
        bad = raw[(raw < -1e-12) | (raw > 1.0 + 1e-12)][0]
        raise DomainError(f"probabilities must lie in [0, 1]; got {bad!r}")
    raw = np.clip(raw, 0.0, 1.0)
    flip = raw > 0.5
    folded = np.where(flip, 1.0 - raw, raw)
    perm = np.argsort(-folded, kind="stable")
    return BernoulliVectorSource(q=folded[perm], flip_mask=flip, permutation=perm)


def _as_source(src) -> BernoulliVectorSource:
    if isinstance(src, BernoulliVectorSource):
        return src
    return normalize(src)


def _as_budget(budget) -> BudgetPair:
    if isinstance(budget, BudgetPair):
        return budget
    D, P = budget
    return BudgetPair(float(D), float(P))


def _effective_q(src: BernoulliVectorSource) -> tuple[np.ndarray, tuple[str, ...]]:
    """Apply the q = 1/2 clamp and report it."""
    q = src.q.copy()
    at_half = q >= 0.5
    notes: tuple[str, ...] = ()
    if np.any(at_half):
        q[at_half] = 0.5 - HALF_CLAMP
        idx = ", ".join(str(i) for i in np.nonzero(at_half)[0])
        notes = (f"clamped q=1/2 to 1/2-{HALF_CLAMP:g} for component(s) {idx}",)
    return q, notes


def water_fill(q: np.ndarray, D: float) -> np.ndarray:
    """Distortions d_i = min(level, q_i) with the level chosen so that
    sum d_i = D.  Exact: q is sorted non-increasing, so components
    saturate from the tail; scan candidate saturation counts instead of
    bisecting on the level."""
    q = np.asarray(q, dtype=float)
    total = float(q.sum())
    if D < 0 or D > total + 1e-12:
        raise DomainError(f"water filling needs 0 <= D <= sum q = {total}")
    if D >= total:
        return q.copy()
    suffix = np.concatenate((np.cumsum(q[::-1])[::-1], [0.0]))  # suffix[m] = sum q[m:]
    for m in range(q.size, 0, -1):
        level = (D - suffix[m]) / m
        low = q[m] if m < q.size else 0.0
        if low - 1e-15 <= level <= q[m - 1] + 1e-15:
            return np.minimum(max(level, 0.0), q)
    raise ConvergenceError("water level scan failed")  # pragma: no cover


def _t_curve(q: np.ndarray, D: float) -> float:
    d = water_fill(q, D)
    return float(np.sum(d * (1.0 - 2.0 * q) / (1.0 - 2.0 * d)))


def t_of_d(src, D: float) -> float:
    """Boundary of the perception-slack region: the smallest total
    perception compatible with the water-filled distortions,
    T(D) = sum_i d_i (1-2q_i)/(1-2d_i) with d_i = min(level, q_i).

    Defined for 0 <= D < sum q_i; T(0) = 0, T is strictly increasing when
    the q_i are below 1/2, and T(D) <= D always.
    """
    src = _as_source(src)
    q, _ = _effective_q(src)
    total = float(q.sum())
    if not 0.0 <= D < total:
        raise DomainError(f"T(D) needs 0 <= D < sum q = {total}")
    return _t_curve(q, float(D))


def _s_curve(q: np.ndarray, D: float) -> SCurvePoint:
    sum_q = float(q.sum())
    caps = 2.0 * q * (1.0 - q)
    D = max(float(D), sum_q)
    if D >= float(caps.sum()):
        # zero plateau: p = 0 and the distortion spread proportionally to
        # the headroom 1 - cap_i, so every d_i >= cap_i and d_i <= 1.
        d_total = min(D, float(q.size))
        head = 1.0 - caps
        w = head / head.sum() if head.sum() > 0 else np.full(q.size, 1.0 / q.size)
        d = caps + (d_total - float(caps.sum())) * w
        return SCurvePoint(0.0, None, math.nan, d, np.zeros_like(d))
    prefix_caps = np.concatenate(([0.0], np.cumsum(caps)))
    suffix_q = np.concatenate((np.cumsum(q[::-1])[::-1], [0.0]))  # sum of q[i:]
    for k in range(1, q.size + 1):
        if D <= prefix_caps[k] + suffix_q[k] + 1e-15:
            d_k = D - prefix_caps[k - 1] - suffix_q[k]
            d_k = min(max(d_k, q[k - 1]), caps[k - 1])
            p_k = (caps[k - 1] - d_k) / (1.0 - 2.0 * q[k - 1])
            d = np.concatenate((caps[: k - 1], [d_k], q[k:]))
            p = np.concatenate((np.zeros(k - 1), [p_k], q[k:]))
            return SCurvePoint(float(p.sum()), k, float(d_k), d, p)
    raise ConvergenceError("S(D) segment scan failed")  # pragma: no cover


def s_of_d(src, D: float) -> SCurvePoint:
    """Minimum total perception compatible with zero rate at distortion
    budget D >= sum q_i, with the explicit optimizers.

    On [sum q_i, sum 2q_i(1-q_i)] the curve is piecewise linear with one
    segment per component (slope -1/(1-2q_k), so convex and decreasing
    because q is sorted); beyond the last breakpoint S(D) = 0.
    """
    src = _as_source(src)
    q, _ = _effective_q(src)
    if D < float(q.sum()) - 1e-12:
        raise DomainError(f"S(D) needs D >= sum q = {float(q.sum())}")
    return _s_curve(q, float(D))


def classify(src, budget) -> str:
    """Assign (D, P) to region A, B or C.  Boundary points belong to A or
    B (their defining inequalities are closed); C is the open remainder."""
    src, budget = _as_source(src), _as_budget(budget)
    q, _ = _effective_q(src)
    if budget.D < float(q.sum()):
        return PlaneRegion.A if budget.P >= _t_curve(q, budget.D) else PlaneRegion.C
    return PlaneRegion.B if budget.P >= _s_curve(q, budget.D).value else PlaneRegion.C


# ---------------------------------------------------------------------------
# per-component stationarity system (region C)


def _d_p_zero(alpha: float, q: np.ndarray) -> np.ndarray:
    """Distortion solving the stationarity condition at p = 0:
    d = (sqrt(1 + 4q(1-q)(e^{2a}-1)) - 1) / (e^{2a}-1), written so it is
    stable as alpha -> 0 (value -> 2q(1-q)) and alpha -> inf (value -> 0).
    """
    t = math.expm1(2.0 * alpha)
    return 4.0 * q * (1.0 - q) / (1.0 + np.sqrt(1.0 + 4.0 * q * (1.0 - q) * t))


def _alpha_gap(d, p, q):
    """Minus the distortion-direction gradient of the ternary-branch rate:
    -(1/2) log[(d-p)(d+p) / ((2(1-q)-(d-p))(2q-(d+p)))]."""
    num = np.maximum((d - p) * (d + p), _TINY)
    den = np.maximum((2.0 * (1.0 - q) - (d - p)) * (2.0 * q - (d + p)), _TINY)
    return -0.5 * np.log(num / den)


def _beta_gap(d, p, q):
    """Minus the perception-direction gradient of the ternary-branch rate.

    Positive strictly inside U, zero on the S/U frontier, and decreasing
    in p along any fixed-alpha contour.
    """
    num = np.maximum((q - p) ** 2 * (d + p) * (2.0 * (1.0 - q) - (d - p)), _TINY)
    den = np.maximum((1.0 - q + p) ** 2 * (d - p) * (2.0 * q - (d + p)), _TINY)
    return -0.5 * np.log(num / den)


def _d_of_alpha(alpha: float, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Eliminate d through the alpha equation at given p: the equation is
    a quadratic in d whose positive root always lies in (p, 2q - p)."""
    s = math.exp(-2.0 * alpha)
    c = p * p + s * (2.0 - 2.0 * q + p) * (2.0 * q - p)
    return c / (s + np.sqrt(s * s + (1.0 - s) * c))


_P_BISECT_ITERS = 64


def _component_dp(alpha: float, beta: float, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-component minimizer of R(d, p, q) + alpha d + beta p over
    d, p >= 0, vectorized over components.

    Either an interior stationary point of the U region (found by
    bisecting p along the fixed-alpha contour, where the beta gap is
    decreasing), or the p = 0 edge when the gap at p = 0 already sits at
    or below beta.  When the gap never reaches beta the bisection
    converges to the corner (q, q), which is the subdifferential solution
    there.
    """
    d = _d_p_zero(alpha, q)
    p = np.zeros_like(q)
    active = _beta_gap(d, p, q) > beta
    if np.any(active):
        qa = q[active]
        lo = np.zeros_like(qa)
        hi = qa * (1.0 - 1e-15)
        for _ in range(_P_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            above = _beta_gap(_d_of_alpha(alpha, mid, qa), mid, qa) > beta
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        pa = 0.5 * (lo + hi)
        p[active] = pa
        d[active] = _d_of_alpha(alpha, pa, qa)
    return d, p


def solve_component_c(alpha: float, beta: float, q: float) -> tuple[float, float]:
    """Solve one component's stationarity system for multipliers
    (alpha, beta), both > 0.

    Returns the interior solution (d', p') when it has p' > 0; otherwise
    p = 0 with d from the closed-form p = 0 equation.  The result always
    lies in the closure of the U region for this q.
    """
    if not (alpha > 0.0 and beta > 0.0):
        raise DomainError("solve_component_c needs alpha > 0 and beta > 0")
    if not 0.0 < q <= 0.5:
        raise DomainError("solve_component_c needs 0 < q <= 1/2")
    q_eff = min(float(q), 0.5 - HALF_CLAMP)
    d, p = _component_dp(float(alpha), float(beta), np.array([q_eff]))
    return float(d[0]), float(p[0])


def _root(f, lo: float, hi: float, resid_tol: float, what: str) -> float:
    """Bracketed root of a monotone decreasing f, residual-checked.

    brentq terminates on interval width; on staircase-like profiles it can
    stop beside a sharp ramp, so when the residual is still large the
    final bracket is re-bisected on sign down to float exhaustion.
    """
    try:
        x = brentq(f, lo, hi, xtol=1e-30, rtol=8.9e-16, maxiter=MAX_ROOT_ITER)
    except ValueError as exc:  # pragma: no cover - brackets are pre-checked
        raise ConvergenceError(f"{what}: bracketing failed") from exc
    fx = f(x)
    if abs(fx) <= resid_tol:
        return x
    a, b = (x, hi) if fx > 0.0 else (lo, x)
    for _ in range(MAX_ROOT_ITER):
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        if f(m) > 0.0:
            a = m
        else:
            b = m
    m = 0.5 * (a + b)
    return m if abs(f(m)) < abs(fx) else x


def _solve_c_multipliers(q: np.ndarray, D: float, P: float,
                         resid_d: float, resid_p: float):
    """Find alpha, beta > 0 with sum d = D and sum p = P.

    Nested bracketed search: at fixed beta, sum d is strictly decreasing
    in alpha (inner root); along the inner solution curve, sum p is
    strictly decreasing in beta (outer root).  Both facts follow from
    monotonicity of the gradient map of a convex function, and the
    bracket sign checks re-verify them on every run.
    """
    evals = [0]

    def sum_d(alpha: float, beta: float) -> float:
        evals[0] += 1
        return float(_component_dp(alpha, beta, q)[0].sum())

    def alpha_for(beta: float) -> float:
        f = lambda a: sum_d(a, beta) - D
        lo = 1e-12
        if f(lo) <= 0.0:
            raise ConvergenceError("distortion budget touches the zero-rate edge")
        hi = 1.0
        while f(hi) > 0.0:
            hi *= 2.0
            if hi > 2.0 ** 40:  # pragma: no cover
                raise ConvergenceError("no bracket for the distortion multiplier")
        return _root(f, lo, hi, resid_d, "distortion multiplier")

    def g(beta: float) -> float:
        a = alpha_for(beta)
        evals[0] += 1
        return float(_component_dp(a, beta, q)[1].sum()) - P

    b_hi = float(np.max(0.5 * np.log((1.0 - q) / q))) + 1.0  # all p = 0 above
    b_lo = None
    for probe in (1e-2, 1e-4, 1e-6, 1e-8, 1e-9):
        if probe >= b_hi:
            continue
        if g(probe) > 0.0:
            b_lo = probe
            break
        b_hi = probe
    if b_lo is None:
        raise ConvergenceError("perception budget touches the region boundary")
    beta = _root(g, b_lo, b_hi, resid_p, "perception multiplier")
    alpha = alpha_for(beta)
    d, p = _component_dp(alpha, beta, q)
    return alpha, beta, d, p, evals[0]


# ---------------------------------------------------------------------------
# assembling results


def _allocation(d: np.ndarray, p: np.ndarray, q: np.ndarray) -> Allocation:
    rates = np.atleast_1d(np.asarray(scalar_rdp(d, p, q), dtype=float))
    return Allocation(d=d, p=p, per_component_rate=rates, total_rate=float(rates.sum()))


def _result(region, d, p, q, nu, mu, lam, labels, iters, budget, notes=()) -> RdpResult:
    alloc = _allocation(d, p, q)
    cert = KktCertificate(nu=float(nu), mu=float(mu), lam=np.asarray(lam, dtype=float),
                          gamma=np.zeros_like(d), component_regions=tuple(labels))
    res_d = abs(float(d.sum()) - budget.D)
    res_p = 0.0 if math.isinf(budget.P) else abs(float(p.sum()) - budget.P)
    return RdpResult(rate=alloc.total_rate, region=region, allocation=alloc,
                     certificate=cert, multiplier_iterations=int(iters),
                     residuals=(res_d, res_p), notes=tuple(notes))


def _spread_perception(lower: np.ndarray, P: float) -> np.ndarray:
    """Deterministic slack rule: meet sum p = P with p >= lower by scaling
    proportionally to the lower bounds (uniformly when they vanish)."""
    total = float(lower.sum())
    if math.isinf(P):
        return lower.copy()
    if total <= 0.0:
        return np.full(lower.size, P / lower.size)
    return lower * (P / total)


# ---------------------------------------------------------------------------
# region solvers


def solve_region_a(src, budget) -> RdpResult:
    """Perception-slack region: water-fill the distortion, pick any
    perception split above the per-component frontier; the rate is the
    classic rate-distortion value sum_i [h2(q_i) - h2(d_i)]."""
    src, budget = _as_source(src), _as_budget(budget)
    q, notes = _effective_q(src)
    if math.isinf(budget.P):
        notes = notes + ("P=inf: perception left at its lower bounds",)
    if budget.D <= 0.0:
        # forced zero allocation; the water-level multiplier is formally +inf
        d = np.zeros_like(q)
        p = _spread_perception(np.zeros_like(q), budget.P)
        labels = [ScalarRegion.EXTERIOR] * q.size
        return _result(PlaneRegion.A, d, p, q, math.inf, 0.0, np.zeros_like(q),
                       labels, 0, budget, notes)
    d = water_fill(q, budget.D)
    lower = np.asarray(rd_boundary(d, q), dtype=float)
    if not math.isinf(budget.P) and budget.P < float(lower.sum()) - 1e-12:
        raise DomainError("(D, P) is not in region A")
    p = _spread_perception(lower, budget.P)
    level = float(d.max())
    nu = math.log((1.0 - level) / level)
    labels = [ScalarRegion.V if (q[i] > 0.0 and d[i] >= q[i]) else
              (ScalarRegion.S if d[i] > 0.0 else ScalarRegion.EXTERIOR)
              for i in range(q.size)]
    return _result(PlaneRegion.A, d, p, q, nu, 0.0, np.zeros_like(q),
                   labels, 0, budget, notes)


def solve_region_b(src, budget) -> RdpResult:
    """Zero-rate region: start from the minimum-perception optimizers of
    the S(D) curve and spread the perception slack uniformly."""
    src, budget = _as_source(src), _as_budget(budget)
    q, notes = _effective_q(src)
    point = _s_curve(q, budget.D)
    if not math.isinf(budget.P) and budget.P < point.value - 1e-12:
        raise DomainError("(D, P) is not in region B")
    if budget.D > q.size:
        notes = notes + (f"D={budget.D:g} exceeds n={q.size}; distortion saturates at n",)
    d = point.d.copy()
    if math.isinf(budget.P):
        p = point.p.copy()
        notes = notes + ("P=inf: perception left at the S(D) optimizers",)
    else:
        p = point.p + (budget.P - point.value) / q.size
    labels = [ScalarRegion.V if (q[i] > 0.0 and d[i] <= q[i]) else
              (ScalarRegion.T if d[i] > 0.0 else ScalarRegion.EXTERIOR)
              for i in range(q.size)]
    return _result(PlaneRegion.B, d, p, q, 0.0, 0.0, np.zeros_like(q),
                   labels, 0, budget, notes)


def _c_labels(d: np.ndarray, q: np.ndarray) -> list[ScalarRegion]:
    return [ScalarRegion.U if (q[i] > 0.0 and d[i] > 0.0) else ScalarRegion.EXTERIOR
            for i in range(q.size)]


def _snap_t_boundary(q, budget, notes) -> RdpResult:
    """(D, P) within a hair of the T(D) curve: reuse the water-filled
    distortions and scale the perception bounds down to meet P exactly.
    The allocation is feasible and every pair sits in the closure of U,
    so the rate overshoot is quadratic in the boundary distance."""
    d = water_fill(q, budget.D)
    lower = np.asarray(rd_boundary(d, q), dtype=float)
    p = _spread_perception(lower, budget.P)
    level = float(d.max())
    nu = math.log((1.0 - level) / level)
    gaps = _beta_gap(d, p, q)
    mu = max(float(np.min(gaps)), 0.0)
    return _result(PlaneRegion.C, d, p, q, nu, mu, np.zeros_like(q),
                   _c_labels(d, q), 0, budget,
                   notes + ("snapped to the T(D) boundary",))


def _snap_s_boundary(q, budget, notes) -> RdpResult:
    """(D, P) within a hair of the S(D) curve: take the zero-rate
    optimizers and shave the perception overshoot off successive
    components, starting at the active segment.  All pairs stay inside
    the closure of U."""
    point = _s_curve(q, budget.D)
    d, p = point.d.copy(), point.p.copy()
    excess = float(p.sum()) - budget.P
    start = (point.k or q.size) - 1
    for i in list(range(start, q.size)) + list(range(0, start)):
        if excess <= 0.0:
            break
        take = min(p[i], excess)
        p[i] -= take
        excess -= take
    nu = max(float(np.max(_alpha_gap(d, p, q))), 0.0)
    gaps = _beta_gap(d, p, q)
    mu = max(float(np.max(gaps)), 0.0)
    lam = np.where(p > 0.0, 0.0, np.maximum(mu - gaps, 0.0))
    return _result(PlaneRegion.C, d, p, q, nu, mu, lam, _c_labels(d, q),
                   0, budget, notes + ("snapped to the S(D) boundary",))


def solve_region_c(src, budget, budget_rtol: float = BUDGET_RTOL) -> RdpResult:
    """Both budgets bind: tune the shared multipliers (alpha, beta) so the
    per-component stationarity solutions meet the budgets with equality."""
    src, budget = _as_source(src), _as_budget(budget)
    if classify(src, budget) != PlaneRegion.C:
        raise DomainError("(D, P) is not in region C")
    q_all, notes = _effective_q(src)
    D, P = budget.D, budget.P

    pos = q_all > 0.0
    q = q_all[pos]
    sum_q = float(q.sum())

    # Budgets hugging a boundary leave the multipliers too small to
    # resolve; serve those from the boundary allocation instead.
    if D < sum_q:
        t_val = _t_curve(q, D)
        if t_val - P <= SNAP_RTOL_A * max(1.0, t_val):
            return _scatter_zeros(_snap_t_boundary(q, budget, notes), pos, q_all, budget)
    else:
        s_val = _s_curve(q, D).value
        if s_val - P <= SNAP_RTOL_S * max(1.0, s_val):
            return _scatter_zeros(_snap_s_boundary(q, budget, notes), pos, q_all, budget)

    resid_d = 0.01 * budget_rtol * max(1.0, D)
    resid_p = 0.01 * budget_rtol * max(1.0, P)

    if P == 0.0:
        evals = [0]

        def f(a):
            evals[0] += 1
            return float(_d_p_zero(a, q).sum()) - D

        hi = 1.0
        while f(hi) > 0.0:
            hi *= 2.0
        alpha = _root(f, 1e-12, hi, resid_d, "p=0 distortion multiplier")
        d = _d_p_zero(alpha, q)
        p = np.zeros_like(d)
        gaps = _beta_gap(d, p, q)
        beta = float(np.max(gaps))
        lam = np.maximum(beta - gaps, 0.0)
        iters = evals[0]
    else:
        try:
            alpha, beta, d, p, iters = _solve_c_multipliers(q, D, P, resid_d, resid_p)
        except ConvergenceError:
            # boundary-hugging budgets that escaped the snap window
            snap = _snap_t_boundary if D < sum_q else _snap_s_boundary
            return _scatter_zeros(snap(q, budget, notes), pos, q_all, budget)
        gaps = _beta_gap(d, p, q)
        lam = np.where(p > 0.0, 0.0, np.maximum(beta - gaps, 0.0))

    out = _result(PlaneRegion.C, d, p, q, alpha, beta, lam, _c_labels(d, q),
                  iters, budget, notes)
    return _scatter_zeros(out, pos, q_all, budget)


def _scatter_zeros(result: RdpResult, pos: np.ndarray, q_all: np.ndarray,
                   budget: BudgetPair) -> RdpResult:
    """Re-insert stripped q = 0 components as (d, p) = (0, 0) rows."""
    if bool(pos.all()):
        return result
    n = q_all.size
    d = np.zeros(n)
    p = np.zeros(n)
    lam = np.zeros(n)
    d[pos] = result.allocation.d
    p[pos] = result.allocation.p
    lam[pos] = result.certificate.lam
    labels = []
    kept = iter(result.certificate.component_regions)
    for keep in pos:
        labels.append(next(kept) if keep else ScalarRegion.EXTERIOR)
    return _result(result.region, d, p, q_all, result.certificate.nu,
                   result.certificate.mu, lam, labels,
                   result.multiplier_iterations, budget, result.notes)


# ---------------------------------------------------------------------------
# top-level entry points


def rdp(src, budget, check: bool = True, budget_rtol: float = BUDGET_RTOL) -> RdpResult:
    """RDP function of a Bernoulli vector source at budgets (D, P).

    Dispatches on the plane region and returns the rate in nats together
    with the optimal allocation and its KKT certificate.  ``check`` runs
    the post-solve consistency checks (budget equality, certificate
    structure) and raises ConvergenceError if they fail.
    """
    src, budget = _as_source(src), _as_budget(budget)
    region = classify(src, budget)
    if region == PlaneRegion.A:
        result = solve_region_a(src, budget)
    elif region == PlaneRegion.B:
        result = solve_region_b(src, budget)
    else:
        result = solve_region_c(src, budget, budget_rtol)
    if check:
        _check_result(budget, result, budget_rtol)
    return result


def rdp_p_zero(src, D: float) -> RdpResult:
    """Specialized entry point for zero perception budget.

    Below the zero-rate threshold the distortions follow the p = 0
    stationarity equation with a single multiplier; beyond it the rate is
    zero.  Agrees with rdp(src, (D, 0)) by construction.
    """
    src = _as_source(src)
    budget = BudgetPair(float(D), 0.0)
    region = classify(src, budget)
    if region == PlaneRegion.A:  # only D = 0 lands here when P = 0
        return solve_region_a(src, budget)
    if region == PlaneRegion.B:
        return solve_region_b(src, budget)
    return solve_region_c(src, budget)


_LN2 = math.log(2.0)


def length_bounds(rate_nats: float) -> tuple[float, float]:
    """One-shot prefix-code length sandwich for a rate given in nats:
    lower bound R_b = rate/ln 2 bits, upper bound R_b + log2(R_b + 1) + 5."""
    if not math.isfinite(rate_nats) or rate_nats < 0.0:
        raise DomainError("rate must be finite and >= 0")
    rb = rate_nats / _LN2
    return rb, rb + math.log2(rb + 1.0) + 5.0


# ---------------------------------------------------------------------------
# post-solve consistency checks


_FAMILIES = (
    {ScalarRegion.S, ScalarRegion.V},
    {ScalarRegion.T, ScalarRegion.V},
    {ScalarRegion.U},
)


def check_certificate(result: RdpResult, cs_tol: float = 1e-5) -> None:
    """Structural KKT certificate checks.

    Raises ConvergenceError unless lam >= 0, gamma == 0, complementary
    slackness lam_i p_i = 0 holds within cs_tol, and the component labels
    form one consistent family (all S/V, all T/V, or all U), ignoring
    degenerate EXTERIOR components.
    """
    cert = result.certificate
    if np.any(cert.lam < -1e-12):
        raise ConvergenceError("negative perception multiplier in certificate")
    if np.any(cert.gamma != 0.0):
        raise ConvergenceError("gamma multipliers must be identically zero")
    slack = np.abs(cert.lam * result.allocation.p)
    if np.any(slack > cs_tol):
        raise ConvergenceError(f"complementary slackness violated: {slack.max():g}")
    labels = {r for r in cert.component_regions if r is not ScalarRegion.EXTERIOR}
    if labels and not any(labels <= fam for fam in _FAMILIES):
        raise ConvergenceError(f"component regions {labels} mix incompatible families")


def in_region_closure(d: float, p: float, q: float, region: ScalarRegion,
                      tol: float = 1e-9) -> bool:
    """Membership of (d, p) in the closure of a scalar region."""
    if region is ScalarRegion.EXTERIOR:
        return d <= tol
    if region is ScalarRegion.S:
        return -tol <= d <= q + tol and p >= rd_boundary(min(d, q), q) - tol
    if region is ScalarRegion.T:
        return d >= q - tol and d >= 2.0 * q * (1.0 - q) - (1.0 - 2.0 * q) * p - tol
    if region is ScalarRegion.V:
        return abs(d - q) <= tol and p >= q - tol
    upper = 2.0 * q * (1.0 - q) - (1.0 - 2.0 * q) * min(p, q)
    lower = p / (1.0 - 2.0 * (q - p)) if p > 0.0 else 0.0
    return -tol <= p <= q + tol and lower - tol <= d <= upper + tol


def kkt_gradient_residuals(src, result: RdpResult) -> np.ndarray:
    """Per-component subdifferential residuals of the Lagrangian at the
    returned allocation (diagnostic).  Non-snapped solves sit at roundoff
    or root-finder scale; snapped ones are larger by construction."""
    src = _as_source(src)
    q, _ = _effective_q(src)
    cert = result.certificate
    d, p = result.allocation.d, result.allocation.p
    out = np.zeros(q.size)
    for i, label in enumerate(cert.component_regions):
        if label is ScalarRegion.EXTERIOR:
            continue
        if label is ScalarRegion.S:
            gd = math.log(d[i] / (1.0 - d[i])) + cert.nu
            gp = cert.mu
        elif label is ScalarRegion.T:
            gd = cert.nu
            gp = cert.mu - cert.lam[i]
        elif label is ScalarRegion.V:
            end_a = math.log(q[i] / (1.0 - q[i])) + cert.nu
            end_b = cert.nu
            lo, hi = min(end_a, end_b), max(end_a, end_b)
            gd = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))
            gp = cert.mu
        else:
            di, pi, qi = (np.array([v]) for v in (d[i], p[i], q[i]))
            gd = float(_alpha_gap(di, pi, qi)[0]) - cert.nu
            gp = float(_beta_gap(di, pi, qi)[0]) - (cert.mu - cert.lam[i])
        out[i] = max(abs(gd), abs(gp))
    return out


def _check_result(budget: BudgetPair, result: RdpResult, rtol: float) -> None:
    res_d, res_p = result.residuals
    n = result.allocation.d.size
    allowed_d = max(0.0, budget.D - n)  # distortion saturates at n
    if res_d > allowed_d + rtol * max(1.0, min(budget.D, n)) + 1e-15:
        raise ConvergenceError(f"distortion budget residual {res_d:g} above tolerance")
    if not math.isinf(budget.P) and res_p > rtol * max(1.0, budget.P) + 1e-15:
        raise ConvergenceError(f"perception budget residual {res_p:g} above tolerance")
    check_certificate(result)
