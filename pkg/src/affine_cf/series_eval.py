"""Numeric evaluation of the characteristic-function power series.

Local mode evaluates exp(iux) (1 + sum_k d_k(x, iu) t^k) from the exact
series terms; globalized mode first maps t to tau through the tangent-log
time transform and evaluates the tau-series of the transformed problem,
whose coefficients couple the series operator with the Taylor jet of
rho(tau) = (pi beta / 4) / cos(pi tau / 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .kernels import atom_vector, compile_series, evaluate_compiled
from .symalg import SymPoly, apply_symbol_operator, d_series
from .symbols import (
    AffineModel,
    BOUNDED,
    classify_boundedness,
    eval_symbol_table,
    sup_bound,
)

LOCAL = "Local"
GLOBALIZED = "Globalized"


# ---------------------------------------------------------------------------
# Jets (truncated Taylor arithmetic)
# ---------------------------------------------------------------------------


@dataclass
class Jet:
    """Truncated Taylor coefficients c_0 .. c_K of a scalar function."""

    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    def __add__(self, other: "Jet") -> "Jet":
        return Jet(self.coefficients + other.coefficients)

    def __mul__(self, other: "Jet") -> "Jet":
        k = self.coefficients.size
        out = np.convolve(self.coefficients, other.coefficients)[:k]
        return Jet(out)

    def scaled(self, s: float) -> "Jet":
        return Jet(self.coefficients * s)

    def reciprocal(self) -> "Jet":
        c = self.coefficients
        if c[0] == 0.0:
            raise ZeroDivisionError("jet reciprocal at a zero of the function")
        out = np.zeros_like(c)
        out[0] = 1.0 / c[0]
        for n in range(1, c.size):
            out[n] = -np.dot(c[1 : n + 1], out[n - 1 :: -1]) / c[0]
        return Jet(out)

    def power(self, m: int) -> "Jet":
        out = Jet(np.array([1.0] + [0.0] * self.order))
        base = self
        while m:
            if m & 1:
                out = out * base
            base = base * base
            m >>= 1
        return out


# ---------------------------------------------------------------------------
# Time transform
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeTransform:
    """t(tau) = beta ln tan(pi/4 + pi tau / 4), a bijection [0,1) -> [0,inf)."""

    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be > 0")

    def forward(self, tau: float) -> float:
        if not 0.0 <= tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {tau}")
        # ln tan(pi/4 + pi tau/4) = asinh(tan(pi tau/2)), exact at tau = 0
        return self.beta * math.asinh(math.tan(math.pi * tau / 2))

    def inverse(self, t: float) -> float:
        if t < 0:
            raise ValueError(f"t must be >= 0, got {t}")
        return (4.0 / math.pi) * (math.atan(math.exp(t / self.beta)) - math.pi / 4)

    def rho_jet(self, tau0: float, order: int) -> Jet:
        """Taylor jet of rho(tau) = (pi beta / 4) / cos(pi tau / 2) at tau0."""
        if not 0.0 <= tau0 < 1.0:
            raise ValueError(f"tau0 must lie in [0, 1), got {tau0}")
        a = math.pi * tau0 / 2.0
        w = math.pi / 2.0
        cos_jet = np.array(
            [w ** m / math.factorial(m) * math.cos(a + m * math.pi / 2.0)
             for m in range(order + 1)]
        )
        return Jet(cos_jet).reciprocal().scaled(math.pi * self.beta / 4.0)


def time_forward(tt: TimeTransform, tau: float) -> float:
    return tt.forward(tau)


def time_inverse(tt: TimeTransform, t: float) -> float:
    return tt.inverse(t)


def rho_jet(tt: TimeTransform, tau0: float, order: int) -> Jet:
    return tt.rho_jet(tau0, order)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class CFResult:
    """One characteristic-function evaluation with per-order diagnostics."""

    value: complex
    order_contributions: list
    truncation_order: int
    tail_estimate: float
    mode: str
    warnings: list = field(default_factory=list)


def _tail_estimate(contributions) -> float:
    """|last term| inflated by 1/(1-r), r the last observed term ratio
    clipped to [0, 0.9]."""
    if not contributions:
        return 0.0
    last = abs(contributions[-1])
    r = 0.0
    if len(contributions) >= 2 and abs(contributions[-2]) > 0:
        r = min(max(last / abs(contributions[-2]), 0.0), 0.9)
    return last / (1.0 - r)


# ---------------------------------------------------------------------------
# Local evaluation
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _compiled_d_series(d: int, k_max: int):
    polys = d_series(d, k_max)[1:]
    return compile_series(polys)


def eval_local(model: AffineModel, x, u, t: float, truncation: int = 16) -> CFResult:
    """exp(iux) (1 + sum_{k=1..K} d_k(x, iu) t^k)."""
    if truncation < 1:
        raise ValueError("truncation order must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    d = model.dimension
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    cs = _compiled_d_series(d, truncation)
    table = eval_symbol_table(model, x, u, max(truncation - 1, 0))
    dk = evaluate_compiled(cs, atom_vector(cs, table.atom_values()))
    contributions = [dk[k - 1] * t ** k for k in range(1, truncation + 1)]
    series = 0.0 + 0.0j
    for c in reversed(contributions):  # Horner-like summation, small terms first
        series += c
    phase = np.exp(1j * float(u @ x))
    return CFResult(
        value=phase * (1.0 + series),
        order_contributions=contributions,
        truncation_order=truncation,
        tail_estimate=_tail_estimate(contributions),
        mode=LOCAL,
    )


# ---------------------------------------------------------------------------
# Globalized evaluation
# ---------------------------------------------------------------------------


def _tau_series(d: int, k_max: int, rho: Jet) -> list:
    """Coefficients e_0..e_K of the transformed problem as atom polynomials:
    (k+1) e_{k+1} = sum_{m+j=k} r_m L[e_j] with L the series operator and
    r the jet of the transform derivative t'(tau) = 2 rho(tau)."""
    r = 2.0 * rho.coefficients
    e = [SymPoly.constant(Fraction(1))]
    for k in range(k_max):
        nxt = SymPoly()
        for m in range(k + 1):
            j = k - m
            if m >= r.size or r[m] == 0.0:
                continue
            nxt.add_into(apply_symbol_operator(e[j], d, j), r[m])
        e.append(nxt.scaled(Fraction(1, k + 1)))
    return e


@lru_cache(maxsize=None)
def _compiled_tau_series(d: int, k_max: int, beta: float):
    rho = TimeTransform(beta).rho_jet(0.0, k_max)
    polys = _tau_series(d, k_max, rho)[1:]
    return compile_series(polys)


@dataclass
class BetaChoice:
    beta: float
    tau_at_horizon: float
    sup_estimate: float


def choose_beta(model: AffineModel, omega_box, u_box, horizon: float) -> BetaChoice:
    """Heuristic transform scale: beta = min(1, 1/(2 sup|sigma|)), relaxed
    upward when the horizon would land at tau(T) > 0.9."""
    sb = sup_bound(model, omega_box, u_box)
    beta = 1.0 if sb == 0.0 else min(1.0, 1.0 / (2.0 * sb))
    tt = TimeTransform(beta)
    tau_T = tt.inverse(horizon)
    if tau_T > 0.9:
        # smallest beta with tau(T) = 0.9
        beta = horizon / math.log(math.tan(math.pi / 4 + math.pi * 0.225))
        tau_T = TimeTransform(beta).inverse(horizon)
    return BetaChoice(beta, tau_T, sb)


def _default_boxes(model: AffineModel, x, u):
    omega = []
    for i in range(model.dimension):
        if model.state_domain and model.state_domain[i][0] is not None \
                and model.state_domain[i][1] is not None:
            omega.append(tuple(model.state_domain[i]))
        else:
            omega.append((min(x[i], 0.0) - 1.0, max(x[i], 0.0) + 1.0))
    ubox = [(-abs(v) - 1.0, abs(v) + 1.0) for v in u]
    return omega, ubox


# -- numeric x-polynomial stepping (iterated globalized mode) ---------------


def _poly_step_operator(base0, slopes, d: int):
    """L acting on numeric x-polynomials q (dict multi-index -> complex):
    L[q] = sum_eps (base0_eps + sum_l x_l slope_{l,eps}) (1/eps!) d^eps_x q."""
    from .multiindex import enumerate_indices

    def dx_eps(q, eps):
        out = {}
        for mono, c in q.items():
            coef = c
            new = list(mono)
            ok = True
            for axis, times in enumerate(eps):
                for _ in range(times):
                    if new[axis] == 0:
                        ok = False
                        break
                    coef *= new[axis]
                    new[axis] -= 1
                if not ok:
                    break
            if ok:
                key = tuple(new)
                out[key] = out.get(key, 0.0) + coef
        return out

    def apply(q):
        deg = max((sum(m) for m in q), default=0)
        out = {}
        for k in range(deg + 1):
            for eps in enumerate_indices(d, k).indices:
                dq = dx_eps(q, eps)
                if not dq:
                    continue
                inv_fact = 1.0
                for e in eps:
                    inv_fact /= math.factorial(e)
                b = base0.get(eps, 0.0)
                for mono, c in dq.items():
                    w = c * inv_fact
                    if b != 0.0:
                        out[mono] = out.get(mono, 0.0) + w * b
                    for l in range(d):
                        s = slopes[l].get(eps, 0.0)
                        if s != 0.0:
                            key = tuple(
                                m + (1 if i == l else 0)
                                for i, m in enumerate(mono)
                            )
                            out[key] = out.get(key, 0.0) + w * s
        return out

    return apply


def _eval_xpoly(q, x) -> complex:
    total = 0.0 + 0.0j
    for mono, c in q.items():
        v = c
        for xi, e in zip(x, mono):
            v *= xi ** e
        total += v
    return total


def eval_globalized(model: AffineModel, x, u, t: float, truncation: int = 16,
                    beta: float = None, omega_box=None, u_box=None) -> CFResult:
    """Globalized-in-time evaluation through the tangent-log transform.

    The tau-series is expanded at tau0 = 0; when tau(t) > 0.7 the expansion
    is restepped (step 0.3) with rho re-expanded at each base point, carrying
    the solution as a numeric polynomial in x.
    """
    if truncation < 1:
        raise ValueError("truncation order must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    d = model.dimension
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    warnings = []
    if beta is None:
        ob, ub = _default_boxes(model, x, u)
        choice = choose_beta(model, omega_box or ob, u_box or ub, max(t, 1e-9))
        beta = choice.beta
        if choice.sup_estimate * beta > 0.5 + 1e-12:
            warnings.append(
                "convergence risk: horizon forces beta above the contraction "
                f"heuristic (sup estimate {choice.sup_estimate:.3g}, beta {beta:.3g})"
            )
    report = classify_boundedness(model)
    if report.classification != BOUNDED and omega_box is None \
            and not model.domain_bounded:
        warnings.append(
            "symbol is unbounded on an unbounded state domain; globalized "
            "series is evaluated on heuristic boxes"
        )
    tt = TimeTransform(beta)
    tau = tt.inverse(t)
    phase = np.exp(1j * float(u @ x))

    if tau <= 0.7:
        cs = _compiled_tau_series(d, truncation, beta)
        table = eval_symbol_table(model, x, u, max(truncation - 1, 0))
        ek = evaluate_compiled(cs, atom_vector(cs, table.atom_values()))
        contributions = [ek[k - 1] * tau ** k for k in range(1, truncation + 1)]
        series = 0.0 + 0.0j
        for c in reversed(contributions):
            series += c
        return CFResult(phase * (1.0 + series), contributions, truncation,
                        _tail_estimate(contributions), GLOBALIZED, warnings)

    # Iterated mode: numeric polynomial in x, restepped expansions.  The
    # Taylor radius of rho at tau0 is 1 - tau0 (pole of 1/cos at tau = 1),
    # so steps shrink as the base point approaches 1: never beyond half the
    # remaining radius, capped at 0.3.
    table = eval_symbol_table(model, [0.0] * d, u, max(truncation - 1, 0))
    base0 = dict(table.base)  # x = 0: base table is the constant part
    slopes = [dict(tab) for tab in table.slope]
    L = _poly_step_operator(base0, slopes, d)
    zero = tuple(0 for _ in range(d))
    q = {zero: 1.0 + 0.0j}
    tau0 = 0.0
    contributions = []
    max_steps = 200
    n_steps = 0
    while tau0 < tau - 1e-15:
        n_steps += 1
        if n_steps > max_steps:
            warnings.append(
                f"globalized stepping stopped after {max_steps} steps at "
                f"tau = {tau0:.6f} short of {tau:.6f}"
            )
            break
        step = min(0.3, 0.5 * (1.0 - tau0), tau - tau0)
        r = 2.0 * tt.rho_jet(tau0, truncation).coefficients
        layers = [q]
        for k in range(truncation):
            nxt = {}
            for m in range(min(k + 1, r.size)):
                if r[m] == 0.0:
                    continue
                lq = L(layers[k - m])
                for mono, c in lq.items():
                    nxt[mono] = nxt.get(mono, 0.0) + r[m] * c
            layers.append({m: c / (k + 1) for m, c in nxt.items()})
        q = {}
        contributions = []
        for k, layer in enumerate(layers):
            sk = step ** k
            if k > 0:
                contributions.append(_eval_xpoly(layer, x) * sk)
            for mono, c in layer.items():
                q[mono] = q.get(mono, 0.0) + c * sk
        q = {m: c for m, c in q.items() if abs(c) > 1e-300}
        tau0 += step
    value = phase * _eval_xpoly(q, x)
    return CFResult(value, contributions, truncation,
                    _tail_estimate(contributions), GLOBALIZED, warnings)
