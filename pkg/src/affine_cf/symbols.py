"""Affine models and numeric evaluation of their generator symbols.

The symbol of an affine generator is

    sigma(x, xi) = 1/2 xi^T a(x) xi + b(x) . xi
                   + integral( exp(xi.z) - 1 - xi.z 1_D(z), nu(x, dz) )

with a(x) = a0 + sum_l x_l aSlope_l, b(x) = b0 + B x and
nu(x, .) = nu_0 + sum_l x_l nu_l, evaluated on the imaginary axis xi = iu.

Derivative convention: all derivatives are taken in the complex symbol
variable xi itself, so d/dxi exp(xi.z) = z exp(xi.z) and the quadratic part
differentiates as an ordinary polynomial in xi.  This is the convention under
which the series recursion d_{k+1} = sum_eps d^eps_xi sigma (1/eps!) d^eps_x d_k
holds without stray factors of i.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .multiindex import MultiIndex, enumerate_indices
from .symalg import BASE, SLOPE, AtomKey

NO_COMPENSATION = "none"
UNIT_BALL = "unit_ball"
_TRUNCATIONS = (NO_COMPENSATION, UNIT_BALL)

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(y: float) -> float:
    return math.exp(-0.5 * y * y) / _SQRT2PI


def _norm_cdf(y: float) -> float:
    return 0.5 * (1.0 + math.erf(y / math.sqrt(2.0)))


# ---------------------------------------------------------------------------
# Jump specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoJumps:
    """Absent jump component (zero measure)."""

    def moment(self, eps: MultiIndex, xi: np.ndarray) -> complex:
        return 0.0 + 0.0j

    @property
    def total_mass(self) -> float:
        return 0.0

    def compensator(self, j: int) -> float:
        return 0.0

    max_order = None  # unlimited


@dataclass(frozen=True)
class GaussianJumps:
    """Compound-Poisson component with N(mean, cov) jump sizes.

    ``moment`` returns J(eps, xi) = integral z^eps exp(xi.z) nu(dz), available
    in closed form: the exponential-tilting identity gives
    J(0, xi) = intensity * exp(xi.m + xi^T C xi / 2) and higher moments follow
    the Hermite-style recursion
    T_{eps+e_j} = (m_j + (C xi)_j) T_eps + sum_k eps_k C_{jk} T_{eps - e_k}.
    """

    intensity: float
    mean: tuple
    cov: tuple  # row tuples, symmetric psd

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError("jump intensity must be >= 0")
        c = np.asarray(self.cov, dtype=float)
        if not np.allclose(c, c.T, atol=1e-12):
            raise ValueError("jump covariance must be symmetric")
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))
        object.__setattr__(self, "cov", tuple(map(tuple, c.tolist())))

    @property
    def dimension(self) -> int:
        return len(self.mean)

    @property
    def total_mass(self) -> float:
        return self.intensity

    max_order = None  # all moments finite

    def moment(self, eps: MultiIndex, xi: np.ndarray) -> complex:
        m = np.asarray(self.mean, dtype=float)
        c = np.asarray(self.cov, dtype=float)
        mgf = self.intensity * np.exp(xi @ m + 0.5 * xi @ c @ xi)
        drift = m + c @ xi  # gradient of the exponent
        # Build T_eps by reducing one coordinate at a time.
        def t_of(e: tuple) -> complex:
            if sum(e) == 0:
                return 1.0 + 0.0j
            j = next(i for i, v in enumerate(e) if v > 0)
            e_minus = tuple(v - (1 if i == j else 0) for i, v in enumerate(e))
            val = drift[j] * t_of(e_minus)
            for k, ek in enumerate(e_minus):
                if ek > 0:
                    e_mm = tuple(
                        v - (1 if i == k else 0) for i, v in enumerate(e_minus)
                    )
                    val += ek * c[j, k] * t_of(e_mm)
            return val

        return mgf * t_of(tuple(eps))

    def compensator(self, j: int) -> float:
        """integral z_j 1_D(z) nu(dz) with D the coordinate box [-1,1]^d.

        Requires a diagonal covariance when d > 1 (the box integral only
        factorizes then); the univariate case is unrestricted.
        """
        m = np.asarray(self.mean, dtype=float)
        c = np.asarray(self.cov, dtype=float)
        d = len(m)
        if d > 1 and not np.allclose(c, np.diag(np.diag(c)), atol=1e-14):
            raise ValueError(
                "unit-ball compensation for multivariate Gaussian jumps "
                "requires a diagonal covariance"
            )

        def trunc_mean(mu: float, var: float) -> float:
            if var <= 0:
                return mu if abs(mu) <= 1.0 else 0.0
            s = math.sqrt(var)
            ya, yb = (-1.0 - mu) / s, (1.0 - mu) / s
            return mu * (_norm_cdf(yb) - _norm_cdf(ya)) + s * (
                _norm_pdf(ya) - _norm_pdf(yb)
            )

        def trunc_prob(mu: float, var: float) -> float:
            if var <= 0:
                return 1.0 if abs(mu) <= 1.0 else 0.0
            s = math.sqrt(var)
            return _norm_cdf((1.0 - mu) / s) - _norm_cdf((-1.0 - mu) / s)

        out = self.intensity * trunc_mean(m[j], c[j, j])
        for i in range(d):
            if i != j:
                out *= trunc_prob(m[i], c[i, i])
        return out


@dataclass(frozen=True)
class ExponentialJumps:
    """Compound-Poisson component with independent one-sided Exp(rate_i)
    jump sizes on the positive orthant."""

    intensity: float
    rates: tuple

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError("jump intensity must be >= 0")
        if any(r <= 0 for r in self.rates):
            raise ValueError("exponential jump rates must be > 0")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))

    @property
    def dimension(self) -> int:
        return len(self.rates)

    @property
    def total_mass(self) -> float:
        return self.intensity

    max_order = None

    def moment(self, eps: MultiIndex, xi: np.ndarray) -> complex:
        out = complex(self.intensity)
        for th, n, z in zip(self.rates, eps, xi):
            if z.real >= th:
                raise ValueError(
                    f"exponential jump transform diverges: Re(xi)={z.real} >= rate {th}"
                )
            out *= th * math.factorial(n) / (th - z) ** (n + 1)
        return out

    def compensator(self, j: int) -> float:
        out = self.intensity
        for i, th in enumerate(self.rates):
            if i == j:
                out *= (1.0 - math.exp(-th) * (1.0 + th)) / th
            else:
                out *= 1.0 - math.exp(-th)
        return out


@dataclass(frozen=True)
class UserJump:
    """User-supplied jump transform.

    ``transform(eps, xi)`` must return integral z^eps exp(xi.z) nu(dz)
    exactly for |eps| <= max_order; no numerical differentiation of the
    callback is performed.  ``compensators`` gives integral z_j 1_D nu(dz)
    per coordinate when unit-ball compensation is used.
    """

    transform: object
    total_mass: float
    max_order: int
    compensators: tuple = ()

    def moment(self, eps: MultiIndex, xi: np.ndarray) -> complex:
        if sum(eps) > self.max_order:
            raise ValueError(
                f"user jump transform declared up to order {self.max_order}, "
                f"requested eps={tuple(eps)}"
            )
        return complex(self.transform(tuple(eps), xi))

    def compensator(self, j: int) -> float:
        if not self.compensators:
            raise ValueError("user jump spec provides no compensator values")
        return float(self.compensators[j])


# ---------------------------------------------------------------------------
# Affine model
# ---------------------------------------------------------------------------


def _zeros(d: int) -> tuple:
    return tuple(0.0 for _ in range(d))


def _zero_mat(d: int) -> tuple:
    return tuple(tuple(0.0 for _ in range(d)) for _ in range(d))


@dataclass(frozen=True)
class AffineModel:
    """Coefficient data of an affine generator.

    a(x) = a0 + sum_l x_l a_slope[l-1]   (d x d, symmetric psd on the domain)
    b(x) = b0 + b_slope @ x              (b_slope[i][l] multiplies x_l)
    nu(x,.) = jumps[0] + sum_l x_l jumps[l]
    """

    dimension: int
    a0: tuple
    a_slope: tuple
    b0: tuple
    b_slope: tuple
    jumps: tuple
    truncation: str = NO_COMPENSATION
    state_domain: tuple = ()  # ((lo, hi), ...) with None for unbounded sides

    def __post_init__(self):
        d = self.dimension
        if d < 1:
            raise ValueError("dimension must be >= 1")
        a0 = np.asarray(self.a0, dtype=float)
        if a0.shape != (d, d) or not np.allclose(a0, a0.T, atol=1e-12):
            raise ValueError("a0 must be a symmetric d x d matrix")
        if len(self.a_slope) != d or len(self.b_slope) != d:
            raise ValueError("need one slope block per coordinate")
        for mat in self.a_slope:
            m = np.asarray(mat, dtype=float)
            if m.shape != (d, d) or not np.allclose(m, m.T, atol=1e-12):
                raise ValueError("each a_slope block must be symmetric d x d")
        if len(self.b0) != d:
            raise ValueError("b0 must have length d")
        if len(self.jumps) != d + 1:
            raise ValueError("need d + 1 jump specs (nu_0 and nu_l)")
        if self.truncation not in _TRUNCATIONS:
            raise ValueError(f"unknown truncation convention {self.truncation!r}")
        if self.state_domain and len(self.state_domain) != d:
            raise ValueError("state_domain must have one interval per coordinate")

    # -- convenience constructors ------------------------------------------

    @classmethod
    def from_arrays(cls, a0=None, a_slope=None, b0=None, b_slope=None,
                    jumps=None, truncation=NO_COMPENSATION, state_domain=(),
                    dimension=None):
        """Build a model from array-likes, filling omitted blocks with zeros."""
        if dimension is None:
            for probe in (b0, a0):
                if probe is not None:
                    dimension = len(probe)
                    break
            else:
                raise ValueError("cannot infer dimension")
        d = dimension
        a0 = _zero_mat(d) if a0 is None else tuple(map(tuple, np.asarray(a0, float)))
        b0 = _zeros(d) if b0 is None else tuple(float(v) for v in b0)
        if a_slope is None:
            a_slope = tuple(_zero_mat(d) for _ in range(d))
        else:
            a_slope = tuple(tuple(map(tuple, np.asarray(m, float))) for m in a_slope)
        if b_slope is None:
            b_slope = _zero_mat(d)
        else:
            b_slope = tuple(map(tuple, np.asarray(b_slope, float)))
        if jumps is None:
            jumps = tuple(NoJumps() for _ in range(d + 1))
        else:
            jumps = tuple(jumps)
        return cls(d, a0, a_slope, b0, b_slope, jumps, truncation,
                   tuple(map(tuple, state_domain)) if state_domain else ())

    @property
    def domain_bounded(self) -> bool:
        if not self.state_domain:
            return False
        return all(
            lo is not None and hi is not None and math.isfinite(lo) and math.isfinite(hi)
            for lo, hi in self.state_domain
        )

    def check_semielliptic(self, samples: int = 64, seed: int = 0) -> bool:
        """Sampled check that a(x) >= 0 on the state domain (corners plus
        random interior points; unbounded sides are clipped to +-10)."""
        d = self.dimension
        box = self.state_domain or tuple((-10.0, 10.0) for _ in range(d))
        lo = np.array([(-10.0 if b[0] is None else b[0]) for b in box])
        hi = np.array([(10.0 if b[1] is None else b[1]) for b in box])
        a0 = np.asarray(self.a0, float)
        slopes = [np.asarray(m, float) for m in self.a_slope]
        pts = []
        if d <= 12:
            for mask in range(2 ** d):
                pts.append(np.where(
                    [(mask >> i) & 1 for i in range(d)], hi, lo))
        rng = np.random.default_rng(seed)
        pts.extend(lo + rng.random((samples, d)) * (hi - lo))
        for x in pts:
            a = a0 + sum(xl * m for xl, m in zip(x, slopes))
            if np.linalg.eigvalsh(a).min() < -1e-10:
                return False
        return True


# ---------------------------------------------------------------------------
# Symbol evaluation
# ---------------------------------------------------------------------------


def _component_blocks(model: AffineModel, comp: int):
    """(a, b, jump) blocks of symbol component ``comp`` (0 = constant part,
    l >= 1 = slope in direction l)."""
    if comp == 0:
        return (np.asarray(model.a0, float), np.asarray(model.b0, float),
                model.jumps[0])
    return (np.asarray(model.a_slope[comp - 1], float),
            np.asarray(model.b_slope, float)[:, comp - 1], model.jumps[comp])


def component_deriv(model: AffineModel, comp: int, eps: MultiIndex,
                    xi: np.ndarray) -> complex:
    """d^eps_xi of symbol component ``comp`` at the complex vector xi."""
    a, b, jump = _component_blocks(model, comp)
    xi = np.asarray(xi, dtype=complex)
    order = sum(eps)
    val = 0.0 + 0.0j
    if order == 0:
        val += 0.5 * (xi @ a @ xi) + b @ xi
        if not isinstance(jump, NoJumps):
            val += jump.moment(eps, xi) - jump.total_mass
            if model.truncation == UNIT_BALL:
                val -= sum(xi[j] * jump.compensator(j) for j in range(model.dimension))
    elif order == 1:
        j = next(i for i, v in enumerate(eps) if v)
        val += (a @ xi)[j] + b[j]
        if not isinstance(jump, NoJumps):
            val += jump.moment(eps, xi)
            if model.truncation == UNIT_BALL:
                val -= jump.compensator(j)
    elif order == 2:
        idx = [i for i, v in enumerate(eps) for _ in range(v)]
        val += a[idx[0], idx[1]]
        if not isinstance(jump, NoJumps):
            val += jump.moment(eps, xi)
    else:
        if not isinstance(jump, NoJumps):
            val += jump.moment(eps, xi)
    return complex(val)


def eval_symbol_xi(model: AffineModel, x, xi) -> complex:
    """sigma(x, xi) at a complex vector xi."""
    x = np.asarray(x, dtype=float)
    zero = tuple(0 for _ in range(model.dimension))
    val = component_deriv(model, 0, zero, xi)
    for l in range(1, model.dimension + 1):
        val += x[l - 1] * component_deriv(model, l, zero, xi)
    return val


def eval_symbol(model: AffineModel, x, u) -> complex:
    """sigma(x, iu) for real frequency u."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return eval_symbol_xi(model, np.atleast_1d(np.asarray(x, float)), 1j * u)


@dataclass
class SymbolTable:
    """Numeric derivative tables of the symbol at one (x, xi) point.

    ``base[eps]`` holds d^eps_xi sigma(x, xi); ``slope[l-1][eps]`` holds
    d^eps_xi sigma_l(xi).
    """

    dimension: int
    max_order: int
    base: dict
    slope: list
    x: tuple = ()
    xi: tuple = ()

    def atom_values(self) -> dict:
        """AtomKey -> complex map consumed by SymPoly evaluation."""
        vals = {}
        for eps, v in self.base.items():
            vals[AtomKey(BASE, 0, eps)] = v
        for l, tab in enumerate(self.slope, start=1):
            for eps, v in tab.items():
                vals[AtomKey(SLOPE, l, eps)] = v
        return vals


def eval_symbol_table_xi(model: AffineModel, x, xi, max_order: int) -> SymbolTable:
    """Derivative tables d^eps_xi sigma(x, xi), d^eps_xi sigma_l(xi) for
    |eps| <= max_order at a complex vector xi."""
    d = model.dimension
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    for jump in model.jumps:
        cap = getattr(jump, "max_order", None)
        if cap is not None and max_order > cap:
            raise ValueError(
                f"symbol table to order {max_order} exceeds the jump spec's "
                f"declared derivative order {cap}"
            )
    slope_tabs = [dict() for _ in range(d)]
    base_tab: dict = {}
    for k in range(max_order + 1):
        for eps in enumerate_indices(d, k).indices:
            const = component_deriv(model, 0, eps, xi)
            total = const
            for l in range(1, d + 1):
                s = component_deriv(model, l, eps, xi)
                slope_tabs[l - 1][eps] = s
                total += x[l - 1] * s
            base_tab[eps] = total
    return SymbolTable(d, max_order, base_tab, slope_tabs,
                       tuple(x), tuple(xi))


def eval_symbol_table(model: AffineModel, x, u, max_order: int) -> SymbolTable:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return eval_symbol_table_xi(model, x, 1j * u, max_order)


# ---------------------------------------------------------------------------
# Boundedness classification and sup estimates
# ---------------------------------------------------------------------------

BOUNDED = "Bounded"
BOUNDED_ON_BOUNDED = "BoundedOnlyOnBoundedOmega"


@dataclass
class BoundednessReport:
    classification: str
    reasons: list


def classify_boundedness(model: AffineModel) -> BoundednessReport:
    """Global boundedness of x -> sigma(x, iu).

    Bounded iff the state domain is bounded, or every slope block vanishes
    (a_slope = 0, b_slope = 0, slope jump measures absent).  Unbounded-support
    slope jump measures (all closed-form families here) count as violations.
    """
    if model.domain_bounded:
        return BoundednessReport(BOUNDED, ["state domain is bounded"])
    reasons = []
    for l, mat in enumerate(model.a_slope, start=1):
        if np.any(np.asarray(mat, float) != 0.0):
            reasons.append(f"a_slope[{l}] != 0")
    bs = np.asarray(model.b_slope, float)
    for i in range(model.dimension):
        for l in range(model.dimension):
            if bs[i, l] != 0.0:
                reasons.append(f"b_slope[{i + 1},{l + 1}] != 0")
    for l, jump in enumerate(model.jumps[1:], start=1):
        if not isinstance(jump, NoJumps) and jump.total_mass > 0:
            reasons.append(f"slope jump measure nu_{l} has unbounded support")
    if reasons:
        return BoundednessReport(BOUNDED_ON_BOUNDED, reasons)
    return BoundednessReport(BOUNDED, ["all slope coefficients vanish"])


def sup_bound(model: AffineModel, omega_box, u_box, grid_n: int = 21,
              safety: float = 1.5) -> float:
    """Grid-sampled upper estimate of sup |sigma(x, iu)| over two boxes,
    inflated by a declared safety factor."""
    d = model.dimension
    axes_x = [np.linspace(lo, hi, grid_n) for lo, hi in omega_box]
    axes_u = [np.linspace(lo, hi, grid_n) for lo, hi in u_box]
    best = 0.0
    if d == 1:
        for xv in axes_x[0]:
            for uv in axes_u[0]:
                best = max(best, abs(eval_symbol(model, [xv], [uv])))
    else:
        rng = np.random.default_rng(7)
        n_pts = grid_n ** 2
        xs = np.array([ax[rng.integers(0, grid_n, n_pts)] for ax in axes_x]).T
        us = np.array([au[rng.integers(0, grid_n, n_pts)] for au in axes_u]).T
        corners_x = [np.array(c) for c in
                     np.array(np.meshgrid(*[(a[0], a[-1]) for a in axes_x]))
                     .reshape(d, -1).T]
        corners_u = [np.array(c) for c in
                     np.array(np.meshgrid(*[(a[0], a[-1]) for a in axes_u]))
                     .reshape(d, -1).T]
        for xv in corners_x:
            for uv in corners_u:
                best = max(best, abs(eval_symbol(model, xv, uv)))
        for xv, uv in zip(xs, us):
            best = max(best, abs(eval_symbol(model, xv, uv)))
    return best * safety


# ---------------------------------------------------------------------------
# JSON model format
# ---------------------------------------------------------------------------


def _jump_to_json(jump) -> dict:
    if isinstance(jump, NoJumps):
        return {"type": "none"}
    if isinstance(jump, GaussianJumps):
        return {"type": "gaussian", "intensity": jump.intensity,
                "mean": list(jump.mean), "cov": [list(r) for r in jump.cov]}
    if isinstance(jump, ExponentialJumps):
        return {"type": "exponential", "intensity": jump.intensity,
                "rates": list(jump.rates)}
    raise ValueError(
        f"jump spec {type(jump).__name__} is not JSON-serializable "
        "(user transforms do not round-trip)"
    )


def _jump_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "none":
        return NoJumps()
    if kind == "gaussian":
        return GaussianJumps(float(obj["intensity"]),
                             tuple(float(v) for v in obj["mean"]),
                             tuple(tuple(float(v) for v in r) for r in obj["cov"]))
    if kind == "exponential":
        return ExponentialJumps(float(obj["intensity"]),
                                tuple(float(v) for v in obj["rates"]))
    raise ValueError(f"unknown jump spec type {kind!r}")


def model_to_json(model: AffineModel) -> dict:
    return {
        "dimension": model.dimension,
        "a0": [list(r) for r in model.a0],
        "a_slope": [[list(r) for r in m] for m in model.a_slope],
        "b0": list(model.b0),
        "b_slope": [list(r) for r in model.b_slope],
        "jumps": [_jump_to_json(j) for j in model.jumps],
        "truncation": model.truncation,
        "state_domain": [list(iv) for iv in model.state_domain],
    }


def model_from_json(obj: dict) -> AffineModel:
    d = int(obj["dimension"])
    domain = tuple(
        (None if iv[0] is None else float(iv[0]),
         None if iv[1] is None else float(iv[1]))
        for iv in obj.get("state_domain", [])
    )
    return AffineModel(
        dimension=d,
        a0=tuple(tuple(float(v) for v in r) for r in obj["a0"]),
        a_slope=tuple(tuple(tuple(float(v) for v in r) for r in m)
                      for m in obj["a_slope"]),
        b0=tuple(float(v) for v in obj["b0"]),
        b_slope=tuple(tuple(float(v) for v in r) for r in obj["b_slope"]),
        jumps=tuple(_jump_from_json(j) for j in obj["jumps"]),
        truncation=obj.get("truncation", NO_COMPENSATION),
        state_domain=domain,
    )


def load_model(path) -> AffineModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def save_model(model: AffineModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=2)
        fh.write("\n")
