"""Solution-operator families built from the semigroup and the Wright kernel.

The base semigroup is t -> expm(-A t).  The fractional families are

    G(t) = int_0^inf a x M_a(x) expm(-A t^a x) dx
    K(t) = t^e G(t),             e = a - 1 by default (see below)
    P(t) = I^{b(1-a)} K(t)       (fractional integral acting in t)

with M_a the Wright density, discretized by composite Gauss-Legendre rules
on [0, X_max] (ThetaQuadrature).  The scalar identities K = t^(a-1)
E_{a,a}(-l t^a) and P = t^(g-1) E_{a,g}(-l t^a), g = a + b(1-a), are the
independent oracles used by the test suite, not the construction.

The kernel exponent e defaults to a-1; the literal published formula reads
t^(g-1), selectable via kernel_exponent="gamma".  Only a-1 makes the scalar
mild solution satisfy the equivalent integral equation; the residual
verifier arbitrates this empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg as sla
from scipy import special as sc

from . import specfun
from .errors import ConfigError, DomainError
from .fracops import SampledFn, rl_integral, singular_conv_matrix

__all__ = [
    "GeneratorMatrix",
    "ThetaQuadrature",
    "OperatorTable",
    "semigroup_apply",
    "g_alpha",
    "k_alpha",
    "p_alpha_beta",
    "estimate_M",
    "resolvent_property_check",
    "resolve_kernel_exponent",
    "theta_quadrature",
]

#: Dyadic panel levels toward 0 in the Wright quadrature.
_N_PANELS_DYADIC = 6
#: Panel edges around the density bulk, in units of its standard deviation
#: (computed from the closed-form moments); negative offsets resolve the
#: sharpening peak near theta = 1 as alpha -> 1, large positive ones the tail.
_SIGMA_OFFSETS = (-6.0, -4.0, -2.0, -1.0, -0.5, -0.25, 0.0,
                  0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 9.0, 14.0, 20.0)

#: Series control for Wright evaluations at quadrature nodes; alpha near 1
#: needs far more terms than the generic default.
_QUAD_SERIES = specfun.SeriesConfig(max_terms=80000, abs_tol=1e-16)


@dataclass(frozen=True)
class GeneratorMatrix:
    """The d x d generator A; the semigroup is generated by -A."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"generator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("generator has non-finite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _spectral(A: GeneratorMatrix):
    """Eigendecomposition (lam, V, Vinv) when well conditioned, else None."""
    m = A.matrix
    if np.allclose(m, m.T, atol=1e-13):
        lam, V = np.linalg.eigh(m)
        return lam.astype(complex), V.astype(complex), V.T.astype(complex)
    lam, V = np.linalg.eig(m)
    if np.linalg.cond(V) > 1e8:
        return None
    return lam, V, np.linalg.inv(V)


def semigroup_apply(A: GeneratorMatrix, t: float, v: np.ndarray) -> np.ndarray:
    """expm(-A t) @ v via scaling and squaring (eigh for symmetric A)."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    v = np.asarray(v, dtype=float)
    m = A.matrix
    if np.allclose(m, m.T, atol=1e-13):
        lam, V = np.linalg.eigh(m)
        return (V * np.exp(-lam * t)) @ (V.T @ v)
    return sla.expm(-m * t) @ v


def resolve_kernel_exponent(mode, alpha: float, gamma: float) -> float:
    """Map a kernel-exponent mode ("alpha", "gamma", or a number) to a float."""
    if mode is None or mode == "alpha":
        return alpha - 1.0
    if mode == "gamma":
        return gamma - 1.0
    try:
        return float(mode)
    except (TypeError, ValueError):
        raise ConfigError(
            f"kernel_exponent must be 'alpha', 'gamma', or a number, got {mode!r}"
        ) from None


class ThetaQuadrature:
    """Composite Gauss-Legendre discretization of the Wright density.

    Panels are dyadic toward 0 plus a uniformly split top region (the
    density concentrates near 1 as alpha -> 1).  The cutoff is set where
    the Mainardi tail exponent reaches ~40, i.e. tail mass below 1e-15.
    Construction verifies the density normalization sum(w * M) = 1 to 1e-6.
    """

    def __init__(self, alpha, nodes, weights, m_values, cutoff):
        self.alpha = alpha
        self.nodes = nodes
        self.weights = weights
        self.m_values = m_values
        self.cutoff = cutoff
        self.node_count = nodes.size

    @classmethod
    def build(
        cls,
        alpha: float,
        node_count: int = 256,
        theta_max: float | None = None,
    ) -> "ThetaQuadrature":
        if not 0 < alpha < 1:
            raise DomainError(f"alpha must be in (0, 1), got {alpha}")
        if node_count < 32:
            raise DomainError("node_count must be >= 32")
        if theta_max is None:
            _, b, p = specfun._wright_decay_rate(alpha)
            theta_max = (40.0 / b) ** (1.0 / p)
        mean = specfun.wright_moment(alpha, 1.0)
        sigma = math.sqrt(
            max(specfun.wright_moment(alpha, 2.0) - mean**2, 1e-12)
        )
        edges = {0.0, theta_max}
        edges.update(
            theta_max * 2.0 ** (k - _N_PANELS_DYADIC - 1)
            for k in range(1, _N_PANELS_DYADIC + 1)
        )
        edges.update(
            e for k in _SIGMA_OFFSETS
            if 0.0 < (e := mean + k * sigma) < theta_max
        )
        edges = sorted(edges)
        # drop edges that would create degenerately thin panels
        kept = [edges[0]]
        for e in edges[1:]:
            if e - kept[-1] > 1e-9 * theta_max:
                kept.append(e)
        kept[-1] = theta_max
        edges = kept
        per_panel = max(8, int(math.ceil(node_count / (len(edges) - 1))))
        ref_x, ref_w = np.polynomial.legendre.leggauss(per_panel)
        nodes, weights = [], []
        for a, b_ in zip(edges[:-1], edges[1:]):
            half = 0.5 * (b_ - a)
            nodes.append(a + half * (ref_x + 1.0))
            weights.append(half * ref_w)
        nodes = np.concatenate(nodes)
        weights = np.concatenate(weights)
        m_values = np.array(
            [specfun.wright_m(alpha, x, _QUAD_SERIES) for x in nodes]
        )
        total = float(np.dot(weights, m_values))
        if abs(total - 1.0) > 1e-6:
            raise ConfigError(
                f"Wright quadrature normalization defect {abs(total - 1.0):.2e} "
                f"exceeds 1e-6 (alpha={alpha}, nodes={nodes.size})"
            )
        return cls(alpha, nodes, weights, m_values, theta_max)

    @property
    def g_coeffs(self) -> np.ndarray:
        """Coefficients w_i * alpha * x_i * M(x_i) of the G-family sum."""
        return self.weights * self.alpha * self.nodes * self.m_values


@lru_cache(maxsize=32)
def theta_quadrature(alpha: float, node_count: int = 256) -> ThetaQuadrature:
    """Cached :meth:`ThetaQuadrature.build`; the Wright evaluations dominate
    construction cost, and the same alpha recurs across solver runs."""
    return ThetaQuadrature.build(alpha, node_count)


def _family_many(A: GeneratorMatrix, alpha, ts, q, coeffs):
    """sum_i coeffs_i expm(-A t^alpha x_i) for every t in ts; (n, d, d)."""
    ts = np.asarray(ts, dtype=float)
    d = A.dim
    spec = _spectral(A)
    if spec is not None:
        lam, V, Vinv = spec
        # scalar sum per eigenvalue, vectorized over (t, node)
        za = ts**alpha
        ev = np.empty((ts.size, lam.size), dtype=complex)
        for j, l in enumerate(lam):
            ev[:, j] = np.exp(-l * np.outer(za, q.nodes)) @ coeffs
        out = np.einsum("ij,nj,jk->nik", V, ev, Vinv)
        return out.real.copy()
    out = np.zeros((ts.size, d, d))
    for n, t in enumerate(ts):
        for c, x in zip(coeffs, q.nodes):
            out[n] += c * sla.expm(-A.matrix * (t**alpha * x))
    return out


def g_alpha(
    A: GeneratorMatrix, alpha: float, t: float, q: ThetaQuadrature
) -> np.ndarray:
    """The G-family at a single time t > 0."""
    if t <= 0:
        raise DomainError(f"t must be > 0, got {t}")
    if abs(q.alpha - alpha) > 1e-14:
        raise ConfigError("quadrature was built for a different alpha")
    return _family_many(A, alpha, [t], q, q.g_coeffs)[0]


def k_alpha(
    A: GeneratorMatrix,
    alpha: float,
    gamma: float,
    t: float,
    q: ThetaQuadrature,
    kernel_exponent=None,
) -> np.ndarray:
    """K(t) = t^e G(t) with e = alpha-1 by default ("gamma" for the literal
    published exponent)."""
    e = resolve_kernel_exponent(kernel_exponent, alpha, gamma)
    return t**e * g_alpha(A, alpha, t, q)


def _aux_grid(targets, alpha, min_points=800):
    """Graded mesh on [0, max(targets)] containing all targets.

    Grading exponent ~2/alpha compensates the t^alpha kink of the G-family
    at 0 so piecewise-linear product integration keeps second order.
    """
    targets = np.asarray(targets, dtype=float)
    T = targets[-1]
    n = max(min_points, 2 * targets.size)
    qexp = min(4.0, max(2.0, 2.0 / alpha))
    graded = T * (np.arange(n + 1) / n) ** qexp
    return np.unique(np.concatenate([graded, targets]))


def p_alpha_beta(
    A: GeneratorMatrix,
    alpha: float,
    beta: float,
    grid: np.ndarray,
    q: ThetaQuadrature,
    kernel_exponent=None,
    aux_points: int = 800,
) -> np.ndarray:
    """P(t) = I^{b(1-a)} K(t) on the grid; (n, d, d).

    The fractional integral in t is product integration of the bounded
    factor G against the exact moments of (t-s)^(delta-1) s^e.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[0] <= 0:
        raise DomainError("grid must start at a positive t_min")
    gamma = alpha + beta * (1.0 - alpha)
    e = resolve_kernel_exponent(kernel_exponent, alpha, gamma)
    delta = beta * (1.0 - alpha)
    if delta == 0.0:
        return _family_many(A, alpha, grid, q, q.g_coeffs) * grid[:, None, None] ** e
    aux = _aux_grid(grid, alpha, aux_points)
    H = np.empty((aux.size, A.dim, A.dim))
    H[0] = np.eye(A.dim) / sc.gamma(alpha)
    H[1:] = _family_many(A, alpha, aux[1:], q, q.g_coeffs)
    W = singular_conv_matrix(delta, e, aux, grid) / sc.gamma(delta)
    return np.einsum("ij,jkl->ikl", W, H)


def estimate_M(A: GeneratorMatrix, horizon: float, n: int = 512) -> float:
    """sup over [0, horizon] of the operator 2-norm of expm(-A t).

    This is the finite bound used by the existence criterion; it is always
    >= 1 (attained at t = 0).
    """
    if horizon <= 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    ts = np.linspace(0.0, horizon, n)
    spec = _spectral(A)
    best = 1.0
    for t in ts[1:]:
        if spec is not None:
            lam, V, Vinv = spec
            m = (V * np.exp(-lam * t)) @ Vinv
            best = max(best, float(np.linalg.norm(m.real, 2)))
        else:
            best = max(best, float(np.linalg.norm(sla.expm(-A.matrix * t), 2)))
    return best


def resolvent_property_check(
    A: GeneratorMatrix, alpha: float, grid: np.ndarray, q: ThetaQuadrature | None
) -> float:
    """Defect of the resolvent identity S(t)x = x - I^alpha S(.)Ax
    (minus because the family is generated by -A).

    S is the subordinated candidate sum_i w_i M(x_i) expm(-A t^a x_i)
    (scalar case E_a(-l t^a)); the right side is evaluated with the
    product-integration RL integral.  Returns the worst defect over grid
    times and canonical basis vectors.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[0] <= 0:
        raise DomainError("grid must start at a positive t_min")
    d = A.dim
    # integrate on a graded mesh: S has a t^alpha kink at 0 that a uniform
    # piecewise-linear rule resolves poorly
    aux = _aux_grid(grid, alpha if alpha < 1.0 else 1.0, 1200)
    if alpha == 1.0:
        S = np.array([sla.expm(-A.matrix * t) for t in aux])
    else:
        if q is None:
            raise ConfigError("theta quadrature required for alpha < 1")
        S = np.empty((aux.size, d, d))
        S[0] = np.eye(d)
        S[1:] = _family_many(A, alpha, aux[1:], q, q.weights * q.m_values)
    idx = np.searchsorted(aux, grid)
    defect = 0.0
    for e_i in range(d):
        x = np.zeros(d)
        x[e_i] = 1.0
        ax = A.matrix @ x
        integ = rl_integral(alpha, SampledFn(aux, S @ ax))
        rhs = x[None, :] - integ.values[idx]
        lhs = S[idx] @ x
        defect = max(defect, float(np.max(np.linalg.norm(lhs - rhs, axis=1))))
    return defect


@dataclass(frozen=True)
class OperatorTable:
    """Precomputed G, K, P matrices on a time grid (each (n, d, d))."""

    times: np.ndarray
    G: np.ndarray
    K: np.ndarray
    P: np.ndarray
    alpha: float
    beta: float
    gamma: float
    kernel_exponent: float

    @classmethod
    def build(
        cls,
        A: GeneratorMatrix,
        alpha: float,
        beta: float,
        times: np.ndarray,
        q: ThetaQuadrature | None,
        kernel_exponent=None,
        aux_points: int = 800,
    ) -> "OperatorTable":
        times = np.asarray(times, dtype=float)
        if times.size == 0 or times[0] <= 0:
            raise DomainError("table times must start at a positive t_min")
        gamma = alpha + beta * (1.0 - alpha)
        e = resolve_kernel_exponent(kernel_exponent, alpha, gamma)
        if alpha == 1.0:
            G = np.array([sla.expm(-A.matrix * t) for t in times])
            K = G * times[:, None, None] ** e
            P = K
        else:
            if q is None:
                raise ConfigError("theta quadrature required for alpha < 1")
            G = _family_many(A, alpha, times, q, q.g_coeffs)
            K = G * times[:, None, None] ** e
            P = p_alpha_beta(A, alpha, beta, times, q, kernel_exponent, aux_points)
        return cls(times, G, K, P, alpha, beta, gamma, e)

    def p_at(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.times, t))
        if i >= self.times.size or abs(self.times[i] - t) > 1e-9 * max(1.0, t):
            raise DomainError(f"time {t} is not a table node")
        return self.P[i]
