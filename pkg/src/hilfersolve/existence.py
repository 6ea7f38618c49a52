"""Existence criterion: constants, both inequality variants, certificate.

The fixed-point argument behind the solver contracts when a combination of
problem constants stays below 1.  Two published forms of that combination
circulate, differing in one factor (K + 4KL versus K + 4L); both are
computed here and the conservative (larger) one decides the headline
verdict.  Constants may be declared by the user or estimated by sampling;
estimated values are lower bounds, so a PASS built on them is evidence, not
proof, and the certificate says so.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError
from .expr import evaluate
from .operators import estimate_M
from .solver import ProblemSpec, _as_field

__all__ = [
    "SamplingConfig",
    "Constants",
    "ExistenceCertificate",
    "compute_constants",
    "check_existence",
]

_CAVEAT = (
    "one or more constants were estimated by sampling (lower bounds); "
    "a PASS verdict is evidence of contraction, not a proof"
)


@dataclass(frozen=True)
class SamplingConfig:
    """Controls every randomized estimate so certificates are reproducible."""

    seed: int = 0
    samples: int = 400
    state_radius: float = 2.0
    ladder_rungs: int = 48

    def __post_init__(self):
        if self.samples < 2:
            raise DomainError("samples must be >= 2")
        if self.state_radius <= 0:
            raise DomainError("state_radius must be > 0")
        if self.ladder_rungs < 4:
            raise DomainError("ladder_rungs must be >= 4")


@dataclass(frozen=True)
class Constants:
    """The five criterion constants with per-field provenance."""

    M: float
    K: float
    Lambda: float
    L: float
    rho: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.M < 1.0:
            raise DomainError(f"M must be >= 1, got {self.M}")
        for name in ("K", "Lambda", "L", "rho"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {v}")

    @property
    def estimated(self) -> bool:
        return any(v == "estimated" for v in self.provenance.values())


@dataclass(frozen=True)
class ExistenceCertificate:
    """Both criterion variants, verdicts, and reproducibility metadata."""

    constants: Constants
    lhs_paper: float
    lhs_derivation: float
    verdict_paper: str
    verdict_derivation: str
    seed: int
    samples: int

    @property
    def verdict(self) -> str:
        """Conservative headline: PASS only if both variants pass."""
        if self.verdict_paper == "PASS" and self.verdict_derivation == "PASS":
            return "PASS"
        return "FAIL"

    def to_json(self) -> str:
        doc = {
            "constants": {
                "M": self.constants.M,
                "K": self.constants.K,
                "Lambda": self.constants.Lambda,
                "L": self.constants.L,
                "rho": self.constants.rho,
            },
            "provenance": dict(sorted(self.constants.provenance.items())),
            "lhs_paper": self.lhs_paper,
            "lhs_derivation": self.lhs_derivation,
            "verdict_paper": self.verdict_paper,
            "verdict_derivation": self.verdict_derivation,
            "verdict": self.verdict,
            "seed": self.seed,
            "samples": self.samples,
        }
        if self.constants.estimated:
            doc["caveat"] = _CAVEAT
        return json.dumps(doc, indent=2, sort_keys=True)


def _scalar_fn(obj, varname):
    """Normalize a declared envelope factor to a scalar callable."""
    if callable(obj):
        return lambda x: float(obj(x))
    return lambda x: evaluate(obj, {varname: x})


def _map_lipschitz(fn, dim, t_lo, t_hi, cfg):
    """Sampled Lipschitz lower bound of (t, u) -> R^dim in the u block.

    Finite differences at Latin-hypercube points plus independent random
    pair quotients, over the ball of radius state_radius.
    """
    rng = np.random.default_rng(cfg.seed)
    r = cfg.state_radius
    n = cfg.samples
    ts = t_lo + (t_hi - t_lo) * (rng.permutation(n) + rng.random(n)) / n
    us = -r + 2.0 * r * rng.random((n, dim))
    best = 0.0
    for t, u in zip(ts, us):
        base = fn(t, u)
        for h in (r * 1e-6, r * 0.05):
            for j in range(dim):
                other = u.copy()
                other[j] = min(u[j] + h, r)
                if other[j] == u[j]:
                    other[j] = max(u[j] - h, -r)
                d = abs(other[j] - u[j])
                best = max(
                    best, float(np.linalg.norm(fn(t, other) - base)) / d
                )
    vs = -r + 2.0 * r * rng.random((n, dim))
    for t, u, v in zip(ts, us, vs):
        du = float(np.linalg.norm(v - u))
        if du == 0.0:
            continue
        best = max(best, float(np.linalg.norm(fn(t, v) - fn(t, u))) / du)
    return best


def _evolution_intervals(p: ProblemSpec):
    """The intervals where the flow (not an impulse map) governs u."""
    lo = 0.0
    out = []
    for imp in p.impulses:
        out.append((lo, imp.start))
        lo = imp.end
    out.append((lo, p.horizon))
    return out


def compute_constants(
    p: ProblemSpec, sampling: SamplingConfig | None = None
) -> Constants:
    """Assemble the criterion constants from declarations plus sampling.

    Declared values win; everything else is estimated and marked as such.
    The growth envelope (phi, psi/rho) cannot be inferred from a bare f --
    no canonical factorization exists -- so its absence is a specification
    error, not something to guess around.
    """
    cfg = sampling or SamplingConfig()
    prov = {}

    M = estimate_M(p.A, p.horizon)
    prov["M"] = "estimated"

    if p.impulses:
        ks = []
        for i, imp in enumerate(p.impulses):
            if imp.k_zeta is not None:
                ks.append(float(imp.k_zeta))
                prov[f"K_zeta_{i + 1}"] = "declared"
            else:
                zfn = _as_field(imp.zeta, p.dim)
                ks.append(
                    _map_lipschitz(zfn, p.dim, imp.start, imp.end, cfg)
                )
                prov[f"K_zeta_{i + 1}"] = "estimated"
        K = max(ks)
        prov["K"] = (
            "declared"
            if all(imp.k_zeta is not None for imp in p.impulses)
            else "estimated"
        )
    else:
        K = 0.0
        prov["K"] = "declared"

    if p.f is None:
        Lambda, rho, L = 0.0, 0.0, 0.0
        prov.update(Lambda="declared", rho="declared", L="declared")
        return Constants(M, K, Lambda, L, rho, prov)

    if p.phi is None or (p.psi is None and p.rho is None):
        raise ConfigError(
            "the forcing term needs a declared growth envelope: supply phi "
            "(time factor) and psi or rho (growth factor); they cannot be "
            "derived from f itself"
        )

    phi = _scalar_fn(p.phi, "t")
    Lambda = 0.0
    for lo, hi in _evolution_intervals(p):
        val, _ = integrate.quad(phi, lo, hi, limit=200)
        Lambda = max(Lambda, val)
    prov["Lambda"] = "declared"

    if p.rho is not None:
        rho = float(p.rho)
        prov["rho"] = "declared"
    else:
        psi = _scalar_fn(p.psi, "r")
        rungs = 2.0 ** np.arange(cfg.ladder_rungs, dtype=float)
        rho = min(psi(r) / r for r in rungs)
        prov["rho"] = "estimated"

    intervals = _evolution_intervals(p)
    if p.lipschitz_f is not None:
        lk = float(p.lipschitz_f)
        L = lk * max(hi - lo for lo, hi in intervals)
        prov["L"] = "declared"
    else:
        ffn = _as_field(p.f, p.dim)
        L = 0.0
        for lo, hi in intervals:
            lk = _map_lipschitz(ffn, p.dim, lo, hi, cfg)
            L = max(L, lk * (hi - lo))
        prov["L"] = "estimated"

    return Constants(M, K, Lambda, L, rho, prov)


def check_existence(
    c: Constants, sampling: SamplingConfig | None = None
) -> ExistenceCertificate:
    """Evaluate both criterion variants; strict < 1, equality is FAIL."""
    cfg = sampling or SamplingConfig()
    lhs_paper = c.M * max(c.rho * c.Lambda + c.K, c.K + 4.0 * c.K * c.L)
    lhs_derivation = c.M * max(c.rho * c.Lambda + c.K, c.K + 4.0 * c.L)
    return ExistenceCertificate(
        constants=c,
        lhs_paper=lhs_paper,
        lhs_derivation=lhs_derivation,
        verdict_paper="PASS" if lhs_paper < 1.0 else "FAIL",
        verdict_derivation="PASS" if lhs_derivation < 1.0 else "FAIL",
        seed=cfg.seed,
        samples=cfg.samples,
    )
