"""Problem-file ingestion: TOML document -> validated problem objects.

The file carries four kinds of data: the evolution problem itself
([problem] and [forcing] plus repeated [[impulse]] blocks), solver knobs
([solver], [quadrature]), and checker settings ([checker]).  Unknown keys
are rejected with their location rather than silently ignored, and the
document carries a ``schema_version`` so old files fail loudly instead of
being misread.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import expr
from .errors import ConfigError, DomainError
from .existence import SamplingConfig
from .operators import GeneratorMatrix
from .solver import Impulse, ProblemSpec, SolverConfig

__all__ = ["LoadedProblem", "load_problem", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

_PROBLEM_KEYS = {"alpha", "beta", "dimension", "A", "u0", "horizon", "t_min"}
_FORCING_KEYS = {"f", "phi", "psi", "rho", "lipschitz"}
_IMPULSE_KEYS = {"t_k", "s_k", "zeta", "K_zeta"}
_SOLVER_KEYS = {
    "points_per_interval",
    "impulse_points",
    "picard_tol",
    "max_picard_iters",
    "max_impulse_iters",
    "kernel_exponent",
    "singular_window",
    "kernel_tol",
    "max_kernel_terms",
}
_QUAD_KEYS = {"nodes"}
_CHECKER_KEYS = {"seed", "samples", "state_radius", "ladder_rungs",
                 "residual_tolerance"}
_TOP_KEYS = {"schema_version", "problem", "forcing", "impulse", "solver",
             "quadrature", "checker"}


@dataclass(frozen=True)
class LoadedProblem:
    """Everything a command needs, parsed and validated."""

    problem: ProblemSpec
    solver: SolverConfig
    sampling: SamplingConfig
    residual_tolerance: float


def _reject_unknown(table, allowed, location):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{location}: unknown key {key!r}")


def _need(table, key, location):
    if key not in table:
        raise ConfigError(f"{location}: missing required key {key!r}")
    return table[key]


def _parse_components(raw, dim, location):
    if not isinstance(raw, list) or len(raw) != dim:
        raise ConfigError(
            f"{location}: expected a list of {dim} component expression(s)"
        )
    out = []
    for i, text in enumerate(raw):
        try:
            out.append(expr.parse(str(text)))
        except expr.ParseError as exc:
            raise ConfigError(f"{location}[{i}]: {exc}") from None
    return tuple(out)


def _parse_scalar_expr(raw, varname, location):
    try:
        ast = expr.parse(str(raw))
    except expr.ParseError as exc:
        raise ConfigError(f"{location}: {exc}") from None
    extra = expr.variables(ast) - {varname}
    if extra:
        raise ConfigError(
            f"{location}: only variable {varname!r} is allowed, "
            f"found {sorted(extra)}"
        )
    return ast


def load_problem(path: str) -> LoadedProblem:
    """Read, validate and assemble a problem file."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML: {exc}") from None

    _reject_unknown(doc, _TOP_KEYS, path)
    version = _need(doc, "schema_version", path)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: schema_version {version} is not supported "
            f"(expected {SCHEMA_VERSION})"
        )

    prob = _need(doc, "problem", path)
    _reject_unknown(prob, _PROBLEM_KEYS, "[problem]")
    dim = int(_need(prob, "dimension", "[problem]"))
    if dim < 1:
        raise ConfigError(f"[problem]: dimension must be >= 1, got {dim}")
    a_raw = _need(prob, "A", "[problem]")
    if not isinstance(a_raw, list) or len(a_raw) != dim * dim:
        raise ConfigError(
            f"[problem]: A must be a row-major list of {dim * dim} numbers"
        )
    u0_raw = _need(prob, "u0", "[problem]")
    if not isinstance(u0_raw, list) or len(u0_raw) != dim:
        raise ConfigError(f"[problem]: u0 must be a list of {dim} numbers")

    forcing = doc.get("forcing", {})
    _reject_unknown(forcing, _FORCING_KEYS, "[forcing]")
    f = phi = psi = None
    rho = lipschitz_f = None
    if forcing:
        if "f" in forcing:
            f = _parse_components(forcing["f"], dim, "[forcing].f")
        if "phi" in forcing:
            phi = _parse_scalar_expr(forcing["phi"], "t", "[forcing].phi")
        if "psi" in forcing:
            psi = _parse_scalar_expr(forcing["psi"], "r", "[forcing].psi")
        if "rho" in forcing:
            rho = float(forcing["rho"])
        if "lipschitz" in forcing:
            lipschitz_f = float(forcing["lipschitz"])

    impulses = []
    for i, block in enumerate(doc.get("impulse", [])):
        loc = f"[[impulse]] #{i + 1}"
        _reject_unknown(block, _IMPULSE_KEYS, loc)
        t_k = float(_need(block, "t_k", loc))
        s_k = float(_need(block, "s_k", loc))
        if not t_k < s_k:
            raise ConfigError(
                f"{loc}: the window needs t_k < s_k, got ({t_k}, {s_k}]"
            )
        zeta = _parse_components(_need(block, "zeta", loc), dim, f"{loc}.zeta")
        k_zeta = float(block["K_zeta"]) if "K_zeta" in block else None
        try:
            impulses.append(Impulse(t_k, s_k, zeta, k_zeta))
        except DomainError as exc:
            raise ConfigError(f"{loc}: {exc}") from None

    solver_tbl = doc.get("solver", {})
    _reject_unknown(solver_tbl, _SOLVER_KEYS, "[solver]")
    quad_tbl = doc.get("quadrature", {})
    _reject_unknown(quad_tbl, _QUAD_KEYS, "[quadrature]")
    solver_kwargs = dict(solver_tbl)
    if "nodes" in quad_tbl:
        solver_kwargs["quadrature_nodes"] = int(quad_tbl["nodes"])
    if "t_min" in prob:
        solver_kwargs["t_min"] = float(prob["t_min"])
    try:
        solver = SolverConfig(**solver_kwargs)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"[solver]: {exc}") from None

    checker_tbl = doc.get("checker", {})
    _reject_unknown(checker_tbl, _CHECKER_KEYS, "[checker]")
    residual_tolerance = float(checker_tbl.pop("residual_tolerance", 1e-3))
    try:
        sampling = SamplingConfig(**{
            k: (float(v) if k == "state_radius" else int(v))
            for k, v in checker_tbl.items()
        })
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"[checker]: {exc}") from None

    try:
        problem = ProblemSpec(
            alpha=float(_need(prob, "alpha", "[problem]")),
            beta=float(_need(prob, "beta", "[problem]")),
            A=GeneratorMatrix(
                np.array(a_raw, dtype=float).reshape(dim, dim)
            ),
            u0=np.array(u0_raw, dtype=float),
            horizon=float(_need(prob, "horizon", "[problem]")),
            f=f,
            impulses=tuple(impulses),
            phi=phi,
            psi=psi,
            rho=rho,
            lipschitz_f=lipschitz_f,
        )
    except DomainError as exc:
        raise ConfigError(f"[problem]: {exc}") from None

    return LoadedProblem(problem, solver, sampling, residual_tolerance)
