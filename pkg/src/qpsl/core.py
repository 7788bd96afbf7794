"""Value types shared by every module: potentials, boundary parameters,
spectral data sets and the validation report.

All types are frozen dataclasses holding read-only numpy arrays, so they can
be shared between threads without copying.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

DEFAULT_GRID = 1025
DEFAULT_N = 64


class SpectralDataError(ValueError):
    """Spectral data violate a solvability condition.

    ``step`` is the reconstruction step that failed (1..6, or None for
    validation outside the pipeline), ``condition`` the number of the violated
    characterization condition and ``index`` the offending eigenvalue index n.
    """

    def __init__(self, message, step=None, condition=None, index=None):
        self.step = step
        self.condition = condition
        self.index = index
        tags = []
        if step is not None:
            tags.append(f"step {step}")
        if condition is not None:
            tags.append(f"condition {condition}")
        if index is not None:
            tags.append(f"n={index}")
        if tags:
            message = f"{message} [{', '.join(tags)}]"
        super().__init__(message)


class IntegrationError(ArithmeticError):
    """The ODE integrator produced a non-finite state."""


class BracketError(RuntimeError):
    """A root could not be bracketed; ``index`` is the eigenvalue index."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message if index is None else f"{message} (n={index})")


class SolverError(RuntimeError):
    """A linear or nonlinear solve failed its residual check."""


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def l21_norm(seq) -> float:
    """(sum_n (n |a_n|)^2)^(1/2) with n starting at 1."""
    a = np.asarray(seq, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    n = np.arange(1, a.size + 1)
    return float(np.sqrt(np.sum((n * a) ** 2)))


def l2_norm(samples) -> float:
    """L2(0,1) norm of a grid function sampled on a uniform grid (trapezoid)."""
    f = np.asarray(samples, dtype=float)
    x = np.linspace(0.0, 1.0, f.size)
    return float(np.sqrt(np.trapezoid(f * f, x)))


@dataclass(frozen=True)
class Potential:
    """Real potential q sampled on a uniform grid over [0, 1]; linear in between."""

    samples: np.ndarray

    def __post_init__(self):
        s = _frozen(self.samples)
        if s.ndim != 1 or s.size < 3:
            raise ValueError("a potential needs at least 3 samples")
        if not np.all(np.isfinite(s)):
            raise ValueError("potential samples must be finite")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, f: Callable, grid_size: int = DEFAULT_GRID) -> Potential:
        x = np.linspace(0.0, 1.0, grid_size)
        return cls(np.broadcast_to(np.asarray(f(x), dtype=float), x.shape))

    @classmethod
    def constant(cls, c: float, grid_size: int = DEFAULT_GRID) -> Potential:
        return cls(np.full(grid_size, float(c)))

    @property
    def grid_size(self) -> int:
        return self.samples.size

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_size)

    @property
    def step(self) -> float:
        return 1.0 / (self.grid_size - 1)

    @cached_property
    def omega(self) -> float:
        # exact integral of the piecewise-linear interpolant
        return 0.5 * float(np.trapezoid(self.samples, dx=self.step))

    def __call__(self, x):
        return np.interp(x, self.x, self.samples)

    def shifted(self, c: float) -> Potential:
        """q - c."""
        return Potential(self.samples - c)

    def resampled(self, grid_size: int) -> Potential:
        return Potential(self(np.linspace(0.0, 1.0, grid_size)))

    def to_dict(self):
        return {"grid_size": self.grid_size, "samples": self.samples.tolist()}

    @classmethod
    def from_dict(cls, d):
        p = cls(d["samples"])
        if "grid_size" in d and int(d["grid_size"]) != p.grid_size:
            raise ValueError("grid_size does not match the number of samples")
        return p


def _check_a(a):
    a = float(a)
    if not np.isfinite(a) or a in (-1.0, 0.0, 1.0):
        raise ValueError(f"boundary coefficient a={a} is excluded (a must avoid -1, 0, 1)")
    return a


@dataclass(frozen=True)
class BoundaryParams:
    """Boundary coefficients a, h together with the mean-derived omega."""

    a: float
    h: float
    omega: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", _check_a(self.a))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def a_plus(self) -> float:
        return 0.5 * (self.a + 1.0 / self.a)

    @property
    def a_minus(self) -> float:
        return 0.5 * (self.a - 1.0 / self.a)

    @property
    def b(self) -> float:
        return self.a * self.h + 2.0 * self.a_plus * self.omega

    @property
    def theta(self) -> float:
        """Offset of the periodic-type eigenvalues from 2 pi n."""
        return math.acos(1.0 / self.a_plus)

    def to_dict(self):
        return {"a": self.a, "h": self.h, "omega": self.omega}

    @classmethod
    def from_dict(cls, d):
        return cls(d["a"], d["h"], d.get("omega", 0.0))


def derived_boundary(a: float, h: float, omega: float) -> BoundaryParams:
    return BoundaryParams(a, h, omega)


def a_from_aplus(a_plus: float, sign_a_minus: float) -> float:
    """Invert a_plus = (a + 1/a)/2 on the branch selected by sign(a - 1/a)."""
    if a_plus * a_plus <= 1.0:
        raise SpectralDataError(f"a_plus={a_plus} has |a_plus| <= 1; no real a exists")
    s = 1.0 if sign_a_minus > 0 else -1.0
    # a_plus - s*sqrt(...) suffers cancellation; use the product a*(1/a) = 1
    big = a_plus + math.copysign(math.sqrt(a_plus * a_plus - 1.0), a_plus)
    small = 1.0 / big
    # |a| > 1 iff sign(a_minus) == sign(a)
    return big if s * np.sign(a_plus) > 0 else small


@dataclass(frozen=True)
class DiscriminantForm:
    """d(rho) = 2 a_plus cos(rho) + b sin(rho)/rho + (1/rho) int_0^1 D(t) sin(rho t) dt.

    D is stored as samples on a uniform grid and treated as piecewise linear,
    so the sine transform is evaluated exactly (see ``discriminant``).
    """

    a_plus: float
    b: float
    D: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a_plus", float(self.a_plus))
        object.__setattr__(self, "b", float(self.b))
        D = _frozen(self.D)
        if D.ndim != 1 or D.size < 3 or not np.all(np.isfinite(D)):
            raise ValueError("D must be a finite grid function with at least 3 samples")
        object.__setattr__(self, "D", D)

    @property
    def grid_size(self):
        return self.D.size

    @property
    def D_norm(self) -> float:
        return l2_norm(self.D)

    def __call__(self, rho):
        from .discriminant import eval_dform
        return eval_dform(self, rho)

    def to_dict(self):
        return {"a_plus": self.a_plus, "b": self.b,
                "D": {"grid_size": self.grid_size, "samples": self.D.tolist()}}

    @classmethod
    def from_dict(cls, d):
        return cls(d["a_plus"], d["b"], d["D"]["samples"])


def kappa_remainders(rho, omega: float) -> np.ndarray:
    """kappa_n = n (rho_n - pi n - omega/(pi n)), the scaled asymptotic remainders."""
    rho = np.asarray(rho, dtype=float)
    n = np.arange(1, rho.size + 1)
    return n * (rho - np.pi * n - omega / (np.pi * n))


def fit_dirichlet_tail(rho):
    """Fit rho_n^2 - (pi n)^2 = c + A/n^2 (+ E/n^4) on the last quarter of the data.

    Returns (c, A); omega = c/2.
    """
    rho = np.asarray(rho, dtype=float)
    N = rho.size
    n = np.arange(1, N + 1, dtype=float)
    y = rho ** 2 - (np.pi * n) ** 2
    m = max(N // 4, min(N, 6))
    nn, yy = n[-m:], y[-m:]
    if m >= 6:
        cols = [np.ones(m), nn ** -2, nn ** -4]
    elif m >= 3:
        cols = [np.ones(m), nn ** -2]
    else:
        return float(np.mean(yy)), 0.0
    coef = np.linalg.lstsq(np.column_stack(cols), yy, rcond=None)[0]
    return float(coef[0]), float(coef[1])


def estimate_omega(rho) -> float:
    return 0.5 * fit_dirichlet_tail(rho)[0]


@dataclass(frozen=True)
class QPSpectralData:
    """Input of the quasi-periodic inverse problem: d(rho), {rho_n}, {sigma_n}."""

    dform: DiscriminantForm
    rho: np.ndarray
    sigma: np.ndarray
    kappa_tail_norm: float = float("nan")

    def __post_init__(self):
        rho = _frozen(self.rho)
        sigma = _frozen(np.sign(np.asarray(self.sigma, dtype=float)).astype(int), dtype=int)
        if rho.shape != sigma.shape or rho.ndim != 1:
            raise ValueError("rho and sigma must be 1-d arrays of equal length")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)
        k = float(self.kappa_tail_norm)
        if not np.isfinite(k) and rho.size and np.all(np.isfinite(rho)):
            k = float(np.linalg.norm(kappa_remainders(rho, estimate_omega(rho))))
        object.__setattr__(self, "kappa_tail_norm", k)

    @property
    def N(self):
        return self.rho.size

    def d_at_roots(self):
        return self.dform(self.rho)

    def replace(self, **kw):
        d = {"dform": self.dform, "rho": self.rho, "sigma": self.sigma}
        d.update(kw)
        return QPSpectralData(**d)

    def to_dict(self):
        return {"dform": self.dform.to_dict(), "rho": self.rho.tolist(),
                "sigma": self.sigma.tolist(), "kappa_tail_norm": self.kappa_tail_norm}

    @classmethod
    def from_dict(cls, d):
        return cls(DiscriminantForm.from_dict(d["dform"]), d["rho"], d["sigma"],
                   d.get("kappa_tail_norm", float("nan")))


@dataclass(frozen=True)
class DirichletSpectralData:
    """Dirichlet roots rho_n and Weyl residues M_n = 1/alpha_n."""

    rho: np.ndarray
    M: np.ndarray
    eta_tail_norm: float = float("nan")

    def __post_init__(self):
        rho, M = _frozen(self.rho), _frozen(self.M)
        if rho.shape != M.shape or rho.ndim != 1:
            raise ValueError("rho and M must be 1-d arrays of equal length")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "M", M)
        e = float(self.eta_tail_norm)
        if not np.isfinite(e) and M.size and np.all(np.isfinite(M)):
            n = np.arange(1, M.size + 1)
            e = float(np.linalg.norm(n * (M / (2 * (np.pi * n) ** 2) - 1.0)))
        object.__setattr__(self, "eta_tail_norm", e)

    @property
    def N(self):
        return self.rho.size

    @property
    def alpha(self):
        return 1.0 / self.M

    def to_dict(self):
        return {"rho": self.rho.tolist(), "M": self.M.tolist(), "alpha": self.alpha.tolist(),
                "eta_tail_norm": self.eta_tail_norm}

    @classmethod
    def from_dict(cls, d):
        return cls(d["rho"], d["M"], d.get("eta_tail_norm", float("nan")))


def estimate_theta(nu_minus, nu_plus) -> float:
    """Limit of (nu_n^+ - nu_n^-)/2, extrapolated with a 1/n^2 correction."""
    nm, npl = np.asarray(nu_minus, float), np.asarray(nu_plus, float)
    N = nm.size
    if N == 0:
        return float("nan")
    half_gap = 0.5 * (npl - nm)
    n = np.arange(1, N + 1, dtype=float)
    m = max(N // 4, min(N, 4))
    if m < 3:
        return float(half_gap[-1])
    A = np.column_stack([np.ones(m), n[-m:] ** -2])
    return float(np.linalg.lstsq(A, half_gap[-m:], rcond=None)[0][0])


@dataclass(frozen=True)
class QPEigenvalues:
    """Square roots of the quasi-periodic eigenvalues: nu_0 and pairs nu_n^-, nu_n^+."""

    nu0: float
    nu_minus: np.ndarray
    nu_plus: np.ndarray
    theta: float = float("nan")

    def __post_init__(self):
        nm, npl = _frozen(self.nu_minus), _frozen(self.nu_plus)
        if nm.shape != npl.shape or nm.ndim != 1:
            raise ValueError("nu_minus and nu_plus must be 1-d arrays of equal length")
        object.__setattr__(self, "nu0", float(self.nu0))
        object.__setattr__(self, "nu_minus", nm)
        object.__setattr__(self, "nu_plus", npl)
        th = float(self.theta)
        if not np.isfinite(th):
            th = estimate_theta(nm, npl)
        object.__setattr__(self, "theta", th)

    @property
    def N(self):
        return self.nu_minus.size

    def to_dict(self):
        return {"nu0": self.nu0, "nu_minus": self.nu_minus.tolist(),
                "nu_plus": self.nu_plus.tolist(), "theta": self.theta}

    @classmethod
    def from_dict(cls, d):
        return cls(d["nu0"], d["nu_minus"], d["nu_plus"], d.get("theta", float("nan")))


@dataclass(frozen=True)
class StabilityClassParams:
    """Parameters of the uniform-stability class: norm cap Omega, gap/margin delta,
    and the fixed a, h, omega and sign sequence."""

    Omega: float
    delta: float
    a: float
    h: float
    omega: float
    sigma: np.ndarray

    def __post_init__(self):
        if not (self.Omega > 0 and self.delta > 0):
            raise ValueError("Omega and delta must be positive")
        object.__setattr__(self, "a", _check_a(self.a))
        object.__setattr__(self, "sigma", _frozen(self.sigma, dtype=int))

    @property
    def boundary(self) -> BoundaryParams:
        return BoundaryParams(self.a, self.h, self.omega)

    def to_dict(self):
        return {"Omega": self.Omega, "delta": self.delta, "a": self.a, "h": self.h,
                "omega": self.omega, "sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["Omega"], d["delta"], d["a"], d["h"], d["omega"], d["sigma"])


@dataclass(frozen=True)
class ConditionResult:
    number: int
    name: str
    passed: bool
    indices: tuple = ()
    detail: str = ""
    evaluated: bool = True      # False when a prerequisite condition failed

    def to_dict(self):
        return {"condition": self.number, "name": self.name, "passed": self.passed,
                "evaluated": self.evaluated, "indices": list(self.indices), "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    """Per-condition outcome of a validator. Never raises; inspect ``passed``."""

    conditions: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def failed(self):
        """Numbers of the conditions that were checked and failed."""
        return [c.number for c in self.conditions if c.evaluated and not c.passed]

    def __getitem__(self, number):
        for c in self.conditions:
            if c.number == number:
                return c
        raise KeyError(number)

    def __str__(self):
        lines = []
        for c in self.conditions:
            s = f"  ({c.number}) {c.name}: {'pass' if c.passed else 'FAIL'}"
            if not c.evaluated:
                s = f"  ({c.number}) {c.name}: not evaluated"
            if not c.passed and c.indices:
                s += f" at n={list(c.indices)[:10]}"
            if c.detail:
                s += f" -- {c.detail}"
            lines.append(s)
        return "\n".join(lines)

    def to_dict(self):
        return {"passed": self.passed, "conditions": [c.to_dict() for c in self.conditions]}
