"""Perturbation experiments: admissible perturbations of spectral data, the
local and uniform stability ratios, and the per-index bound on d(rho_n).

The reference for a perturbed solve is the reconstruction from the
unperturbed data (same N, grid and model), so the ratios measure the
sensitivity of the solver map itself and are not polluted by its truncation
error.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (DEFAULT_GRID, DiscriminantForm, Potential, QPSpectralData,
                   StabilityClassParams, l2_norm, l21_norm)
from .discriminant import dform_difference, eval_dform, sine_transform, sine_weights
from .qp_inverse import membership_S, solve_ip2, validate_qp_data
from .spectrum import forward_data

THREADS_ENV = "QPSL_THREADS"


def _workers():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _protect(dD, t, rho_fixed):
    """Remove from dD its components so that int dD(t) sin(rho t) dt = 0 for every
    rho in rho_fixed (exactly, for the piecewise-linear dD)."""
    if len(rho_fixed) == 0:
        return dD
    T = sine_weights(t.size, rho_fixed)                       # (k, m)
    Phi = np.sin(np.outer(t, rho_fixed))                      # (m, k)
    c = np.linalg.solve(T @ Phi, T @ dD)
    return dD - Phi @ c


def perturb_admissible(data: QPSpectralData, eps: float, seed=None, kind: str = "mixed",
                       index: int | None = None, n_modes: int = 16) -> QPSpectralData:
    """Perturb (D, rho) by eps in L2 and in l21, keeping the equality cases.

    kind: "rho", "D" or "mixed" (both, each of size eps). ``index`` selects a
    single-coordinate perturbation: rho_index moves by eps/index (so the l21
    norm is eps), or D gets eps sqrt(2) sin(pi index t). Otherwise directions
    are random (seeded). Indices with sigma_n = 0 keep rho_n and the sine
    coefficient of D at rho_n unchanged, so |d(rho_n)| = 2 survives.
    """
    if kind not in ("rho", "D", "mixed"):
        raise ValueError(f"unknown perturbation kind {kind!r}")
    if eps == 0:
        return data
    rng = _rng(seed)
    N = data.N
    n = np.arange(1, N + 1)
    zero = data.sigma == 0
    rho = data.rho.copy()
    D = data.dform.D.copy()
    if kind in ("rho", "mixed"):
        if index is not None:
            if zero[index - 1]:
                raise ValueError(f"rho_{index} is an equality case and must stay fixed")
            v = np.zeros(N)
            v[index - 1] = 1.0 / index
        else:
            v = rng.standard_normal(N) / n
            v[zero] = 0.0
            v /= l21_norm(v)
        rho = rho + eps * v
        if np.any(np.diff(rho) <= 0) or rho[0] <= 0:
            raise ValueError("perturbation too large: rho no longer increasing")
    if kind in ("D", "mixed"):
        t = np.linspace(0.0, 1.0, D.size)
        if index is not None:
            dD = np.sqrt(2.0) * np.sin(np.pi * index * t)
        else:
            k = np.arange(1, n_modes + 1)
            dD = np.sqrt(2.0) * np.sin(np.pi * np.outer(t, k)) @ (rng.standard_normal(n_modes) / k)
        dD = _protect(dD, t, data.rho[zero])
        D = D + eps * dD / l2_norm(dD)
    return data.replace(dform=DiscriminantForm(data.dform.a_plus, data.dform.b, D), rho=rho)


@dataclass(frozen=True)
class BoundCheckReport:
    lhs: np.ndarray
    rhs: np.ndarray
    C: np.ndarray           # lhs / rhs per index (nan where rhs == 0)
    C_max: float


def discriminant_bound_check(data: QPSpectralData, perturbed: QPSpectralData) -> BoundCheckReport:
    """Empirical constants in |d(rho_n) - d~(rho~_n)| <= C (|rho_n - rho~_n|
    + |D^_n|/n + ||D - D~||/n^2), D^_n = int (D - D~) sin(pi n t) dt."""
    N = data.N
    n = np.arange(1, N + 1)
    lhs = np.abs(dform_difference(data.dform, perturbed.dform, data.rho, perturbed.rho))
    dD = data.dform.D - perturbed.dform.D
    Dhat = sine_transform(dD, np.pi * n)
    rhs = np.abs(data.rho - perturbed.rho) + np.abs(Dhat) / n + l2_norm(dD) / n ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        C = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1), np.nan)
    cmax = float(np.nanmax(C)) if np.any(np.isfinite(C)) else 0.0
    return BoundCheckReport(lhs, rhs, C, cmax)


# name used by the published interface
lemma51_bound_check = discriminant_bound_check


@dataclass
class StabilityTable:
    """Rows of an experiment (list of dicts) plus scalar summary entries."""

    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv_rows(self):
        if not self.rows:
            return [], []
        header = list(self.rows[0].keys())
        return header, [[r[h] for h in header] for r in self.rows]


def local_stability_experiment(q: Potential, a: float, h: float, eps_list=(1e-2, 1e-3, 1e-4),
                               kind: str = "rho", seed: int = 0, N: int = 64,
                               grid_size: int = DEFAULT_GRID, index: int | None = None,
                               data: QPSpectralData | None = None) -> StabilityTable:
    """ratio(eps) = ||q^ - q~|| / (||D - D~|| + ||rho - rho~||_l21) along a fixed
    perturbation direction scaled by each eps (a and h known)."""
    data = data if data is not None else forward_data(q, a, h, N)
    base = solve_ip2(data, a, h, grid_size)
    again = solve_ip2(perturb_admissible(data, 0.0), a, h, grid_size)
    table = StabilityTable()
    table.summary = {"kind": kind, "seed": seed, "a": a, "h": h, "N": data.N,
                     "base_error_l2": l2_norm(base.q.samples - q.resampled(grid_size).samples),
                     "exact_recovery_l2": l2_norm(base.q.samples - again.q.samples)}

    def run(eps):
        pert = perturb_admissible(data, eps, seed, kind, index)
        row = {"eps": eps, "dD": l2_norm(pert.dform.D - data.dform.D),
               "drho": l21_norm(pert.rho - data.rho), "dq": np.nan, "ratio": np.nan,
               **data_margins(pert, np.sign(a)),
               "valid": bool(validate_qp_data(pert).passed), "solved": False, "error": ""}
        try:
            r = solve_ip2(pert, a, h, grid_size, validate=False)
        except (ArithmeticError, ValueError, RuntimeError) as e:
            row["error"] = str(e)
            return row
        row["solved"] = True
        row["dq"] = l2_norm(r.q.samples - base.q.samples)
        row["ratio"] = row["dq"] / (row["dD"] + row["drho"])
        return row

    with ThreadPoolExecutor(_workers()) as ex:
        table.rows = list(ex.map(run, eps_list))
    ratios = table.column("ratio")
    fin = ratios[np.isfinite(ratios)]
    table.summary["ratio_spread"] = float(fin.max() / fin.min()) if fin.size else np.nan
    return table


def data_margins(data: QPSpectralData, sign_a: float) -> dict:
    """Smallest spectral gap and smallest discriminant margin
    (-1)^n sign(a) d(rho_n) - 2 over the indices with sigma_n != 0."""
    n = np.arange(1, data.N + 1)
    margin = (-1.0) ** n * sign_a * eval_dform(data.dform, data.rho) - 2.0
    nz = data.sigma != 0
    return {"min_gap": float(np.diff(data.rho).min()) if data.N > 1 else np.inf,
            "min_margin": float(margin[nz].min()) if nz.any() else np.nan}


def compare_pair(q1: Potential, q2: Potential, m1: QPSpectralData, m2: QPSpectralData) -> dict:
    """Norms of a solved pair; the ratio is skipped (nan) for identical data."""
    dD = l2_norm(m1.dform.D - m2.dform.D)
    drho = l21_norm(m1.rho - m2.rho)
    dq = l2_norm(q1.samples - q2.samples)
    return {"dD": dD, "drho": drho, "dq": dq,
            "ratio": dq / (dD + drho) if dD + drho > 0 else np.nan}


def _center(params: StabilityClassParams, N: int, grid_size: int) -> QPSpectralData:
    q = Potential.constant(2.0 * params.omega, grid_size)
    return forward_data(q, params.a, params.h, N)


def sample_member(params: StabilityClassParams, rng, center: QPSpectralData,
                  D_scale: float = 0.6, kappa_scale: float = 0.6, n_modes: int = 8,
                  n_rho: int = 16, max_tries: int = 200):
    """Draw a member of the class by perturbing the center and rejecting
    non-members. Returns (data, tries)."""
    N = center.N
    t = np.linspace(0.0, 1.0, center.dform.grid_size)
    k = np.arange(1, n_modes + 1)
    basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(t, k))
    n = np.arange(1, N + 1)
    for tries in range(1, max_tries + 1):
        c = rng.standard_normal(n_modes) / k
        dD = basis @ c
        dD *= rng.uniform(0, D_scale) * params.Omega / l2_norm(dD)
        # jitter of the remainders kappa_n = n (rho_n - pi n - omega/(pi n)),
        # confined to the first n_rho indices so the fitted omega is unchanged
        dk = np.zeros(N)
        dk[:n_rho] = rng.standard_normal(n_rho) / np.arange(1, n_rho + 1)
        dk *= rng.uniform(0, kappa_scale) * params.Omega / np.linalg.norm(dk)
        cand = center.replace(dform=DiscriminantForm(center.dform.a_plus, center.dform.b,
                                                     center.dform.D + dD),
                              rho=center.rho + dk / n)
        if membership_S(cand, params).passed and validate_qp_data(cand).passed:
            return cand, tries
    raise RuntimeError(f"rejection sampling failed: no member in {max_tries} draws")


def _nearby_member(params, rng, member, scale, max_tries=50):
    N = member.N
    n = np.arange(1, N + 1)
    t = np.linspace(0.0, 1.0, member.dform.grid_size)
    for tries in range(1, max_tries + 1):
        k = np.arange(1, 9)
        dD = np.sqrt(2.0) * np.sin(np.pi * np.outer(t, k)) @ (rng.standard_normal(8) / k)
        dD *= scale / l2_norm(dD)
        v = np.zeros(N)
        v[:16] = rng.standard_normal(16) / np.arange(1, 17) ** 2
        v *= scale / l21_norm(v)
        cand = member.replace(dform=DiscriminantForm(member.dform.a_plus, member.dform.b,
                                                     member.dform.D + dD), rho=member.rho + v)
        if membership_S(cand, params).passed:
            return cand, tries
        scale *= 0.5
    raise RuntimeError("could not place a nearby member inside the class")


def uniform_stability_sweep(params: StabilityClassParams, pairs: int = 20, seed: int = 0,
                            N: int = 64, grid_size: int = DEFAULT_GRID,
                            near_scales=(1e-1, 1e-2, 1e-3), roundtrip: bool = True) -> StabilityTable:
    """Sample pairs in the class, solve both members (a, h known) and report
    ratio = ||q - q~|| / (||D - D~|| + ||rho - rho~||_l21).

    Half the pairs are independent draws (large separation); the other half
    pair a draw with a nearby member at separations ``near_scales``, so the
    ratio is probed at both ends.
    """
    rng = np.random.default_rng(seed)
    center = _center(params, N, grid_size)
    draws = 0
    specs = []
    for i in range(pairs):
        m1, t1 = sample_member(params, rng, center)
        if i % 2 == 0:
            m2, t2 = sample_member(params, rng, center)
            sep = "independent"
        else:
            scale = near_scales[(i // 2) % len(near_scales)]
            m2, t2 = _nearby_member(params, rng, m1, scale)
            sep = f"near:{scale:g}"
        draws += t1 + t2
        specs.append((i, sep, m1, m2))

    a, h = params.a, params.h

    def solve_member(m):
        r = solve_ip2(m, a, h, grid_size)
        out = {"q": r.q, "rho_roundtrip": np.nan, "D_roundtrip": np.nan,
               "forward_valid": None}
        if roundtrip:
            fd = forward_data(r.q, a, h, m.N)
            out["rho_roundtrip"] = l21_norm(fd.rho - m.rho)
            out["D_roundtrip"] = l2_norm(fd.dform.D - m.dform.D)
            out["forward_valid"] = bool(validate_qp_data(fd).passed
                                        and np.array_equal(fd.sigma, m.sigma))
        return out

    def run(spec):
        i, sep, m1, m2 = spec
        s1, s2 = solve_member(m1), solve_member(m2)
        mg = [data_margins(m, np.sign(a)) for m in (m1, m2)]
        return {"pair": i, "separation": sep, **compare_pair(s1["q"], s2["q"], m1, m2),
                "min_gap": min(x["min_gap"] for x in mg),
                "min_margin": min(x["min_margin"] for x in mg),
                "member": bool(membership_S(m1, params).passed and membership_S(m2, params).passed),
                "rho_roundtrip": max(s1["rho_roundtrip"], s2["rho_roundtrip"]),
                "D_roundtrip": max(s1["D_roundtrip"], s2["D_roundtrip"]),
                "forward_valid": bool(s1["forward_valid"] and s2["forward_valid"])
                if roundtrip else None}

    table = StabilityTable()
    with ThreadPoolExecutor(_workers()) as ex:
        table.rows = list(ex.map(run, specs))
    r = table.column("ratio")
    fin = r[np.isfinite(r)]
    table.summary = {"pairs": pairs, "seed": seed, "acceptance_rate": 2 * pairs / draws,
                     "worst_ratio": float(fin.max()) if fin.size else np.nan,
                     "best_ratio": float(fin.min()) if fin.size else np.nan,
                     "ratio_spread": float(fin.max() / fin.min()) if fin.size else np.nan,
                     "params": params.to_dict()}
    return table
