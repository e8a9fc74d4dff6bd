"""Closed-form centroid dynamics, analytic fixed points, Jacobians,
eigenvalue stability classification, and parameter-sweep tables.

The centroid ODE dDelta/dt = mu + S cos Delta - C sin Delta integrates in
closed form through the Weierstrass substitution eta = tan(Delta/2); the
discriminant K = C^2 + S^2 - mu^2 selects the branch: tanh (K > 0,
convergence to a fixed point), tan (K < 0, periodic phase slips with period
2*pi/sqrt(-K)), and a linear eta equation in the degenerate case mu = S.

Fixed points of the reduced two-population variants come from their printed
closed forms; the interior points couple Delta* back through the C/S
coefficients and are resolved by damped fixed-point iteration (Newton
fallback).  The interior points of the ecology variant are the roots of a
cubic in P2, evaluated through the Cardano-style cube-root expressions and
cross-checked against the cubic residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import (CentroidCoupling, ModelConfig, build_system,
                     centroid_coeffs, eco2_reduced_rhs, simple_reduced_rhs)
from .solver import IntegratorSettings, run_scenario

__all__ = [
    "FixedPointRecord",
    "delta_closed_form",
    "delta_time_course",
    "delta_star",
    "simple_fixed_points",
    "eco2_fixed_points",
    "fd_jacobian",
    "jacobian",
    "eigenvalues",
    "simple_reduced_jacobian",
    "eco2_reduced_jacobian",
    "classify",
    "stability_thresholds",
    "sweep_bifurcation",
    "eco2_cubic_coeffs",
    "eco2_cubic_roots",
]

_HYPERBOLIC_TOL = 1e-10
RESIDUAL_GATE = 1e-8


class NumericalError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# closed-form centroid dynamics
# ---------------------------------------------------------------------------

def _k_disc(C, S, mu):
    return C * C + S * S - mu * mu


def delta_star(C, S, mu):
    """Stable fixed point of the centroid ODE (the t -> infinity limit),
    or None when C^2 + S^2 < mu^2 (no fixed point exists).

    Evaluated through whichever of the two algebraically equal forms
    (C - sqrt(K))/(mu - S) == (mu + S)/(C + sqrt(K)) is well conditioned,
    which also covers the degenerate branch mu = S.
    """
    K = _k_disc(C, S, mu)
    if K < 0:
        return None
    sq = np.sqrt(K)
    d1, d2 = mu - S, C + sq
    if abs(d1) < 1e-300 and abs(d2) < 1e-300:
        return np.pi
    if abs(d1) >= abs(d2):
        return 2.0 * np.arctan((C - sq) / d1)
    return 2.0 * np.arctan((mu + S) / d2)


def delta_closed_form(t, C, S, mu, const):
    """The raw closed-form solution at time(s) t for a given integration
    constant; branch chosen by the sign of K = C^2 + S^2 - mu^2.

    In the degenerate case mu = S (where K = C^2 >= 0 and the substitution
    equation is linear), ``const`` is the free constant of the linear
    solution eta(t) = (mu+S)/(2C) + const*exp(-C t) (or eta = const +
    (mu+S)t/2 when C = 0 as well).
    """
    t = np.asarray(t, dtype=float)
    K = _k_disc(C, S, mu)
    if abs(mu - S) < 1e-14:
        if abs(C) > 1e-14:
            eta = (mu + S) / (2.0 * C) + const * np.exp(-C * t)
        else:
            eta = const + 0.5 * (mu + S) * t
        return 2.0 * np.arctan(eta)
    if K > 0:
        sq = np.sqrt(K)
        eta = (C - sq * np.tanh(0.5 * sq * (t + const))) / (mu - S)
    elif K < 0:
        q = np.sqrt(-K)
        eta = (C + q * np.tan(0.5 * q * (t + const))) / (mu - S)
    else:
        eta = (C - 2.0 / (t + const)) / (mu - S)
    return 2.0 * np.arctan(eta)


def delta_time_course(ts, C, S, mu, delta0):
    """Closed-form Delta(t) through Delta(0) = delta0, continuous in t
    (principal arctan plus winding correction at half-turn crossings).

    ``delta0`` must lie in (-pi, pi).
    """
    ts = np.asarray(ts, dtype=float)
    if not (-np.pi < delta0 < np.pi):
        raise ValueError("delta0 must lie in (-pi, pi)")
    K = _k_disc(C, S, mu)
    eta0 = np.tan(0.5 * delta0)

    if abs(mu - S) < 1e-14:
        # linear eta equation; arctan saturates, no winding needed
        if abs(C) > 1e-14:
            const = eta0 - (mu + S) / (2.0 * C)
        else:
            const = eta0
        return delta_closed_form(ts, C, S, mu, const)

    if K > 0:
        sq = np.sqrt(K)
        x = (C - (mu - S) * eta0) / sq
        if abs(x) < 1.0:
            const = (2.0 / sq) * np.arctanh(x)
            return delta_closed_form(ts, C, S, mu, const)
        if abs(x) == 1.0:
            return np.full_like(ts, delta0)
        # coth branch: the trajectory passes through Delta = pi once
        const = (2.0 / sq) * np.arctanh(1.0 / x)
        eta = (C - sq / np.tanh(0.5 * sq * (ts + const))) / (mu - S)
        delta = 2.0 * np.arctan(eta)
        t_pole = -const
        wind = 2.0 * np.pi * np.sign(mu - S)
        # winding relative to t = 0: correct when the pole lies between 0 and t
        n_cross = np.where((t_pole > 0) & (ts > t_pole), 1.0,
                           np.where((t_pole <= 0) & (ts < t_pole), -1.0, 0.0))
        return delta + wind * n_cross

    if K == 0:
        eta_star = C / (mu - S)
        if eta0 == eta_star:
            return np.full_like(ts, delta0)
        const = -2.0 / ((mu - S) * (eta0 - eta_star))
        return delta_closed_form(ts, C, S, mu, const)

    # K < 0: periodic slips; count tan poles between 0 and t
    q = np.sqrt(-K)
    const = (2.0 / q) * np.arctan(((mu - S) * eta0 - C) / q)
    eta = (C + q * np.tan(0.5 * q * (ts + const))) / (mu - S)
    delta = 2.0 * np.arctan(eta)

    def pole_index(t):
        return np.floor((0.5 * q * (t + const) - 0.5 * np.pi) / np.pi)

    n_cross = pole_index(ts) - pole_index(np.zeros_like(ts))
    return delta + 2.0 * np.pi * np.sign(mu - S) * n_cross


def slip_period(C, S, mu):
    """Period of the phase-slip cycle for K < 0: 2*pi/sqrt(-K)."""
    K = _k_disc(C, S, mu)
    if K >= 0:
        raise ValueError("phase slips require K < 0")
    return 2.0 * np.pi / np.sqrt(-K)


# ---------------------------------------------------------------------------
# Jacobians and classification
# ---------------------------------------------------------------------------

def fd_jacobian(f, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, step h_i = rel_step * max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    fx = np.asarray(f(x), dtype=float)
    jac = np.empty((fx.size, n))
    for i in range(n):
        h = rel_step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * h)
    return jac


def eigenvalues(matrix) -> np.ndarray:
    """Eigenvalues via Hessenberg reduction + shifted QR (LAPACK)."""
    try:
        return np.linalg.eigvals(np.asarray(matrix, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc


def classify(eigs, tol: float = _HYPERBOLIC_TOL) -> str:
    re = np.real(np.asarray(eigs))
    if np.any(np.abs(re) <= tol):
        return "nonhyperbolic"
    return "stable" if np.all(re < 0) else "unstable"


def jacobian(variant: str, state, cfg: ModelConfig,
             coupling: CentroidCoupling) -> np.ndarray:
    """Finite-difference Jacobian of a reduced variant at ``state``."""
    system = build_system(variant, cfg, coupling=coupling)
    if not system.reduced:
        raise ValueError("jacobian() supports reduced variants")
    return fd_jacobian(system.rhs, state)


def simple_reduced_jacobian(state, cfg: ModelConfig,
                            coupling: CentroidCoupling) -> np.ndarray:
    """Hand-coded Jacobian of the reduced two-population model."""
    P1, P2, d = state
    g1, g2 = coupling.g12, coupling.g21
    phi, psi = coupling.phi, coupling.psi
    co = centroid_coeffs(cfg, coupling, 1.0 - P2, 1.0 - P1)
    sd, cd = np.sin(d), np.cos(d)
    return np.array([
        [cfg.r1 * (1 - 2 * P1) - 0.5 * cfg.beta2 * P2 * (2 - sd),
         -0.5 * cfg.beta2 * P1 * (2 - sd),
         0.5 * cfg.beta2 * P1 * P2 * cd],
        [-0.5 * cfg.beta1 * P2 * (2 + sd),
         cfg.r2 * (1 - 2 * P2) - 0.5 * cfg.beta1 * P1 * (2 + sd),
         -0.5 * cfg.beta1 * P1 * P2 * cd],
        [g2 * np.sin(psi + d), g1 * np.sin(d - phi),
         -co.S * sd - co.C * cd],
    ])


def eco2_reduced_jacobian(state, cfg: ModelConfig,
                          coupling: CentroidCoupling) -> np.ndarray:
    """Hand-coded Jacobian of the reduced nondimensional ecology model."""
    P1, P2, d = state
    g1, g2 = coupling.g12, coupling.g21
    phi, psi = coupling.phi, coupling.psi
    co = centroid_coeffs(cfg, coupling, 1.0 - P2, 1.0 - P1)
    sd, cd = np.sin(d), np.cos(d)
    a, t = cfg.alpha, cfg.tau
    den_a = 1 + a * P2
    den_h = 1 + t * cfg.beta1 * P2
    j11 = (2 * a * (1 - 2 * P1) * cfg.r1 * P2
           + den_a * (cfg.beta2 * P2 * (sd - 2) - 2 * cfg.x1)) / (2 * den_a)
    j12 = 0.5 * P1 * cfg.beta2 * (sd - 2) - a * (P1 - 1) * P1 * cfg.r1 / den_a ** 2
    j13 = 0.5 * cfg.beta2 * P1 * P2 * cd
    j21 = -cfg.beta1 * P2 * (sd + 2) / (2 * den_h)
    j22 = cfg.r2 * (1 - 2 * P2) - cfg.beta1 * P1 * (sd + 2) / (2 * den_h ** 2)
    j23 = -cfg.beta1 * P1 * P2 * cd / (2 * den_h)
    return np.array([
        [j11, j12, j13],
        [j21, j22, j23],
        [g2 * np.sin(psi + d), g1 * np.sin(d - phi), -co.S * sd - co.C * cd],
    ])


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------

@dataclass
class FixedPointRecord:
    label: str
    state: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    residual: float
    status: str = "verified"        # "verified" | "outside-range"
    notes: str = ""

    @property
    def max_real_eig(self) -> float:
        return float(np.max(np.real(self.eigenvalues)))


def _make_record(label, state, rhs, jac_fn, physical=True) -> FixedPointRecord:
    state = np.asarray(state, dtype=float)
    residual = float(np.max(np.abs(rhs(state))))
    eigs = eigenvalues(jac_fn(state))
    return FixedPointRecord(
        label=label, state=state, eigenvalues=eigs,
        classification=classify(eigs), residual=residual,
        status="verified" if physical else "outside-range")


def _coeffs_at(cfg, coupling, P1, P2):
    return centroid_coeffs(cfg, coupling, 1.0 - P2, 1.0 - P1)


def _delta_at(cfg, coupling, P1, P2):
    co = _coeffs_at(cfg, coupling, P1, P2)
    return delta_star(co.C, co.S, cfg.mu)


def simple_fixed_points(cfg: ModelConfig, coupling: CentroidCoupling = None,
                        diagnostics: list = None) -> list:
    """FP1..FP4 of the reduced two-population model.

    FP1 = (1, 0), FP2 = (0, 1), FP3 = (0, 0) take Delta* directly from the
    centroid fixed point at their feedback values; the interior FP4 solves
    the coupled (P1, P2, Delta) system by damped fixed-point iteration
    (damping 0.5, tolerance 1e-12, <= 1e4 iterations) with a Newton
    fallback.  Candidates whose centroid equation has no fixed point
    (complex sqrt(K)) are skipped with a diagnostic.
    """
    if coupling is None:
        coupling = CentroidCoupling.from_config(cfg)
    notes = diagnostics if diagnostics is not None else []
    rhs = lambda s: simple_reduced_rhs(s, cfg, coupling)
    jac = lambda s: simple_reduced_jacobian(s, cfg, coupling)
    records = []
    for label, (p1, p2) in (("FP1", (1.0, 0.0)), ("FP2", (0.0, 1.0)),
                            ("FP3", (0.0, 0.0))):
        d = _delta_at(cfg, coupling, p1, p2)
        if d is None:
            notes.append(f"{label}: no centroid fixed point (K < 0)")
            continue
        records.append(_make_record(label, (p1, p2, d), rhs, jac))

    fp4 = _solve_simple_fp4(cfg, coupling, rhs, notes)
    if fp4 is not None:
        physical = bool(np.all((fp4[:2] >= -1e-12) & (fp4[:2] <= 1 + 1e-12)))
        records.append(_make_record("FP4", fp4, rhs, jac, physical=physical))
    return records


def _simple_fp4_map(cfg, delta):
    sd = np.sin(delta)
    den = 4 * cfg.r1 * cfg.r2 + cfg.beta1 * cfg.beta2 * (sd ** 2 - 4)
    if abs(den) < 1e-14:
        return None
    p1 = 2 * cfg.r2 * (2 * cfg.r1 + cfg.beta2 * sd - 2 * cfg.beta2) / den
    p2 = 2 * cfg.r1 * (2 * cfg.r2 - cfg.beta1 * sd - 2 * cfg.beta1) / den
    return p1, p2


def _solve_simple_fp4(cfg, coupling, rhs, notes, damping=0.5,
                      tol=1e-12, max_iter=10_000):
    d = _delta_at(cfg, coupling, 0.5, 0.5)
    if d is None:
        d = 0.0
    pm = _simple_fp4_map(cfg, d)
    if pm is None:
        notes.append("FP4: singular denominator")
        return None
    p1, p2 = pm
    for _ in range(max_iter):
        pm = _simple_fp4_map(cfg, d)
        if pm is None:
            notes.append("FP4: singular denominator during iteration")
            return None
        p1_new = p1 + damping * (pm[0] - p1)
        p2_new = p2 + damping * (pm[1] - p2)
        d_tgt = _delta_at(cfg, coupling, p1_new, p2_new)
        if d_tgt is None:
            notes.append("FP4: centroid fixed point vanished during iteration")
            return None
        d_new = d + damping * (d_tgt - d)
        change = max(abs(p1_new - p1), abs(p2_new - p2), abs(d_new - d))
        p1, p2, d = p1_new, p2_new, d_new
        if change < tol:
            break
    state = np.array([p1, p2, d])
    if np.max(np.abs(rhs(state))) > RESIDUAL_GATE:
        state = _newton_polish(rhs, state)
        if state is None or np.max(np.abs(rhs(state))) > RESIDUAL_GATE:
            notes.append("FP4: iteration did not converge")
            return None
    return state


def _newton_polish(rhs, state, max_iter=50):
    x = np.asarray(state, dtype=float).copy()
    for _ in range(max_iter):
        r = np.asarray(rhs(x), dtype=float)
        if np.max(np.abs(r)) < 1e-13:
            return x
        try:
            step = np.linalg.solve(fd_jacobian(rhs, x), r)
        except np.linalg.LinAlgError:
            return None
        x = x - step
        if not np.all(np.isfinite(x)):
            return None
    return x


# -- ecology variant --------------------------------------------------------

def eco2_cubic_coeffs(cfg: ModelConfig, delta) -> tuple:
    """Coefficients (a3, a2, a1, a0) of the interior fixed-point cubic in
    P2, from clearing denominators of dP1/dt = dP2/dt = 0."""
    dlt = 0.5 * (np.sin(delta) + 2.0)
    b2t = cfg.beta2 * 0.5 * (2.0 - np.sin(delta))
    r1, r2, b1, a, t, x1 = cfg.r1, cfg.r2, cfg.beta1, cfg.alpha, cfg.tau, cfg.x1
    a3 = r1 * a * r2 * t * b1
    a2 = -r1 * a * r2 * (t * b1 - 1) - a * b1 * dlt * b2t
    a1 = r1 * a * b1 * dlt - r1 * a * r2 - b1 * dlt * b2t - a * b1 * dlt * x1
    a0 = -b1 * dlt * x1
    return a3, a2, a1, a0


def eco2_cubic_roots(cfg: ModelConfig, delta) -> np.ndarray:
    """The three interior-candidate roots in P2 via the cube-root closed
    forms (Cardano): root_k = (F1 - z^k Ct - F2/(z^k Ct)) / (3 a3) with
    Ct = -2^(-1/3) F3, F3 = (chi + sqrt(chi^2 - 4 F2^3))^(1/3).

    F1, F2 and chi are evaluated from their printed expansions in the
    shorthand (delta, beta2~); both sqrt branches are tried when F3
    degenerates.
    """
    dlt = 0.5 * (np.sin(delta) + 2.0)
    b2t = cfg.beta2 * 0.5 * (2.0 - np.sin(delta))
    r1, r2, b1, a, t, x1 = cfg.r1, cfg.r2, cfg.beta1, cfg.alpha, cfg.tau, cfg.x1

    F1 = a * (b1 * dlt * b2t + (b1 * t - 1) * r1 * r2)
    xi = (2 * a + 3) * b1 * b2t * t - 2 * a * b2t + 3 * a * b1 * t * x1
    F2 = a * (a * b1 ** 2 * dlt ** 2 * b2t ** 2 + b1 * dlt * xi * r1 * r2
              + a * r1 ** 2 * r2 * (-3 * b1 ** 2 * dlt * t
                                    + (1 + b1 * t + b1 ** 2 * t ** 2) * r2))
    chi = a ** 2 * (
        2 * b1 ** 3 * a * dlt ** 3 * b2t ** 3
        + 3 * b1 ** 2 * dlt ** 2 * b2t * xi * r1 * r2
        + (b1 * t - 1) * a * r1 ** 3 * r2 ** 2
        * (-9 * b1 ** 2 * dlt * t + (2 + 5 * b1 * t + 2 * b1 ** 2 * t ** 2) * r2)
        + 3 * b1 * dlt * r1 ** 2 * r2
        * (-3 * a * b1 ** 2 * dlt * t * b2t
           + r2 * (-xi + b1 * t * (xi + 3 * a * b2t + 9 * b1 * t * x1))))

    a3 = a * b1 * t * r1 * r2
    disc = complex(chi) ** 2 - 4.0 * complex(F2) ** 3
    sq = np.sqrt(disc)
    f3 = (complex(chi) + sq) ** (1.0 / 3.0)
    if abs(f3) < 1e-12 * max(1.0, abs(chi)) ** (1 / 3):
        f3 = (complex(chi) - sq) ** (1.0 / 3.0)
    if abs(f3) < 1e-300:
        # triple root
        return np.full(3, F1 / (3.0 * a3), dtype=complex)
    ct = -(2.0 ** (-1.0 / 3.0)) * f3
    zeta = np.exp(2j * np.pi / 3.0)
    roots = []
    for k in range(3):
        c_k = (zeta ** k) * ct
        roots.append((F1 - c_k - F2 / c_k) / (3.0 * a3))
    return np.array(roots, dtype=complex)


def eco2_back_substitute(cfg: ModelConfig, p2, delta):
    """P1* = (r2 / (beta1 delta)) (1 - P2*)(1 + tau beta1 P2*)."""
    dlt = 0.5 * (np.sin(delta) + 2.0)
    return cfg.r2 / (cfg.beta1 * dlt) * (1.0 - p2) * (1.0 + cfg.tau * cfg.beta1 * p2)


def eco2_fixed_points(cfg: ModelConfig, coupling: CentroidCoupling = None,
                      diagnostics: list = None, imag_tol: float = 1e-8) -> list:
    """FP1..FP5 of the reduced nondimensional ecology model.

    FP1: (0, 0); FP2: (0, 1); FP3-FP5: interior candidates from the cubic
    closed forms, Delta* coupled through damped fixed-point iteration.
    Roots with |Im| > 1e-8 are rejected; real roots outside [0, 1] (in
    either population) are recorded with status "outside-range".
    """
    if coupling is None:
        coupling = CentroidCoupling.from_config(cfg)
    notes = diagnostics if diagnostics is not None else []
    rhs = lambda s: eco2_reduced_rhs(s, cfg, coupling)
    jac = lambda s: eco2_reduced_jacobian(s, cfg, coupling)
    records = []
    for label, (p1, p2) in (("FP1", (0.0, 0.0)), ("FP2", (0.0, 1.0))):
        d = _delta_at(cfg, coupling, p1, p2)
        if d is None:
            notes.append(f"{label}: no centroid fixed point (K < 0)")
            continue
        records.append(_make_record(label, (p1, p2, d), rhs, jac))

    d_init = _delta_at(cfg, coupling, 0.5, 0.5)
    if d_init is None:
        d_init = 0.0
    for k, label in enumerate(("FP3", "FP4", "FP5")):
        sol = _solve_eco2_interior(cfg, coupling, k, d_init, notes, label,
                                   imag_tol=imag_tol)
        if sol is None:
            continue
        state, physical = sol
        if np.max(np.abs(rhs(state))) > RESIDUAL_GATE:
            polished = _newton_polish(rhs, state)
            if polished is not None and np.max(np.abs(rhs(polished))) <= RESIDUAL_GATE:
                state = polished
            else:
                notes.append(f"{label}: residual gate failed")
                continue
        records.append(_make_record(label, state, rhs, jac, physical=physical))
    return records


def _solve_eco2_interior(cfg, coupling, branch, d_init, notes, label,
                         damping=0.5, tol=1e-12, max_iter=10_000,
                         imag_tol=1e-8):
    d = d_init
    p2 = None
    for _ in range(max_iter):
        roots = eco2_cubic_roots(cfg, d)
        root = roots[branch]
        if abs(root.imag) > imag_tol:
            notes.append(f"{label}: complex root (|Im| = {abs(root.imag):.2e})")
            return None
        p2_tgt = float(root.real)
        p2 = p2_tgt if p2 is None else p2 + damping * (p2_tgt - p2)
        p1 = float(eco2_back_substitute(cfg, p2, d))
        d_tgt = _delta_at(cfg, coupling, p1, p2)
        if d_tgt is None:
            notes.append(f"{label}: centroid fixed point vanished during iteration")
            return None
        d_new = d + damping * (d_tgt - d)
        change = max(abs(d_new - d), abs(p2_tgt - p2))
        d = d_new
        if change < tol:
            break
    p1 = float(eco2_back_substitute(cfg, p2, d))
    physical = bool(0.0 - 1e-12 <= p2 <= 1.0 + 1e-12
                    and 0.0 - 1e-12 <= p1 <= 1.0 + 1e-12)
    if not physical:
        notes.append(f"{label}: outside physical range (P1={p1:.4g}, P2={p2:.4g})")
    return np.array([p1, p2, d]), physical


# ---------------------------------------------------------------------------
# stability thresholds
# ---------------------------------------------------------------------------

@dataclass
class ThresholdReport:
    """Closed-form stability thresholds at a given Delta*."""

    delta_star: float
    beta1_threshold: float          # Blue-victory FP: beta1 > r2/(1 + sin(D*)/2)
    beta2_threshold: float          # Red-victory FP: beta2 > r1/(1 - sin(D*)/2)
    eco2_beta2_threshold: float     # ecology FP2: beta2 > (a r1/(1+a) - x1)/(1 - sin(D*)/2)
    phi_window: tuple               # cos(phi - D*) > 0
    psi_window: tuple               # cos(psi + D*) > 0


def stability_thresholds(cfg: ModelConfig, delta_star_val: float) -> ThresholdReport:
    sd = np.sin(delta_star_val)
    return ThresholdReport(
        delta_star=float(delta_star_val),
        beta1_threshold=float(cfg.r2 / (1.0 + 0.5 * sd)),
        beta2_threshold=float(cfg.r1 / (1.0 - 0.5 * sd)),
        eco2_beta2_threshold=float(
            (cfg.alpha * cfg.r1 / (1.0 + cfg.alpha) - cfg.x1) / (1.0 - 0.5 * sd)),
        phi_window=(float(delta_star_val - 0.5 * np.pi),
                    float(delta_star_val + 0.5 * np.pi)),
        psi_window=(float(-delta_star_val - 0.5 * np.pi),
                    float(-delta_star_val + 0.5 * np.pi)),
    )


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    param_value: float
    record: FixedPointRecord = None
    attractor: str = ""             # "" for FP rows; else trajectory label
    terminal_state: np.ndarray = None


def _label_attractor(traj, p_death):
    if traj.status == "event":
        return "extinction"
    t, y = traj.t, traj.y
    window = t >= t[-1] - 0.2 * (t[-1] - t[0])
    p2 = y[window, 1]
    if p2.max() - p2.min() <= 1e-3:
        return "fixed-point"
    # look for a repeating oscillation via autocorrelation on a uniform grid
    ts = np.linspace(t[window][0], t[-1], 512)
    ps = np.interp(ts, t[window], p2)
    ps = ps - ps.mean()
    denom = float(ps @ ps)
    if denom <= 0:
        return "fixed-point"
    ac = np.correlate(ps, ps, mode="full")[ps.size - 1:] / denom
    # first local max after the initial decay
    for lag in range(2, ac.size - 1):
        if ac[lag] > 0.5 and ac[lag] >= ac[lag - 1] and ac[lag] >= ac[lag + 1]:
            return "limit-cycle"
    return "irregular"


def sweep_bifurcation(variant: str, cfg: ModelConfig, param: str, values,
                      coupling: CentroidCoupling = None,
                      settings: IntegratorSettings = None,
                      start_state=None, p_death: float = 1e-4) -> list:
    """For each grid value: recompute fixed points, classify stability, and
    run one long trajectory from a standard start to label the attractor."""
    if variant not in ("simple-reduced", "eco2-reduced"):
        raise ValueError("sweep supports the reduced two-population variants")
    if not hasattr(cfg, param):
        raise ValueError(f"unknown parameter {param!r}")
    if settings is None:
        settings = IntegratorSettings(rtol=1e-8, atol=1e-10, t_end=200.0)
    rows = []
    for value in np.asarray(values, dtype=float):
        c = cfg.with_overrides(**{param: float(value)})
        coup = coupling
        if coup is None or param in ("gamma1", "gamma2", "phi", "psi"):
            coup = CentroidCoupling.from_config(c)
        if variant == "simple-reduced":
            records = simple_fixed_points(c, coup)
        else:
            records = eco2_fixed_points(c, coup)
        for rec in records:
            rows.append(SweepRow(param_value=float(value), record=rec))
        system = build_system(variant, c, coupling=coup)
        if start_state is None:
            d0 = _delta_at(c, coup, 0.5, 0.5)
            y0 = np.array([0.5, 0.5, d0 if d0 is not None else 0.0])
        else:
            y0 = np.asarray(start_state, dtype=float)
        outcome = run_scenario(system, y0, settings, recon_T=0.0,
                               p_death=p_death)
        label = _label_attractor(outcome.trajectory, p_death)
        rows.append(SweepRow(param_value=float(value), attractor=label,
                             terminal_state=outcome.trajectory.y[-1]))
    return rows


def sweep_to_csv(rows, path, n_pops: int = 2, n_delta: int = 1):
    """CSV per the sweep-table layout: param,fp_label,P1,P2[,P3],
    Delta1[,Delta2],max_real_eig,class.  Trajectory rows use fp_label
    "traj" and put the attractor label in the class column."""
    p_cols = [f"P{i + 1}" for i in range(n_pops)]
    d_cols = ["Delta1", "Delta2"][:n_delta]
    header = ",".join(["param", "fp_label"] + p_cols + d_cols
                      + ["max_real_eig", "class"])
    lines = [header]
    for row in rows:
        if row.record is not None:
            rec = row.record
            vals = [f"{v:.12g}" for v in rec.state]
            lines.append(",".join([f"{row.param_value:.12g}", rec.label]
                                  + vals + [f"{rec.max_real_eig:.12g}",
                                            rec.classification]))
        else:
            vals = [f"{v:.12g}" for v in row.terminal_state[:n_pops + n_delta]]
            lines.append(",".join([f"{row.param_value:.12g}", "traj"]
                                  + vals + ["", row.attractor]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
