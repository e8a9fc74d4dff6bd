"""Basin-of-attraction estimation for Blue success over initial conditions.

A basin value is the fraction of an initial-condition grid (cell centres
over the admissible resource box) whose trajectories end with Red below the
extinction threshold first.  Full variants randomise initial phases per the
ensemble protocol; reduced variants start the centroid difference at the
settled free value Delta* (or a supplied grid).  Everything runs through
the vectorised batch integrator with integer win counts, so results are
independent of evaluation order.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import delta_star
from .models import CentroidCoupling, build_system, centroid_coeffs
from .solver import (IntegratorSettings, integrate_batch, sample_initial_phases,
                     _batch_rk4_plain)

__all__ = ["BasinSpec", "BasinResult", "estimate_basin", "basin_heatmap",
           "heatmap_to_csv"]


@dataclass
class BasinSpec:
    """Initial-condition grid and phase policy for basin estimation.

    phase_policy "auto" resolves to "ensemble" for full variants (n_sim
    random initial phase configurations per cell) and "delta-star" for
    reduced ones (the centroid difference starts at its settled free
    value); "delta-grid" sweeps Delta(0) over delta_resolution values in
    [-pi, pi) instead, making each cell a fraction.
    """

    grid: tuple = (51, 51)          # resolution over (P1(0), P2(0))
    p3_init: float = None           # fixed P3(0); default 0.5*K3
    phase_policy: str = "auto"
    n_sim: int = 100                # ensemble members per cell (full variants)
    delta_resolution: int = 8       # Delta(0) values per cell (delta-grid)
    seed: int = 0
    recon_T: float = 50.0
    settings: IntegratorSettings = field(
        default_factory=lambda: IntegratorSettings(dt_init=0.01, t_end=200.0))

    def __post_init__(self):
        if any(r < 1 for r in self.grid):
            raise ValueError("grid resolutions must be >= 1")
        if self.phase_policy not in ("auto", "ensemble", "delta-star",
                                     "delta-grid"):
            raise ValueError(f"unknown phase policy {self.phase_policy!r}")
        if self.delta_resolution < 1:
            raise ValueError("delta_resolution must be >= 1")


@dataclass
class BasinResult:
    value: float
    per_cell: np.ndarray
    n_evaluated: int
    n_failed: int
    axes: tuple = ()

    def boundary_fraction(self) -> float:
        """Fraction of cells adjacent (4-neighbourhood) to a cell whose
        Blue-win value differs by at least 0.5 — an empirical bound on how
        much a 2x grid refinement can move the basin value."""
        g = self.per_cell
        edge = np.zeros_like(g, dtype=bool)
        edge[:-1, :] |= np.abs(g[:-1, :] - g[1:, :]) >= 0.5
        edge[1:, :] |= np.abs(g[1:, :] - g[:-1, :]) >= 0.5
        edge[:, :-1] |= np.abs(g[:, :-1] - g[:, 1:]) >= 0.5
        edge[:, 1:] |= np.abs(g[:, 1:] - g[:, :-1]) >= 0.5
        return float(edge.mean())


def _cell_centres(resolution, lo, hi):
    edges = np.linspace(lo, hi, resolution + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def _initial_delta(cfg, coupling):
    """Free-dynamics settled centroid difference (H = 1), else 0."""
    co = centroid_coeffs(cfg, coupling, 1.0, 1.0)
    d = delta_star(co.C, co.S, cfg.mu)
    return 0.0 if d is None else float(d)


def _initial_delta3(cfg, coupling, settle_T: float = 50.0, dt: float = 0.01):
    """Settled (Delta1, Delta2) of the three-population reduction.

    No closed form exists; integrate the free centroid subsystem (resources
    pinned at zero, so H = 1) and take the terminal values.
    """
    from .models import eco3_reduced_rhs

    y = np.array([[0.0], [0.0], [0.0], [0.0], [0.0]])
    y = _batch_rk4_plain(lambda yy: eco3_reduced_rhs(yy, cfg, coupling),
                         y, dt, settle_T)
    return float(y[3, 0]), float(y[4, 0])


def estimate_basin(model: str, cfg, spec: BasinSpec, net=None,
                   coupling=None) -> BasinResult:
    """Blue-win fraction over the initial-condition grid.

    Reduced variants run one trajectory per cell (deterministic); full
    variants run an n_sim phase ensemble per cell.  Integration failures
    are excluded from the average when they are < 1% of the evaluations,
    otherwise a hard error is raised.
    """
    system = build_system(model, cfg, net=net, coupling=coupling)
    dim_caps = (cfg.K1, cfg.K2) if model in ("eco3", "eco3-reduced") else (1.0, 1.0)
    p1c = _cell_centres(spec.grid[0], 0.0, dim_caps[0])
    p2c = _cell_centres(spec.grid[1], 0.0, dim_caps[1])
    g1, g2 = np.meshgrid(p1c, p2c, indexing="ij")
    cells = np.stack([g1.ravel(), g2.ravel()])      # (2, n_cells)
    n_cells = cells.shape[1]
    settings = spec.settings

    policy = spec.phase_policy
    if policy == "auto":
        policy = "delta-star" if system.reduced else "ensemble"
    if system.reduced and policy == "ensemble":
        raise ValueError("reduced variants have no phases to randomise")
    if not system.reduced and policy != "ensemble":
        raise ValueError("full variants use the ensemble phase policy")

    if system.reduced and policy == "delta-grid":
        m = spec.delta_resolution
        d0s = -np.pi + 2.0 * np.pi * (np.arange(m) + 0.5) / m
        P0 = np.repeat(cells, m, axis=1)
        rows = [P0[0], P0[1]]
        if system.n_pops == 3:
            p3 = spec.p3_init if spec.p3_init is not None else 0.5 * cfg.K3
            rows.append(np.full(P0.shape[1], p3))
        rows.append(np.tile(d0s, n_cells))
        if system.dim - system.n_pops == 2:
            rows.append(np.zeros(P0.shape[1]))
        y0 = np.vstack(rows)
        out = integrate_batch(system.rhs, y0, settings.dt_init,
                              settings.t_end, cfg.P_D, system.n_pops)
        winner = out.winner.reshape(n_cells, m)
        ok = winner >= 0
        per_cell = np.where(ok.sum(axis=1) > 0,
                            (winner == 1).sum(axis=1)
                            / np.maximum(ok.sum(axis=1), 1),
                            np.nan).reshape(spec.grid)
        n_failed = int((~ok).sum())
        n_eval = n_cells * m
    elif system.reduced:
        if system.n_pops == 3:
            p3 = spec.p3_init if spec.p3_init is not None else 0.5 * cfg.K3
            d1, d2 = _initial_delta3(cfg, system.coupling)
            extra = [np.full(n_cells, p3), np.full(n_cells, d1),
                     np.full(n_cells, d2)]
        else:
            d0 = _initial_delta(cfg, system.coupling)
            extra = [np.full(n_cells, d0)]
        y0 = np.vstack([cells] + extra)
        out = integrate_batch(system.rhs, y0, settings.dt_init,
                              settings.t_end, cfg.P_D, system.n_pops)
        wins = (out.winner == 1).astype(float)
        failed = out.winner == -1
        per_cell = np.where(failed, np.nan, wins).reshape(spec.grid)
        n_failed = int(failed.sum())
        n_eval = n_cells
    else:
        n_sim = spec.n_sim
        n_nodes = system.net.n_total
        theta0 = sample_initial_phases(n_nodes, n_sim, spec.seed)
        if spec.recon_T > 0:
            theta0 = _batch_rk4_plain(system.phase_rhs(), theta0,
                                      settings.dt_init, spec.recon_T)
        # batch = all cells x all members
        P0 = np.repeat(cells, n_sim, axis=1)
        if system.n_pops == 3:
            p3 = spec.p3_init if spec.p3_init is not None else 0.5 * cfg.K3
            P0 = np.vstack([P0, np.full(P0.shape[1], p3)])
        th = np.tile(theta0, n_cells)
        y0 = np.vstack([P0, th])
        out = integrate_batch(system.rhs, y0, settings.dt_init,
                              settings.t_end, cfg.P_D, system.n_pops)
        winner = out.winner.reshape(n_cells, n_sim)
        ok = winner >= 0
        wins = (winner == 1).sum(axis=1)
        valid = ok.sum(axis=1)
        per_cell = np.where(valid > 0, wins / np.maximum(valid, 1),
                            np.nan).reshape(spec.grid)
        n_failed = int((~ok).sum())
        n_eval = n_cells * n_sim

    if n_failed > 0.01 * n_eval:
        raise RuntimeError(
            f"{n_failed}/{n_eval} integrations failed (> 1%)")
    value = float(np.nanmean(per_cell))
    return BasinResult(value=value, per_cell=per_cell, n_evaluated=n_eval,
                       n_failed=n_failed, axes=(p1c, p2c))


def _heatmap_cell(args):
    model, cfg, spec, x_name, x_val, y_name, y_val, net, coupling = args
    from .models import _REDUCED

    c = replace(cfg, **{x_name: x_val, y_name: y_val})
    swept = {x_name, y_name}
    if model in _REDUCED:
        if net is not None:
            coup = replace(CentroidCoupling.from_network(net),
                           phi=c.phi, psi=c.psi)
        elif coupling is not None:
            coup = replace(coupling, **{k: getattr(c, k2)
                                        for k, k2 in (("g12", "gamma1"),
                                                      ("g21", "gamma2"),
                                                      ("phi", "phi"),
                                                      ("psi", "psi"))
                                        if k2 in swept})
        else:
            coup = CentroidCoupling.from_config(c)
        return estimate_basin(model, c, spec, coupling=coup).value
    net_c = net
    if net is not None and swept & {"phi", "psi"}:
        net_c = net.with_frustration(c.phi, c.psi)
    return estimate_basin(model, c, spec, net=net_c).value


def _delta_star_array(C, S, mu):
    """Vectorised stable centroid fixed point; 0.0 where none exists."""
    C, S, mu = np.broadcast_arrays(np.asarray(C, float), np.asarray(S, float),
                                   np.asarray(mu, float))
    K = C * C + S * S - mu * mu
    sq = np.sqrt(np.maximum(K, 0.0))
    d1, d2 = mu - S, C + sq
    with np.errstate(divide="ignore", invalid="ignore"):
        v1 = 2.0 * np.arctan((C - sq) / np.where(d1 == 0, 1e-300, d1))
        v2 = 2.0 * np.arctan((mu + S) / np.where(d2 == 0, 1e-300, d2))
    val = np.where(np.abs(d1) >= np.abs(d2), v1, v2)
    val = np.where((np.abs(d1) < 1e-300) & (np.abs(d2) < 1e-300), np.pi, val)
    return np.where(K < 0, 0.0, val)


_COUPLING_NAMES = ("gamma1", "gamma2", "phi", "psi")


def _heatmap_reduced_batched(model, cfg, x_name, x_values, y_name, y_values,
                             spec):
    """One vectorised run over every (parameter pair, initial cell)."""
    from dataclasses import replace as dc_replace

    from .models import _REDUCED

    fn, n_pops, n_delta = _REDUCED[model]
    nx, ny = x_values.size, y_values.size
    n_par = nx * ny
    xv = np.tile(x_values, ny)                    # row-major over (y, x)
    yv = np.repeat(y_values, nx)
    caps = (cfg.K1, cfg.K2) if model == "eco3-reduced" else (1.0, 1.0)
    p1c = _cell_centres(spec.grid[0], 0.0, caps[0])
    p2c = _cell_centres(spec.grid[1], 0.0, caps[1])
    g1, g2 = np.meshgrid(p1c, p2c, indexing="ij")
    cells = np.stack([g1.ravel(), g2.ravel()])
    n_cells = cells.shape[1]

    par = {x_name: np.repeat(xv, n_cells), y_name: np.repeat(yv, n_cells)}
    cfg_b = dc_replace(cfg, **par)
    coup_b = CentroidCoupling(
        g12=cfg_b.gamma1, g21=cfg_b.gamma2, phi=cfg_b.phi, psi=cfg_b.psi)

    co = centroid_coeffs(cfg_b, coup_b, 1.0, 1.0)
    d0 = _delta_star_array(co.C, co.S, cfg_b.mu)
    d0 = np.broadcast_to(d0, (n_par * n_cells,)).copy()
    P0 = np.tile(cells, n_par)
    rows = [P0[0], P0[1]]
    if n_pops == 3:
        p3 = spec.p3_init if spec.p3_init is not None else 0.5 * cfg.K3
        rows.append(np.full(n_par * n_cells, p3))
    rows.append(d0)
    if n_delta == 2:
        rows.append(np.zeros(n_par * n_cells))
    y0 = np.vstack(rows)

    holder = {"cfg": cfg_b, "coup": coup_b}

    def rhs(y):
        return fn(y, holder["cfg"], holder["coup"])

    def on_compact(keep):
        arrays = {k: v[keep] for k, v in
                  ((n, getattr(holder["cfg"], n)) for n in par)}
        holder["cfg"] = dc_replace(holder["cfg"], **arrays)
        holder["coup"] = CentroidCoupling(
            g12=holder["cfg"].gamma1, g21=holder["cfg"].gamma2,
            phi=holder["cfg"].phi, psi=holder["cfg"].psi)

    out = integrate_batch(rhs, y0, spec.settings.dt_init,
                          spec.settings.t_end, cfg.P_D, n_pops,
                          on_compact=on_compact)
    wins = (out.winner == 1).reshape(n_par, n_cells)
    ok = (out.winner >= 0).reshape(n_par, n_cells)
    n_failed = int((~ok).sum())
    if n_failed > 0.01 * out.winner.size:
        raise RuntimeError(f"{n_failed}/{out.winner.size} integrations failed")
    vals = wins.sum(axis=1) / np.maximum(ok.sum(axis=1), 1)
    return vals.reshape(ny, nx)


def basin_heatmap(model: str, cfg, x_name: str, x_values, y_name: str,
                  y_values, spec: BasinSpec, net=None, coupling=None,
                  jobs: int = 1):
    """Basin value per (x, y) parameter pair; row index follows y.

    Reduced variants without an explicit network coupling run as one
    vectorised batch over all parameter pairs and cells; full variants
    fall back to per-cell evaluation (optionally across processes).
    """
    if x_name == y_name:
        raise ValueError("heatmap needs two distinct parameter names")
    for name in (x_name, y_name):
        if not hasattr(cfg, name):
            raise ValueError(f"unknown parameter {name!r}")
    x_values = np.asarray(x_values, dtype=float)
    y_values = np.asarray(y_values, dtype=float)
    from .models import _REDUCED

    if model in _REDUCED and coupling is None and net is None:
        matrix = _heatmap_reduced_batched(model, cfg, x_name, x_values,
                                          y_name, y_values, spec)
        return matrix, x_values, y_values
    tasks = [(model, cfg, spec, x_name, float(xv), y_name, float(yv),
              net, coupling)
             for yv in y_values for xv in x_values]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(_heatmap_cell, tasks))
    else:
        flat = [_heatmap_cell(t) for t in tasks]
    matrix = np.array(flat).reshape(y_values.size, x_values.size)
    return matrix, x_values, y_values


def heatmap_to_csv(matrix, x_values, y_values, path, meta: dict = None,
                   started: float = None):
    """First row = x-axis values, first column = y-axis values, body =
    basin fractions; companion .json metadata next to the CSV."""
    with open(path, "w") as fh:
        fh.write("," + ",".join(f"{v:.12g}" for v in x_values) + "\n")
        for yv, row in zip(y_values, matrix):
            fh.write(f"{yv:.12g}," + ",".join(f"{v:.12g}" for v in row) + "\n")
    if meta is not None:
        meta = dict(meta)
        if started is not None:
            meta["runtime_s"] = time.time() - started
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
