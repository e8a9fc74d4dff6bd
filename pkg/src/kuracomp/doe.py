"""Experimental design for basin-value exploration.

The loop initialises with a correlation-minimised Latin hypercube, then
alternates Bayesian acquisition (GP surrogate, upper confidence bound) with
re-evaluation of the stratification objective over the full response set:

    F(y_m) = 1 / kde(y_m),   z_m = F(y_m) / max_j F(y_j)

so acquisition is pushed toward parameter regions whose basin values are
under-represented, targeting a uniform response histogram on [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from ._rng import substream

__all__ = [
    "DesignMatrix",
    "DesignRecord",
    "build_design",
    "kde_density",
    "silverman_bandwidth",
    "objective",
    "GaussianProcess",
    "bo_step",
    "run_doe",
    "write_doe_log",
    "read_doe_log",
]


class SurrogateError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Latin hypercube with correlation minimisation
# ---------------------------------------------------------------------------

@dataclass
class DesignMatrix:
    points: np.ndarray        # (k, d) in the requested ranges
    levels: np.ndarray        # (k, d) unit-interval stratified levels
    ranges: list              # per-factor (lo, hi)
    max_abs_corr: float


def _max_abs_corr(levels) -> float:
    if levels.shape[1] < 2:
        return 0.0
    c = np.corrcoef(levels, rowvar=False)
    off = np.abs(c[~np.eye(c.shape[0], dtype=bool)])
    return float(off.max())


def build_design(d: int, k: int, ranges, seed, target: float = 0.05,
                 max_proposals: int = 200_000) -> DesignMatrix:
    """Latin hypercube of k samples in d factors with column correlations
    annealed toward zero by random within-column swaps.

    Each column is a permutation of the centred levels (i + 0.5)/k mapped
    into its range; the achieved max |pairwise correlation| is recorded.
    """
    if d < 1 or k < 1:
        raise ValueError("d and k must be >= 1")
    ranges = [tuple(map(float, r)) for r in ranges]
    if len(ranges) != d:
        raise ValueError("one (lo, hi) range per factor required")
    rng = substream(seed, "doe", "design")
    base = (np.arange(k) + 0.5) / k
    levels = np.column_stack([base[rng.permutation(k)] for _ in range(d)])

    if d >= 2 and k >= 3:
        # anneal on the sum of squared pair correlations (smooth energy),
        # stopping once the max |corr| reaches the target
        centred = levels - levels.mean(axis=0)
        norm = np.sqrt((centred ** 2).sum(axis=0))
        corr = (centred.T @ centred) / np.outer(norm, norm)
        np.fill_diagonal(corr, 0.0)
        energy = float((corr ** 2).sum())
        temp = 1e-3
        cool = np.exp(np.log(1e-4) / max_proposals)   # decay to temp*1e-4
        for it in range(max_proposals):
            if it % 256 == 0 and float(np.abs(corr).max()) <= target:
                break
            col = rng.integers(d)
            a, b = rng.integers(k), rng.integers(k)
            if a == b:
                continue
            dcorr = ((centred[a, col] - centred[b, col])
                     * (centred[b] - centred[a])) / (norm[col] * norm)
            dcorr[col] = 0.0
            new_row = corr[col] + dcorr
            d_energy = 2.0 * float((new_row ** 2).sum()
                                   - (corr[col] ** 2).sum())
            if d_energy <= 0 or rng.random() < np.exp(-d_energy / temp):
                corr[col] = new_row
                corr[:, col] = new_row
                energy += d_energy
                centred[[a, b], col] = centred[[b, a], col]
                levels[[a, b], col] = levels[[b, a], col]
            temp *= cool
        achieved = _max_abs_corr(levels)
    else:
        achieved = 0.0

    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    points = lo + levels * (hi - lo)
    return DesignMatrix(points=points, levels=levels, ranges=ranges,
                        max_abs_corr=achieved)


# ---------------------------------------------------------------------------
# kernel density with boundary reflection
# ---------------------------------------------------------------------------

def silverman_bandwidth(ys) -> float:
    ys = np.asarray(ys, dtype=float)
    if ys.size < 2:
        raise ValueError("auto bandwidth needs >= 2 samples")
    std = ys.std(ddof=1)
    iqr = np.subtract(*np.percentile(ys, [75, 25]))
    spread = min(std, iqr / 1.349) if iqr > 0 else std
    h = 0.9 * spread * ys.size ** (-1 / 5)
    return h if h > 1e-12 else 0.05


def kde_density(ys, bandwidth="auto"):
    """Gaussian KDE on [0, 1] with boundary reflection (method of images).

    Returns a vectorised callable; the reflected images guarantee the
    density integrates to 1 over [0, 1] up to Gaussian tail truncation
    far below 1e-6.
    """
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if bandwidth == "auto":
        h = silverman_bandwidth(ys)
    else:
        h = float(bandwidth)
        if h <= 0:
            raise ValueError("bandwidth must be positive")
    n_images = max(1, int(np.ceil(4.0 * h)) + 1)
    offsets = 2.0 * np.arange(-n_images, n_images + 1)
    centres = np.concatenate([off + sgn * ys
                              for off in offsets for sgn in (1.0, -1.0)])

    def density(x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - centres) / h
        val = np.exp(-0.5 * z ** 2).sum(axis=-1)
        return val / (ys.size * h * np.sqrt(2.0 * np.pi))

    return density


def objective(ys, bandwidth="auto"):
    """Stratification scores z_m = F(y_m)/max F, F = 1/kde(y_m).

    Recomputed over the full response set on every call (the responses'
    density changes as samples accrue).
    """
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if ys.size == 0:
        raise ValueError("objective needs at least one sample")
    if bandwidth == "auto" and (ys.size < 2 or np.ptp(ys) == 0):
        bandwidth = 0.05
    dens = kde_density(ys, bandwidth)
    f = 1.0 / np.maximum(dens(ys), 1e-300)
    return f / f.max()


# ---------------------------------------------------------------------------
# Gaussian-process surrogate + UCB acquisition
# ---------------------------------------------------------------------------

@dataclass
class GaussianProcess:
    """Squared-exponential ARD kernel on unit-scaled inputs."""

    d: int
    length_scales: np.ndarray = None
    signal_var: float = 1.0
    noise_var: float = 1e-4
    x_train: np.ndarray = field(default=None, repr=False)
    z_train: np.ndarray = field(default=None, repr=False)
    _chol: np.ndarray = field(default=None, repr=False)
    _alpha: np.ndarray = field(default=None, repr=False)
    _z_mean: float = 0.0

    def __post_init__(self):
        if self.length_scales is None:
            self.length_scales = np.full(self.d, 0.3)

    def _kernel(self, a, b):
        diff = (a[:, None, :] - b[None, :, :]) / self.length_scales
        return self.signal_var * np.exp(-0.5 * (diff ** 2).sum(axis=-1))

    def _factorise(self):
        n = self.x_train.shape[0]
        kmat = self._kernel(self.x_train, self.x_train)
        jitter = 0.0
        while True:
            try:
                self._chol = np.linalg.cholesky(
                    kmat + (self.noise_var + jitter) * np.eye(n))
                break
            except np.linalg.LinAlgError:
                jitter = 1e-12 if jitter == 0.0 else jitter * 10.0
                if jitter > 1e-6:
                    raise SurrogateError(
                        "kernel matrix not positive definite at jitter 1e-6")
        resid = self.z_train - self._z_mean
        self._alpha = np.linalg.solve(
            self._chol.T, np.linalg.solve(self._chol, resid))

    def condition(self, x, z):
        self.x_train = np.atleast_2d(np.asarray(x, dtype=float))
        self.z_train = np.asarray(z, dtype=float)
        self._z_mean = float(self.z_train.mean())
        self._factorise()

    def predict(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ks = self._kernel(x, self.x_train)
        mean = self._z_mean + ks @ self._alpha
        v = np.linalg.solve(self._chol, ks.T)
        var = self.signal_var - (v ** 2).sum(axis=0)
        return mean, np.sqrt(np.maximum(var, 1e-16))

    def predict_with_grad(self, x):
        """(mean, sd, dmean/dx, dsd/dx) batched over rows of x."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        diff = (x[:, None, :] - self.x_train[None, :, :]) / self.length_scales
        ks = self.signal_var * np.exp(-0.5 * (diff ** 2).sum(axis=-1))
        dks = -ks[:, :, None] * diff / self.length_scales   # (m, n, d)
        mean = self._z_mean + ks @ self._alpha
        dmean = np.einsum("mnd,n->md", dks, self._alpha)
        w = np.linalg.solve(self._chol.T, np.linalg.solve(self._chol, ks.T)).T
        var = self.signal_var - (ks * w).sum(axis=1)
        sd = np.sqrt(np.maximum(var, 1e-16))
        dvar = -2.0 * np.einsum("mn,mnd->md", w, dks)
        dsd = dvar / (2.0 * sd[:, None])
        return mean, sd, dmean, dsd

    def log_marginal_likelihood(self) -> float:
        resid = self.z_train - self._z_mean
        return float(-0.5 * resid @ self._alpha
                     - np.log(np.diag(self._chol)).sum()
                     - 0.5 * resid.size * np.log(2.0 * np.pi))

    def fit_hyperparameters(self):
        """Marginal-likelihood ascent over log length scales / variances."""
        x0 = np.log(np.concatenate([self.length_scales,
                                    [self.signal_var, self.noise_var]]))

        def neg_lml(logp):
            self.length_scales = np.exp(logp[:self.d])
            self.signal_var = float(np.exp(logp[self.d]))
            self.noise_var = float(np.exp(logp[self.d + 1]))
            try:
                self._factorise()
            except SurrogateError:
                return 1e12
            return -self.log_marginal_likelihood()

        bounds = [(np.log(0.01), np.log(10.0))] * self.d
        bounds += [(np.log(1e-4), np.log(100.0)), (np.log(1e-8), np.log(1.0))]
        res = optimize.minimize(neg_lml, x0, method="L-BFGS-B", bounds=bounds)
        neg_lml(res.x)


def _unit(x, ranges):
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    return (np.asarray(x, dtype=float) - lo) / (hi - lo)


def _from_unit(u, ranges):
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    return lo + np.asarray(u, dtype=float) * (hi - lo)


def bo_step(x_data, z_data, ranges, seed, surrogate: GaussianProcess = None,
            kappa: float = 2.0, refit: bool = False, n_starts: int = 64,
            n_ascent: int = 60):
    """Next acquisition point: argmax of mu(x) + kappa*sigma(x).

    Multi-start local search from scrambled-Sobol seeds; all starts ascend
    together (projected gradient with per-start backtracking) using analytic
    acquisition gradients.  Deterministic for a fixed seed.
    """
    x_data = np.atleast_2d(np.asarray(x_data, dtype=float))
    z_data = np.asarray(z_data, dtype=float)
    if x_data.shape[0] < 2:
        raise ValueError("bo_step needs >= 2 records")
    d = x_data.shape[1]
    if surrogate is None:
        surrogate = GaussianProcess(d=d)
    surrogate.condition(_unit(x_data, ranges), z_data)
    if refit:
        surrogate.fit_hyperparameters()

    sob = qmc.Sobol(d, scramble=True,
                    seed=substream(seed, "doe", "acquire-starts"))
    u = sob.random(n_starts)
    mean, sd, dm, ds = surrogate.predict_with_grad(u)
    acq = mean + kappa * sd
    step = np.full(n_starts, 0.25)
    for _ in range(n_ascent):
        grad = dm + kappa * ds
        u_new = np.clip(u + step[:, None] * grad, 0.0, 1.0)
        mean, sd, dm_new, ds_new = surrogate.predict_with_grad(u_new)
        acq_new = mean + kappa * sd
        improved = acq_new >= acq
        u = np.where(improved[:, None], u_new, u)
        acq = np.where(improved, acq_new, acq)
        dm = np.where(improved[:, None], dm_new, dm)
        ds = np.where(improved[:, None], ds_new, ds)
        step = np.where(improved, step * 1.1, step * 0.5)
        if step.max() < 1e-6:
            break
    best = int(np.argmax(acq))
    return _from_unit(u[best], ranges), surrogate


# ---------------------------------------------------------------------------
# the full design-of-experiments loop
# ---------------------------------------------------------------------------

@dataclass
class DesignRecord:
    x: np.ndarray
    y: float                 # response (basin value)
    z: float                 # stratification objective
    iteration: int
    source: str              # "nolh" | "acquisition"
    failed: bool = False


def run_doe(g, ranges, k_init: int, n_total: int, seed: int,
            kappa: float = 2.0, kde_bandwidth="auto",
            refit_every: int = 10, resume=None) -> list:
    """NOLH initialisation followed by acquisition with objective
    re-evaluation after every new response.

    ``g`` maps a parameter vector to a response in [0, 1]; evaluation
    failures (exceptions or non-finite values) flag the record and leave
    the surrogate data untouched.  Passing previously logged records as
    ``resume`` replays the loop without re-running ``g`` for them, so a
    campaign continues exactly from its log plus the master seed.
    """
    if n_total < k_init:
        raise ValueError("n_total must be >= k_init")
    d = len(ranges)
    design = build_design(d, k_init, ranges, seed)
    records = []
    replay = list(resume) if resume else []

    def evaluate(x, iteration, source):
        x = np.asarray(x, dtype=float)
        if iteration < len(replay):
            x = np.asarray(replay[iteration].x, dtype=float)
            y = replay[iteration].y
        else:
            try:
                y = float(g(x))
            except Exception:
                y = np.nan
        failed = not np.isfinite(y)
        records.append(DesignRecord(x=x, y=y, z=np.nan, iteration=iteration,
                                    source=source, failed=failed))

    for i, x in enumerate(design.points):
        evaluate(x, i, "nolh")

    def reevaluate():
        good = [r for r in records if not r.failed]
        if not good:
            return
        zs = objective(np.array([r.y for r in good]), kde_bandwidth)
        for rec, z in zip(good, zs):
            rec.z = float(z)

    reevaluate()
    surrogate = GaussianProcess(d=d)
    for n in range(k_init, n_total):
        good = [r for r in records if not r.failed]
        refit = ((n - k_init) % refit_every == 0)
        if n < len(replay):
            # replayed acquisition: keep the surrogate state in lockstep
            # without re-running the search
            if refit and len(good) >= 2:
                surrogate.condition(
                    _unit(np.array([r.x for r in good]), ranges),
                    np.array([r.z for r in good]))
                surrogate.fit_hyperparameters()
            x_next = replay[n].x
        elif len(good) < 2:
            rng = substream(seed, "doe", "fallback", n)
            x_next = _from_unit(rng.random(d), ranges)
        else:
            x_arr = np.array([r.x for r in good])
            z_arr = np.array([r.z for r in good])
            x_next, surrogate = bo_step(x_arr, z_arr, ranges, seed=seed,
                                        surrogate=surrogate, kappa=kappa,
                                        refit=refit)
        evaluate(x_next, n, "acquisition")
        reevaluate()
    return records


def write_doe_log(records, path, factor_names):
    """CSV log: iter,source,<factor columns>,basin,objective."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "source"] + list(factor_names)
                        + ["basin", "objective"])
        for rec in records:
            writer.writerow([rec.iteration, rec.source]
                            + [f"{v:.17g}" for v in rec.x]
                            + [f"{rec.y:.17g}", f"{rec.z:.17g}"])


def read_doe_log(path):
    """Inverse of write_doe_log: (records, factor_names)."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = header[2:-2]
        for row in reader:
            x = np.array([float(v) for v in row[2:-2]])
            y, z = float(row[-2]), float(row[-1])
            records.append(DesignRecord(
                x=x, y=y, z=z, iteration=int(row[0]), source=row[1],
                failed=not np.isfinite(y)))
    return records, names
