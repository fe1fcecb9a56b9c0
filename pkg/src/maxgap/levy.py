"""Concentration-function estimation, density curves, and expected maxima.

The concentration value of a sample at half-width eps is estimated by
scanning a fixed grid of centers t (grid endpoints are the sample min and
max, both included) and taking the largest empirical probability of the
closed interval [t - eps, t + eps].  The grid scan is mildly downward biased;
an exact sliding-interval maximizer is available behind ``exact=True`` for
oracle comparisons.

Expected maxima are streamed in chunks over the same counter-based child
streams as the sampler.  Per-replicate values are computed one coordinate at
a time, so the value a coordinate contributes never depends on which other
coordinates are requested; together with fixed-order reduction this makes
estimates under a common seed exactly monotone in the subset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cov import CovSpec
from .errors import BadConfig, DegenerateSample, EmptySample, EmptySubset
from .sampling import DiffSample, emax_chunk_rows, sampling_factor, stream_std_normal

DEFAULT_GRID = 1000
DEFAULT_MC = 200_000


@dataclass(frozen=True)
class LevyEstimate:
    epsilon: float
    value: float
    argmax_t: float
    grid_points: int
    n_rep: int
    se_hint: float


@dataclass(frozen=True)
class DensityCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    normalized: bool


@dataclass(frozen=True)
class ExpectedMax:
    subset: tuple[int, ...]
    value: float
    n_mc: int
    standardized: bool
    se: float


def _as_values(x) -> np.ndarray:
    if isinstance(x, DiffSample):
        return x.values
    return np.asarray(x, dtype=float).reshape(-1)


def _scan(values: np.ndarray, epsilon: float, grid_points: int) -> tuple[float, float, int]:
    """Best count over the center grid; returns (value, argmax_t, n)."""
    n = values.shape[0]
    v = np.sort(values)
    grid = np.linspace(v[0], v[-1], grid_points)
    counts = (np.searchsorted(v, grid + epsilon, side="right")
              - np.searchsorted(v, grid - epsilon, side="left"))
    k = int(np.argmax(counts))
    return counts[k] / n, float(grid[k]), n


def _scan_exact(values: np.ndarray, epsilon: float) -> tuple[float, float, int]:
    """Exact supremum: the optimal window can start at a data point."""
    n = values.shape[0]
    v = np.sort(values)
    counts = np.searchsorted(v, v + 2.0 * epsilon, side="right") - np.arange(n)
    k = int(np.argmax(counts))
    return counts[k] / n, float(v[k] + epsilon), n


def levy_hat_single(values, epsilon: float, grid_points: int = DEFAULT_GRID,
                    exact: bool = False) -> LevyEstimate:
    """Concentration estimate for a raw sample vector."""
    values = _as_values(values)
    if values.shape[0] == 0:
        raise EmptySample("cannot estimate concentration of an empty sample")
    if not epsilon > 0.0:
        raise BadConfig(f"epsilon must be positive, got {epsilon}")
    if grid_points < 1:
        raise BadConfig(f"grid_points must be positive, got {grid_points}")
    if exact:
        value, t, n = _scan_exact(values, epsilon)
    else:
        value, t, n = _scan(values, epsilon, grid_points)
    se = float(np.sqrt(value * (1.0 - value) / n))
    return LevyEstimate(epsilon=float(epsilon), value=float(value), argmax_t=t,
                        grid_points=grid_points, n_rep=n, se_hint=se)


def levy_hat(diffs: DiffSample, epsilon: float, grid_points: int = DEFAULT_GRID,
             exact: bool = False) -> LevyEstimate:
    """Concentration estimate for a max-difference sample."""
    return levy_hat_single(diffs.values, epsilon, grid_points, exact)


def levy_curve(diffs, epsilons, grid_points: int = DEFAULT_GRID) -> list[LevyEstimate]:
    """Estimates for several half-widths over one common center grid.

    Sharing the grid makes the curve nondecreasing in eps by construction.
    """
    values = _as_values(diffs)
    if values.shape[0] == 0:
        raise EmptySample("cannot estimate concentration of an empty sample")
    eps = [float(e) for e in epsilons]
    if not eps:
        raise BadConfig("need at least one epsilon")
    if any(e <= 0.0 for e in eps):
        raise BadConfig("epsilons must be strictly positive")
    if any(b < a for a, b in zip(eps, eps[1:])):
        raise BadConfig("epsilons must be sorted ascending")
    n = values.shape[0]
    v = np.sort(values)
    grid = np.linspace(v[0], v[-1], grid_points)
    out = []
    for e in eps:
        counts = (np.searchsorted(v, grid + e, side="right")
                  - np.searchsorted(v, grid - e, side="left"))
        k = int(np.argmax(counts))
        value = counts[k] / n
        out.append(LevyEstimate(epsilon=e, value=float(value), argmax_t=float(grid[k]),
                                grid_points=grid_points, n_rep=n,
                                se_hint=float(np.sqrt(value * (1.0 - value) / n))))
    return out


def density_curve(diffs, normalize: bool = False, grid_points: int = 512) -> DensityCurve:
    """Gaussian kernel density with bandwidth 1.06 * sd * n^(-1/5).

    With ``normalize`` the sample is centered and scaled to unit sd first.
    Constant samples have no density curve and raise DegenerateSample, which
    carries the point-mass location.
    """
    values = _as_values(diffs)
    n = values.shape[0]
    if n < 30:
        raise BadConfig(f"density estimate needs at least 30 values, got {n}")
    sd = float(values.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSample(float(values[0]))
    if normalize:
        values = (values - values.mean()) / sd
        sd = 1.0
    h = 1.06 * sd * n ** (-0.2)
    lo, hi = float(values.min()) - 4.0 * h, float(values.max()) + 4.0 * h
    grid = np.linspace(lo, hi, grid_points)
    density = np.zeros(grid_points)
    inv = 1.0 / h
    norm = 1.0 / (n * h * np.sqrt(2.0 * np.pi))
    step = max(1, 8_000_000 // grid_points)
    for s in range(0, n, step):
        u = (grid[None, :] - values[s:s + step, None]) * inv
        density += norm * np.exp(-0.5 * u * u).sum(axis=0)
    density.flags.writeable = False
    grid.flags.writeable = False
    return DensityCurve(grid=grid, density=density, bandwidth=float(h),
                        normalized=bool(normalize))


def _check_subset(subset, p: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(i) for i in subset)), dtype=np.intp)
    if idx.size == 0:
        raise EmptySubset("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= p:
        raise BadConfig(f"subset indices must lie in [0, {p})")
    return idx


def expected_max_many(spec: CovSpec, subsets, n_mc: int, seed: int,
                      mode: str = "abs_std") -> list[tuple[float, float]]:
    """Stream one Monte Carlo pass and reduce several subsets at once.

    mode "abs_std": max over the subset of |X - mu| / sd.
    mode "abs_raw": max over the subset of |X - mu|.
    mode "signed":  max over the subset of X itself.

    Returns one (mean, se) pair per subset.  Subsets sharing coordinates
    share the per-replicate coordinate values bit for bit.
    """
    if n_mc < 1:
        raise BadConfig(f"n_mc must be positive, got {n_mc}")
    if mode not in ("abs_std", "abs_raw", "signed"):
        raise BadConfig(f"unknown expected-max mode {mode!r}")
    idx_sets = [_check_subset(s, spec.p) for s in subsets]
    union = np.unique(np.concatenate(idx_sets)) if idx_sets else np.empty(0, np.intp)
    pos = {int(c): j for j, c in enumerate(union)}
    ell = sampling_factor(spec)
    r = ell.shape[1]
    sds = spec.sds
    mu = spec.mu
    sums = [0.0] * len(idx_sets)
    sumsq = [0.0] * len(idx_sets)
    for _, z in stream_std_normal(seed, n_mc, r, emax_chunk_rows(r)):
        vals = np.empty((z.shape[0], union.size))
        for j, c in enumerate(union):
            x = z @ ell[c]
            if mode == "signed":
                vals[:, j] = x + mu[c]
            elif mode == "abs_std":
                vals[:, j] = np.abs(x) / sds[c]
            else:
                vals[:, j] = np.abs(x)
        for i, idx in enumerate(idx_sets):
            m = vals[:, [pos[int(c)] for c in idx]].max(axis=1)
            sums[i] += float(np.sum(m))
            sumsq[i] += float(np.sum(m * m))
    out = []
    for i in range(len(idx_sets)):
        mean = sums[i] / n_mc
        if n_mc > 1:
            var = max(sumsq[i] - n_mc * mean * mean, 0.0) / (n_mc - 1)
            se = float(np.sqrt(var / n_mc))
        else:
            se = float("nan")
        out.append((mean, se))
    return out


def expected_max_abs(spec: CovSpec, subset, n_mc: int = DEFAULT_MC, seed: int = 0,
                     standardized: bool = True) -> ExpectedMax:
    """Monte Carlo E[max over subset of |X - mu| (optionally / sd)]."""
    mode = "abs_std" if standardized else "abs_raw"
    (value, se), = expected_max_many(spec, [subset], n_mc, seed, mode)
    return ExpectedMax(subset=tuple(int(i) for i in subset), value=value,
                       n_mc=n_mc, standardized=standardized, se=se)


def expected_max_signed(spec: CovSpec, subset, n_mc: int = DEFAULT_MC, seed: int = 0) -> float:
    """Monte Carlo E[max over subset of X], uncentered."""
    (value, _), = expected_max_many(spec, [subset], n_mc, seed, "signed")
    return value
