"""Multiplier bootstrap for argmax block membership of an empirical maximum.

Given data rows xi_1..xi_n and a deterministic shift a, the observed process
is Y = n^(-1/2) sum_i (xi_i + a) (population mean taken as zero).  Bootstrap
replicates re-randomize the centered rows with iid multiplier weights:

    Xhat = n^(-1/2) sum_i [w_i (xi_i - xibar) + a]

with w either standard normal or a standardized Beta(1/2, 3/2) variable.
The probability that the argmax of Y falls inside block A is approximated by
the fraction of replicates with max over A strictly above max over B.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .cov import Partition
from .errors import (BadConfig, DimensionMismatch, ParseError,
                     SmallSampleWarning)
from .sampling import CHUNK, SampleBatch, chunk_rng

# Beta(1/2, 3/2) weight moments: mean a/(a+b), variance ab/((a+b)^2 (a+b+1)).
BETA_MEAN = 0.25
BETA_VAR = 1.0 / 16.0
MULTIPLIERS = ("gaussian", "beta")
DEFAULT_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class DataMatrix:
    """n x p observation rows plus the deterministic shift vector."""

    xi: np.ndarray
    a: np.ndarray | None = None

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float)
        if xi.ndim != 2 or xi.shape[0] < 2 or xi.shape[1] < 1:
            raise BadConfig(f"data must be n x p with n >= 2, got shape {xi.shape}")
        if not np.all(np.isfinite(xi)):
            raise BadConfig("data has non-finite entries")
        a = np.zeros(xi.shape[1]) if self.a is None else np.asarray(self.a, dtype=float).reshape(-1)
        if a.shape != (xi.shape[1],):
            raise DimensionMismatch(f"shift has length {a.shape[0]}, expected {xi.shape[1]}")
        if not np.all(np.isfinite(a)):
            raise BadConfig("shift has non-finite entries")
        xi.flags.writeable = False
        a = np.array(a)
        a.flags.writeable = False
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return int(self.xi.shape[0])

    @property
    def p(self) -> int:
        return int(self.xi.shape[1])


@dataclass(frozen=True)
class BootstrapResult:
    diffs: np.ndarray
    prob_argmax_in_a: float
    quantiles: dict
    multiplier: str
    b_reps: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "prob": self.prob_argmax_in_a,
            "quantiles": {str(q): v for q, v in self.quantiles.items()},
            "b_reps": self.b_reps,
            "multiplier": self.multiplier,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class CltRateInputs:
    """Inputs of the coupling-rate diagnostic.

    b_n is the envelope scale (at least 1), b0 the fourth-moment constant the
    suppressed prefactor depends on (carried for reporting, not used by the
    rate itself), c_ab the separation margin of the target covariance, and
    emax_s the expected standardized maximum over the bound's block S.
    """

    b_n: float
    b0: float
    n: int
    p: int
    c_ab: float
    emax_s: float

    def __post_init__(self):
        if not self.b_n >= 1.0:
            raise BadConfig(f"b_n must be at least 1, got {self.b_n}")
        if self.n < 1 or self.p < 1:
            raise BadConfig("n and p must be positive")
        if not self.c_ab > 0.0:
            raise BadConfig("c_ab must be positive")


def observed_process(data: DataMatrix) -> np.ndarray:
    """Y_j = n^(-1/2) sum_i (xi_ij + a_j)."""
    return (data.xi + data.a).sum(axis=0) / math.sqrt(data.n)


def multiplier_replicates(data: DataMatrix, b_reps: int, seed: int,
                          multiplier: str = "gaussian") -> np.ndarray:
    """B x p matrix of bootstrap replicates, deterministic per seed.

    Replicates are generated in the sampler's fixed chunks with counter-based
    child streams, so the matrix does not depend on evaluation order.
    """
    if b_reps < 1:
        raise BadConfig(f"b_reps must be positive, got {b_reps}")
    if multiplier not in MULTIPLIERS:
        raise BadConfig(f"multiplier must be one of {MULTIPLIERS}, got {multiplier!r}")
    centered = data.xi - data.xi.mean(axis=0)
    shift = math.sqrt(data.n) * data.a
    inv_sqrt_n = 1.0 / math.sqrt(data.n)
    out = np.empty((b_reps, data.p))
    n_chunks = (b_reps + CHUNK - 1) // CHUNK
    for k in range(n_chunks):
        lo, hi = k * CHUNK, min((k + 1) * CHUNK, b_reps)
        rng = chunk_rng(seed, k)
        if multiplier == "gaussian":
            w = rng.standard_normal((hi - lo, data.n))
        else:
            w = (rng.beta(0.5, 1.5, size=(hi - lo, data.n)) - BETA_MEAN) / math.sqrt(BETA_VAR)
        np.matmul(w, centered, out=out[lo:hi])
        out[lo:hi] *= inv_sqrt_n
        out[lo:hi] += shift
    out.flags.writeable = False
    return out


def argmax_prob(replicates: np.ndarray, part: Partition, quantiles=DEFAULT_QUANTILES,
                multiplier: str = "gaussian", seed: int = 0) -> BootstrapResult:
    """Fraction of replicates whose block-A maximum strictly beats block B.

    Ties at exactly zero count as not greater.  The multiplier and seed
    arguments only label the result; pass them through from the generation
    step (or use :func:`run_bootstrap`).
    """
    replicates = np.asarray(replicates, dtype=float)
    if replicates.ndim != 2:
        raise DimensionMismatch(f"replicates must be B x p, got shape {replicates.shape}")
    if part.p != replicates.shape[1]:
        raise DimensionMismatch(
            f"partition over {part.p} coordinates, replicates have {replicates.shape[1]}")
    diffs = replicates[:, part.a_idx].max(axis=1) - replicates[:, part.b_idx].max(axis=1)
    diffs.flags.writeable = False
    b = diffs.shape[0]
    prob = float(np.count_nonzero(diffs > 0.0)) / b
    qs = {float(q): float(np.quantile(diffs, q)) for q in quantiles}
    return BootstrapResult(diffs=diffs, prob_argmax_in_a=prob, quantiles=qs,
                           multiplier=multiplier, b_reps=b, seed=seed)


def run_bootstrap(data: DataMatrix, part: Partition, b_reps: int, seed: int,
                  multiplier: str = "gaussian", quantiles=DEFAULT_QUANTILES) -> BootstrapResult:
    """Generate replicates and summarize them in one step."""
    reps = multiplier_replicates(data, b_reps, seed, multiplier)
    return argmax_prob(reps, part, quantiles, multiplier=multiplier, seed=seed)


def clt_rate(inputs: CltRateInputs) -> float:
    """Coupling rate emax_s / c_ab * (b_n^2 ln(pn)^3 / n)^(1/4), modulo constant.

    Warns when b_n^2 ln(pn)^5 exceeds n: below that sample size the rate
    statement carries no information.
    """
    log_pn = math.log(inputs.p * inputs.n)
    if inputs.b_n ** 2 * log_pn ** 5 > inputs.n:
        warnings.warn(
            f"b_n^2 log^5(pn) = {inputs.b_n ** 2 * log_pn ** 5:.3g} exceeds n = {inputs.n}; "
            "rate is vacuous at this sample size", SmallSampleWarning, stacklevel=2)
    return inputs.emax_s / inputs.c_ab * (inputs.b_n ** 2 * log_pn ** 3 / inputs.n) ** 0.25


def load_csv(path: str, shift=None) -> DataMatrix:
    """Read an n x p numeric CSV (header row optional) into a DataMatrix."""
    rows: list[list[float]] = []
    width: int | None = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            parsed = []
            for colno, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    if lineno == 1 and not rows:
                        parsed = None  # header row
                        break
                    raise ParseError(f"could not parse {cell!r} as a number",
                                     row=lineno, col=colno) from None
            if parsed is None:
                continue
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise ParseError(f"expected {width} columns, found {len(parsed)}", row=lineno)
            rows.append(parsed)
    if not rows:
        raise ParseError(f"no numeric rows in {path}")
    return DataMatrix(xi=np.asarray(rows, dtype=float), a=shift)


def from_batch(batch: SampleBatch, shift=None) -> DataMatrix:
    """Adopt a sampled batch as observation rows."""
    return DataMatrix(xi=batch.data, a=shift)


def result_to_json(result: BootstrapResult, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(result.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
