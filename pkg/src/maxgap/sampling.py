"""Deterministic Gaussian batch sampling and max-difference statistics.

Randomness contract: replicate rows are produced in fixed chunks of
``CHUNK`` rows, and chunk k draws from its own counter-based stream
(Philox keyed by (seed, k)).  Chunk streams are stateless and independent of
execution order, so serial and thread-parallel runs produce bit-identical
batches, and a batch is a prefix of any longer batch with the same seed.

The normal generation method is numpy's ziggurat, fixed per build and
recorded on every batch.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cov import CovSpec, Partition, sqrt_factor
from .errors import BadConfig, DimensionMismatch, EmptySample

CHUNK = 1024
RNG_METHOD = "philox4x64-ziggurat"
_MASK64 = (1 << 64) - 1


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Stateless child stream for one chunk: Philox keyed by (seed, chunk)."""
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, chunk_index]))


@dataclass(frozen=True)
class SampleBatch:
    """n_rep x p matrix of draws plus the provenance needed to regenerate it."""

    n_rep: int
    p: int
    data: np.ndarray
    seed: int
    spec_hash: str
    rng_method: str = RNG_METHOD


@dataclass(frozen=True)
class DiffSample:
    """Per-replicate difference of block maxima, M_B - M_A."""

    values: np.ndarray
    mean: float
    sd: float
    part: Partition

    @property
    def n_rep(self) -> int:
        return int(self.values.shape[0])


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise BadConfig(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def sampling_factor(spec: CovSpec) -> np.ndarray:
    """p x r map L with L L^T equal to the covariance (r = numerical rank)."""
    if spec.gamma is not None:
        return spec.gamma
    return sqrt_factor(spec.sigma)


def sample(spec: CovSpec, n_rep: int, seed: int, n_threads: int = 1) -> SampleBatch:
    """Draw n_rep independent replicates of X = L Z + mu.

    Deterministic given (spec, n_rep, seed); the thread count only changes
    who fills which chunk, never the numbers.
    """
    if n_rep < 1:
        raise BadConfig(f"n_rep must be positive, got {n_rep}")
    seed = _check_seed(seed)
    ell = sampling_factor(spec)
    p, r = ell.shape
    lt = np.ascontiguousarray(ell.T)
    mu = spec.mu
    data = np.empty((n_rep, p))
    n_chunks = (n_rep + CHUNK - 1) // CHUNK

    def fill(k: int) -> None:
        lo, hi = k * CHUNK, min((k + 1) * CHUNK, n_rep)
        z = np.empty((hi - lo, r))
        chunk_rng(seed, k).standard_normal(out=z)
        np.matmul(z, lt, out=data[lo:hi])
        data[lo:hi] += mu

    if n_threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(fill, range(n_chunks)))
    else:
        for k in range(n_chunks):
            fill(k)
    data.flags.writeable = False
    return SampleBatch(n_rep=n_rep, p=p, data=data, seed=seed,
                       spec_hash=spec.content_hash())


def stream_std_normal(seed: int, n: int, r: int, rows_per_chunk: int):
    """Yield (row_offset, Z) chunks of standard normals, deterministically.

    Same chunk-keyed streams as :func:`sample`, with a caller-chosen chunk
    height (must itself be a pure function of the model for reproducibility).
    """
    seed = _check_seed(seed)
    k = 0
    done = 0
    while done < n:
        rows = min(rows_per_chunk, n - done)
        z = np.empty((rows, r))
        chunk_rng(seed, k).standard_normal(out=z)
        yield done, z
        done += rows
        k += 1


def emax_chunk_rows(r: int) -> int:
    """Chunk height for streaming expected-max passes.

    Chosen so a chunk of draws stays cache-friendly for column sweeps; a pure
    function of r, hence deterministic for a given model.
    """
    target = 4_000_000 // (8 * max(r, 1))
    if target < 256:
        return 256
    return min(1 << int(math.log2(target)), 4096)


def max_diff(batch: SampleBatch, part: Partition) -> DiffSample:
    """Per-replicate M_B - M_A."""
    if part.p != batch.p:
        raise DimensionMismatch(f"partition over {part.p} coordinates, batch has {batch.p}")
    values = batch.data[:, part.b_idx].max(axis=1) - batch.data[:, part.a_idx].max(axis=1)
    values.flags.writeable = False
    sd = float(values.std(ddof=1)) if values.shape[0] > 1 else 0.0
    return DiffSample(values=values, mean=float(values.mean()), sd=sd, part=part)


def argmax_indicator(batch: SampleBatch, subset) -> np.ndarray:
    """1.0 where the row argmax (ties to the lowest index) lies in subset."""
    subset = np.asarray(sorted(set(int(i) for i in subset)), dtype=np.intp)
    if subset.size == 0:
        raise BadConfig("subset must be nonempty")
    if subset[0] < 0 or subset[-1] >= batch.p:
        raise DimensionMismatch(f"subset indices must lie in [0, {batch.p})")
    winners = np.argmax(batch.data, axis=1)
    return np.isin(winners, subset).astype(float)


def dump_batch(batch: SampleBatch, path: str) -> None:
    """Write row-major float64 binary plus a JSON sidecar."""
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(batch.data).tobytes())
    meta = {
        "n_rep": batch.n_rep,
        "p": batch.p,
        "seed": batch.seed,
        "spec_hash": batch.spec_hash,
        "rng_method": batch.rng_method,
    }
    with open(path + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_batch(path: str) -> SampleBatch:
    with open(path + ".json") as fh:
        meta = json.load(fh)
    n_rep, p = int(meta["n_rep"]), int(meta["p"])
    raw = np.fromfile(path, dtype=np.float64)
    if raw.size != n_rep * p:
        raise EmptySample(f"expected {n_rep * p} values in {os.path.basename(path)}, found {raw.size}")
    data = raw.reshape(n_rep, p)
    data.flags.writeable = False
    return SampleBatch(n_rep=n_rep, p=p, data=data, seed=int(meta["seed"]),
                       spec_hash=str(meta["spec_hash"]),
                       rng_method=str(meta.get("rng_method", RNG_METHOD)))
