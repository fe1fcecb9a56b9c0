import math

import numpy as np
import pytest

from maxgap import (BadConfig, CovSpec, DimensionMismatch, Partition,
                    argmax_indicator, dump_batch, load_batch, max_diff, sample)
from maxgap.sampling import (CHUNK, SampleBatch, chunk_rng, emax_chunk_rows,
                             stream_std_normal)

from conftest import dyadic


class TestSampleDeterminism:
    def test_threads_do_not_change_numbers(self):
        spec = CovSpec.factor(np.array([[1.0, 0.0], [0.5, 0.5], [0.2, 0.9]]))
        one = sample(spec, 5000, seed=42, n_threads=1)
        four = sample(spec, 5000, seed=42, n_threads=4)
        assert np.array_equal(one.data, four.data)

    def test_seed_changes_numbers(self):
        spec = CovSpec.explicit(np.eye(2))
        assert not np.array_equal(sample(spec, 100, seed=1).data,
                                  sample(spec, 100, seed=2).data)

    def test_chunk_prefix_stability(self):
        # Whole chunks are keyed by index, so a longer run extends a shorter
        # one without disturbing it (at chunk granularity).
        spec = CovSpec.explicit(np.eye(3))
        short = sample(spec, 2 * CHUNK, seed=7)
        long = sample(spec, 3 * CHUNK, seed=7)
        assert np.array_equal(short.data, long.data[: 2 * CHUNK])

    def test_metadata(self):
        spec = CovSpec.explicit(np.eye(2))
        batch = sample(spec, 10, seed=3)
        assert batch.n_rep == 10
        assert batch.p == 2
        assert batch.seed == 3
        assert batch.spec_hash == spec.content_hash()
        assert not batch.data.flags.writeable

    def test_seed_validation(self):
        spec = CovSpec.explicit(np.eye(2))
        with pytest.raises(BadConfig):
            sample(spec, 10, seed=-1)
        with pytest.raises(BadConfig):
            sample(spec, 10, seed=2 ** 64)

    def test_bad_n_rep(self):
        spec = CovSpec.explicit(np.eye(2))
        with pytest.raises(BadConfig):
            sample(spec, 0, seed=1)


class TestSampleMoments:
    def test_mean_and_sd(self):
        spec = CovSpec.factor(np.array([[math.sqrt(2.0)]]), mu=[5.0])
        batch = sample(spec, 10 ** 6, seed=123)
        x = batch.data[:, 0]
        assert x.mean() == pytest.approx(5.0, abs=0.004)
        assert x.std(ddof=1) == pytest.approx(math.sqrt(2.0), abs=0.01)

    def test_correlation(self):
        rho = 0.7
        spec = CovSpec.explicit(np.array([[1.0, rho], [rho, 1.0]]))
        batch = sample(spec, 200000, seed=9)
        got = np.corrcoef(batch.data.T)[0, 1]
        assert got == pytest.approx(rho, abs=0.01)

    def test_degenerate_pair_identical(self):
        # A duplicated factor row yields bitwise identical columns.
        spec = CovSpec.factor(np.array([[1.0], [1.0]]))
        batch = sample(spec, 4096, seed=11)
        assert np.array_equal(batch.data[:, 0], batch.data[:, 1])


class TestStreamHelpers:
    def test_stream_matches_chunk_rng(self):
        chunks = list(stream_std_normal(seed=5, n=2100, r=3, rows_per_chunk=1024))
        offsets = [off for off, _ in chunks]
        assert offsets == [0, 1024, 2048]
        assert chunks[-1][1].shape == (52, 3)
        direct = chunk_rng(5, 1).standard_normal((1024, 3))
        assert np.array_equal(chunks[1][1], direct)

    def test_emax_chunk_rows_bounds(self):
        assert emax_chunk_rows(1) == 4096
        assert emax_chunk_rows(10 ** 9) == 256
        r = 977
        rows = emax_chunk_rows(r)
        assert 256 <= rows <= 4096
        assert rows & (rows - 1) == 0


class TestMaxDiff:
    def test_known_values(self):
        spec = CovSpec.explicit(np.eye(4))
        batch = sample(spec, 256, seed=2)
        part = Partition.split(4, 2)
        diff = max_diff(batch, part)
        manual = batch.data[:, 2:].max(axis=1) - batch.data[:, :2].max(axis=1)
        assert np.array_equal(diff.values, manual)
        assert diff.n_rep == 256
        assert diff.mean == pytest.approx(manual.mean())
        assert diff.sd == pytest.approx(manual.std(ddof=1))

    def test_shift_invariance_exact(self):
        # A common mean shift on a dyadic lattice cancels exactly in the gap.
        rng = np.random.default_rng(0)
        base = dyadic(rng.standard_normal((500, 4)))
        part = Partition.split(4, 2)
        plain = SampleBatch(500, 4, base, seed=21, spec_hash="x")
        shifted = SampleBatch(500, 4, base + 0.375, seed=21, spec_hash="x")
        assert np.array_equal(max_diff(plain, part).values,
                              max_diff(shifted, part).values)

    def test_dimension_checked(self):
        spec = CovSpec.explicit(np.eye(3))
        batch = sample(spec, 10, seed=1)
        with pytest.raises(DimensionMismatch):
            max_diff(batch, Partition.split(4, 2))

    def test_sd_zero_for_single_row(self):
        spec = CovSpec.explicit(np.eye(2))
        batch = sample(spec, 1, seed=1)
        diff = max_diff(batch, Partition.split(2, 1))
        assert diff.sd == 0.0


class TestArgmaxIndicator:
    def test_iid_uniform_winner(self):
        spec = CovSpec.explicit(np.eye(4))
        batch = sample(spec, 200000, seed=31)
        for j in range(4):
            share = argmax_indicator(batch, [j]).mean()
            assert share == pytest.approx(0.25, abs=0.005)

    def test_subset_additivity(self):
        spec = CovSpec.explicit(np.eye(3))
        batch = sample(spec, 5000, seed=5)
        total = sum(argmax_indicator(batch, [j]) for j in range(3))
        assert np.array_equal(total, np.ones(5000))

    def test_tie_goes_to_lowest_index(self):
        spec = CovSpec.factor(np.array([[1.0], [1.0]]))
        batch = sample(spec, 2048, seed=8)
        assert argmax_indicator(batch, [0]).mean() == 1.0
        assert argmax_indicator(batch, [1]).mean() == 0.0

    def test_validation(self):
        spec = CovSpec.explicit(np.eye(2))
        batch = sample(spec, 10, seed=1)
        with pytest.raises(BadConfig):
            argmax_indicator(batch, [])
        with pytest.raises(DimensionMismatch):
            argmax_indicator(batch, [2])


class TestDumpLoad:
    def test_roundtrip(self, tmp_path):
        spec = CovSpec.factor(np.array([[1.0, 0.0], [0.3, 0.4]]), mu=[0.0, 1.0])
        batch = sample(spec, 300, seed=77)
        path = str(tmp_path / "batch.f64")
        dump_batch(batch, path)
        back = load_batch(path)
        assert np.array_equal(back.data, batch.data)
        assert back.seed == batch.seed
        assert back.spec_hash == batch.spec_hash
        assert back.rng_method == batch.rng_method

    def test_truncated_payload_rejected(self, tmp_path):
        spec = CovSpec.explicit(np.eye(2))
        batch = sample(spec, 50, seed=1)
        path = str(tmp_path / "batch.f64")
        dump_batch(batch, path)
        raw = open(path, "rb").read()
        with open(path, "wb") as fh:
            fh.write(raw[:-8])
        with pytest.raises(Exception):
            load_batch(path)
