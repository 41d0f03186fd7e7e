from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from priormatch import InvalidInputError, NoSteadyStateError
from priormatch.datagen import (
    FLAGSHIP_TRANSITION,
    DEFAULT_EMISSION,
    DEFAULT_SIZES,
    Dataset,
    EmissionSpec,
    generate,
    load_csv,
    sample_emissions,
    sample_labels_iid,
    sample_labels_markov,
    save_csv,
    split_dataset,
)

T_FULL = sum(DEFAULT_SIZES)


def transition_chi2(y, P):
    """Pearson statistic of observed transitions against the rows of P.

    Two rows with one free cell each give 2 degrees of freedom, whose
    survival function is exp(-stat / 2).
    """
    counts = np.zeros((2, 2))
    np.add.at(counts, (y[:-1], y[1:]), 1)
    expected = counts.sum(axis=1, keepdims=True) * np.asarray(P)
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return stat, math.exp(-stat / 2)


class TestLabels:
    def test_iid_degenerate(self):
        assert not sample_labels_iid([1, 0], 500, seed=0).any()

    def test_iid_frequency(self):
        y = sample_labels_iid([0.692, 0.308], T_FULL, seed=1)
        assert abs(y.mean() - 0.308) <= 0.01

    def test_iid_deterministic(self):
        np.testing.assert_array_equal(sample_labels_iid([0.3, 0.7], 100, 9), sample_labels_iid([0.3, 0.7], 100, 9))

    def test_markov_pair_frequencies(self):
        y = sample_labels_markov(FLAGSHIP_TRANSITION, T_FULL, seed=2)
        pairs = np.zeros((2, 2))
        np.add.at(pairs, (y[:-1], y[1:]), 1)
        np.testing.assert_allclose(pairs / (len(y) - 1), [[0.4154, 0.2769], [0.2769, 0.0308]], atol=0.01)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_markov_goodness_of_fit(self, seed):
        y = sample_labels_markov(FLAGSHIP_TRANSITION, T_FULL, seed=seed)
        _, pvalue = transition_chi2(y, FLAGSHIP_TRANSITION)
        assert pvalue > 0.01

    def test_markov_no_steady_state(self):
        with pytest.raises(NoSteadyStateError):
            sample_labels_markov(np.eye(2), 100, seed=0)

    def test_forced_alternation(self):
        y = sample_labels_markov([[0, 1], [1, 0]], 8, seed=0, initial=0)
        np.testing.assert_array_equal(y, [0, 1, 0, 1, 0, 1, 0, 1])

    def test_bad_initial(self):
        with pytest.raises(InvalidInputError):
            sample_labels_markov(FLAGSHIP_TRANSITION, 8, seed=0, initial=2)

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1))
    def test_markov_deterministic(self, seed):
        a = sample_labels_markov(FLAGSHIP_TRANSITION, 200, seed)
        np.testing.assert_array_equal(a, sample_labels_markov(FLAGSHIP_TRANSITION, 200, seed))


class TestEmissions:
    def test_tiny_variance_hits_means(self):
        spec = EmissionSpec((1.0, 2.0), (-3.0, 4.0), 1e-30)
        x = sample_emissions([0, 1, 1, 0], spec, seed=0)
        np.testing.assert_allclose(x, [[1, 2], [-3, 4], [-3, 4], [1, 2]], atol=1e-12)

    def test_moments(self):
        y = sample_labels_iid([0.5, 0.5], T_FULL, seed=3)
        x = sample_emissions(y, DEFAULT_EMISSION, seed=4)
        for k, mu in enumerate((DEFAULT_EMISSION.mu0, DEFAULT_EMISSION.mu1)):
            xk = x[y == k]
            np.testing.assert_allclose(xk.mean(axis=0), mu, atol=0.05)
            np.testing.assert_allclose(np.cov(xk.T), 0.4 * np.eye(2), atol=0.02)

    def test_non_positive_variance(self):
        with pytest.raises(InvalidInputError):
            EmissionSpec((0, 0), (1, 1), 0.0)

    def test_empty_labels(self):
        with pytest.raises(InvalidInputError):
            sample_emissions([], DEFAULT_EMISSION, seed=0)


class TestSplits:
    def test_small(self):
        d = split_dataset(Dataset(np.zeros((10, 2)), np.zeros(10)), (8, 1, 1))
        assert d.splits == {"train": (0, 8), "val": (8, 9), "test": (9, 10)}

    def test_size_mismatch(self):
        with pytest.raises(InvalidInputError):
            split_dataset(Dataset(np.zeros((10, 2))), (8, 1, 2))

    def test_default_sizes(self):
        d = generate(T_FULL, 0, transition=FLAGSHIP_TRANSITION, sizes=DEFAULT_SIZES)
        assert {k: hi - lo for k, (lo, hi) in d.splits.items()} == {"train": 50000, "val": 5000, "test": 5000}

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_ranges_cover_and_are_disjoint(self, a, b, c):
        T = a + b + c
        if T == 0:
            return
        d = split_dataset(Dataset(np.zeros((T, 2))), (a, b, c))
        covered = np.concatenate([np.arange(lo, hi) for lo, hi in d.splits.values()])
        np.testing.assert_array_equal(covered, np.arange(T))


class TestGenerateAndCsv:
    def test_needs_one_label_source(self):
        with pytest.raises(InvalidInputError):
            generate(10, 0)
        with pytest.raises(InvalidInputError):
            generate(10, 0, transition=FLAGSHIP_TRANSITION, unigram=[0.5, 0.5])

    def test_deterministic(self):
        a = generate(300, 7, transition=FLAGSHIP_TRANSITION, sizes=(200, 50, 50))
        b = generate(300, 7, transition=FLAGSHIP_TRANSITION, sizes=(200, 50, 50))
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_round_trip_is_exact(self, tmp_path):
        d = generate(120, 3, unigram=[0.6, 0.4], sizes=(100, 10, 10))
        save_csv(d, tmp_path / "d.csv")
        back, contiguous = load_csv(tmp_path / "d.csv")
        assert contiguous
        np.testing.assert_array_equal(back.inputs, d.inputs)
        np.testing.assert_array_equal(back.labels, d.labels)
        assert back.splits == d.splits

    def test_csv_bytes_stable(self, tmp_path):
        d = generate(50, 3, transition=FLAGSHIP_TRANSITION, sizes=(40, 5, 5))
        save_csv(d, tmp_path / "a.csv")
        save_csv(generate(50, 3, transition=FLAGSHIP_TRANSITION, sizes=(40, 5, 5)), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_detects_shuffled_splits(self, tmp_path):
        f = tmp_path / "s.csv"
        f.write_text("x_a,x_b,label,split\n0,0,0,train\n1,1,1,test\n2,2,0,train\n")
        _, contiguous = load_csv(f)
        assert not contiguous

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path):
        f = tmp_path / "h.csv"
        f.write_text("a,b\n1,2\n")
        with pytest.raises(InvalidInputError):
            load_csv(f)
