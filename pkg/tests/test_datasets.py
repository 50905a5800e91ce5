import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import standardize_py
from swcoreset.datasets import (SKIN_ENV, Component, DatasetSpec, build_noisy_skin_stream, build_stream, densify,
                                gen_gaussian_mixture, gen_lowerbound_stream, load_skin_dataset, lowerbound_length,
                                outlier_synthetic_spec, skin_path)


class TestGaussianMixture:
    def test_outlier_synthetic_lengths(self):
        spec = outlier_synthetic_spec()
        X, W = build_stream(spec, np.random.default_rng(0))
        assert X.shape == (200_003, 2) and W == 200_001
        assert np.all(np.abs(X[:2]) > 90_000) and np.all(X[-1] > 90_000)
        assert np.all(np.abs(X[2:-1]) < 100)

    def test_single_prepend(self, rng):
        spec = DatasetSpec(prepend=[Component([1.0, 2.0], 1.0, 1)])
        assert gen_gaussian_mixture(spec, rng).shape == (1, 2)

    def test_clt(self, rng):
        spec = DatasetSpec(components=[Component([3.0, -7.0, 0.5], 2.0, 10_000)])
        X = gen_gaussian_mixture(spec, rng)
        assert np.all(np.abs(X.mean(axis=0) - [3.0, -7.0, 0.5]) <= 5 * 2.0 / 100)

    def test_order_without_shuffle(self, rng):
        spec = DatasetSpec(components=[Component([-100], 1, 5), Component([100], 1, 5)],
                           prepend=[Component([1000], 1, 1)], shuffle=False)
        X = gen_gaussian_mixture(spec, rng)[:, 0]
        assert X[0] > 900 and np.all(X[1:6] < 0) and np.all(X[6:] > 0)

    def test_deterministic(self):
        spec = outlier_synthetic_spec(0.01)
        a, _ = build_stream(spec, np.random.default_rng(4))
        b, _ = build_stream(spec, np.random.default_rng(4))
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("bad", [dict(stddev=0.0, count=1), dict(stddev=1.0, count=-1)])
    def test_invalid_component(self, bad):
        with pytest.raises(ValueError):
            Component([0.0], **bad)

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            DatasetSpec(kind="nope")
        with pytest.raises(ValueError):
            DatasetSpec(kind="lowerbound", tau=1)
        with pytest.raises(ValueError):
            gen_gaussian_mixture(DatasetSpec(components=[Component([0, 0], 1, 2), Component([0], 1, 2)]),
                                 np.random.default_rng())

    def test_json_roundtrip(self, tmp_path):
        spec = outlier_synthetic_spec(0.5)
        path = tmp_path / "s.json"
        path.write_text(json.dumps(spec.to_json()))
        assert DatasetSpec.from_json(str(path)) == spec


class TestSkin:
    def test_fixture_standardized(self, tmp_path):
        rows = [[74, 85, 123, 1], [73, 84, 122, 1], [250, 10, 3, 2]]
        path = tmp_path / "skin.txt"
        path.write_text("\n".join("\t".join(map(str, r)) for r in rows) + "\n")
        X = load_skin_dataset(path)
        np.testing.assert_allclose(X, standardize_py(rows), rtol=1e-12, atol=1e-12)
        assert np.all(np.abs(X.mean(axis=0)) < 1e-9) and np.all(np.abs(X.std(axis=0) - 1) < 1e-9)

    def test_wrong_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2,3\n4,5,6\n")
        with pytest.raises(ValueError):
            load_skin_dataset(path)

    def test_unparseable(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d\n")
        with pytest.raises(ValueError):
            load_skin_dataset(path)

    def test_noisy_stream_lengths(self, rng):
        pts = rng.normal(size=(245_057, 4))
        X, W = build_noisy_skin_stream(pts, rng)
        assert len(X) == 245_260 and W == 245_258
        assert np.array_equal(X[2:2 + len(pts)], pts)  # the window starts right after the two prepends

    def test_augmented_points_near_means(self):
        means = np.array([[-10, 10, 0, 0]] * 100 + [[10, -10, 0, 0]] * 100 + [[500, 500, 0, 0]])
        good = 0
        for seed in range(100):
            X, _ = build_noisy_skin_stream(np.zeros((3, 4)), np.random.default_rng(seed))
            good += np.all(np.linalg.norm(X[-201:] - means, axis=1) <= 6)
        assert good >= 99

    def test_missing_file(self, monkeypatch):
        monkeypatch.delenv(SKIN_ENV, raising=False)
        assert skin_path() is None
        with pytest.raises(FileNotFoundError):
            build_stream(DatasetSpec(kind="skin_csv"), np.random.default_rng())


class TestLowerBound:
    def test_examples(self):
        s, dim = gen_lowerbound_stream(3, 1, 100)
        assert len(s) == 3 and dim == 6
        s, dim = gen_lowerbound_stream(3, 2, 100)
        assert len(s) == 303 and dim == 12

    @given(st.integers(1, 6), st.integers(1, 4), st.integers(2, 6))
    def test_structure(self, d, g, tau):
        s, dim = gen_lowerbound_stream(d, g, tau)
        assert len(s) == lowerbound_length(d, g, tau) == d * sum(tau**i for i in range(g))
        X = densify(s, dim)
        assert np.all(np.linalg.norm(X, axis=1) == 1.0)
        pos = 0
        for i in range(g):
            block = s[pos: pos + d * tau**i]
            assert np.all((block >= 2 * i * d) & (block < 2 * i * d + d))
            # each unit vector repeated tau**i times consecutively
            assert np.array_equal(block, np.repeat(np.arange(2 * i * d, 2 * i * d + d), tau**i))
            pos += d * tau**i

    def test_length_budget(self):
        with pytest.raises(ValueError):
            gen_lowerbound_stream(20, 4, 100, max_length=1000)

    def test_build_stream(self, rng):
        X, W = build_stream(DatasetSpec(kind="lowerbound", d_prime=2, gamma_lb=2, tau=3), rng)
        assert X.shape == (8, 8) and W == 8
