import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from kerrcheck import sampler as S
from kerrcheck.kerr_metric import BLPoint

SMALL = S.SampleSpec(n_points=64, n_transforms=40)


class TestSpec:
    def test_defaults(self):
        spec = S.SampleSpec()
        assert spec.n_points == 500 and len(spec.params()) == 12

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"r_range": (1.0, 20.0)},
            {"theta_margin": 0.0},
            {"theta_margin": math.pi / 4},
            {"a_over_m": (1.0,)},
            {"m": (0.0,)},
            {"n_points": 0},
        ],
    )
    def test_rejected(self, kwargs):
        with pytest.raises(ValueError):
            S.SampleSpec(**kwargs)


class TestLattice:
    def test_generator_coprime(self):
        for n in (64, 97, 500, 1000):
            z = S._korobov_generator(n, 5)
            assert z[0] == 1
            assert all(math.gcd(v, n) == 1 for v in z)

    def test_projections_are_full_grids(self):
        # each coordinate visits every multiple of 1/n exactly once
        u = S.lattice(500, 4, 3)
        for k in range(4):
            assert_allclose(np.sort(u[:, k]), np.arange(500) / 500, atol=0)

    def test_seed_changes_shift_only(self):
        a, b = S.lattice(97, 3, 0), S.lattice(97, 3, 1)
        assert not np.array_equal(a, b)
        diff = np.round((b - a) * 97) % 97
        assert np.all(diff == diff[0])


class TestPoints:
    def test_deterministic(self):
        first = S.sample_points(SMALL)
        second = S.sample_points(SMALL)
        assert first == second
        assert all(isinstance(p, BLPoint) for _, p in first[:3])

    def test_count_per_pair(self):
        pts = S.sample_points(SMALL)
        assert len(pts) == 64 * 12
        counts = {}
        for params, _ in pts:
            counts[(params.a, params.m)] = counts.get((params.a, params.m), 0) + 1
        assert set(counts.values()) == {64}

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=16, max_value=300))
    def test_bounds(self, seed, n):
        spec = S.SampleSpec(seed=seed, n_points=n)
        for params in spec.params():
            x = S.map_points(spec, params)
            assert np.all(x[:, 1] > 1.01 * params.r_plus)
            assert np.all(x[:, 1] <= 20 * params.m)
            assert np.all((x[:, 2] > spec.theta_margin) & (x[:, 2] < math.pi - spec.theta_margin))
            assert np.all((x[:, 3] >= 0) & (x[:, 3] < 2 * math.pi))

    def test_spread(self):
        x = S.map_points(S.SampleSpec(), S.SampleSpec().params()[0])
        for k in (1, 2, 3):
            assert x[:, k].std() > 0.2 * (x[:, k].max() - x[:, k].min())

    def test_empty_radial_range(self):
        spec = S.SampleSpec(r_range=(5.0, 3.0))
        with pytest.raises(ValueError):
            S.map_points(spec, spec.params()[0])


class TestTransforms:
    def test_deterministic(self):
        a = S.sample_transforms(SMALL)
        b = S.sample_transforms(SMALL)
        assert [(x.f, x.fb, x.lam) for x in a] == [(x.f, x.fb, x.lam) for x in b]

    def test_bounds(self):
        for x in S.sample_transforms(S.SampleSpec(n_transforms=100)):
            assert math.hypot(*x.f) <= 0.3 and math.hypot(*x.fb) <= 0.3
            assert 0.5 <= x.lam <= 2.0

    def test_nondegenerate(self):
        xs = S.sample_transforms(S.SampleSpec())
        assert len(xs) == 100
        assert np.var([x.lam for x in xs]) > 0

    def test_count_zero(self):
        assert S.sample_transforms(S.SampleSpec(n_transforms=0)) == []


def test_analytic_fields_catalogue():
    fields = S.analytic_fields()
    assert len(fields) >= 5 and all(callable(f) for f in fields.values())
