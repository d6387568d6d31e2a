import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covinterp.manifold import (
    DL,
    UL,
    ArrayConfig,
    ArrayGeometry,
    SamplingSet,
    difference_set,
    scale_sampling_set,
    steering_matrix,
    steering_vector,
    ula_lattice,
)


def brute_force_differences(pos, tol=1e-9):
    # O(M^4) greedy dedup, independent of the KD-tree path.
    reps = []
    for p, q in itertools.product(pos, repeat=2):
        d = p - q
        if not any(np.linalg.norm(d - r) <= tol for r in reps):
            reps.append(d)
    return reps


class TestArrayConfig:
    def test_spacing_positive(self):
        cfg = ArrayConfig(8, 0.9)
        assert cfg.spacing == pytest.approx(0.9 / (2 * math.sin(math.pi / 3)))

    def test_aliasing_flag(self):
        assert ArrayConfig(8, 1.05).aliasing
        assert not ArrayConfig(8, 0.9).aliasing
        assert any("violated" in w for w in ArrayConfig(8, 1.05).warnings)

    @pytest.mark.parametrize("kw", [{"num_antennas": 0, "oversampling": 0.5},
                                    {"num_antennas": 4, "oversampling": 2.0},
                                    {"num_antennas": 4, "oversampling": 0.5, "carrier_ratio": 0.0},
                                    {"num_antennas": 4, "oversampling": 0.5, "theta_max": 2.0}])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValueError):
            ArrayConfig(**kw)


class TestSteering:
    def test_broadside_all_ones(self):
        assert np.allclose(steering_vector(ArrayConfig(5, 0.7), 0.0), 1.0)

    def test_endfire_half_wavelength(self):
        assert np.allclose(steering_vector(ArrayConfig(2, 1.0), 1.0), [1, -1])

    def test_dl_with_unit_ratio(self):
        a = steering_vector(ArrayConfig(4, 0.9, 0.9), 0.5, DL)
        assert np.allclose(a, np.exp(1j * np.arange(4) * math.pi * 0.5))

    def test_domain_error(self):
        with pytest.raises(ValueError):
            steering_vector(ArrayConfig(4, 0.9), 1.01)

    @given(st.floats(-1, 1), st.integers(1, 40), st.floats(0.05, 1.9))
    def test_conjugate_symmetry(self, xi, M, rho):
        cfg = ArrayConfig(M, rho)
        a = steering_vector(cfg, xi)
        assert np.allclose(steering_vector(cfg, -xi), a.conj())
        assert np.allclose(np.abs(a), 1.0)
        assert a[0] == 1

    def test_matrix_matches_vectors(self):
        cfg = ArrayConfig(6, 0.8, 0.85)
        grid = np.linspace(-1, 1, 7)
        A = steering_matrix(cfg, grid, DL)
        for j, xi in enumerate(grid):
            assert np.allclose(A[:, j], steering_vector(cfg, xi, DL))

    def test_no_grating_lobes_when_rho_below_nu(self):
        cfg = ArrayConfig(10, 0.8, 0.9)
        assert cfg.lattice_step(DL) <= 1.0


class TestLattices:
    def test_ul(self):
        assert np.allclose(ula_lattice(ArrayConfig(3, 0.9), UL).points, [0, 0.9, 1.8])

    def test_dl(self):
        assert np.allclose(ula_lattice(ArrayConfig(3, 0.9, 0.9), DL).points, [0, 1, 2])

    def test_single_antenna(self):
        assert list(ula_lattice(ArrayConfig(1, 0.5)).points) == [0.0]

    def test_dl_is_scaled_ul(self):
        cfg = ArrayConfig(7, 0.6, 0.8)
        scaled = scale_sampling_set(ula_lattice(cfg, UL), 1 / 0.8)
        assert np.allclose(scaled.points, ula_lattice(cfg, DL).points)


class TestDifferenceSet:
    @pytest.mark.parametrize("M", range(1, 65))
    def test_ula_count(self, M):
        assert len(difference_set(ArrayGeometry.ula(M, 0.9))) == 2 * M - 1

    def test_single_antenna(self):
        d = difference_set(ArrayGeometry([[0.3, 0.2, 0.1]]))
        assert np.array_equal(d.points, np.zeros((1, 3)))

    def test_circular_matches_brute_force(self):
        geom = ArrayGeometry.circular(8, 1.0)
        d = difference_set(geom)
        ref = brute_force_differences(geom.positions)
        assert len(d) == len(ref)
        # M(M-1)+1 = 57 distinct points for the regular octagon would be
        # reduced by parallel chords; the count is O(M^2) either way.
        assert 2 * 8 - 1 < len(d) <= 8 * 7 + 1
        for r in ref:
            assert np.min(np.linalg.norm(d.points - r, axis=1)) <= 1e-9

    def test_contains_origin_and_symmetric(self):
        rng = np.random.default_rng(3)
        d = difference_set(ArrayGeometry(rng.normal(size=(9, 3))))
        assert np.min(np.linalg.norm(d.points, axis=1)) == 0.0
        assert d.is_symmetric()

    def test_translation_invariant(self):
        rng = np.random.default_rng(4)
        geom = ArrayGeometry(rng.integers(-3, 4, size=(7, 3)).astype(float))
        a = difference_set(geom).points
        b = difference_set(geom.translated([0.25, -1.5, 3.0])).points
        assert a.shape == b.shape and np.allclose(a, b)

    def test_circular_dl_scaling(self):
        nu = 0.9
        geom = ArrayGeometry.circular(6, 1.3)
        direct = difference_set(ArrayGeometry(geom.positions / nu)).points
        scaled = scale_sampling_set(difference_set(geom), 1 / nu).points
        assert direct.shape == scaled.shape
        for p in direct:
            assert np.min(np.linalg.norm(scaled - p, axis=1)) <= 1e-9


class TestScaleSamplingSet:
    def test_values(self):
        out = scale_sampling_set(SamplingSet([0.0, 1.0, 2.0]), 1 / 0.9)
        assert np.allclose(out.points, [0, 1 / 0.9, 2 / 0.9])

    def test_origin(self):
        assert list(scale_sampling_set(SamplingSet([0.0]), 3.0).points) == [0.0]

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            scale_sampling_set(SamplingSet([1.0]), 0.0)


def test_geometry_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        ArrayGeometry([[0.0, np.nan, 0.0]])
