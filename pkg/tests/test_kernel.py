import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oncovirus import (
    GridSpec,
    InputError,
    UnsupportedConfigurationError,
    age_ladder,
    apply_kernel,
    build_kernel,
    build_kernel_semigroup,
    build_kernel_spectral,
)
from oncovirus.kernel import dump_kernel_csv

AGES = np.array([0.0, 0.1, 0.5, 1.0, 2.0])


@pytest.fixture(scope="module")
def spectral129():
    return build_kernel_spectral(GridSpec(math.pi, 129), 1.0, 0.7, AGES, modes=64)


def test_age_ladder():
    np.testing.assert_allclose(age_ladder(1.0, 0.125), np.arange(9) / 8)
    assert age_ladder(0.0, 0.1).tolist() == [0.0]
    with pytest.raises(InputError):
        age_ladder(1.0, 0.3)


class TestSpectral:
    def test_row_sum_identity(self, spectral129):
        for j, a in enumerate(AGES):
            out = spectral129.apply(j, np.ones(129))
            assert np.max(np.abs(out - math.exp(-0.7 * a))) < 1e-6

    def test_age_zero_is_identity(self, spectral129):
        f = np.sin(3 * spectral129.grid.x) ** 2 + 0.1
        np.testing.assert_allclose(spectral129.apply(0, f), f, atol=1e-12)

    def test_cosine_is_eigenmode(self, spectral129):
        x = spectral129.grid.x
        for j, a in enumerate(AGES[1:], start=1):
            out = spectral129.apply(j, np.cos(x))
            assert np.max(np.abs(out - math.exp(-(1.0 + 0.7) * a) * np.cos(x))) < 1e-6

    def test_symmetric_and_positive(self, spectral129):
        for j in range(1, AGES.size):
            K = spectral129.matrices[j]
            assert np.max(np.abs(K - K.T)) < 1e-9
        # truncation leaves tiny Gibbs ripples at small ages; they stay far above -1e-9 only for a >= 0.5
        assert spectral129.matrices[2:].min() > -1e-9

    def test_meta_records_modes(self, spectral129):
        assert spectral129.route == "spectral"
        assert spectral129.meta["modes"] == 64
        assert spectral129.meta["effective_modes"] == 64

    def test_modes_capped_below_nyquist(self):
        k = build_kernel_spectral(GridSpec(math.pi, 17), 1.0, 1.0, [0.0, 0.05], modes=64)
        assert k.meta["effective_modes"] == 15
        np.testing.assert_allclose(k.apply(1, np.ones(17)), math.exp(-0.05), atol=1e-12)

    def test_unsupported_configurations(self):
        g = GridSpec(math.pi, 17)
        with pytest.raises(UnsupportedConfigurationError):
            build_kernel_spectral(g, 1.0, np.linspace(1, 2, 17), [0.0, 1.0])
        with pytest.raises(UnsupportedConfigurationError):
            build_kernel_spectral(GridSpec(math.pi, 17, eta2=0.5), 1.0, 1.0, [0.0, 1.0])
        with pytest.raises(InputError):
            build_kernel_spectral(g, 1.0, 1.0, [0.0, 1.0], modes=4)

    def test_constant_alpha_array_accepted(self):
        g = GridSpec(math.pi, 17)
        k = build_kernel_spectral(g, 1.0, np.full(17, 0.5), [0.0, 1.0])
        np.testing.assert_allclose(k.apply(1, np.ones(17)), math.exp(-0.5), atol=1e-12)

    @pytest.mark.parametrize("ages", [[0.1, 0.2], [0.0, 0.5, 0.5], [[0.0, 1.0]]])
    def test_bad_ladders(self, ages):
        with pytest.raises(InputError):
            build_kernel_spectral(GridSpec(math.pi, 17), 1.0, 1.0, ages)


class TestSemigroup:
    def test_no_diffusion_is_pure_decay(self):
        g = GridSpec(math.pi, 33)
        k = build_kernel_semigroup(g, 0.0, 0.8, [0.0, 0.5, 1.0], substeps=8)
        f = 1.0 + np.cos(g.x)
        for j, a in enumerate(k.ages):
            np.testing.assert_allclose(k.apply(j, f), math.exp(-0.8 * a) * f, rtol=1e-3)
            # off-diagonal entries vanish without diffusion
            off = k.matrices[j] - np.diag(np.diag(k.matrices[j]))
            assert np.max(np.abs(off)) == 0.0

    def test_no_diffusion_exact_rate_under_refinement(self):
        g = GridSpec(math.pi, 9)
        errs = [
            abs(build_kernel_semigroup(g, 0.0, 1.0, [0.0, 1.0], substeps=s, positivity_floor=False).apply(1, np.ones(9))[0] - math.exp(-1))
            for s in (16, 32)
        ]
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)

    def test_semigroup_property(self):
        g = GridSpec(math.pi, 33, eta2=(0.5, 2.0))
        alpha = 0.5 + 0.3 * np.cos(g.x)
        k = build_kernel_semigroup(g, 0.7, alpha, [0.0, 0.25, 0.5, 0.75], substeps=4)
        P = k.matrices * g.weights[None, None, :]  # operators acting on nodal values
        assert np.max(np.abs(P[3] - P[1] @ P[2]).sum(axis=1)) < 1e-6
        assert np.max(np.abs(P[2] - P[1] @ P[1]).sum(axis=1)) < 1e-6

    @settings(max_examples=15, deadline=None)
    @given(
        st.floats(0.0, 2.0),
        st.floats(0.05, 3.0),
        st.floats(0.0, 2.0),
        st.floats(0.0, 2.0),
        st.floats(0.0, 1.0),
    )
    def test_positive_symmetric_and_decaying(self, d2, alpha0, eta_l, eta_r, amp):
        g = GridSpec(math.pi, 17, eta2=(eta_l, eta_r))
        alpha = alpha0 * (1.0 + amp * np.cos(g.x))
        k = build_kernel_semigroup(g, d2, alpha, [0.0, 0.1, 0.3, 1.0])
        assert np.all(np.isfinite(k.matrices))
        assert k.matrices[1:].min() >= -1e-9
        norms = [np.max((k.matrices[j] * g.weights).sum(axis=1)) for j in range(k.ages.size)]
        for j in range(1, k.ages.size):
            assert norms[j] <= norms[j - 1] + 1e-12
            assert norms[j] <= math.exp(-alpha.min() * k.ages[j]) + 1e-9
        for j in range(1, k.ages.size):
            K = k.matrices[j]
            assert np.max(np.abs(K - K.T)) < 1e-9 * max(1.0, np.max(np.abs(K)))

    def test_robin_loses_mass(self):
        g = GridSpec(math.pi, 33, eta2=1.0)
        k = build_kernel_semigroup(g, 1.0, 0.5, [0.0, 1.0])
        assert np.max(k.apply(1, np.ones(33))) < math.exp(-0.5)

    def test_positivity_floor_raises_substeps(self):
        g = GridSpec(math.pi, 129)
        k = build_kernel_semigroup(g, 1.0, 1.0, [0.0, 0.25], substeps=1)
        assert k.meta["effective_substeps"] > 1
        assert k.matrices[1].min() >= -1e-12

    def test_rejects_zero_substeps(self):
        with pytest.raises(InputError):
            build_kernel_semigroup(GridSpec(math.pi, 9), 1.0, 1.0, [0.0, 1.0], substeps=0)

    def test_point_mass_against_refined_reference(self):
        coarse = GridSpec(math.pi, 33)
        fine = coarse.refined(4)
        kc = build_kernel_semigroup(coarse, 1.0, 1.0, [0.0, 0.5], substeps=16)
        kf = build_kernel_spectral(fine, 1.0, 1.0, [0.0, 0.5], modes=120)
        # unit mass at one coarse node, then the same mass on the fine grid
        node = 10
        fc = np.zeros(33)
        fc[node] = 1.0 / coarse.weights[node]
        ff = np.zeros(fine.n_points)
        ff[4 * node] = 1.0 / fine.weights[4 * node]
        column = kc.apply(1, fc)
        np.testing.assert_allclose(column, kc.matrices[1][:, node], rtol=1e-14)
        ref = kf.apply(1, ff)[::4]
        assert np.max(np.abs(column - ref)) < 2e-3 * np.max(ref)


class TestAgreement:
    def test_builders_agree_and_converge(self):
        g = GridSpec(math.pi, 129)
        ages = np.arange(33) / 16
        spec = build_kernel_spectral(g, 1.0, 1.0, ages, modes=64)
        sel = ages >= 0.5
        errs = {}
        for s in (8, 32):
            semi = build_kernel_semigroup(g, 1.0, 1.0, ages, substeps=s, positivity_floor=False)
            errs[s] = np.max(np.abs(spec.matrices[sel] - semi.matrices[sel]))
        assert errs[32] < 1e-4
        assert errs[8] / errs[32] >= 4.0


def test_build_kernel_routes():
    g = GridSpec(math.pi, 17)
    assert build_kernel(g, 1.0, 1.0, [0.0, 1.0]).route == "spectral"
    assert build_kernel(g, 1.0, np.linspace(1, 2, 17), [0.0, 1.0]).route == "semigroup"
    assert build_kernel(GridSpec(math.pi, 17, eta2=1.0), 1.0, 1.0, [0.0, 1.0]).route == "semigroup"
    assert build_kernel(g, 1.0, 1.0, [0.0, 1.0], route="semigroup").route == "semigroup"
    with pytest.raises(InputError):
        build_kernel(g, 1.0, 1.0, [0.0, 1.0], route="fft")


def test_apply_kernel_contracts():
    g = GridSpec(math.pi, 17)
    k = build_kernel(g, 1.0, 1.0, [0.0, 1.0])
    np.testing.assert_array_equal(apply_kernel(k, 1, np.zeros(17)), 0.0)
    with pytest.raises(InputError):
        apply_kernel(k, 1, np.ones(33))
    with pytest.raises(InputError):
        apply_kernel(k, 2, np.ones(17))
    assert k.index_of(1.0) == 1
    with pytest.raises(InputError):
        k.index_of(0.5)


def test_kernel_is_read_only():
    k = build_kernel(GridSpec(math.pi, 9), 1.0, 1.0, [0.0, 1.0])
    with pytest.raises(ValueError):
        k.matrices[0, 0, 0] = 1.0


def test_dump_kernel_csv(tmp_path):
    g = GridSpec(math.pi, 9)
    k = build_kernel(g, 1.0, 1.0, [0.0, 0.5, 1.0])
    paths = dump_kernel_csv(k, str(tmp_path / "kern"))
    assert [p.rsplit("/", 1)[1] for p in paths] == ["kernel_age_0000.csv", "kernel_age_0001.csv", "kernel_age_0002.csv"]
    raw = open(paths[1], "rb").read()
    assert b"\r" not in raw
    rows = list(csv.reader(open(paths[1])))
    assert len(rows) == 10
    np.testing.assert_array_equal(np.array(rows[0], dtype=float), g.x)
    np.testing.assert_array_equal(np.array(rows[1:], dtype=float), k.matrices[1])
