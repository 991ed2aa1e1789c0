import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afdm_shaping import AfdmConfig, SubcarrierPartition, build_prechirp_alphabet, design_from_symbols
from afdm_shaping.core import (
    DesignVector,
    ModulationMatrices,
    daft_matrix,
    effective_spectral_efficiency,
    forward_daft,
    inverse_daft,
    oversampled_basis,
    prechirp_coefficients,
    synthesize,
    synthesize_oversampled,
    wrap_index,
    wrap_times,
)

from conftest import random_design, random_unit_energy
from oracles import idaft_scalar, oversampled_scalar


class TestConfig:
    def test_defaults_follow_table(self):
        cfg = AfdmConfig()
        assert cfg.n_subcarriers == 128
        assert cfg.c1 == pytest.approx(21 / 256)
        assert cfg.n_wraps == 21
        assert cfg.oversampling == 4
        assert cfg.prechirp_size == 8
        assert cfg.delta == pytest.approx(math.pi * 1e-4 * math.sqrt(2))

    @pytest.mark.parametrize("n", [7, 0])
    def test_rejects_odd_or_tiny_n(self, n):
        with pytest.raises(ValueError):
            AfdmConfig(n_subcarriers=n)

    def test_rejects_non_integer_wraps(self):
        with pytest.raises(ValueError):
            AfdmConfig(n_subcarriers=8, c1=0.01)

    def test_partition_size_mismatch(self):
        with pytest.raises(ValueError):
            AfdmConfig(n_subcarriers=8, partition=SubcarrierPartition(16, (1,)))


class TestPartition:
    @pytest.mark.parametrize("ratio,n_data", [(0.2, 102), (0.5, 64), (0.6, 51), (0.0, 128)])
    def test_comb_sizes(self, ratio, n_data):
        part = SubcarrierPartition.comb(128, ratio)
        assert part.n_data == n_data
        assert len(part.D) + len(part.R) == 128
        assert not set(part.D) & set(part.R)

    def test_comb_is_evenly_spread(self):
        gaps = np.diff(SubcarrierPartition.comb(128, 0.25).R)
        assert set(gaps) == {4}

    @pytest.mark.parametrize("ratio,n_data", [(0.2, 102), (0.5, 64), (0.6, 51), (0.0, 128)])
    def test_scattered_sizes_and_determinism(self, ratio, n_data):
        part = SubcarrierPartition.scattered(128, ratio)
        assert part.n_data == n_data
        assert part == SubcarrierPartition.scattered(128, ratio)
        assert AfdmConfig.create(128, ratio).partition == part

    def test_scattered_seed(self):
        assert SubcarrierPartition.scattered(64, 0.5, 1) != SubcarrierPartition.scattered(64, 0.5, 2)

    def test_half_comb_cannot_touch_data_peaks(self, rng):
        # with every other subcarrier reserved, |d + r| and |r - d| appear half a block
        # apart, so the sample peak never drops below the data-only peak
        part = SubcarrierPartition.comb(16, 0.5)
        cfg = AfdmConfig(n_subcarriers=16, partition=part)
        x = np.zeros(16, dtype=complex)
        x[part.D] = np.exp(2j * np.pi * rng.random(8))
        d_peak = np.max(np.abs(inverse_daft(cfg, x)))
        for _ in range(50):
            v = x.copy()
            v[part.R] = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            assert np.max(np.abs(inverse_daft(cfg, v))) >= d_peak - 1e-12

    def test_unknown_placement(self):
        with pytest.raises(ValueError):
            SubcarrierPartition.make(16, 0.5, "random")

    @pytest.mark.parametrize("bad", [(1, 1), (-1,), (16,), (0.5,)])
    def test_invalid_reserved(self, bad):
        with pytest.raises(ValueError):
            SubcarrierPartition(16, bad)


class TestAlphabet:
    def test_quarter_turn(self):
        cfg = AfdmConfig(n_subcarriers=8, delta=0.0)
        assert build_prechirp_alphabet(cfg, 1)[2] == pytest.approx(1j)

    def test_octagon(self):
        cfg = AfdmConfig(n_subcarriers=8, delta=0.0)
        a = build_prechirp_alphabet(cfg, 5)
        assert len(a) == 8
        np.testing.assert_allclose(np.abs(a), 1.0)
        np.testing.assert_allclose(np.diff(np.unwrap(np.angle(a))), np.pi / 4)

    def test_zero_subcarrier_is_singleton(self):
        np.testing.assert_array_equal(build_prechirp_alphabet(AfdmConfig(n_subcarriers=8), 0), [1.0])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            build_prechirp_alphabet(AfdmConfig(n_subcarriers=8), 8)

    def test_prechirp_coefficients_reproduce_phases(self):
        cfg = AfdmConfig(n_subcarriers=8)
        idx = np.arange(8) % 8
        c2 = prechirp_coefficients(cfg, idx)
        m = np.arange(8)
        np.testing.assert_allclose(np.exp(2j * np.pi * c2[1:] * m[1:] ** 2), cfg.alphabet[idx[1:]])
        assert c2[0] == 0


class TestDesignVector:
    def test_energy_and_zero_subcarrier(self):
        cfg = AfdmConfig.create(16, 0.25)
        d = random_design(cfg, 0)
        assert d.energy_error() < 1e-12
        part = cfg.partition
        np.testing.assert_allclose(np.abs(d.u[part.D]), 1.0)

    def test_zero_subcarrier_on_data_is_one(self):
        cfg = AfdmConfig.create(8, 0.0)
        d = design_from_symbols(cfg, np.ones(8), prechirp_index=np.full(8, 3))
        assert d.u[0] == 1.0
        assert d.prechirp_index[0] == 0

    def test_wrong_symbol_count(self):
        cfg = AfdmConfig.create(8, 0.25)
        with pytest.raises(ValueError):
            design_from_symbols(cfg, np.ones(8))

    def test_bad_prechirp_index(self):
        cfg = AfdmConfig.create(8, 0.0)
        with pytest.raises(ValueError):
            design_from_symbols(cfg, np.ones(8), prechirp_index=np.full(8, 8))

    def test_reserved_without_energy(self):
        cfg = AfdmConfig.create(8, 0.25)
        with pytest.raises(ValueError):
            design_from_symbols(cfg, np.ones(6), np.zeros(2))


class TestSynthesis:
    def test_small_instance_matches_direct_sum(self):
        cfg = AfdmConfig(n_subcarriers=4, c1=1 / 8)
        d = design_from_symbols(cfg, np.ones(4))
        c2 = prechirp_coefficients(cfg, d.prechirp_index)
        np.testing.assert_allclose(synthesize(cfg, d), idaft_scalar(np.ones(4), 1 / 8, c2), atol=1e-12)

    @pytest.mark.parametrize("n,ratio", [(8, 0.0), (8, 0.25), (16, 0.5)])
    def test_random_designs_match_direct_sum(self, n, ratio):
        cfg = AfdmConfig.create(n, ratio)
        d = random_design(cfg, n)
        x = d.b.copy()
        # reserved entries have non-unit modulus, so fold them into the symbols
        x[cfg.partition.R] = d.u[cfg.partition.R]
        c2 = prechirp_coefficients(cfg, d.prechirp_index)
        c2[cfg.partition.R] = 0.0
        np.testing.assert_allclose(synthesize(cfg, d), idaft_scalar(x, cfg.c1, c2), atol=1e-11)

    def test_single_subcarrier_is_constant_modulus_chirp(self):
        cfg = AfdmConfig(n_subcarriers=8, c1=1 / 16)
        v = np.zeros(8, dtype=complex)
        v[0] = np.sqrt(8)
        s = inverse_daft(cfg, v)
        n = np.arange(8)
        np.testing.assert_allclose(s, np.exp(2j * np.pi * n**2 / 16), atol=1e-12)

    @pytest.mark.parametrize("n", [8, 16, 64, 128])
    def test_daft_unitary(self, n):
        cfg = AfdmConfig(n_subcarriers=n)
        A = daft_matrix(cfg)
        assert np.linalg.norm(A.conj().T @ A - np.eye(n)) < 1e-10

    @pytest.mark.parametrize("n", [8, 16, 64, 128])
    def test_phi_unitary_for_unit_modulus_symbols(self, n, rng):
        cfg = AfdmConfig(n_subcarriers=n)
        b = np.exp(2j * np.pi * rng.random(n))
        Phi = ModulationMatrices(cfg, b).Phi
        assert np.linalg.norm(Phi.conj().T @ Phi - np.eye(n)) < 1e-10

    def test_forward_inverts_inverse(self, rng):
        cfg = AfdmConfig(n_subcarriers=32)
        v = random_unit_energy(rng, 32)
        np.testing.assert_allclose(forward_daft(cfg, inverse_daft(cfg, v)), v, atol=1e-12)


class TestOversampled:
    def test_matches_scalar_basis(self, rng):
        cfg = AfdmConfig(n_subcarriers=8)
        v = random_unit_energy(rng, 8)
        d = DesignVector(v, np.ones(8), np.zeros(8, int), cfg.partition)
        np.testing.assert_allclose(synthesize_oversampled(cfg, d), oversampled_scalar(v, cfg.c1, 4), atol=1e-10)

    def test_matches_scalar_basis_small_chirp(self, rng):
        cfg = AfdmConfig(n_subcarriers=8, c1=1 / 16, oversampling=3)
        v = random_unit_energy(rng, 8)
        d = DesignVector(v, np.ones(8), np.zeros(8, int), cfg.partition)
        np.testing.assert_allclose(synthesize_oversampled(cfg, d), oversampled_scalar(v, 1 / 16, 3), atol=1e-10)

    @pytest.mark.parametrize("n", [8, 64, 128])
    def test_decimation_identity(self, n):
        cfg = AfdmConfig.create(n, 0.25)
        d = random_design(cfg, n + 1)
        s = synthesize(cfg, d)
        os = synthesize_oversampled(cfg, d)
        assert np.max(np.abs(np.sqrt(4) * os[::4] - s)) < 1e-9

    def test_basis_modulus(self):
        cfg = AfdmConfig(n_subcarriers=16)
        np.testing.assert_allclose(np.abs(oversampled_basis(cfg)), 1 / np.sqrt(64))

    def test_basis_is_read_only(self):
        with pytest.raises(ValueError):
            oversampled_basis(AfdmConfig(n_subcarriers=8))[0, 0] = 0


class TestWrapping:
    def test_first_wrap_instant(self):
        cfg = AfdmConfig(n_subcarriers=8, c1=1 / 16, symbol_duration=8.0)
        assert wrap_times(cfg, 0)[0] == pytest.approx(4.0)
        assert wrap_index(cfg, 0, 3.9) == 0
        assert wrap_index(cfg, 0, 4.0) == 1

    def test_no_wraps(self):
        cfg = AfdmConfig(n_subcarriers=8, c1=0.0)
        assert all(wrap_index(cfg, m, t) == 0 for m in range(8) for t in np.linspace(0, 0.99, 7))

    def test_origin(self):
        cfg = AfdmConfig(n_subcarriers=16)
        assert all(wrap_index(cfg, m, 0.0) == 0 for m in range(16))

    def test_outside_block(self):
        with pytest.raises(ValueError):
            wrap_index(AfdmConfig(n_subcarriers=8), 0, 1.0)

    def test_wrap_instants_satisfy_quadratic(self):
        cfg = AfdmConfig(n_subcarriers=32)
        for m in (0, 5, 31):
            t = wrap_times(cfg, m)
            q = np.arange(1, cfg.n_wraps + 1)
            # each wrap instant is the positive root of c1' t² + (m/T) t = q/Δt
            lhs = cfg.c1_prime * t**2 + (m / cfg.symbol_duration) * t
            np.testing.assert_allclose(lhs, q / cfg.sample_period, rtol=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(m=st.integers(0, 31), t1=st.floats(0, 0.999), t2=st.floats(0, 0.999))
    def test_monotone_in_time(self, m, t1, t2):
        cfg = AfdmConfig(n_subcarriers=32)
        lo, hi = sorted((t1, t2))
        assert wrap_index(cfg, m, lo) <= wrap_index(cfg, m, hi)


class TestSpectralEfficiency:
    def test_joint_configuration(self):
        cfg = AfdmConfig.create(128, 0.2)
        assert effective_spectral_efficiency(cfg, 3, True) == pytest.approx(102 / 230)

    def test_rcs_only_configuration(self):
        cfg = AfdmConfig.create(128, 0.6)
        assert effective_spectral_efficiency(cfg, 3, False) == pytest.approx(51 / 128)

    def test_no_data(self):
        assert effective_spectral_efficiency(AfdmConfig(n_subcarriers=8), 3, True, n_data=0) == 0

    def test_invalid_bits(self):
        with pytest.raises(ValueError):
            effective_spectral_efficiency(AfdmConfig(n_subcarriers=8), 0, False)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), ratio=st.sampled_from([0.0, 0.25, 0.5]))
def test_energy_preserved_by_synthesis(seed, ratio):
    cfg = AfdmConfig.create(16, ratio)
    d = random_design(cfg, seed)
    s = synthesize(cfg, d)
    assert abs(np.vdot(s, s).real - 16) < 1e-10 * 16
