import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afdm_shaping import AfdmConfig, LazSpec, ambiguity, ambiguity_grid, build_quadform_cache, ccdf, papr, weighted_isl
from afdm_shaping.core import DesignVector, ModulationMatrices, synthesize, synthesize_oversampled
from afdm_shaping.metrics import isl_db_vs_baseline, papr_samples, weighted_isl_samples

from conftest import random_design, random_unit_energy
from oracles import ambiguity_dense, papr_direct, shift_matrix, weighted_isl_dense


class TestLazSpec:
    def test_table_defaults(self):
        laz = LazSpec()
        assert laz.n_points == 17 * 9 - 1 == 152
        assert laz.mu_step == 1.0

    def test_origin_has_zero_weight(self):
        laz = LazSpec(tau_max=1, n_mu=3, mu_min=-1, mu_max=1, weights=np.full((3, 3), 2.0))
        assert laz.weight_matrix[1, 1] == 0
        assert laz.weight_matrix.sum() == 16

    def test_origin_excluded_from_points(self):
        pts = LazSpec(tau_max=1, mu_min=-1, mu_max=1, n_mu=3).points()
        assert len(pts) == 8
        assert not np.any((pts[:, 0] == 0) & (pts[:, 1] == 0))

    def test_even_grid_without_zero_doppler(self):
        laz = LazSpec(tau_max=1, mu_min=-1.5, mu_max=1.5, n_mu=4)
        assert laz.n_points == 12

    @pytest.mark.parametrize("kw", [dict(tau_max=-1), dict(n_mu=0), dict(mu_min=1, mu_max=-1),
                                    dict(n_mu=1, mu_min=0, mu_max=1), dict(weights=np.ones((2, 2)))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            LazSpec(**kw)


class TestAmbiguity:
    def test_origin_is_energy(self, rng):
        s = random_unit_energy(rng, 32)
        assert ambiguity(s, 0, 0) == pytest.approx(32)

    def test_single_chirp_matches_dense(self):
        n = np.arange(8)
        s = np.exp(2j * np.pi * n**2 / 16)
        assert ambiguity(s, 1, 0) == pytest.approx(ambiguity_dense(s, 1, 0), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), tau=st.integers(-7, 7), mu=st.floats(-3, 3))
    def test_matches_dense(self, seed, tau, mu):
        s = random_unit_energy(np.random.default_rng(seed), 8)
        assert ambiguity(s, tau, mu) == pytest.approx(ambiguity_dense(s, tau, mu), abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), tau=st.integers(-7, 7), mu=st.integers(-4, 4))
    def test_symmetric_on_integer_doppler(self, seed, tau, mu):
        # the cyclic wrap contributes exp(j2πμ), which is 1 only for integer μ
        s = random_unit_energy(np.random.default_rng(seed), 8)
        assert abs(ambiguity(s, -tau, -mu)) == pytest.approx(abs(ambiguity(s, tau, mu)), abs=1e-10)

    def test_grid_symmetry(self, rng):
        s = random_unit_energy(rng, 16)
        laz = LazSpec(tau_max=3, mu_min=-2, mu_max=2, n_mu=5)
        g = np.abs(ambiguity_grid(s, laz).values)
        np.testing.assert_allclose(g, g[::-1, ::-1], atol=1e-10)

    def test_grid_rows_schema(self, rng):
        laz = LazSpec(tau_max=1, mu_min=-1, mu_max=1, n_mu=3)
        rows = ambiguity_grid(random_unit_energy(rng, 8), laz).rows()
        assert rows.shape == (9, 5)
        np.testing.assert_allclose(rows[:, 4], rows[:, 2] ** 2 + rows[:, 3] ** 2)


class TestQuadFormCache:
    def test_c_matrix_matches_dense_product(self, rng):
        cfg = AfdmConfig(n_subcarriers=4, c1=1 / 8)
        laz = LazSpec(tau_max=1, mu_min=-1, mu_max=1, n_mu=3)
        b = np.exp(2j * np.pi * rng.random(4))
        cache = build_quadform_cache(cfg, laz, b)
        Phi = ModulationMatrices(cfg, b).Phi
        expected = Phi.conj().T @ shift_matrix(4, 1, 1) @ Phi
        np.testing.assert_allclose(cache.C[2, 2], expected, atol=1e-12)

    def test_c00_is_identity(self, small_setup):
        cfg, laz, design, cache = small_setup
        cache = build_quadform_cache(cfg, laz, np.exp(1j * np.angle(design.b)))
        np.testing.assert_allclose(cache.C[laz.tau_max, 1], np.eye(16), atol=1e-12)

    def test_rank_one_papr_factors(self, small_setup, rng):
        _, _, _, cache = small_setup
        u = random_unit_energy(rng, 16)
        p = np.abs(cache.PhiP @ u) ** 2
        assert np.all(p >= 0)
        assert np.trace(cache.R).real == pytest.approx(cache.row_norms.sum() / (16 * 4))

    def test_frobenius_unit_modulus(self, small_setup):
        _, _, _, cache = small_setup
        np.testing.assert_allclose(cache.frobenius2(), 16.0)

    def test_frobenius_general(self, rng):
        cfg = AfdmConfig(n_subcarriers=8)
        laz = LazSpec(tau_max=1, mu_min=-1, mu_max=1, n_mu=3)
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        cache = build_quadform_cache(cfg, laz, b)
        np.testing.assert_allclose(cache.frobenius2(), np.linalg.norm(cache.C, axis=(2, 3)) ** 2, rtol=1e-10)

    def test_isl_bounds_dominate_lifted_matrix(self, rng):
        cfg = AfdmConfig(n_subcarriers=4, c1=1 / 8)
        laz = LazSpec(tau_max=1, mu_min=-1, mu_max=1, n_mu=3)
        for b in (np.exp(2j * np.pi * rng.random(4)), rng.standard_normal(4) + 0.5j):
            cache = build_quadform_cache(cfg, laz, b)
            V = cache.C.reshape(-1, 16)
            w = cache.weights.reshape(-1)
            J = (V.T * w) @ V.conj()
            lam = np.linalg.eigvalsh((J + J.conj().T) / 2)[-1]
            assert cache.isl_bound("gram") >= lam * (1 - 1e-10)
            assert cache.isl_bound("trace") >= lam * (1 - 1e-10)

    def test_gram_bound_is_tight_for_unit_modulus(self, rng):
        cfg = AfdmConfig(n_subcarriers=4, c1=1 / 8)
        laz = LazSpec(tau_max=1, mu_min=-1, mu_max=1, n_mu=3)
        cache = build_quadform_cache(cfg, laz, np.exp(2j * np.pi * rng.random(4)))
        V = cache.C.reshape(-1, 16)
        J = (V.T * cache.weights.reshape(-1)) @ V.conj()
        assert cache.isl_bound("gram") == pytest.approx(np.linalg.eigvalsh(J)[-1], rel=1e-10)

    def test_memory_cap(self):
        with pytest.raises(MemoryError):
            build_quadform_cache(AfdmConfig(n_subcarriers=16), LazSpec(), np.ones(16), max_subcarriers=8)


class TestWeightedIsl:
    @pytest.mark.parametrize("method", ["quadform", "samples"])
    def test_matches_brute_force(self, method, rng):
        cfg = AfdmConfig(n_subcarriers=4, c1=1 / 8)
        laz = LazSpec(tau_max=1, mu_min=-1, mu_max=1, n_mu=3)
        b = np.exp(2j * np.pi * rng.random(4))
        cache = build_quadform_cache(cfg, laz, b)
        for _ in range(20):
            u = random_unit_energy(rng, 4)
            s = synthesize(cfg, DesignVector(u, b, np.zeros(4, int), cfg.partition))
            ref = weighted_isl_dense(s, laz.taus, laz.mus, laz.weight_matrix)
            assert weighted_isl(u, cache, method=method) == pytest.approx(ref, rel=1e-10)

    def test_samples_path_agrees_with_time_domain(self, small_setup):
        cfg, laz, design, cache = small_setup
        s = synthesize(cfg, design)
        assert weighted_isl(design, cache) == pytest.approx(weighted_isl_samples(s, laz), rel=1e-12)

    def test_zero_weights(self, rng):
        cfg = AfdmConfig(n_subcarriers=8)
        laz = LazSpec(tau_max=1, mu_min=-1, mu_max=1, n_mu=3, weights=np.zeros((3, 3)))
        cache = build_quadform_cache(cfg, laz, np.ones(8))
        assert weighted_isl(random_unit_energy(rng, 8), cache) == 0

    def test_global_phase_invariance(self, small_setup, rng):
        _, _, design, cache = small_setup
        ref = weighted_isl(design.u, cache)
        assert weighted_isl(np.exp(1.3j) * design.u, cache) == pytest.approx(ref, rel=1e-12)

    def test_mismatched_laz(self, small_setup):
        _, _, design, cache = small_setup
        with pytest.raises(ValueError):
            weighted_isl(design.u, cache, laz=LazSpec())

    def test_mismatched_symbols(self, small_setup):
        cfg, _, design, cache = small_setup
        other = DesignVector(design.u, -design.b, design.prechirp_index, cfg.partition)
        with pytest.raises(ValueError):
            weighted_isl(other, cache)

    def test_reduction_in_db(self):
        assert isl_db_vs_baseline(10.0, 100.0) == pytest.approx(10.0)


class TestPapr:
    def test_single_subcarrier_is_flat(self):
        cfg = AfdmConfig(n_subcarriers=16)
        u = np.zeros(16, dtype=complex)
        u[5] = 4.0
        cache = build_quadform_cache(cfg, LazSpec(), np.ones(16))
        assert papr(u, cache).db == pytest.approx(0.0, abs=1e-12)

    def test_matches_direct_definition(self, rng):
        cfg = AfdmConfig.create(8, 0.25)
        for seed in range(10):
            d = random_design(cfg, seed)
            cache = build_quadform_cache(cfg, LazSpec(tau_max=1, n_mu=1, mu_min=0, mu_max=0), d.b)
            ref = papr_direct(synthesize_oversampled(cfg, d))
            assert papr(d.u, cache).ratio == pytest.approx(ref, rel=1e-10)

    def test_scale_invariance(self, small_setup):
        _, _, design, cache = small_setup
        assert papr(3j * design.u, cache).db == pytest.approx(papr(design.u, cache).db, abs=1e-12)

    def test_zero_power(self, small_setup):
        _, _, _, cache = small_setup
        with pytest.raises(ValueError):
            papr(np.zeros(16), cache)
        with pytest.raises(ValueError):
            papr_samples(np.zeros(4))


class TestCcdf:
    def test_examples(self):
        assert ccdf([3, 3, 3], [2.9])[0] == 1.0
        assert ccdf([3, 5], [4])[0] == 0.5

    def test_empty(self):
        with pytest.raises(ValueError):
            ccdf([], [1.0])

    def test_conventional_population(self):
        from afdm_shaping import conventional_afdm

        cfg = AfdmConfig.create(128, 0.0)
        vals = [papr_samples(synthesize_oversampled(cfg, conventional_afdm(cfg, s))) for s in range(300)]
        g = np.linspace(0, 14, 141)
        c = ccdf(vals, g)
        assert c[0] == 1.0
        assert np.all(np.diff(c) <= 0)
        assert np.all((c >= 0) & (c <= 1))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 20), min_size=1, max_size=50))
    def test_monotone(self, samples):
        c = ccdf(samples, np.linspace(-1, 21, 45))
        assert np.all(np.diff(c) <= 0)
        assert c[0] == 1.0 and c[-1] == 0.0
