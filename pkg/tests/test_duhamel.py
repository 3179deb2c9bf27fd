import json
import math

import numpy as np
import pytest
from scipy import special

from stablesde.drift import ConstantDrift, FourierDrift, Regularity, ZeroDrift
from stablesde.duhamel import (DensityField, VolterraConfig, chi_square_test, density_error_norm,
                               duhamel_residual, interval_mass, kde_density, solve_scheme_density,
                               solve_sde_density, verify_aronson)
from stablesde.exceptions import AlignmentError, DivergenceError, ParameterError, ResolutionError
from stablesde.noise import BarPProfile, SpatialGrid, StableLaw, bar_p, grid_for, heat_kernel_grid
from stablesde.schemes import SchemeConfig, simulate_batch

INF = math.inf


def gaussian(x, mean=0.0, var=1.0):
    return np.exp(-(x - mean) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)


class TestSDEDensity:
    def test_zero_drift_is_kernel(self):
        law = StableLaw(1.5)
        g = grid_for(law, 0.25, 1.0, budget=1e-8)
        f = solve_sde_density(law, ZeroDrift(), 0.0, 1.0, VolterraConfig(g, 64), times=[0.25, 1.0])
        for t in (0.25, 1.0):
            assert np.max(np.abs(f.at(t) - heat_kernel_grid(law, t, g))) < 1e-8

    def test_constant_drift_translation(self):
        law = StableLaw(2.0)
        g = SpatialGrid(1, 12.0, 1024)
        f = solve_sde_density(law, ConstantDrift(0.8), 0.5, 1.0, VolterraConfig(g, 256))
        assert np.max(np.abs(f.at(1.0) - gaussian(g.nodes, 0.5 + 0.8))) < 1e-5
        assert f.provenance == "sde-duhamel"

    def test_mass_and_positivity(self):
        law = StableLaw(1.5)
        g = SpatialGrid(1, 4 * math.pi, 1024)
        f = solve_sde_density(law, FourierDrift([1.0], [1.0]), 0.0, 1.0, VolterraConfig(g, 512), times=[0.5, 1.0])
        assert np.all(np.abs(f.mass() - 1) < 1e-4)
        assert f.values.min() > -1e-8

    def test_residual_small(self):
        law = StableLaw(1.5)
        g = SpatialGrid(1, 4 * math.pi, 512)
        drift = FourierDrift([1.0, 2.0], [1.0, 0.3])
        f = solve_sde_density(law, drift, 0.0, 0.5, VolterraConfig(g, 512), keep_all=True)
        res = duhamel_residual(law, drift, 0.0, f)
        assert res.shape == f.times.shape and res.max() < 1e-10

    def test_divergence_reported(self):
        law = StableLaw(1.5)
        g = SpatialGrid(1, 4 * math.pi, 256)
        cfg = VolterraConfig(g, steps=4, picard_cap=1, tol=1e-300)
        with pytest.raises(DivergenceError) as ei:
            solve_sde_density(law, FourierDrift([1.0], [3.0]), 0.0, 1.0, cfg)
        assert ei.value.time > 0

    def test_leak_detected(self):
        law = StableLaw(1.5)
        g = SpatialGrid(1, 3.0, 256)
        with pytest.raises(ResolutionError, match="boundary"):
            solve_sde_density(law, FourierDrift([1.3], [0.1], const=1.0), 0.0, 1.0, VolterraConfig(g, 64))

    def test_config_invariants(self):
        with pytest.raises(ParameterError):
            VolterraConfig(SpatialGrid(1, 1.0, 16), tol=0.0)
        with pytest.raises(ParameterError):
            VolterraConfig(SpatialGrid(1, 1.0, 16), picard_cap=0)

    def test_csv_and_sidecar(self, tmp_path):
        law = StableLaw(2.0)
        g = SpatialGrid(1, 10.0, 64)
        f = solve_sde_density(law, ZeroDrift(), 0.0, 1.0, VolterraConfig(g, 8))
        f.to_csv(tmp_path / "d.csv")
        rows = (tmp_path / "d.csv").read_text().splitlines()
        assert rows[0] == "t,x,value" and len(rows) == 1 + 64 * len(f.times)
        meta = json.loads((tmp_path / "d.csv.json").read_text())
        assert meta["provenance"] == "sde-duhamel" and meta["grid"]["points"] == 64

    @pytest.mark.slow
    def test_against_paths(self):
        # 10^6 fine-step paths; the step bias at h = 2^-8 is checked to be far below the tolerance
        law, T = StableLaw(1.5), 0.5
        g = SpatialGrid(1, 8 * math.pi, 4096)
        drift = FourierDrift([1.0], [1.0])
        ref = solve_sde_density(law, drift, 0.0, T, VolterraConfig(g, 2048))
        cfg = SchemeConfig("lebesgue", 128, T, law, seed=21)
        bias = density_error_norm(solve_scheme_density(law, drift, cfg, g, times=[T]), ref, T)
        assert bias < 6e-3
        paths = simulate_batch(cfg, drift, 10 ** 6, keep_paths=False, workers=8).terminal
        kde = kde_density(paths, g, T)
        assert abs(kde.mass(T) - 1) < 1e-2
        assert density_error_norm(kde, ref, T) < 3e-2


class TestSchemeDensity:
    @pytest.mark.parametrize("variant", ["lebesgue", "hoelder"])
    def test_zero_drift(self, variant):
        law = StableLaw(1.5)
        g = grid_for(law, 0.25, 1.0, budget=1e-8)
        drift = ZeroDrift()
        if variant == "hoelder":
            drift.regularity = Regularity(INF, INF, INF, 0.5)
        cfg = SchemeConfig(variant, 4, 1.0, law)
        f = solve_scheme_density(law, drift, cfg, g)
        for k in range(1, 5):
            assert np.max(np.abs(f.at(k * 0.25) - heat_kernel_grid(law, k * 0.25, g))) < 1e-8

    def test_single_step_constant(self):
        law = StableLaw(2.0)
        g = SpatialGrid(1, 12.0, 1024)
        c = 0.7
        lb = solve_scheme_density(law, ConstantDrift(c), SchemeConfig("lebesgue", 1, 1.0, law), g)
        assert np.max(np.abs(lb.at(1.0) - gaussian(g.nodes))) < 1e-10  # first step carries no drift
        hd = ConstantDrift(c, regularity=Regularity(INF, INF, INF, 0.5))
        ho = solve_scheme_density(law, hd, SchemeConfig("hoelder", 1, 1.0, law), g)
        assert np.max(np.abs(ho.at(1.0) - gaussian(g.nodes, c))) < 1e-10

    def test_histogram_agreement(self):
        law = StableLaw(1.5)
        g = SpatialGrid(1, 4 * math.pi, 2048)
        drift = FourierDrift([1.0], [1.0])
        cfg = SchemeConfig("lebesgue", 8, 1.0, law, seed=31)
        f = solve_scheme_density(law, drift, cfg, g, times=[1.0])
        paths = simulate_batch(cfg, drift, 2 * 10 ** 5, keep_paths=False, workers=4).terminal
        assert chi_square_test(paths, f, 1.0).passed


class TestNormsAndBounds:
    def test_error_norm_gaussian_pair(self):
        g = SpatialGrid(1, 20.0, 8192)
        a = DensityField(g, [1.0], [gaussian(g.nodes)], "sde-duhamel")
        b = DensityField(g, [1.0], [gaussian(g.nodes, 0.1)], "sde-duhamel")
        assert density_error_norm(a, a, 1.0) == 0.0
        assert abs(density_error_norm(a, b, 1.0) - 2 * special.erf(0.05 / math.sqrt(2))) < 1e-4
        dense = np.linspace(-3, 3, 200001)
        sup = np.max(np.abs(gaussian(dense) - gaussian(dense, 0.1)))
        assert abs(density_error_norm(a, b, 1.0, INF) - sup) < 1e-6

    def test_alignment(self):
        a = DensityField(SpatialGrid(1, 5.0, 64), [1.0], [np.ones(64)], "sde-duhamel")
        b = DensityField(SpatialGrid(1, 5.0, 128), [1.0], [np.ones(128)], "sde-duhamel")
        with pytest.raises(AlignmentError):
            density_error_norm(a, b, 1.0)
        with pytest.raises(AlignmentError):
            a.at(0.5)

    def test_aronson_zero_drift(self):
        law = StableLaw(1.5)
        g = grid_for(law, 0.5, 1.0, budget=1e-8)
        prof = BarPProfile(law)
        f = solve_sde_density(law, ZeroDrift(), 0.0, 1.0, VolterraConfig(g, 16), times=[0.5, 1.0])
        rep = verify_aronson(f, prof)
        inside = np.abs(g.nodes) <= 0.5 * g.half_width
        direct = max(np.max(heat_kernel_grid(law, t, g)[inside] / bar_p(prof, t, g.nodes[inside])) for t in (0.5, 1.0))
        assert rep.constant == pytest.approx(direct, rel=1e-9)

    def test_aronson_cos_resolution_stable(self):
        law = StableLaw(1.5)
        prof = BarPProfile(law)
        cs = []
        for N in (1024, 2048):
            g = SpatialGrid(1, 8 * math.pi, N)
            f = solve_sde_density(law, FourierDrift([1.0], [1.0]), 0.0, 1.0, VolterraConfig(g, 512), times=[0.25, 1.0])
            cs.append(verify_aronson(f, prof).constant)
        assert np.all(np.isfinite(cs)) and abs(cs[0] / cs[1] - 1) < 0.02

    def test_aronson_empty(self):
        f = DensityField(SpatialGrid(1, 5.0, 64), [], np.zeros((0, 64)), "sde-duhamel")
        assert verify_aronson(f, BarPProfile(StableLaw(1.5))).empty

    def test_interval_mass_exact(self):
        g = SpatialGrid(1, 10.0, 512)
        v = gaussian(g.nodes)
        m = interval_mass(g, v, np.array([-1.0, 0.0]), np.array([1.0, 2.5]))
        exact = [special.erf(1 / math.sqrt(2)), 0.5 * special.erf(2.5 / math.sqrt(2))]
        np.testing.assert_allclose(m, exact, atol=1e-12)

    def test_kde_mass(self):
        g = SpatialGrid(1, 8.0, 512)
        s = np.random.default_rng(0).normal(size=50000)
        k = kde_density(s, g, 1.0)
        assert abs(k.mass(1.0) - 1) < 1e-2 and k.provenance == "kde-from-paths"
        assert np.sum(np.abs(k.at(1.0) - gaussian(g.nodes))) * g.spacing < 0.05
