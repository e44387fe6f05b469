import math

import numpy as np
import pytest

import rbclab


def test_conduction_nusselt_is_one():
    r = rbclab.conduction_nusselt(rbclab.SimParams(Ra=1e4, Pr=1.0))
    for key in ("nu_plane_mean", "nu_volume", "nu_dissipation"):
        assert r[key] == pytest.approx(1.0, abs=1e-10)


def test_onset_near_classical_value():
    ra_c, k_c = rbclab.critical_rayleigh(Nz=25)
    assert ra_c == pytest.approx(1707.76, rel=5e-3)
    assert k_c == pytest.approx(3.117, rel=5e-3)
    p = rbclab.SimParams(Ra=1500.0)
    assert rbclab.linear_growth_rate(p, 3.117) < 0.0


def test_short_simulation_reports_consistent_nusselt():
    p = rbclab.SimParams(Ra=1e4, Pr=1.0)
    p.Nx, p.Nz, p.t_end = 32, 17, 0.3
    r = rbclab.simulate(p, seed=3)
    assert r["Nx"] == 32 and r["steps"] > 0
    assert r["nu_volume"] >= 1.0
    assert -1e-8 <= r["min_T"] and r["max_T"] <= 1.0 + 1e-8
    assert len(r["times"]) == len(r["nu_series"])


def test_interpolation_norm_of_constant():
    z = np.linspace(0.0, 1.0, 41)
    rep = rbclab.interpolation_norm(z, np.full_like(z, 0.7), rbclab.WeightKind.strip)
    assert rep["k_value"] == pytest.approx(0.7, rel=1e-12)
    # K(lambda) >= the norm for every lambda
    g = np.sin(math.pi * z) ** 2
    k = rbclab.interpolation_norm(z, g)["k_value"]
    for lam in (0.0, 0.2, 0.5, 1.0):
        assert rbclab.interpolation_functional(z, g, rbclab.WeightKind.strip, lam) >= k - 1e-12


def test_gamma1_and_kernel_constant():
    assert rbclab.gamma1(0.0, 1.0) == pytest.approx(1.0)
    rep = rbclab.heat_kernel_estimates([1.0], [1.0])
    assert rep["items"]["x1_n0"]["max"] == pytest.approx(2.0 * math.sqrt(math.pi), rel=1e-9)


def test_bandedness_single_mode():
    nx, nz, n = 64, 17, 4
    z = 0.5 - 0.5 * np.cos(np.pi * np.arange(nz) / (nz - 1))
    x = 2.0 * np.arange(nx) / nx
    values = np.outer(np.cos(math.pi * n * x), z * (1.0 - z))
    rep = rbclab.bandedness(values, 1.0 / math.pi, "band1")
    assert rep["ratio"] == pytest.approx(0.25, rel=1e-6)
    with pytest.raises(rbclab.ParameterError):
        rbclab.bandedness(values, 1.0 / math.pi, "band2")


def test_stokes_strip_ratio_is_finite():
    modes = rbclab.band_modes(1.0 / 16.0)
    rep = rbclab.stokes_strip_ratio(7, modes[:2], Nz=17, Nt=20, dt=0.05)
    assert 0.0 < rep["ratio"] < 10.0


def test_config_round_trip_and_errors():
    text = rbclab.normalize_config("[sweep]\nra = 1e4, 2e4\npr = 1\n")
    assert rbclab.normalize_config(text) == text
    with pytest.raises(rbclab.ConfigError):
        rbclab.normalize_config("[sim]\nbogus = 1\n")


def test_in_memory_sweep():
    rows = rbclab.run_sweep("[sim]\nNx = 32\nNz = 17\nt_end = 0.2\n[sweep]\nra = 1e4, 2e4\npr = 1\n")
    assert [r["Ra"] for r in rows] == [1e4, 2e4]
    assert all(r["status"] == "ok" for r in rows)


def test_fit_scaling_recovers_exponent():
    pts = [(ra, 1.0, 0.2 * ra**0.3) for ra in np.logspace(4, 6, 5)]
    fit = rbclab.fit_scaling(pts)
    assert fit["exponent"] == pytest.approx(0.3, abs=1e-10)
    assert fit["prefactor"] == pytest.approx(0.2, rel=1e-9)
    with pytest.raises(rbclab.FitError):
        rbclab.fit_scaling(pts[:2])


def test_dimensional_conversion():
    # water-like fluid, 1 cm layer, 1 K difference
    nu, chi = 1e-6, 1.4e-7
    ra, pr = rbclab.dimensional_to_nondimensional(nu, 9.81, 2.1e-4, chi, 0.01, 1.0, 0.0)
    assert pr == pytest.approx(nu / chi)
    assert ra == pytest.approx(9.81 * 2.1e-4 * 1e-6 / (nu * chi))
    with pytest.raises(rbclab.DomainError):
        rbclab.dimensional_to_nondimensional(-1.0, 9.81, 2.1e-4, chi, 0.01, 1.0, 0.0)
