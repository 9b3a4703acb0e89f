import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nashlab.corpus import random_band_limited
from nashlab.spectral import (
    AREA,
    GridSpec,
    SnapshotFormatError,
    SpectralField,
    biot_savart,
    convolve,
    dirichlet_kernel_1d,
    dirichlet_kernel_2d,
    dirichlet_l2_mass,
    dirichlet_tail_mass,
    gradient_l2,
    project_low_modes,
    read_snapshot,
    write_snapshot,
)


def tail_mass_exact(N, rho):
    # d_N^2 = sum_{|m| <= 2N} (2N + 1 - |m|) e^{imx}
    m = np.arange(1, 2 * N + 1)
    return (2 * N + 1) * (math.pi - rho) - 2 * np.sum((2 * N + 1 - m) * np.sin(m * rho) / m)


def brute_convolution(f, g):
    n = f.grid.n
    out = np.zeros((n, n))
    ar = np.arange(n)
    for i in range(n):
        for j in range(n):
            # x_i - y_l = -pi + (i - l + n/2) h
            rows = (i - ar + n // 2) % n
            cols = (j - ar + n // 2) % n
            out[i, j] = np.sum(f.physical[np.ix_(rows, cols)] * g.physical)
    return out * f.grid.cell_area


# -- grid ---------------------------------------------------------------------


@pytest.mark.parametrize("n", [0, 4, 12, 100])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        GridSpec(n)


def test_grid_basics():
    g = GridSpec(64)
    assert g.spacing == pytest.approx(2 * math.pi / 64)
    assert g.dealias_cutoff == 21
    assert g.x[0] == -math.pi


@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 16, 32]))
def test_round_trip_and_plancherel(seed, n):
    grid = GridSpec(n)
    vals = np.random.default_rng(seed).standard_normal((n, n))
    f = SpectralField.from_physical(grid, vals)
    back = grid.inverse(f.spectral)
    assert np.max(np.abs(back - vals)) <= 1e-12 * np.max(np.abs(vals))
    phys = np.sum(vals**2) * grid.cell_area
    assert f.l2_spectral() ** 2 == pytest.approx(phys, rel=1e-10)


def test_fourier_convention_single_mode(grid64):
    f = SpectralField.from_function(grid64, lambda x1, x2: np.cos(3 * x1) + 0 * x2)
    assert f.spectral[3, 0] == pytest.approx(0.5)
    assert f.spectral[-3, 0] == pytest.approx(0.5)
    assert f.mean_free


def test_parseval_gradient_consistency(grid64, rng):
    for _ in range(20):
        f = random_band_limited(grid64, rng, kmax=12)
        k1, k2 = grid64.wavenumbers
        d1 = grid64.inverse(1j * k1 * f.spectral)
        d2 = grid64.inverse(1j * k2 * f.spectral)
        phys = math.sqrt(np.sum(d1**2 + d2**2) * grid64.cell_area)
        assert gradient_l2(f) == pytest.approx(phys, rel=1e-10)


# -- Dirichlet kernels -------------------------------------------------------------


def test_dirichlet_1d_values():
    assert dirichlet_kernel_1d(5, 0.0) == 11
    assert dirichlet_kernel_1d(1, math.pi) == pytest.approx(-1.0)
    z = np.linspace(-math.pi, math.pi, 2001)
    direct = sum(np.cos(k * z) for k in range(-7, 8))
    assert np.max(np.abs(dirichlet_kernel_1d(7, z) - direct)) < 1e-11


@pytest.mark.parametrize("N", [0, 1, 3, 10])
def test_dirichlet_1d_integral(N):
    from scipy import integrate

    val, _ = integrate.quad(lambda z: dirichlet_kernel_1d(N, z), -math.pi, math.pi, limit=200)
    assert val == pytest.approx(2 * math.pi, rel=1e-10)


def test_dirichlet_2d_values_and_symmetry():
    assert dirichlet_kernel_2d(2, 0.0, 0.0) == 25
    assert dirichlet_kernel_2d(1, math.pi, 0.0) == pytest.approx(-3.0)
    a, b = 0.37, -1.2
    v = dirichlet_kernel_2d(4, a, b)
    assert dirichlet_kernel_2d(4, b, a) == pytest.approx(v)
    assert dirichlet_kernel_2d(4, -a, b) == pytest.approx(v)


@pytest.mark.parametrize("N", [0, 1, 2, 4, 16])
def test_dirichlet_mass_exact(N):
    assert dirichlet_l2_mass(N) == pytest.approx((2 * math.pi * (2 * N + 1)) ** 2, rel=1e-10)


def test_dirichlet_mass_examples():
    assert dirichlet_l2_mass(0) == pytest.approx(39.478, abs=1e-3)
    assert dirichlet_l2_mass(1) == pytest.approx(355.31, abs=1e-2)
    with pytest.raises(ValueError):
        dirichlet_l2_mass(8, n=16)


def test_tail_mass_examples():
    assert dirichlet_tail_mass(0, math.pi / 2) == pytest.approx(math.pi / 2, rel=1e-12)
    assert dirichlet_tail_mass(16, 0.1) <= math.pi**2 / 0.1
    assert dirichlet_tail_mass(8, 1.0) <= math.pi**2
    for bad in (0.0, -1.0, math.pi, 4.0):
        with pytest.raises(ValueError):
            dirichlet_tail_mass(2, bad)


@given(st.integers(0, 40), st.floats(0.01, 3.1))
def test_tail_mass_matches_exact_sum(N, rho):
    assert dirichlet_tail_mass(N, rho) == pytest.approx(tail_mass_exact(N, rho), rel=1e-8, abs=1e-10)
    assert dirichlet_tail_mass(N, rho) * rho / math.pi**2 <= 1.0


# -- projection, convolution -----------------------------------------------------


def test_projection_single_modes(grid64):
    f = SpectralField.from_function(grid64, lambda x1, x2: np.cos(3 * x1) + 0 * x2)
    assert np.allclose(project_low_modes(f, 4).physical, f.physical, atol=1e-14)
    assert np.allclose(project_low_modes(f, 3).physical, 0.0, atol=1e-14)
    with pytest.raises(ValueError):
        project_low_modes(f, 22)
    with pytest.raises(ValueError):
        project_low_modes(f, 0)


def test_projection_idempotent_and_contractive(smooth_field):
    p = project_low_modes(smooth_field, 6)
    pp = project_low_modes(p, 6)
    assert np.array_equal(p.spectral, pp.spectral)
    assert p.l2_spectral() <= smooth_field.l2_spectral()


@pytest.mark.parametrize("N", [1, 3, 7])
def test_projection_is_convolution_with_dirichlet(grid64, rng, N):
    f = random_band_limited(grid64, rng, kmax=15)
    x1, x2 = grid64.mesh
    kernel = SpectralField.from_physical(grid64, dirichlet_kernel_2d(N - 1, x1, x2))
    conv = convolve(f, kernel)
    diff = conv.physical / AREA - project_low_modes(f, N).physical
    assert np.max(np.abs(diff)) <= 1e-10 * np.max(np.abs(f.physical))


def test_convolution_matches_brute_force():
    grid = GridSpec(16)
    rng = np.random.default_rng(7)
    f = SpectralField.from_physical(grid, rng.standard_normal((16, 16)))
    g = SpectralField.from_physical(grid, rng.standard_normal((16, 16)))
    ref = brute_convolution(f, g)
    assert np.max(np.abs(convolve(f, g).physical - ref)) < 1e-12 * np.max(np.abs(ref))


# -- Biot-Savart ------------------------------------------------------------------


def test_biot_savart_shear(grid64):
    w = SpectralField.from_function(grid64, lambda x1, x2: np.cos(x1) + 0 * x2)
    u = biot_savart(w)
    assert np.max(np.abs(u.u1.physical)) < 1e-14
    assert np.max(np.abs(u.u2.physical - np.sin(grid64.mesh[0]))) < 1e-14


def test_biot_savart_zero_and_mean(grid64):
    u = biot_savart(SpectralField.zeros(grid64))
    assert not np.any(u.u1.physical) and not np.any(u.u2.physical)
    with pytest.raises(ValueError):
        biot_savart(SpectralField.from_physical(grid64, np.ones((64, 64))))


@given(st.integers(0, 2**32 - 1))
def test_biot_savart_divergence_free_and_curl(seed):
    grid = GridSpec(32)
    w = random_band_limited(grid, np.random.default_rng(seed), kmax=10)
    u = biot_savart(w)
    scale = np.max(np.abs(w.physical))
    assert np.max(np.abs(u.divergence().physical)) <= 1e-12 * scale
    assert np.max(np.abs(u.curl().physical - w.physical)) <= 1e-10 * scale
    assert abs(u.u1.mean) < 1e-15 and abs(u.u2.mean) < 1e-15


def test_gradient_norm_examples(grid64):
    c1 = SpectralField.from_function(grid64, lambda x1, x2: np.cos(x1) + 0 * x2)
    c2 = SpectralField.from_function(grid64, lambda x1, x2: np.cos(2 * x1) + 0 * x2)
    assert gradient_l2(c1) == pytest.approx(math.sqrt(2 * math.pi**2), rel=1e-12)
    assert gradient_l2(c2) == pytest.approx(2 * gradient_l2(c1), rel=1e-12)
    assert gradient_l2(SpectralField.from_physical(grid64, np.full((64, 64), 3.0))) == 0.0


# -- snapshots --------------------------------------------------------------------


def test_snapshot_round_trip(tmp_path, smooth_field):
    path = tmp_path / "w.adlb"
    write_snapshot(path, smooth_field, 0.25, 1e-3)
    f, t, nu = read_snapshot(path)
    assert (t, nu) == (0.25, 1e-3)
    assert np.array_equal(f.physical, smooth_field.physical)
    raw = path.read_bytes()
    assert raw[:4] == b"ADLB"


def test_snapshot_rejects_corruption(tmp_path, smooth_field):
    path = tmp_path / "w.adlb"
    write_snapshot(path, smooth_field, 0.0, 1.0)
    raw = bytearray(path.read_bytes())
    bad = tmp_path / "bad.adlb"
    bad.write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(bad)
    raw[4] = 2
    bad.write_bytes(bytes(raw))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(bad)
    bad.write_bytes(bytes(raw[:100]))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(bad)
