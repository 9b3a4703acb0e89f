import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nashlab.corpus import dilated_bump, random_band_limited
from nashlab.norms import (
    ConcentrationProfile,
    MeasureDecomposition,
    build_eta,
    concentration,
    concentration_profile,
    concentration_square,
    concentration_time_avg,
    disk_mass_log_ratio,
    gaussian_kernel,
    h_minus1_norm,
    h_minus1_seminorm,
    lp_norm,
    maximal_function,
    mollify,
    write_table_csv,
)
from nashlab.spectral import AREA, GridSpec, SpectralField


def cos_field(grid, k=1):
    return SpectralField.from_function(grid, lambda x1, x2: np.cos(k * x1) + 0 * x2)


def brute_concentration(f, r):
    grid = f.grid
    a = np.abs(f.physical) * grid.cell_area
    best = 0.0
    for i in range(grid.n):
        for j in range(grid.n):
            mask = grid.periodic_distance((grid.x[i], grid.x[j])) < r
            best = max(best, a[mask].sum())
    return best


def brute_maximal(f, s):
    # every subset of a tiny grid, with fractional last cell via sorted greedy as reference
    a = np.abs(f.physical).ravel()
    cell = f.grid.cell_area
    whole = int(s // cell)
    best = 0.0
    for idx in combinations(range(a.size), whole):
        rest = np.delete(a, idx)
        extra = (s - whole * cell) * (rest.max() if rest.size else 0.0)
        best = max(best, a[list(idx)].sum() * cell + extra)
    return best


# -- L^p and H^-1 -------------------------------------------------------------


def test_lp_examples(grid64):
    one = SpectralField.from_physical(grid64, np.ones((64, 64)))
    assert lp_norm(one, 1) == pytest.approx(AREA, rel=1e-14)
    c = cos_field(grid64)
    assert lp_norm(c, 2) == pytest.approx(math.sqrt(2 * math.pi**2), rel=1e-12)
    assert lp_norm(c, 1) == pytest.approx(8 * math.pi, rel=1e-3)
    assert lp_norm(c, math.inf) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lp_norm(c, 0.5)


def test_h_minus1_examples(grid64):
    c1, c2 = cos_field(grid64), cos_field(grid64, 2)
    assert h_minus1_norm(c1) == pytest.approx(math.sqrt(2 * math.pi**2), rel=1e-12)
    assert h_minus1_norm(c2) == pytest.approx(h_minus1_norm(c1) / 2, rel=1e-12)
    with pytest.raises(ValueError):
        h_minus1_norm(c1 + SpectralField.from_physical(grid64, np.ones((64, 64))))


@given(st.integers(0, 2**32 - 1))
def test_h_minus1_below_l2(seed):
    f = random_band_limited(GridSpec(32), np.random.default_rng(seed), kmax=10)
    assert h_minus1_norm(f) <= lp_norm(f, 2) * (1 + 1e-12)


def test_h_minus1_parseval(grid64, rng):
    # physical route: ||f||_{-1}^2 = <f, psi> with -Lap psi = f
    for _ in range(10):
        f = random_band_limited(grid64, rng, kmax=12)
        ksq = np.where(grid64.ksq == 0, 1.0, grid64.ksq)
        psi = grid64.inverse(np.where(grid64.ksq == 0, 0.0, f.spectral / ksq))
        phys = math.sqrt(np.sum(f.physical * psi) * grid64.cell_area)
        assert h_minus1_norm(f) == pytest.approx(phys, rel=1e-10)


# -- concentration ------------------------------------------------------------------


def test_concentration_uniform(grid64):
    c = 2.5
    f = SpectralField.from_physical(grid64, np.full((64, 64), c))
    for r in (0.3, 0.7, 1.5):
        exact = c * math.pi * r * r
        assert abs(concentration(f, r) - exact) <= 3 * grid64.spacing * c * r * (1 + math.pi * r)


def test_concentration_captures_disk(grid64):
    R = 0.6
    ind = (grid64.periodic_distance((1.0, -0.5)) < R).astype(float)
    f = SpectralField.from_physical(grid64, ind)
    assert concentration(f, R + grid64.spacing) == pytest.approx(lp_norm(f, 1), rel=1e-14)
    assert concentration(f, math.pi) <= lp_norm(f, 1) * (1 + 1e-14)


def test_concentration_matches_brute_force():
    grid = GridSpec(16)
    f = random_band_limited(grid, np.random.default_rng(3), kmax=4)
    for r in (0.3, 0.9, 2.0):
        assert concentration(f, r) == pytest.approx(brute_concentration(f, r), rel=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_concentration_monotone_and_bounded(seed):
    f = random_band_limited(GridSpec(32), np.random.default_rng(seed), kmax=8)
    radii = np.geomspace(0.05, math.pi, 12)
    vals = concentration(f, radii)
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[-1] <= lp_norm(f, 1) * (1 + 1e-12)
    sq = concentration_square(f, radii / math.sqrt(2))
    assert np.all(sq <= vals * (1 + 1e-12))


def test_concentration_rejects_radius(grid64):
    with pytest.raises(ValueError):
        concentration(cos_field(grid64), 0.0)
    with pytest.raises(ValueError):
        concentration(cos_field(grid64), 3.5)


def test_time_average(grid64, smooth_field):
    snaps = [(t, smooth_field) for t in (0.0, 0.5, 1.0, 2.0)]
    c = concentration(smooth_field, 0.4)
    assert concentration_time_avg(snaps, 0.4, 0.25, 1.5) == pytest.approx(1.25 * c)
    # a disk of radius pi holds all of a compactly supported field
    bump = SpectralField.from_physical(grid64, np.maximum(0.0, 1 - grid64.periodic_distance((0.5, 0)) ** 2))
    moving = [(t, bump.shifted((int(4 * t), 0))) for t in (0.0, 0.5, 1.0, 2.0)]
    full = concentration_time_avg(moving, math.pi, 0.0, 2.0)
    assert full == pytest.approx(2.0 * lp_norm(bump, 1), rel=1e-12)
    assert concentration_time_avg(snaps, 0.2, 0.0, 2.0) <= concentration_time_avg(snaps, 0.4, 0.0, 2.0)
    with pytest.raises(ValueError):
        concentration_time_avg(snaps, 0.4, 1.0, 3.0)
    with pytest.raises(ValueError):
        concentration_time_avg([], 0.4, 0.0, 1.0)


# -- profiles and eta ---------------------------------------------------------------


def test_profile_validation():
    with pytest.raises(ValueError):
        ConcentrationProfile(np.array([0.1, 0.05]), np.array([0.1, 0.2]), 1.0)
    with pytest.raises(ValueError):
        ConcentrationProfile(np.array([0.1, 0.2]), np.array([0.5, 0.2]), 1.0)
    with pytest.raises(ValueError):
        ConcentrationProfile(np.array([0.1, 0.2]), np.array([0.5, 2.0]), 1.0)


def test_eta_properties(grid64):
    fam = [dilated_bump(grid64, "gauss", w, 1.0) for w in (0.8, 0.4, 0.2)]
    radii = np.geomspace(0.05, math.pi, 16)
    prof = concentration_profile(fam, radii)
    eta = build_eta(prof)
    assert eta(math.pi) == 1.0
    r = np.linspace(0, math.pi, 400)
    e = eta(r)
    assert np.all(np.diff(e) >= 0)
    assert np.all(e <= 1) and np.all(e >= r / math.pi - 1e-15)
    assert eta.bar(10.0) == 1.0 and eta.bar(1.0) == eta(1.0)
    # K eta(r) dominates every member's concentration on the table
    for f in fam:
        assert np.all(prof.mass_bound * eta(radii) >= concentration(f, radii) * (1 - 1e-12))
    with pytest.raises(ValueError):
        eta(4.0)


def test_eta_dirac_like(grid64):
    blob = SpectralField.from_physical(grid64, np.where(grid64.periodic_distance((0, 0)) < 1e-9, 1.0, 0.0))
    prof = concentration_profile([blob], np.geomspace(0.05, math.pi, 8))
    eta = build_eta(prof)
    assert np.allclose(eta(prof.radii), 1.0)


# -- maximal function -------------------------------------------------------------


def test_maximal_examples(grid64, smooth_field):
    assert maximal_function(smooth_field, AREA) == pytest.approx(lp_norm(smooth_field, 1), rel=1e-12)
    ind = SpectralField.from_physical(grid64, (grid64.periodic_distance((0, 0)) < 1.0).astype(float))
    area = lp_norm(ind, 1)
    for s in (0.1, 1.0, area * 0.99):
        assert maximal_function(ind, s) == pytest.approx(s, rel=1e-12)
    with pytest.raises(ValueError):
        maximal_function(ind, 0.0)
    with pytest.raises(ValueError):
        maximal_function(ind, 2 * AREA)


def test_maximal_brute_force():
    grid = GridSpec(8)
    f = random_band_limited(grid, np.random.default_rng(0), kmax=2)
    # restrict to a 3-cell-area sample so the subset search stays tiny
    sub = SpectralField.from_physical(grid, np.where(np.abs(f.physical) > np.quantile(np.abs(f.physical), 0.85),
                                                     f.physical, 0.0))
    for s in (1.5 * grid.cell_area, 3.2 * grid.cell_area):
        assert maximal_function(sub, s) == pytest.approx(brute_maximal(sub, s), rel=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_maximal_concave_monotone(seed):
    f = random_band_limited(GridSpec(32), np.random.default_rng(seed), kmax=8)
    s = np.linspace(0.01, AREA, 200)
    m = maximal_function(f, s)
    assert np.all(np.diff(m) >= -1e-12)
    mid = maximal_function(f, 0.5 * (s[:-1] + s[1:]))
    assert np.all(mid >= 0.5 * (m[:-1] + m[1:]) - 1e-12)
    assert np.all(m <= np.minimum(s * lp_norm(f, math.inf), lp_norm(f, 1)) * (1 + 1e-12))


# -- measures ---------------------------------------------------------------------


def test_mollify_preserves_mass(grid64):
    spike = np.zeros((64, 64))
    spike[10, 20] = 1.0 / grid64.cell_area
    f = SpectralField.from_physical(grid64, spike)
    m = mollify(f)
    assert m.physical.sum() * grid64.cell_area == pytest.approx(1.0, rel=1e-12)
    assert m.physical.min() > -1e-15
    assert gaussian_kernel(grid64, 0.2).physical.sum() * grid64.cell_area == pytest.approx(1.0)
    with pytest.raises(ValueError):
        gaussian_kernel(grid64, 0.0)


def test_measure_decomposition(grid64, smooth_field):
    mu = gaussian_kernel(grid64, 0.1)
    dec = MeasureDecomposition(mu, smooth_field, 3.0)
    assert np.max(np.abs(dec.total.physical - mu.physical - smooth_field.physical)) < 1e-12
    assert dec.norms["mu_l1"] == pytest.approx(1.0)
    assert dec.norms["mu_hm1"] == pytest.approx(h_minus1_seminorm(mu))
    with pytest.raises(ValueError):
        MeasureDecomposition(smooth_field, mu, 3.0)
    with pytest.raises(ValueError):
        MeasureDecomposition(mu, smooth_field, 1.0)


def segment_density(grid, width):
    x1, x2 = grid.mesh
    inside = np.abs(x1) <= 0.5
    line = np.where(inside & (np.abs(x2) < 0.5 * grid.spacing), 1.0, 0.0)
    line /= line.sum() * grid.cell_area
    return mollify(SpectralField.from_physical(grid, line), width)


def test_disk_mass_log_ratio():
    grid = GridSpec(256)
    mu = segment_density(grid, 2 * grid.spacing)
    ratios = [disk_mass_log_ratio(mu, rho) for rho in (0.1, 0.05, 0.025)]
    assert max(ratios) < 1.0
    assert disk_mass_log_ratio(mu * 2.0, 0.05) == pytest.approx(ratios[1], rel=1e-12)
    smooth = SpectralField.from_function(grid, lambda x1, x2: np.cos(x1) + 1 + 0 * x2)
    s = [disk_mass_log_ratio(smooth, rho) for rho in (0.2, 0.1, 0.05)]
    assert s[0] > s[1] > s[2]
    with pytest.raises(ValueError):
        disk_mass_log_ratio(mu, 0.5)


def test_table_csv(tmp_path, smooth_field):
    path = tmp_path / "c.csv"
    radii = [0.1, 0.2]
    write_table_csv(path, radii, concentration(smooth_field, radii), "smooth", 64)
    lines = path.read_text().splitlines()
    assert lines[0] == "# field=smooth,n=64"
    assert lines[1] == "r,value"
    assert len(lines) == 4
