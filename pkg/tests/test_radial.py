import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import i0e as scipy_i0e

from nashlab.radial import (
    UnitHeatFlow,
    anomalous_dissipation,
    anomalous_dissipation_direct,
    crank_nicolson_radial,
    dissipation_hankel,
    indicator_profile,
    i0e,
    make_annular_profile,
    radial_disk_mass,
    radial_heat_evolve,
    radial_velocity,
    shear_mode_reference,
    write_zeta_table,
)
from nashlab.spectral import GridSpec


def test_i0e_against_scipy():
    z = np.concatenate([np.linspace(0, 40, 801), np.geomspace(40, 1e8, 60)])
    rel = np.abs(i0e(z) - scipy_i0e(z)) / scipy_i0e(z)
    assert rel.max() < 1e-13
    assert i0e(0.0) == 1.0
    with pytest.raises(ValueError):
        i0e(-1.0)


@given(st.floats(0.0, 1e4))
def test_i0e_scalar(z):
    assert i0e(z) == pytest.approx(float(scipy_i0e(z)), rel=1e-13)


def test_annular_constraints(annulus):
    assert abs(annulus.moment()) < 1e-12
    assert annulus.l1() == pytest.approx(1.0, abs=1e-12)
    assert annulus.meta["a1"] > 0 and annulus.meta["a2"] > 0
    with pytest.raises(ValueError):
        make_annular_profile(1.0, 0.5, 1.5)


def test_scaled_profile_keeps_mass(annulus):
    s = annulus.scaled(0.01)
    assert s.l1() == pytest.approx(1.0, abs=1e-12)
    assert s.support == pytest.approx((0.005, 0.015))
    assert s.l2_sq() == pytest.approx(annulus.l2_sq() / 1e-4, rel=1e-12)


def test_short_time_limit(annulus):
    r = np.linspace(0.6, 1.4, 41)
    ev = radial_heat_evolve(annulus, 1.0, 1e-6, r_nodes=r)
    assert np.max(np.abs(ev.values - annulus.func(r))) < 1e-3 * np.max(np.abs(annulus.values))


def test_heat_flow_conserves_mass_and_decays():
    disk = indicator_profile(1.0)
    assert disk.l1() == pytest.approx(math.pi, rel=1e-12)
    previous = disk.l2_sq()
    for t in (0.01, 0.1, 1.0):
        ev = radial_heat_evolve(disk, 1.0, t)
        mass = 2 * math.pi * float(np.sum(ev.weights * ev.r_nodes * ev.values))
        assert mass == pytest.approx(math.pi, rel=1e-9)
        assert ev.l2_sq() < previous
        previous = ev.l2_sq()
    with pytest.raises(ValueError):
        radial_heat_evolve(disk, 0.0, 1.0)


def test_radial_velocity_of_disk():
    u = radial_velocity(indicator_profile(1.0))
    for r in (0.1, 0.5, 0.9):
        assert u(r) == pytest.approx(r / 2, rel=1e-12)
    for r in (1.5, 3.0):
        assert u(r) == pytest.approx(1 / (2 * r), rel=1e-12)
    assert u(0.0) == 0.0


def test_radial_velocity_of_annulus(annulus):
    u = radial_velocity(annulus)
    assert u(0.3) == 0.0
    assert abs(u(2.0)) < 1e-12
    assert u(1.0) > 0
    tabulated = radial_velocity(annulus.__class__(annulus.r_nodes, annulus.values, annulus.weights))
    assert tabulated(1.0) == pytest.approx(u(1.0), rel=1e-3)


def test_disk_mass(annulus):
    assert radial_disk_mass(annulus, 10.0) == pytest.approx(1.0, abs=1e-12)
    assert radial_disk_mass(annulus, 1.0) == pytest.approx(0.5, abs=1e-9)
    assert radial_disk_mass(annulus, 0.4) == 0.0


def test_unit_flow_matches_hankel(annulus, flow):
    assert flow.integral(0.01) == pytest.approx(dissipation_hankel(annulus, 0.01), rel=1e-7)


def test_dissipation_grows_as_viscosity_drops(annulus, flow):
    z = [anomalous_dissipation(annulus, nu, 0.005, flow) for nu in (1.0, 0.5, 0.25)]
    assert z[0] < z[1] < z[2]
    assert z[2] < dissipation_hankel(annulus)
    with pytest.raises(ValueError):
        anomalous_dissipation(annulus, 0.0, 1.0, flow)


def test_direct_route_matches_rescaling(annulus):
    nu, T = 0.5, 5e-4
    direct = anomalous_dissipation_direct(annulus, nu, T, order=4)
    rescaled = anomalous_dissipation(annulus, nu, T, UnitHeatFlow(annulus, order=4))
    assert direct == pytest.approx(rescaled, rel=1e-9)


def test_ladder_edges(flow):
    e = flow.edges(1.0)
    assert e[0] == 0.0 and e[1] == 1e-3 and e[-1] == 1.0
    assert np.all(np.diff(e) > 0)
    with pytest.raises(ValueError):
        flow.integral(0.0)


def test_crank_nicolson_against_bessel():
    disk_like = make_annular_profile()
    r = np.linspace(0.05, 4.0, 80)
    cn = crank_nicolson_radial(disk_like.func, 1.0, [0.05, 0.2], r, 20.0, h=4e-3, dt=2e-4)
    for t, vals in cn.items():
        ref = radial_heat_evolve(disk_like, 1.0, t, r_nodes=r).values
        assert np.max(np.abs(vals - ref)) < 1e-3 * np.max(np.abs(ref))


def test_shear_reference():
    ref = shear_mode_reference(1, 0.01, 1.0)
    assert ref.zeta == pytest.approx(0.19543, abs=1e-5)
    assert shear_mode_reference(2, 0.01, 1.0).zeta < ref.zeta
    w = ref.omega(GridSpec(16), 1.0)
    assert w.physical.max() == pytest.approx(math.exp(-0.01), rel=1e-12)
    with pytest.raises(ValueError):
        shear_mode_reference(0, 0.01, 1.0)


def test_zeta_table(tmp_path):
    path = tmp_path / "z.csv"
    write_zeta_table(path, [(0.01, 0.5, "rescaled"), (0.0, 0.6, "limit")])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["nu", "zeta", "method"]
    assert rows[2][2] == "limit"
