"""Built-in function corpora and corpus-level runs of the inequality checkers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .inequalities import (
    InequalityReport,
    PreconditionError,
    build_phi_integral,
    build_upsilon,
    check_convolution_bound,
    check_refined_nash,
    check_refined_projection,
    preset_log_epsilon,
)
from .norms import build_eta, concentration_profile, lp_norm
from .spectral import GridSpec, SpectralField, gradient_l2

SHAPES = ("gauss", "bump", "dipole", "ring", "aniso")
_GOLDEN = math.pi * (3 - math.sqrt(5))


def random_band_limited(grid: GridSpec, rng: np.random.Generator, kmax: int = 12,
                        mean_free: bool = True) -> SpectralField:
    kmax = min(kmax, grid.dealias_cutoff)
    coeffs = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    coeffs = np.where(grid.kinf <= kmax, coeffs / (1.0 + grid.ksq), 0.0)
    if mean_free:
        coeffs[0, 0] = 0.0
    values = np.fft.ifft2(coeffs * grid._phase).real * grid.n**2
    return SpectralField.from_physical(grid, values)


def ball_supported(grid: GridSpec, rng: np.random.Generator, radius: float) -> SpectralField:
    """Random smooth profile times a C-infinity bump supported in |y| < radius."""
    d = grid.periodic_distance((0.0, 0.0))
    x1, x2 = grid.mesh
    rho = d / radius
    inside = rho < 1
    bump = np.where(inside, np.exp(-1.0 / np.where(inside, 1 - rho**2, 1.0)), 0.0)
    k = rng.integers(1, 6, size=2)
    mod = 1.0 + rng.uniform(0.2, 0.9) * np.cos(k[0] * x1 / radius + k[1] * x2 / radius + rng.uniform(0, 6.3))
    return SpectralField.from_physical(grid, bump * mod)


def _bump_values(grid, shape, width, center, angle):
    x1, x2 = grid.mesh
    d1 = (x1 - center[0] + math.pi) % (2 * math.pi) - math.pi
    d2 = (x2 - center[1] + math.pi) % (2 * math.pi) - math.pi
    if shape == "gauss":
        return np.exp(-(d1**2 + d2**2) / (2 * width**2))
    if shape == "bump":
        rho2 = (d1**2 + d2**2) / width**2
        inside = rho2 < 1
        return np.where(inside, np.exp(-1.0 / np.where(inside, 1 - rho2, 1.0)), 0.0)
    if shape == "ring":
        return np.exp(-((np.hypot(d1, d2) - 3 * width) ** 2) / (2 * width**2))
    if shape == "aniso":
        c, s = math.cos(angle), math.sin(angle)
        a, b = c * d1 + s * d2, -s * d1 + c * d2
        return np.exp(-(a**2 / (2 * width**2) + b**2 / (0.5 * width**2)))
    raise ValueError(f"unknown bump shape {shape!r}")


def dilated_bump(grid: GridSpec, shape: str, width: float, mass: float,
                 center=(0.0, 0.0), angle: float = 0.0) -> SpectralField:
    """Mean-free bump of positive mass ``mass`` (each lobe, for dipoles)."""
    cell = grid.cell_area
    if shape == "dipole":
        off = (1.25 * width * math.cos(angle), 1.25 * width * math.sin(angle))
        plus = _bump_values(grid, "gauss", width, (center[0] + off[0], center[1] + off[1]), 0.0)
        minus = _bump_values(grid, "gauss", width, (center[0] - off[0], center[1] - off[1]), 0.0)
        vals = mass * (plus / (plus.sum() * cell) - minus / (minus.sum() * cell))
    else:
        b = _bump_values(grid, shape, width, center, angle)
        vals = mass * b / (b.sum() * cell)
    return SpectralField.from_physical(grid, vals - vals.mean())


@dataclass
class Family:
    name: str
    members: list
    widths: list

    @property
    def mass_bound(self) -> float:
        return max(lp_norm(f, 1) for f in self.members)


_WIDTHS = {
    "gauss": (0.5, 7),
    "bump": (1.0, 6),
    "dipole": (0.35, 6),
    "ring": (0.2, 5),
    "aniso": (0.5, 6),
}


def family_spec(j: int):
    shape = SHAPES[j % len(SHAPES)]
    mass = 1.0 + 1.5 * (j // len(SHAPES))
    center = (1.7 * math.cos(j * _GOLDEN), 1.7 * math.sin(j * _GOLDEN))
    angle = 0.37 * j
    w0, count = _WIDTHS[shape]
    widths = [w0 * 2 ** (-i / 2) for i in range(count)]
    return shape, mass, center, angle, widths


def dilated_bump_corpus(grid: GridSpec, families: int = 20) -> list[Family]:
    out = []
    for j in range(families):
        shape, mass, center, angle, widths = family_spec(j)
        members = [dilated_bump(grid, shape, w, mass, center, angle) for w in widths]
        out.append(Family(f"{shape}-{j:02d}", members, widths))
    return out


PROFILE_RADII = np.geomspace(0.02, math.pi, 24)


@dataclass
class FamilyResult:
    name: str
    mass_bound: float
    projection_constant: float
    nash_constant: float
    nash_argmax: int
    reports: list[InequalityReport] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    eta: object = None
    members: list = field(default_factory=list)


def run_family(family: Family, alpha: float = 0.25) -> FamilyResult:
    """Empirical constants of the refined projection (log preset) and refined Nash checks."""
    grads = [gradient_l2(f) for f in family.members]
    needed = [g**-0.25 for g in grads if g > 1]
    radii = np.unique(np.concatenate([PROFILE_RADII, needed]))
    profile = concentration_profile(family.members, radii, label=family.name)
    eta = build_eta(profile)
    reports, skipped = [], []
    proj, nash = [], []
    for i, f in enumerate(family.members):
        try:
            a, eps, N = preset_log_epsilon(f, alpha)
            rep = check_refined_projection(f, a, eps, N)
            rep.params.update(member=i, family=family.name)
            reports.append(rep)
            proj.append(rep.ratio)
        except PreconditionError as exc:
            skipped.append(f"projection member {i}: {exc}")
        try:
            rep = check_refined_nash(f, eta)
            rep.params.update(member=i, family=family.name)
            reports.append(rep)
            nash.append((rep.ratio, i))
        except PreconditionError as exc:
            skipped.append(f"nash member {i}: {exc}")
    best = max(nash, key=lambda t: (t[0], -t[1])) if nash else (math.nan, -1)
    return FamilyResult(
        family.name,
        profile.mass_bound,
        max(proj) if proj else math.nan,
        best[0],
        best[1],
        reports,
        skipped,
        eta,
        family.members,
    )


def calibrated_closure(results: list[FamilyResult]) -> list[dict]:
    """Check Upsilon(||f||^2) <= ||grad f||^2 with Phi built from the corpus-wide constant.

    For a family with mass bound K the Phi constant is C* (K^2 + 1), C* the
    largest refined-Nash ratio over the whole corpus.  Returns one record per
    tested member; a violation has ``ok`` False.
    """
    c_star = max(r.nash_constant for r in results if np.isfinite(r.nash_constant))
    out = []
    for res in results:
        phi = build_phi_integral(res.eta.bar, c_star * (res.mass_bound**2 + 1))
        ups = build_upsilon(phi)
        for i, f in enumerate(res.members):
            g = gradient_l2(f)
            if not g > 1:
                continue
            lhs = ups(lp_norm(f, 2) ** 2)
            out.append({"family": res.name, "member": i, "upsilon": lhs, "grad_sq": g * g,
                        "ok": bool(lhs <= g * g * (1 + 1e-9))})
    return out


def convolution_suite(grid: GridSpec, n_f: int = 100, n_g: int = 10, seed: int = 0):
    """Convolution bound over random band-limited f and ball-supported g."""
    rng = np.random.default_rng(seed)
    gs = []
    for j in range(n_g):
        radius = 0.15 + 0.25 * j
        gs.append((radius, ball_supported(grid, rng, radius)))
    reports = []
    for i in range(n_f):
        f = random_band_limited(grid, rng, kmax=16)
        for radius, g in gs:
            rep = check_convolution_bound(f, g, radius)
            rep.params.update(f_index=i)
            reports.append(rep)
    return reports
