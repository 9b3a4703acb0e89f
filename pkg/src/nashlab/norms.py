"""Norms, disk-concentration functionals and the rearrangement maximal function."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .spectral import AREA, GridSpec, SpectralField

# -- norms ------------------------------------------------------------------


def lp_norm(f: SpectralField, p: float) -> float:
    """Rectangle-rule L^p norm; p = inf gives max |f|."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.physical)
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum() * f.grid.cell_area)
    return float((np.sum(a**p) * f.grid.cell_area) ** (1.0 / p))


def _h_minus1(f: SpectralField) -> float:
    ksq = f.grid.ksq
    safe = np.where(ksq == 0, 1.0, ksq)
    terms = np.where(ksq == 0, 0.0, np.abs(f.spectral) ** 2 / safe)
    return math.sqrt(AREA * float(terms.sum()))


def h_minus1_norm(f: SpectralField) -> float:
    if not f.mean_free:
        raise ValueError("H^-1 norm is defined here for mean-free fields only")
    return _h_minus1(f)


def h_minus1_seminorm(f: SpectralField) -> float:
    """H^-1 norm of f minus its mean; used for nonnegative measures on the torus."""
    return _h_minus1(f)


# -- concentration ----------------------------------------------------------


@lru_cache(maxsize=96)
def _window_hat(n: int, r: float, kind: str) -> np.ndarray:
    grid = GridSpec(n)
    dist = grid.offset_distance if kind == "disk" else grid.offset_distance_inf
    return np.fft.rfft2((dist < r).astype(float))


def _window_sums(f: SpectralField, radii, kind: str) -> np.ndarray:
    grid = f.grid
    a_hat = np.fft.rfft2(np.abs(f.physical) * grid.cell_area)
    out = np.empty(len(radii))
    for i, r in enumerate(radii):
        s = np.fft.irfft2(a_hat * _window_hat(grid.n, float(r), kind), s=(grid.n, grid.n))
        out[i] = max(float(s.max()), 0.0)
    return out


def _check_radius(r):
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0) or np.any(r > math.pi):
        raise ValueError("radius must lie in (0, pi]")
    return r


def concentration(f: SpectralField, r):
    """max over grid centers z of the |f|-mass of cells with |z - y| < r (periodic).

    Accepts a scalar radius or a sequence of radii.
    """
    radii = _check_radius(r)
    out = _window_sums(f, radii, "disk")
    return float(out[0]) if np.ndim(r) == 0 else out


def concentration_square(f: SpectralField, r):
    """Same as :func:`concentration` but over l-infinity squares |z - y|_inf < r."""
    radii = _check_radius(r)
    out = _window_sums(f, radii, "square")
    return float(out[0]) if np.ndim(r) == 0 else out


def concentration_time_avg(snapshots, r: float, t1: float, t2: float) -> float:
    """Trapezoid in time of concentration(f(t), r) over [t1, t2].

    ``snapshots`` is a sequence of (t, SpectralField) sorted by time.  The
    endpoint values are linearly interpolated when t1, t2 fall between
    stored times.
    """
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    times = np.array([t for t, _ in snapshots], dtype=float)
    if times.size == 0 or t1 < times[0] - 1e-12 or t2 > times[-1] + 1e-12:
        raise ValueError("snapshot range does not cover [t1, t2]")
    lo = max(np.searchsorted(times, t1, side="right") - 1, 0)
    hi = min(np.searchsorted(times, t2, side="left"), times.size - 1)
    idx = range(lo, hi + 1)
    ts = times[lo : hi + 1]
    cs = np.array([concentration(snapshots[i][1], r) for i in idx])
    if ts.size == 1:
        return float(cs[0] * (t2 - t1))
    grid_t = np.unique(np.clip(np.concatenate([[t1], ts, [t2]]), t1, t2))
    vals = np.interp(grid_t, ts, cs)
    return float(np.trapezoid(vals, grid_t))


@dataclass
class ConcentrationProfile:
    """Tabulated sup-disk mass r -> sup_f sup_z mass(|f|, B(z, r)) for a family."""

    radii: np.ndarray
    values: np.ndarray
    mass_bound: float
    bias: float = 0.0  # grid spacing: sup over grid centers only
    label: str = ""

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.radii.size == 0 or self.radii.shape != self.values.shape:
            raise ValueError("profile needs matching, nonempty radii and values")
        if np.any(np.diff(self.radii) <= 0) or self.radii[0] <= 0 or self.radii[-1] > math.pi:
            raise ValueError("radii must be increasing in (0, pi]")
        scale = max(self.mass_bound, 1e-300)
        if np.any(np.diff(self.values) < -1e-12 * scale):
            raise ValueError("concentration values must be nondecreasing in r")
        if self.values[-1] > self.mass_bound * (1 + 1e-12):
            raise ValueError("concentration exceeds the mass bound")
        # rounding-level monotonicity repair
        self.values = np.maximum.accumulate(self.values)


def concentration_profile(fields, radii, mass_bound: float | None = None, label: str = ""):
    fields = list(fields)
    radii = np.asarray(radii, dtype=float)
    sup = np.zeros_like(radii)
    for f in fields:
        sup = np.maximum(sup, concentration(f, radii))
    K = max(lp_norm(f, 1) for f in fields) if mass_bound is None else mass_bound
    return ConcentrationProfile(radii, sup, K, bias=fields[0].grid.spacing, label=label)


class Eta:
    """Normalized concentration envelope eta and its extension eta_bar to [0, inf).

    eta(r) = max(sup-mass(r) / K, r / pi) on [0, pi], piecewise linear between
    tabulated radii (linear from the origin below the first radius, held
    constant after the last); eta_bar = 1 beyond pi.
    """

    def __init__(self, profile: ConcentrationProfile):
        self.profile = profile
        self.mass_bound = profile.mass_bound
        self._r = np.concatenate([[0.0], profile.radii])
        self._v = np.concatenate([[0.0], np.minimum(profile.values / profile.mass_bound, 1.0)])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > math.pi * (1 + 1e-12)):
            raise ValueError("eta is defined on [0, pi]")
        out = np.maximum(np.interp(r, self._r, self._v), r / math.pi)
        out = np.minimum(out, 1.0)
        return float(out) if out.ndim == 0 else out

    def bar(self, r):
        r = np.asarray(r, dtype=float)
        inside = np.minimum(r, math.pi)
        out = np.where(r > math.pi, 1.0, self(inside))
        return float(out) if out.ndim == 0 else out


def build_eta(profile: ConcentrationProfile) -> Eta:
    return Eta(profile)


# -- rearrangement-invariant maximal function -------------------------------


def maximal_function(f: SpectralField, s):
    """M_s(f) = sup over sets E with |E| = s of the integral of |f| over E.

    Takes the largest cells first and pro-rates the last one.  ``s`` may be a
    scalar or an array of areas.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr <= 0) or np.any(s_arr > AREA * (1 + 1e-12)):
        raise ValueError("s must lie in (0, (2 pi)^2]")
    cell = f.grid.cell_area
    a = np.sort(np.abs(f.physical), axis=None)[::-1]
    csum = np.concatenate([[0.0], np.cumsum(a) * cell])
    q = np.minimum(np.floor(s_arr / cell).astype(int), a.size)
    rem = np.clip(s_arr - q * cell, 0.0, None)
    nxt = np.where(q < a.size, a[np.minimum(q, a.size - 1)], 0.0)
    out = csum[q] + rem * nxt
    return float(out[0]) if np.ndim(s) == 0 else out


# -- measures ---------------------------------------------------------------


def gaussian_kernel(grid: GridSpec, width: float, center=(0.0, 0.0)) -> SpectralField:
    """Unit-mass periodic Gaussian of standard deviation ``width``, cut at 6 widths."""
    if width <= 0:
        raise ValueError("mollification width must be positive")
    d = grid.periodic_distance(center)
    g = np.where(d <= 6 * width, np.exp(-0.5 * (d / width) ** 2), 0.0)
    total = g.sum() * grid.cell_area
    return SpectralField.from_physical(grid, g / total)


def mollify(f: SpectralField, width: float | None = None) -> SpectralField:
    """Convolve with the truncated Gaussian (default width two grid spacings).

    Preserves the discrete mass exactly.
    """
    grid = f.grid
    width = 2 * grid.spacing if width is None else width
    kern = gaussian_kernel(grid, width, center=(grid.x[0], grid.x[0]))
    # kernel centered on grid index (0, 0) so the circular convolution is unshifted
    k_hat = np.fft.rfft2(kern.physical * grid.cell_area)
    out = np.fft.irfft2(np.fft.rfft2(f.physical) * k_hat, s=(grid.n, grid.n))
    return SpectralField.from_physical(grid, out)


@dataclass
class MeasureDecomposition:
    """f = mu + w with mu >= 0 (mollified measure) and w in L^p."""

    mu: SpectralField
    w: SpectralField
    p: float
    norms: dict = field(init=False)

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("the L^p part needs p > 1")
        peak = float(np.abs(self.mu.physical).max())
        if self.mu.physical.min() < -1e-12 * peak:
            raise ValueError("measure part must be nonnegative")
        self.norms = {
            "mu_l1": lp_norm(self.mu, 1),
            "mu_hm1": h_minus1_seminorm(self.mu),
            "w_lp": lp_norm(self.w, self.p),
        }

    @property
    def total(self) -> SpectralField:
        return self.mu + self.w


def disk_mass_log_ratio(mu: SpectralField, rho: float) -> float:
    """concentration(mu, rho) * sqrt|log rho| / ||mu||_{H^-1}."""
    if not 0 < rho < 0.5:
        raise ValueError("rho must lie in (0, 1/2)")
    return concentration(mu, rho) * math.sqrt(abs(math.log(rho))) / h_minus1_seminorm(mu)


# -- output -----------------------------------------------------------------


def write_table_csv(path, xs, values, field_id: str, n: int, x_name: str = "r") -> None:
    """Write a (r_or_s, value) table preceded by a field/resolution header row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"# field={field_id}", f"n={n}"])
        w.writerow([x_name, "value"])
        for x, v in zip(xs, values):
            w.writerow([repr(float(x)), repr(float(v))])
