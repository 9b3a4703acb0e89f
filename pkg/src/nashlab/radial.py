"""Closed-form and one-dimensional oracles.

* shear modes, exact solutions of the torus solver;
* the planar radial example: mean-zero annular vorticity phi(|x|), scaled
  as nu^-2 phi(|x|/nu) and evolved by the heat equation (the nonlinear term
  of a radial flow is a gradient), whose dissipation does not vanish with nu.

Scaling used by :func:`anomalous_dissipation`: if Omega solves the unit-
viscosity heat equation from phi then omega(x, t) = nu^-2 Omega(x/nu, t/nu)
solves the viscosity-nu problem from the scaled data, ||omega(t)||_2^2 =
nu^-2 ||Omega(t/nu)||_2^2, and therefore

    nu int_0^T ||omega(t)||^2 dt = int_0^{T/nu} ||Omega(tau)||^2 dtau.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, interpolate
from scipy.linalg import solve_banded
from scipy.special import j0

from .spectral import GridSpec, SpectralField

# -- modified Bessel I0 ------------------------------------------------------

I0_SWITCH = 20.0


def i0e(z):
    """exp(-z) I0(z) for z >= 0: power series below 20, asymptotic expansion above."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("i0e is implemented for nonnegative arguments")
    out = np.empty_like(z)
    small = z < I0_SWITCH
    if np.any(small):
        zs = z[small]
        q = 0.25 * zs * zs
        term = np.ones_like(zs)
        total = np.ones_like(zs)
        for k in range(1, 70):
            term = term * q / (k * k)
            total += term
            if np.all(term <= 1e-17 * total):
                break
        out[small] = total * np.exp(-zs)
    if np.any(~small):
        zl = z[~small]
        term = np.ones_like(zl)
        total = np.ones_like(zl)
        for k in range(1, 30):
            term = term * (2 * k - 1) ** 2 / (8.0 * k * zl)
            total += term
            if np.all(np.abs(term) <= 1e-17 * total):
                break
        out[~small] = total / np.sqrt(2 * math.pi * zl)
    return out if out.ndim else float(out)


# -- radial profiles ---------------------------------------------------------


def gauss_panels(a: float, b: float, panels: int, order: int = 16):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass
class RadialProfile:
    """Radial function r -> omega(r) on quadrature nodes.

    ``weights`` integrate plain functions of r, so the planar integral of g
    is 2 pi sum(weights * r * g).  ``func`` is the exact profile when known.
    """

    r_nodes: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    func: Callable | None = None
    support: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict)

    def moment(self) -> float:
        """integral_0^inf s omega(s) ds."""
        return float(np.sum(self.weights * self.r_nodes * self.values))

    def l1(self) -> float:
        return 2 * math.pi * float(np.sum(self.weights * self.r_nodes * np.abs(self.values)))

    def l2_sq(self) -> float:
        return 2 * math.pi * float(np.sum(self.weights * self.r_nodes * self.values**2))

    def scaled(self, nu: float) -> RadialProfile:
        """The concentrating data nu^-2 phi(r / nu)."""
        if self.func is None:
            raise ValueError("scaling needs the exact profile")
        phi = self.func
        support = None if self.support is None else (nu * self.support[0], nu * self.support[1])
        return RadialProfile(nu * self.r_nodes, self.values / nu**2, nu * self.weights,
                             lambda s: phi(np.asarray(s) / nu) / nu**2, support, {"scale": nu})

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "value"])
            for r, v in zip(self.r_nodes, self.values):
                w.writerow([repr(float(r)), repr(float(v))])


def smooth_bump(a: float, b: float, smoothness: float = 1.0):
    """C-infinity bump exp(-smoothness / (1 - u^2)) on (a, b), u the affine map to (-1, 1)."""

    def f(s):
        s = np.asarray(s, dtype=float)
        u = (2 * s - a - b) / (b - a)
        inside = np.abs(u) < 1
        return np.where(inside, np.exp(-smoothness / np.where(inside, 1 - u * u, 1.0)), 0.0)

    return f


def make_annular_profile(r_inner: float = 0.5, r_mid: float = 1.0, r_outer: float = 1.5,
                         smoothness: float = 1.0, panels: int = 24, order: int = 16) -> RadialProfile:
    """phi = a1 bump[r_inner, r_mid] - a2 bump[r_mid, r_outer] with
    int s phi ds = 0 and int s |phi| ds = 1 / (2 pi)."""
    if not 0 < r_inner < r_mid < r_outer:
        raise ValueError("need 0 < r_inner < r_mid < r_outer")
    if smoothness <= 0:
        raise ValueError("smoothness must be positive")
    b1 = smooth_bump(r_inner, r_mid, smoothness)
    b2 = smooth_bump(r_mid, r_outer, smoothness)
    opts = {"epsabs": 0.0, "epsrel": 1e-13, "limit": 200}
    m1 = integrate.quad(lambda s: s * b1(s), r_inner, r_mid, **opts)[0]
    m2 = integrate.quad(lambda s: s * b2(s), r_mid, r_outer, **opts)[0]
    a1 = 1.0 / (4 * math.pi * m1)
    a2 = 1.0 / (4 * math.pi * m2)

    def phi(s):
        return a1 * b1(s) - a2 * b2(s)

    n1, w1 = gauss_panels(r_inner, r_mid, panels, order)
    n2, w2 = gauss_panels(r_mid, r_outer, panels, order)
    nodes = np.concatenate([n1, n2])
    weights = np.concatenate([w1, w2])
    meta = {"a1": a1, "a2": a2, "r_inner": r_inner, "r_mid": r_mid, "r_outer": r_outer,
            "smoothness": smoothness}
    return RadialProfile(nodes, phi(nodes), weights, phi, (r_inner, r_outer), meta)


def indicator_profile(radius: float = 1.0, panels: int = 64, order: int = 16) -> RadialProfile:
    nodes, weights = gauss_panels(0.0, radius, panels, order)

    def f(s):
        return np.where(np.asarray(s) < radius, 1.0, 0.0)

    return RadialProfile(nodes, f(nodes), weights, f, (0.0, radius))


def default_r_max(profile: RadialProfile, nu: float, t: float) -> float:
    return 20 * (profile.support[1] + 6 * math.sqrt(nu * t))


def evolution_nodes(profile: RadialProfile, nu: float, t: float, order: int = 16):
    """Nodes on [0, R] where R stops once the Gaussian tail is below 1e-16.

    The truncation radius R_max bounds R; beyond r_outer + 12 sqrt(nu t) the
    heat kernel has decayed by exp(-36) and nothing is lost.
    """
    lo, hi = profile.support
    width = math.sqrt(nu * t)
    extent = min(hi + 12 * width, default_r_max(profile, nu, t))
    # resolve the profile's own scale early on, the diffusive scale later
    panel = max((hi - lo) / 48, 0.25 * width)
    panels = max(8, math.ceil(extent / panel))
    return gauss_panels(0.0, extent, panels, order)


def heat_kernel_radial(r, s, nu_t):
    """Angular average of the planar heat kernel times s: s/(2 nu t) exp(-(r-s)^2/(4 nu t)) I0e(rs/(2 nu t))."""
    z = r * s / (2 * nu_t)
    return s / (2 * nu_t) * np.exp(-((r - s) ** 2) / (4 * nu_t)) * i0e(z)


def radial_heat_evolve(profile: RadialProfile, nu: float, t: float, r_nodes=None,
                       weights=None, tol: float = 1e-12) -> RadialProfile:
    """omega(r, t) = int_0^inf K_t(r, s) phi(s) ds by adaptive (vector) quadrature."""
    if not nu > 0 or not t > 0:
        raise ValueError("need nu > 0 and t > 0")
    if profile.func is None or profile.support is None:
        raise ValueError("evolution needs the exact, compactly supported profile")
    if r_nodes is None:
        r_nodes, weights = evolution_nodes(profile, nu, t)
    r_nodes = np.asarray(r_nodes, dtype=float)
    phi = profile.func
    lo, hi = profile.support
    breaks = [p for p in (profile.meta.get("r_mid"),) if p is not None and lo < p < hi]

    def integrand(s):
        return heat_kernel_radial(r_nodes, s, nu * t) * phi(s)

    edges = [lo, *breaks, hi]
    total = np.zeros_like(r_nodes)
    scale = float(np.max(np.abs(profile.values))) if profile.values.size else 1.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad_vec(integrand, a, b, epsabs=tol * scale, epsrel=tol, limit=2000)
        if not np.all(np.isfinite(val)) or err > 1e-6 * scale:
            raise ArithmeticError(f"heat-kernel quadrature did not converge (err={err:g})")
        total += val
    weights = np.zeros_like(r_nodes) if weights is None else np.asarray(weights, dtype=float)
    return RadialProfile(r_nodes, total, weights, None, None, {"nu": nu, "t": t})


def radial_velocity(profile: RadialProfile) -> Callable:
    """Azimuthal speed u_theta(r) = (1/r) int_0^r s omega(s) ds."""
    if profile.func is not None:
        f = profile.func
        lo, hi = profile.support if profile.support else (0.0, np.inf)
        bps = sorted({lo, hi, *(v for k, v in profile.meta.items() if k.startswith("r_"))})

        def u(r):
            if r <= 0:
                return 0.0
            upper = min(r, hi)
            pts = [p for p in bps if 0 < p < upper]
            edges = [0.0, *pts, upper]
            m = sum(integrate.quad(lambda s: s * f(s), a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
                    for a, b in zip(edges[:-1], edges[1:]) if b > a)
            return m / r

        return u
    r = profile.r_nodes
    spline = interpolate.CubicSpline(np.concatenate([[0.0], r]),
                                     np.concatenate([[0.0], r * profile.values]))
    anti = spline.antiderivative()
    r_end = r[-1]

    def u(x):
        if x <= 0:
            return 0.0
        return float(anti(min(x, r_end))) / x

    return u


def radial_disk_mass(profile: RadialProfile, radius: float) -> float:
    """Mass of |omega| in the disk of the given radius about the origin."""
    inside = profile.r_nodes < radius
    return 2 * math.pi * float(np.sum((profile.weights * profile.r_nodes * np.abs(profile.values))[inside]))


# -- dissipation of the concentrating family --------------------------------


class UnitHeatFlow:
    """tau -> ||Omega(tau)||_2^2 for unit-viscosity heat flow of a profile, memoized.

    Time integrals use composite Gauss-Legendre on a fixed panel ladder
    ([0, 1e-3] then ``per_decade`` log-spaced panels per decade), so the
    evaluations are shared between different upper limits.
    """

    def __init__(self, profile: RadialProfile, tol: float = 1e-11, order: int = 8,
                 per_decade: int = 3):
        self.profile = profile
        self.tol = tol
        self.order = order
        self.per_decade = per_decade
        self._cache: dict[float, float] = {0.0: profile.l2_sq()}

    def l2_sq(self, tau: float) -> float:
        tau = float(tau)
        if tau not in self._cache:
            nodes, weights = evolution_nodes(self.profile, 1.0, tau)
            ev = radial_heat_evolve(self.profile, 1.0, tau, nodes, weights, tol=self.tol)
            self._cache[tau] = ev.l2_sq()
        return self._cache[tau]

    def edges(self, b: float) -> list[float]:
        out = [0.0]
        j = 0
        while True:
            e = 1e-3 * 10 ** (j / self.per_decade)
            if e >= b * (1 - 1e-12):
                break
            out.append(e)
            j += 1
        out.append(float(b))
        return out

    def integral(self, b: float) -> float:
        """int_0^b ||Omega(tau)||^2 dtau."""
        if not b > 0:
            raise ValueError("upper limit must be positive")
        x, w = np.polynomial.legendre.leggauss(self.order)
        edges = self.edges(b)
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
            total += half * sum(wi * self.l2_sq(mid + half * xi) for xi, wi in zip(x, w))
        return float(total)

    def limit(self, tau_max: float = 1e3) -> float:
        """int_0^inf: quadrature to tau_max plus the power-law tail fitted at the end."""
        head = self.integral(tau_max)
        a, b = self.l2_sq(tau_max / 2), self.l2_sq(tau_max)
        p = math.log(a / b) / math.log(2.0)
        tail = b * tau_max / (p - 1) if p > 1 else math.inf
        return head + tail


def anomalous_dissipation(profile: RadialProfile, nu: float, T: float,
                          flow: UnitHeatFlow | None = None) -> float:
    """zeta^nu(T) for the data nu^-2 phi(x/nu), via the parabolic rescaling."""
    if not nu > 0:
        raise ValueError("viscosity must be positive")
    flow = UnitHeatFlow(profile) if flow is None else flow
    return flow.integral(T / nu)


def anomalous_dissipation_direct(profile: RadialProfile, nu: float, T: float,
                                 order: int = 8) -> float:
    """nu int_0^T ||omega^nu(t)||^2 dt, evolving the scaled data at viscosity nu.

    Independent of the rescaling: the kernel, the nodes and the time ladder
    all live at the physical scale of the concentrated data.
    """
    scaled = profile.scaled(nu)
    scaled.meta["r_mid"] = nu * profile.meta.get("r_mid", math.nan)
    ladder = UnitHeatFlow(profile, order=order).edges(T / nu)
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi in zip(ladder[:-1], ladder[1:]):
        lo, hi = nu * lo, nu * hi
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        for xi, wi in zip(x, w):
            t = mid + half * xi
            nodes, weights = evolution_nodes(scaled, nu, t)
            total += half * wi * radial_heat_evolve(scaled, nu, t, nodes, weights).l2_sq()
    return float(nu * total)


def hankel_transform(profile: RadialProfile, rho):
    """H(rho) = int_0^inf phi(s) J0(rho s) s ds on the profile's quadrature nodes."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    r, w, v = profile.r_nodes, profile.weights, profile.values
    return (j0(rho[:, None] * r[None, :]) * (w * r * v)[None, :]).sum(axis=1)


def dissipation_hankel(profile: RadialProfile, b: float = math.inf) -> float:
    """int_0^b ||Omega||^2 dtau = pi int_0^inf H(rho)^2 (1 - exp(-2 rho^2 b)) / rho drho."""

    def integrand(rho):
        if rho == 0:
            return 0.0
        h = float(hankel_transform(profile, rho)[0])
        damp = 1.0 if math.isinf(b) else -math.expm1(-2 * rho * rho * b)
        return h * h * damp / rho

    # the transform of a profile with unit-scale support decays past rho ~ 100
    edges = [0.0, 1.0, 4.0, 16.0, 64.0, 256.0]
    return math.pi * sum(integrate.quad(integrand, a, c, epsabs=0.0, epsrel=1e-11, limit=400)[0]
                         for a, c in zip(edges[:-1], edges[1:]))


# -- independent finite-difference oracle ------------------------------------


def crank_nicolson_radial(func: Callable, nu: float, times, r_eval, r_max: float,
                          h: float = 2e-3, dt: float = 1e-4) -> dict:
    """Crank-Nicolson finite volumes for d_t w = nu (w_rr + w_r / r).

    Cell centers (i + 1/2) h, zero flux at r = 0, w = 0 at r = r_max.
    Returns {t: values at r_eval} for each requested time.
    """
    M = int(round(r_max / h))
    rc = (np.arange(M) + 0.5) * h
    rf = np.arange(M + 1) * h
    lower = rf[:-1] / (rc * h * h)
    upper = rf[1:] / (rc * h * h)
    diag = -(lower + upper)
    diag[-1] -= upper[-1]  # antisymmetric ghost enforces w(r_max) = 0
    upper[-1] = 0.0
    lower[0] = 0.0
    w = np.asarray(func(rc), dtype=float)
    out, t = {}, 0.0
    for target in sorted(times):
        steps = max(1, int(round((target - t) / dt)))
        k = (target - t) / steps
        ab = np.zeros((3, M))
        ab[0, 1:] = -0.5 * k * nu * upper[:-1]
        ab[1] = 1 - 0.5 * k * nu * diag
        ab[2, :-1] = -0.5 * k * nu * lower[1:]
        for _ in range(steps):
            rhs = w + 0.5 * k * nu * (diag * w)
            rhs[1:] += 0.5 * k * nu * lower[1:] * w[:-1]
            rhs[:-1] += 0.5 * k * nu * upper[:-1] * w[1:]
            w = solve_banded((1, 1), ab, rhs)
        t = target
        out[target] = interpolate.CubicSpline(rc, w)(np.asarray(r_eval))
    return out


# -- shear modes -------------------------------------------------------------


@dataclass(frozen=True)
class ShearReference:
    """omega = exp(-nu k^2 t) cos(k x1): an exact torus solution (u . grad omega = 0)."""

    k: int
    nu: float
    T: float

    @property
    def zeta(self) -> float:
        return math.pi**2 * -math.expm1(-2 * self.nu * self.k**2 * self.T) / self.k**2

    def omega(self, grid: GridSpec, t: float) -> SpectralField:
        decay = math.exp(-self.nu * self.k**2 * t)
        return SpectralField.from_function(grid, lambda x1, x2: decay * np.cos(self.k * x1) + 0 * x2)


def shear_mode_reference(k: int, nu: float, T: float) -> ShearReference:
    if k < 1:
        raise ValueError("k must be a positive integer")
    return ShearReference(int(k), float(nu), float(T))


def write_zeta_table(path, rows) -> None:
    """rows: iterable of (nu, zeta, method)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu", "zeta", "method"])
        for nu, zeta, method in rows:
            w.writerow([repr(float(nu)), repr(float(zeta)), method])
