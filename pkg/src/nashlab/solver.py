"""Pseudo-spectral vorticity solver for forced 2D Navier-Stokes on the torus.

    d_t omega + u . grad omega = nu Lap omega + curl F,   u = BiotSavart(omega)

Time stepping is integrating-factor RK4: diffusion is applied exactly through
exp(-nu |k|^2 t), advection is explicit and dealiased by the 2/3 rule.  The
time integrals entering the energy and enstrophy balances are carried as
extra RK4 unknowns, so they are quadratures of the same order as the scheme.
"""

from __future__ import annotations

import csv
import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .norms import maximal_function
from .spectral import AREA, GridSpec, SpectralField

# cumulative integrals advanced with the stages:
#   zeta   = nu int ||w||^2          palin = nu int ||grad w||^2
#   work   = int <F, u>              cwork = int <curl F, w>
#   fsq    = int ||F||^2
INTEGRALS = ("zeta", "work", "palin", "cwork", "fsq")
COLUMNS = ("t", "l2_omega_sq", "l1_omega", "energy", "dt", "grad_omega_sq") + INTEGRALS


class SolverError(RuntimeError):
    pass


class _Spectral:
    """rfft2 layout helpers for one grid."""

    def __init__(self, grid: GridSpec):
        n = grid.n
        self.grid = grid
        k1 = np.fft.fftfreq(n, 1.0 / n)[:, None]
        k2 = np.fft.rfftfreq(n, 1.0 / n)[None, :]
        self.k1, self.k2 = k1, k2
        self.ksq = k1**2 + k2**2
        self.inv_ksq = np.where(self.ksq == 0, 0.0, 1.0 / np.where(self.ksq == 0, 1.0, self.ksq))
        cut = grid.dealias_cutoff
        self.mask = (np.abs(k1) <= cut) & (np.abs(k2) <= cut)
        w = np.full(k2.shape, 2.0)
        w[0, 0] = 1.0
        if n % 2 == 0:
            w[0, -1] = 1.0
        self.weight = w
        self.norm = AREA / n**4

    def fwd(self, a):
        return np.fft.rfft2(a)

    def inv(self, a):
        n = self.grid.n
        return np.fft.irfft2(a, s=(n, n))

    def sumsq(self, a_hat) -> float:
        return self.norm * float(np.sum(self.weight * (a_hat.real**2 + a_hat.imag**2)))

    def inner(self, a_hat, b_hat) -> float:
        return self.norm * float(np.sum(self.weight * (a_hat * b_hat.conj()).real))

    def stream_velocity(self, w_hat):
        """(u1_hat, u2_hat) with u = grad^perp of inverse Laplacian."""
        psi = -w_hat * self.inv_ksq
        return -1j * self.k2 * psi, 1j * self.k1 * psi

    def energy(self, w_hat) -> float:
        return 0.5 * self.norm * float(np.sum(self.weight * self.inv_ksq * np.abs(w_hat) ** 2))


@dataclass
class RunResult:
    grid: GridSpec
    nu: float
    history: dict
    snapshots: list = field(default_factory=list)
    final: SpectralField | None = None
    wallclock_s: float = 0.0

    def column(self, name) -> np.ndarray:
        return np.asarray(self.history[name])

    def at(self, name, t) -> float:
        """Column value at time t, interpolated linearly between steps."""
        return float(np.interp(t, self.column("t"), self.column(name)))

    def write_csv(self, path) -> None:
        cols = ("t", "l2_omega_sq", "l1_omega", "energy", "dt")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in zip(*(self.history[c] for c in cols)):
                w.writerow([repr(float(v)) for v in row])


class VorticitySolver:
    """Integrating-factor RK4 solver; state is the dealiased rfft2 of omega."""

    def __init__(self, omega0: SpectralField, nu: float,
                 forcing: Callable[[float], np.ndarray] | None = None,
                 safety: float = 0.5, dt_max: float = 0.05, cfl_every: int = 10):
        if not nu > 0:
            raise ValueError("viscosity must be positive")
        self.grid = omega0.grid
        self.ops = _Spectral(self.grid)
        self.nu = float(nu)
        self.forcing = forcing
        self.safety = safety
        self.dt_max = dt_max
        self.cfl_every = cfl_every
        w = self.ops.fwd(omega0.physical)
        self.w_hat = self._clean(w)
        self.t = 0.0
        self.q = dict.fromkeys(INTEGRALS, 0.0)
        self.history = {c: [] for c in COLUMNS}
        self._record(0.0)

    def _clean(self, w_hat):
        w_hat = np.where(self.ops.mask, w_hat, 0.0)
        w_hat[0, 0] = 0.0
        return w_hat

    @property
    def omega(self) -> SpectralField:
        return SpectralField.from_physical(self.grid, self.ops.inv(self.w_hat))

    def _forcing_hat(self, t):
        if self.forcing is None:
            return None
        return self._clean(self.ops.fwd(np.asarray(self.forcing(t), dtype=float)))

    def _rhs(self, w_hat, t):
        """Dealiased -u.grad(omega) + curl F, plus the integrand of every carried integral."""
        ops = self.ops
        u1h, u2h = ops.stream_velocity(w_hat)
        u1, u2 = ops.inv(u1h), ops.inv(u2h)
        wx, wy = ops.inv(1j * ops.k1 * w_hat), ops.inv(1j * ops.k2 * w_hat)
        nl = ops.fwd(u1 * wx + u2 * wy)
        rhs = np.where(ops.mask, -nl, 0.0)
        l2 = ops.sumsq(w_hat)
        g = {
            "zeta": self.nu * l2,
            "palin": self.nu * ops.sumsq(np.sqrt(ops.ksq) * w_hat),
            "work": 0.0,
            "cwork": 0.0,
            "fsq": 0.0,
        }
        f_hat = self._forcing_hat(t)
        if f_hat is not None:
            rhs = rhs + f_hat
            F1, F2 = ops.stream_velocity(f_hat)
            g["work"] = ops.inner(F1, u1h) + ops.inner(F2, u2h)
            g["cwork"] = ops.inner(f_hat, w_hat)
            g["fsq"] = ops.sumsq(F1) + ops.sumsq(F2)
        rhs[0, 0] = 0.0
        return rhs, g

    def max_speed(self) -> float:
        u1h, u2h = self.ops.stream_velocity(self.w_hat)
        return float(np.sqrt(self.ops.inv(u1h) ** 2 + self.ops.inv(u2h) ** 2).max())

    def cfl_dt(self) -> float:
        speed = self.max_speed()
        dt = self.safety * self.grid.spacing / speed if speed > 0 else math.inf
        return min(dt, self.dt_max)

    def step(self, dt: float) -> None:
        ops, t = self.ops, self.t
        E = np.exp(-self.nu * ops.ksq * dt)
        E2 = np.exp(-self.nu * ops.ksq * dt / 2)
        w = self.w_hat
        k1, g1 = self._rhs(w, t)
        k2, g2 = self._rhs(E2 * (w + 0.5 * dt * k1), t + dt / 2)
        k3, g3 = self._rhs(E2 * w + 0.5 * dt * k2, t + dt / 2)
        k4, g4 = self._rhs(E * w + dt * E2 * k3, t + dt)
        new = E * w + dt / 6 * (E * k1 + 2 * E2 * (k2 + k3) + k4)
        new[0, 0] = 0.0
        if not np.all(np.isfinite(new)):
            raise SolverError(f"non-finite vorticity at t={t + dt:.6g} (dt={dt:.3g}, nu={self.nu:g})")
        for key in INTEGRALS:
            self.q[key] += dt / 6 * (g1[key] + 2 * g2[key] + 2 * g3[key] + g4[key])
        self.w_hat = new
        self.t = t + dt
        self._record(dt)

    def _record(self, dt):
        ops = self.ops
        h = self.history
        h["t"].append(self.t)
        h["l2_omega_sq"].append(ops.sumsq(self.w_hat))
        h["l1_omega"].append(float(np.abs(ops.inv(self.w_hat)).sum() * self.grid.cell_area))
        h["energy"].append(ops.energy(self.w_hat))
        h["dt"].append(dt)
        h["grad_omega_sq"].append(ops.sumsq(np.sqrt(ops.ksq) * self.w_hat))
        for key in INTEGRALS:
            h[key].append(self.q[key])

    def run(self, T: float, dt: float | None = None, stops=(), snapshot_times=(),
            on_snapshot: Callable | None = None) -> RunResult:
        """Advance to time T.

        ``dt`` fixes the step; otherwise the CFL rule is re-evaluated every
        ``cfl_every`` steps, floored at T / 1e7.  Steps are shortened to land
        exactly on every time in ``stops`` and ``snapshot_times``.
        """
        start = _time.perf_counter()
        marks = sorted({float(s) for s in (*stops, *snapshot_times, T) if self.t < s <= T})
        snaps = sorted(float(s) for s in snapshot_times)
        snapshots = []
        if snaps and snaps[0] <= self.t:
            snapshots.append((self.t, self.omega))
        floor = T / 1e7
        current = dt
        count = 0
        for mark in marks:
            while self.t < mark - 1e-12 * max(1.0, mark):
                if dt is None and (current is None or count % self.cfl_every == 0):
                    current = max(self.cfl_dt(), floor)
                count += 1
                self.step(min(current, mark - self.t))
            self.t = mark
            self.history["t"][-1] = mark
            if any(abs(mark - s) <= 1e-12 * max(1.0, s) for s in snaps):
                snap = self.omega
                snapshots.append((mark, snap))
                if on_snapshot is not None:
                    on_snapshot(mark, snap)
        return RunResult(self.grid, self.nu, {k: list(v) for k, v in self.history.items()},
                         snapshots, self.omega, _time.perf_counter() - start)


def solve(omega0: SpectralField, nu: float, T: float, forcing=None, dt=None, **kw) -> RunResult:
    """Convenience wrapper: build a solver and run it to T."""
    stops = kw.pop("stops", ())
    snapshot_times = kw.pop("snapshot_times", ())
    return VorticitySolver(omega0, nu, forcing, **kw).run(T, dt, stops, snapshot_times)


# -- diagnostics ------------------------------------------------------------


def dissipation(run: RunResult, t0: float, t1: float, method: str = "trapezoid") -> float:
    """nu * integral_{t0}^{t1} ||omega||_2^2 dt.

    ``trapezoid`` integrates the per-step samples; ``stages`` uses the
    integral carried through the RK4 stages (fourth order in dt).
    """
    t = run.column("t")
    if t0 < t[0] - 1e-12 or t1 > t[-1] + 1e-12 or t0 > t1:
        raise ValueError("interval outside the sampled trajectory")
    if method == "stages":
        return run.at("zeta", t1) - run.at("zeta", t0)
    if method != "trapezoid":
        raise ValueError(f"unknown method {method!r}")
    y = run.column("l2_omega_sq")
    if t.size < 2:
        raise ValueError("insufficient samples")
    inside = (t > t0) & (t < t1)
    ts = np.concatenate([[t0], t[inside], [t1]])
    ys = np.concatenate([[np.interp(t0, t, y)], y[inside], [np.interp(t1, t, y)]])
    return run.nu * float(np.trapezoid(ys, ts))


def energy_balance_residual(run: RunResult, t: float, method: str = "stages") -> float:
    """|E(t) - E(0) + zeta(t) - int_0^t <F, u>| with E = ||u||^2 / 2."""
    e0 = run.column("energy")[0]
    zeta = dissipation(run, run.column("t")[0], t, method)
    return abs(run.at("energy", t) - e0 + zeta - run.at("work", t))


def enstrophy_balance_residual(run: RunResult, r: float, t: float) -> float:
    """Identity form: ||w(t)||^2 - ||w(r)||^2 + 2 nu int ||grad w||^2 - 2 int <curl F, w>."""
    if not r < t:
        raise ValueError("need r < t")
    return (run.at("l2_omega_sq", t) - run.at("l2_omega_sq", r)
            + 2 * (run.at("palin", t) - run.at("palin", r))
            - 2 * (run.at("cwork", t) - run.at("cwork", r)))


def enstrophy_inequality_residual(run: RunResult, r: float, t: float) -> float:
    """||w(t)||^2 - ||w(r)||^2 + nu int ||grad w||^2 - (1/nu) int ||F||^2; nonpositive."""
    if not r < t:
        raise ValueError("need r < t")
    return (run.at("l2_omega_sq", t) - run.at("l2_omega_sq", r)
            + (run.at("palin", t) - run.at("palin", r))
            - (run.at("fsq", t) - run.at("fsq", r)) / run.nu)


def enstrophy_decay_constant(runs, t: float) -> float:
    """sup over runs of t * nu * ||omega(t)||_2^2."""
    return max(t * r.nu * r.at("l2_omega_sq", t) for r in runs)


def forcing_maximal_integral(forcing, grid: GridSpec, s, T: float, samples: int = 201):
    """int_0^T M_s(curl F(tau)) dtau by Simpson's rule on uniform samples."""
    ts = np.linspace(0.0, T, samples)
    vals = np.array([maximal_function(SpectralField.from_physical(grid, forcing(t)), s) for t in ts])
    return integrate.simpson(vals, x=ts, axis=0)


def maximal_propagation(run: RunResult, s, forcing=None, T: float | None = None):
    """Per snapshot: (t, M_s(omega(t)), M_s(omega_0) + int_0^T M_s(curl F)) for each s."""
    if not run.snapshots:
        raise ValueError("run has no snapshots")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    T = run.column("t")[-1] if T is None else T
    t0, w0 = run.snapshots[0]
    if t0 != 0.0:
        raise ValueError("first snapshot must be the initial state")
    bound = maximal_function(w0, s)
    if forcing is not None:
        bound = bound + forcing_maximal_integral(forcing, run.grid, s, T)
    return [(t, maximal_function(w, s), bound) for t, w in run.snapshots[1:]]


def l1_monotone_violation(run: RunResult) -> float:
    """Largest relative increase of ||omega||_1 between consecutive samples."""
    l1 = run.column("l1_omega")
    return float(max(np.max(np.diff(l1)), 0.0) / l1[0]) if l1[0] > 0 else 0.0


def relative_l2_difference(a: SpectralField, b: SpectralField) -> float:
    """||a - b||_2 / ||b||_2 for fields on grids of possibly different size."""
    coarse, fine = (a, b) if a.grid.n <= b.grid.n else (b, a)
    idx = coarse.grid.k.astype(int) % fine.grid.n
    sub = fine.spectral[np.ix_(idx, idx)]
    diff = np.sum(np.abs(coarse.spectral - sub) ** 2)
    # fine-grid modes the coarse grid cannot represent count in full
    diff += np.sum(np.abs(fine.spectral) ** 2) - np.sum(np.abs(sub) ** 2)
    return math.sqrt(AREA * max(float(diff), 0.0)) / b.l2_spectral()
