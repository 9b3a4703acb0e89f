"""Checkers for the refined convolution / projection / Nash inequalities and
constructive builders for the concave majorant Phi and Upsilon = (Phi^-1)^2.

Universal constants are never asserted: each checker returns an
:class:`InequalityReport` whose ``ratio`` is lhs / (rhs without constant),
and corpus runs turn those ratios into empirical constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .norms import (
    Eta,
    MeasureDecomposition,
    concentration,
    concentration_square,
    lp_norm,
)
from .spectral import SpectralField, convolve, gradient_l2

E2 = math.e**2


class PreconditionError(ValueError):
    """Raised when a checker's hypotheses are not met by its input."""


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float  # right-hand side without the universal constant
    ratio: float
    params: dict = field(default_factory=dict)
    resolution: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _report(name, lhs, rhs, params, n) -> InequalityReport:
    if rhs == 0:
        if lhs != 0:
            raise ValueError(f"{name}: zero right-hand side with nonzero lhs")
        ratio = 0.0
    else:
        ratio = lhs / rhs
    return InequalityReport(name, float(lhs), float(rhs), float(ratio), dict(params), n)


def write_reports(path, reports) -> None:
    with open(path, "w") as fh:
        for rep in reports:
            fh.write(rep.to_json() + "\n")


# -- convolution bound ------------------------------------------------------


def check_convolution_bound(f: SpectralField, g: SpectralField, ball_radius: float):
    """||f*g||_2 <= sqrt(||f||_1 * sup_{|B|=|B*|} ||f||_{L1(B)}) * ||g||_2.

    ``g`` must vanish outside the disk of radius ``ball_radius`` about the
    origin; that disk is B*.
    """
    grid = f.grid
    outside = grid.periodic_distance((0.0, 0.0)) >= ball_radius
    peak = float(np.abs(g.physical).max())
    if peak > 0 and np.abs(g.physical[outside]).max(initial=0.0) > 1e-12 * peak:
        raise PreconditionError("g is not supported in the ball")
    lhs = lp_norm(convolve(f, g), 2)
    rhs = math.sqrt(lp_norm(f, 1) * concentration(f, ball_radius)) * lp_norm(g, 2)
    return _report("convolution_bound", lhs, rhs, {"ball_radius": ball_radius}, grid.n)


# -- refined projection estimate --------------------------------------------


def refined_projection_rhs(f_l1, square_mass, grad_l2, alpha, eps, N) -> float:
    return N**2 * f_l1 * (square_mass + f_l1 / (N * eps**alpha)) + grad_l2**2 / N**2


def check_refined_projection(f: SpectralField, alpha: float, epsilon: float, N: float):
    if not 0 < alpha < 0.5:
        raise PreconditionError("alpha must lie in (0, 1/2)")
    if not 0 < epsilon < 1:
        raise PreconditionError("epsilon must lie in (0, 1)")
    if not N > 0:
        raise PreconditionError("N must be positive")
    N = math.ceil(N)
    radius = epsilon**alpha
    f_l1 = lp_norm(f, 1)
    rhs = refined_projection_rhs(
        f_l1, concentration_square(f, radius), gradient_l2(f), alpha, epsilon, N
    )
    params = {"alpha": alpha, "epsilon": epsilon, "N": N}
    return _report("refined_projection", lp_norm(f, 2) ** 2, rhs, params, f.grid.n)


def preset_log_epsilon(f: SpectralField, alpha: float = 0.25):
    """(alpha, eps*, N) with eps* = 1 / (|grad f| (log |grad f|^2)^(1/4)), N = 1/sqrt(eps*)."""
    g = gradient_l2(f)
    if not g > E2:
        raise PreconditionError("the logarithmic choice needs ||grad f||_2 > e^2")
    eps = 1.0 / (g * math.log(g * g) ** 0.25)
    return alpha, eps, 1.0 / math.sqrt(eps)


def preset_eta_epsilon(f: SpectralField, eta: Eta, alpha: float = 0.25):
    """(alpha, eps*, N) with eps* = sqrt(eta(|grad f|^-1/4)) / |grad f|, N = 1/sqrt(eps*)."""
    g = gradient_l2(f)
    if not g > 1:
        raise PreconditionError("the eta choice needs ||grad f||_2 > 1")
    eps = math.sqrt(eta(g**-0.25)) / g
    return alpha, eps, 1.0 / math.sqrt(eps)


# -- refined Nash ------------------------------------------------------------


def check_refined_nash(f: SpectralField, eta: Eta):
    """||f||_2^2 <= C (K^2 + 1) ||grad f||_2 sqrt(eta(||grad f||_2^(-1/4)))."""
    g = gradient_l2(f)
    if not g > 1:
        raise PreconditionError("refined Nash needs ||grad f||_2 > 1")
    K = eta.mass_bound
    rhs = (K**2 + 1) * g * math.sqrt(eta(g**-0.25))
    return _report("refined_nash", lp_norm(f, 2) ** 2, rhs, {"K": K}, f.grid.n)


def classical_nash_ratio(f: SpectralField) -> float:
    """||f||_2^4 / (||f||_1^2 ||grad f||_2^2), the planar Nash quotient on the torus."""
    l1 = lp_norm(f, 1)
    g = gradient_l2(f)
    if l1 == 0 or g == 0:
        raise ValueError("Nash quotient undefined for constant fields")
    return lp_norm(f, 2) ** 4 / (l1**2 * g**2)


def measure_rhs(f_l1, mu_hm1, w_lp, grad_l2) -> float:
    return (f_l1 * (mu_hm1 + w_lp + f_l1) + 1.0) * grad_l2 / math.log(grad_l2) ** 0.25


def check_measure_refined(dec: MeasureDecomposition):
    f = dec.total
    g = gradient_l2(f)
    if not g > E2:
        raise PreconditionError("measure estimate needs ||grad f||_2 > e^2")
    rhs = measure_rhs(lp_norm(f, 1), dec.norms["mu_hm1"], dec.norms["w_lp"], g)
    return _report("measure_refined", lp_norm(f, 2) ** 2, rhs, {"p": dec.p}, f.grid.n)


# -- Phi and Upsilon ---------------------------------------------------------

X_MIN, X_MAX, PER_DECADE = 1e-6, 1e12, 64


def log_table(x_min=X_MIN, x_max=X_MAX, per_decade=PER_DECADE) -> np.ndarray:
    decades = math.log10(x_max / x_min)
    return np.logspace(math.log10(x_min), math.log10(x_max), round(decades * per_decade) + 1)


@dataclass
class PhiFunction:
    """Concave increasing majorant Phi tabulated on a log grid, with an exact evaluator."""

    kind: str
    C: float
    x: np.ndarray
    values: np.ndarray
    evaluate: Callable[[float], float]
    poincare_constant: float = 1.0
    extras: dict = field(default_factory=dict)

    def __call__(self, x: float) -> float:
        if x < 0:
            raise ValueError("Phi is defined on [0, inf)")
        return 0.0 if x == 0 else float(self.evaluate(x))

    def inverse(self, y: float, rtol: float = 1e-10) -> float:
        if y == 0:
            return 0.0
        if not self.values[0] <= y <= self.values[-1]:
            raise ValueError(f"{y} outside the tabulated range of Phi")
        i = int(np.searchsorted(self.values, y))
        if self.values[i] == y:
            return float(self.x[i])
        a, b = self.x[i - 1], self.x[i]
        return optimize.brentq(lambda s: self.evaluate(s) - y, a, b, xtol=1e-300, rtol=rtol / 4)


def _check_phi_table(x, v):
    if np.any(np.diff(v) <= 0):
        raise ValueError("Phi table is not strictly increasing")
    slopes = np.diff(np.concatenate([[0.0], v])) / np.diff(np.concatenate([[0.0], x]))
    if np.any(np.diff(slopes) > 1e-9 * slopes[:-1]):
        raise ValueError("Phi table fails the secant concavity test")


def build_phi_integral(eta_bar: Callable, C: float, x: np.ndarray | None = None) -> PhiFunction:
    """Phi(x) = integral_0^x C sqrt(eta_bar(pi y^(-1/4))) dy, tabulated by adaptive quadrature."""
    if C <= 0:
        raise ValueError("C must be positive")
    x = log_table() if x is None else np.asarray(x, dtype=float)

    def integrand(y):
        return C * math.sqrt(eta_bar(math.pi * y**-0.25))

    def piece(a, b):
        val, err = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        if not np.isfinite(val) or err > 1e-9 * max(abs(val), 1e-300):
            raise ArithmeticError(f"quadrature did not converge on [{a}, {b}]")
        return val

    # quad never samples y = 0; unclamped profiles such as r/pi give an integrable y^(-1/8)
    first = piece(0.0, x[0])
    values = first + np.concatenate([[0.0], np.cumsum([piece(a, b) for a, b in zip(x[:-1], x[1:])])])
    _check_phi_table(x, values)
    lower = C * x * np.sqrt([eta_bar(math.pi * xi**-0.25) for xi in x])
    if np.any(values < lower * (1 - 1e-10)):
        raise ValueError("Phi(x) >= C x sqrt(eta_bar(pi x^-1/4)) fails on the table")

    def evaluate(s):
        i = int(np.clip(np.searchsorted(x, s) - 1, -1, x.size - 1))
        if i < 0:
            return piece(0.0, s)
        return values[i] + (piece(x[i], s) if s != x[i] else 0.0)

    return PhiFunction("integral_form", C, x, values, evaluate)


def build_phi_log(C: float = 1.0, C_P: float = 1.0, x: np.ndarray | None = None) -> PhiFunction:
    """Phi = (L + 1) Phi_1 with Phi_1 = C x / (log x)^(1/4) for x > e^2.

    On [0, e^2] Phi_1 is the C^1 concave quadratic a x - b x^2 matching value
    and slope at e^2; L = C_P e^4 / Phi_1(e^2) makes C_P x^2 <= L Phi_1 there.
    """
    if C <= 0 or C_P <= 0:
        raise ValueError("constants must be positive")
    v = C * E2 / 2**0.25
    s = C * (2**-0.25 - 0.25 * 2**-1.25)
    b = (v - s * E2) / E2**2
    a = s + 2 * b * E2
    if b <= 0 or a - 2 * b * E2 <= 0:
        raise ValueError("quadratic extension is not concave increasing")
    L = C_P * E2**2 / v

    def phi1(t):
        t = np.asarray(t, dtype=float)
        big = t > E2
        safe = np.where(big, t, E2 + 1.0)
        out = np.where(big, C * safe / np.log(safe) ** 0.25, a * t - b * t * t)
        return float(out) if out.ndim == 0 else out

    def dphi1(t):
        if t > E2:
            lg = math.log(t)
            return C * (lg**-0.25 - 0.25 * lg**-1.25)
        return a - 2 * b * t

    x = log_table() if x is None else np.asarray(x, dtype=float)
    values = (L + 1) * phi1(x)
    _check_phi_table(x, values)
    extras = {"L": L, "a": a, "b": b, "phi1": phi1, "dphi1": dphi1, "phi2": lambda t: C_P * t * t}
    return PhiFunction(
        "log_form", C, x, values, lambda t: (L + 1) * phi1(t), poincare_constant=C_P, extras=extras
    )


class Upsilon:
    """Upsilon(y) = (Phi^-1(y))^2: convex, increasing, superquadratic."""

    def __init__(self, phi: PhiFunction, rtol: float = 1e-10):
        if np.any(np.diff(phi.values) <= 0):
            raise ValueError("Phi must be strictly increasing")
        self.phi = phi
        self.rtol = rtol

    def __call__(self, y: float) -> float:
        return self.phi.inverse(y, self.rtol) ** 2

    def table(self):
        """(y, Upsilon(y)) at the tabulated Phi values; exact by construction."""
        return self.phi.values.copy(), self.phi.x**2


def build_upsilon(phi: PhiFunction) -> Upsilon:
    return Upsilon(phi)


def is_convex(x, y, rtol=1e-9) -> bool:
    slopes = np.diff(y) / np.diff(x)
    return bool(np.all(np.diff(slopes) >= -rtol * np.abs(slopes[1:])))


def is_concave(x, y, rtol=1e-9) -> bool:
    return is_convex(x, -np.asarray(y), rtol)
