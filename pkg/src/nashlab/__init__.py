"""Numerical companion for vanishing enstrophy dissipation in 2D Navier-Stokes.

Modules: ``spectral`` (torus grids and Fourier calculus), ``norms``
(norms, concentration, maximal function), ``inequalities`` (checkers and the
Phi / Upsilon builders), ``corpus`` (built-in function families),
``solver`` (vorticity solver and balances), ``radial`` (exact and
one-dimensional oracles) and ``sweep`` (viscosity sweeps, CLI backend).
"""

__version__ = "0.1.0"
