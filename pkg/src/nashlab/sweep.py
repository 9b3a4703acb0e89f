"""Viscosity sweeps: configuration, initial data, forcing, rate fits, file output."""

from __future__ import annotations

import csv
import json
import math
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.special import erf

from .corpus import random_band_limited
from .norms import concentration, lp_norm
from .solver import (
    RunResult,
    SolverError,
    VorticitySolver,
    dissipation,
    energy_balance_residual,
    enstrophy_balance_residual,
    maximal_propagation,
)
from .spectral import AREA, GridSpec, SpectralField, write_snapshot

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1
SUMMARY_COLUMNS = ("nu", "T", "delta", "zeta_total", "zeta_delta", "energy0", "energyT",
                   "balance_residual", "max_enstrophy", "wallclock_s")
DATA_KINDS = {
    "shear": {"k": 1, "amplitude": 1.0},
    "taylor_green": {"amplitude": 1.0},
    "random_smooth": {"seed": None, "kmax": 8, "amplitude": 1.0},
    "l1_blobs": {"seed": None, "count": 6, "mass": 1.0},
    "sheet": {"curve": "segment", "strength": 1.0, "half_length": 1.0, "radius": 1.0},
    "measure_plus_lp": {"components": []},
}
FORCING_KINDS = {
    "none": {},
    "rotating_blob": {"amplitude": 1.0, "width": 0.3, "orbit": 1.0, "angular_speed": 2.0,
                      "p": 2.0},
}


class ConfigError(ValueError):
    """Invalid sweep configuration."""


def _fill(kind_table: dict, spec: dict, what: str) -> dict:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in kind_table:
        raise ConfigError(f"{what}: unknown kind {kind!r} (expected one of {sorted(kind_table)})")
    defaults = kind_table[kind]
    unknown = set(spec) - set(defaults)
    if unknown:
        raise ConfigError(f"{what} {kind!r}: unknown keys {sorted(unknown)}")
    return {"kind": kind, **defaults, **spec}


@dataclass
class SweepConfig:
    n: int = 128
    T: float = 1.0
    delta: float | None = None
    nu_list: tuple = (1e-2, 5e-3, 2.5e-3)
    data: dict = field(default_factory=lambda: {"kind": "taylor_green"})
    mollification: str = "fixed"
    width: float = 0.1
    coupling: float = 1.0
    forcing: dict = field(default_factory=lambda: {"kind": "none"})
    output_dir: str = "sweep_out"
    snapshot_times: tuple = ()
    concentration_radii: tuple = (0.05, 0.1, 0.2, 0.4, 0.8, 1.6, math.pi)
    maximal_fractions: tuple = (0.01, 0.1, 1.0)
    workers: int = 1
    seed: int = 0
    dt: float | None = None

    def __post_init__(self):
        self.nu_list = tuple(float(v) for v in self.nu_list)
        self.snapshot_times = tuple(sorted(float(v) for v in self.snapshot_times))
        self.concentration_radii = tuple(float(v) for v in self.concentration_radii)
        self.maximal_fractions = tuple(float(v) for v in self.maximal_fractions)
        if self.delta is None:
            self.delta = self.T / 10
        self.data = _fill(DATA_KINDS, self.data, "data")
        self.forcing = _fill(FORCING_KINDS, self.forcing, "forcing")
        self.validate()

    def validate(self) -> None:
        try:
            GridSpec(self.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.nu_list:
            raise ConfigError("nu_list is empty")
        if any(v <= 0 for v in self.nu_list):
            raise ConfigError("viscosities must be positive")
        if any(a <= b for a, b in zip(self.nu_list, self.nu_list[1:])):
            raise ConfigError("nu_list must be strictly decreasing")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not 0 <= self.delta < self.T:
            raise ConfigError("need 0 <= delta < T")
        if self.mollification not in ("fixed", "coupled"):
            raise ConfigError("mollification must be 'fixed' or 'coupled'")
        if not self.width > 0 or not self.coupling > 0:
            raise ConfigError("mollification width and coupling must be positive")
        if any(not 0 <= t <= self.T for t in self.snapshot_times):
            raise ConfigError("snapshot times must lie in [0, T]")
        if any(not 0 < r <= math.pi for r in self.concentration_radii):
            raise ConfigError("concentration radii must lie in (0, pi]")
        if any(not 0 < s <= 1 for s in self.maximal_fractions):
            raise ConfigError("maximal fractions must lie in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.data["kind"] == "sheet" and self.data["curve"] not in ("segment", "circle"):
            raise ConfigError("sheet curve must be 'segment' or 'circle'")

    def width_for(self, nu: float) -> float:
        if self.mollification == "fixed":
            return self.width
        return self.coupling * math.sqrt(nu)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n)

    @classmethod
    def from_toml(cls, path) -> SweepConfig:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> SweepConfig:
        raw = dict(raw)
        version = raw.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}


# -- initial data -----------------------------------------------------------


def _gauss_blob(grid: GridSpec, center, width) -> np.ndarray:
    """Unit-mass periodic Gaussian (density, before mean removal)."""
    d = grid.periodic_distance(center)
    g = np.exp(-0.5 * (d / width) ** 2)
    return g / (g.sum() * grid.cell_area)


def _sheet_density(grid: GridSpec, curve: str, width: float, half_length: float, radius: float):
    """Unit-mass Gaussian mollification of arclength measure on a segment or circle."""
    x1, x2 = grid.mesh
    if curve == "segment":
        # exact Gaussian convolution of the uniform density on {x2 = 0, |x1| <= L}
        s = math.sqrt(2) * width
        along = 0.5 * (erf((half_length - x1) / s) + erf((half_length + x1) / s)) / (2 * half_length)
        across = np.exp(-0.5 * (x2 / width) ** 2) / (math.sqrt(2 * math.pi) * width)
        dens = along * across
    else:
        rho = np.hypot(x1, x2)
        dens = np.exp(-0.5 * ((rho - radius) / width) ** 2) / (math.sqrt(2 * math.pi) * width)
        dens /= 2 * math.pi * radius
    raw_mass = float(dens.sum() * grid.cell_area)
    return dens / raw_mass, raw_mass


def _smooth_component(grid, seed, kmax, amplitude) -> SpectralField:
    f = random_band_limited(grid, np.random.default_rng(seed), kmax=kmax)
    return f * (amplitude / lp_norm(f, 2))


def generate_initial_data(config: SweepConfig, nu: float):
    """Mean-free initial vorticity for one viscosity, with a metadata dict.

    Measure-type data (sheets, blobs, atoms) are built as nonnegative or
    signed densities of prescribed mass, then the constant mean is removed and
    recorded as ``mean_correction``.
    """
    grid = config.grid
    spec = config.data
    kind = spec["kind"]
    width = config.width_for(nu)
    meta = {"kind": kind, "nu": nu, "width": None, "mean_correction": 0.0,
            "mollification": config.mollification}
    x1, x2 = grid.mesh
    if kind == "shear":
        vals = spec["amplitude"] * np.cos(spec["k"] * x1)
    elif kind == "taylor_green":
        vals = spec["amplitude"] * (np.cos(x1) + np.cos(x2))
    elif kind == "random_smooth":
        seed = config.seed if spec["seed"] is None else spec["seed"]
        vals = _smooth_component(grid, seed, spec["kmax"], spec["amplitude"]).physical
    elif kind == "l1_blobs":
        seed = config.seed if spec["seed"] is None else spec["seed"]
        rng = np.random.default_rng(seed)
        count = int(spec["count"])
        centers = rng.uniform(-math.pi, math.pi, size=(count, 2))
        signs = rng.choice((-1.0, 1.0), size=count)
        vals = sum(sgn * _gauss_blob(grid, c, width) for sgn, c in zip(signs, centers))
        vals = vals * (spec["mass"] / count)
        meta.update(width=width, signs=signs.tolist(), centers=centers.tolist())
    elif kind == "sheet":
        dens, raw = _sheet_density(grid, spec["curve"], width, spec["half_length"], spec["radius"])
        vals = spec["strength"] * dens
        meta.update(width=width, curve=spec["curve"], unnormalized_mass=raw,
                    measure_mass=spec["strength"])
    elif kind == "measure_plus_lp":
        vals = np.zeros((grid.n, grid.n))
        measure = np.zeros((grid.n, grid.n))
        for comp in spec["components"]:
            comp = dict(comp)
            ctype = comp.pop("type", None)
            if ctype == "atom":
                measure += comp.get("mass", 1.0) * _gauss_blob(grid, comp.get("x", (0.0, 0.0)), width)
            elif ctype == "sheet":
                dens, _ = _sheet_density(grid, comp.get("curve", "segment"), width,
                                         comp.get("half_length", 1.0), comp.get("radius", 1.0))
                measure += comp.get("strength", 1.0) * dens
            elif ctype == "smooth":
                vals += _smooth_component(grid, comp.get("seed", config.seed), comp.get("kmax", 8),
                                          comp.get("amplitude", 1.0)).physical
            else:
                raise ConfigError(f"unknown measure_plus_lp component {ctype!r}")
        if measure.min() < 0:
            raise ConfigError("measure components must be nonnegative")
        meta.update(width=width, measure_mass=float(measure.sum() * grid.cell_area))
        vals = vals + measure
    else:  # pragma: no cover - rejected by the config
        raise ConfigError(kind)
    mean = float(np.mean(vals))
    meta["mean_correction"] = mean
    if width is not None and width < 1.5 * grid.spacing:
        meta["under_resolved"] = True
    return SpectralField.from_physical(grid, vals - mean), meta


# -- forcing ----------------------------------------------------------------


class RotatingBlob:
    """curl F(x, t): mean-free Gaussian blob carried around a circle about the origin."""

    def __init__(self, grid: GridSpec, amplitude=1.0, width=0.3, orbit=1.0, angular_speed=2.0):
        self.grid = grid
        self.amplitude = float(amplitude)
        self.width = float(width)
        self.orbit = float(orbit)
        self.angular_speed = float(angular_speed)

    def center(self, t: float):
        a = self.angular_speed * t
        return (self.orbit * math.cos(a), self.orbit * math.sin(a))

    def __call__(self, t: float) -> np.ndarray:
        g = _gauss_blob(self.grid, self.center(t), self.width)
        return self.amplitude * (g - g.mean())

    def lp_time_integral(self, T: float, p: float = 2.0, samples: int = 101) -> float:
        """int_0^T ||curl F(t)||_p dt."""
        ts = np.linspace(0.0, T, samples)
        vals = [lp_norm(SpectralField.from_physical(self.grid, self(t)), p) for t in ts]
        return float(integrate.simpson(vals, x=ts))


def build_forcing(config: SweepConfig):
    spec = dict(config.forcing)
    kind = spec.pop("kind")
    if kind == "none":
        return None
    spec.pop("p")
    return RotatingBlob(config.grid, **spec)


# -- sweep ------------------------------------------------------------------


@dataclass
class SweepRecord:
    nu: float
    T: float
    delta: float
    zeta_total: float = math.nan
    zeta_delta: float = math.nan
    energy0: float = math.nan
    energyT: float = math.nan
    balance_residual: float = math.nan
    max_enstrophy: float = math.nan
    wallclock_s: float = 0.0
    status: str = "ok"
    error: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def summary_row(self) -> list:
        return [getattr(self, c) for c in SUMMARY_COLUMNS]


def _nu_tag(nu: float) -> str:
    return f"nu_{nu:.6g}"


def run_one(config: SweepConfig, nu: float, out_dir: Path | None = None) -> SweepRecord:
    """Single solver run with all sweep diagnostics; failures become records."""
    rec = SweepRecord(nu, config.T, config.delta)
    try:
        omega0, meta = generate_initial_data(config, nu)
        forcing = build_forcing(config)
        snaps = sorted({0.0, *config.snapshot_times, config.T})
        solver = VorticitySolver(omega0, nu, forcing)
        run = solver.run(config.T, config.dt, stops=(config.delta,), snapshot_times=snaps)
        _fill_record(rec, run, config, forcing, meta)
        if out_dir is not None:
            _write_run(out_dir / _nu_tag(nu), run, rec, config)
    except (SolverError, ArithmeticError, ValueError) as exc:
        rec.status = "failed"
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.diagnostics["traceback"] = traceback.format_exc(limit=3)
    return rec


def _fill_record(rec: SweepRecord, run: RunResult, config, forcing, meta) -> None:
    T, delta = config.T, config.delta
    rec.zeta_total = dissipation(run, 0.0, T, "stages")
    rec.zeta_delta = dissipation(run, delta, T, "stages") if delta > 0 else rec.zeta_total
    rec.energy0 = float(run.column("energy")[0])
    rec.energyT = run.at("energy", T)
    rec.balance_residual = energy_balance_residual(run, T)
    rec.max_enstrophy = float(np.max(run.column("l2_omega_sq")))
    rec.wallclock_s = run.wallclock_s
    radii = np.asarray(config.concentration_radii)
    conc = np.max([concentration(w, radii) for _, w in run.snapshots], axis=0)
    s_vals = np.asarray(config.maximal_fractions) * AREA
    prop = maximal_propagation(run, s_vals, forcing, T)
    worst = max(float(np.max(lhs / bound)) for _, lhs, bound in prop) if prop else 0.0
    diag = {
        "data": meta,
        "zeta_trapezoid": dissipation(run, 0.0, T, "trapezoid"),
        "enstrophy_constant": T * run.nu * run.at("l2_omega_sq", T),
        "enstrophy_identity_residual": enstrophy_balance_residual(run, 0.0, T),
        "l1_initial": float(run.column("l1_omega")[0]),
        "concentration": dict(zip(map(float, radii), map(float, conc))),
        "maximal_ratio": worst,
        "maximal_table": [[t, list(map(float, lhs)), list(map(float, np.atleast_1d(b)))]
                          for t, lhs, b in prop],
        "steps": len(run.column("t")) - 1,
    }
    if forcing is not None:
        diag["forcing_lp_time_integral"] = forcing.lp_time_integral(T, config.forcing["p"])
    rec.diagnostics.update(diag)


def _write_run(path: Path, run: RunResult, rec: SweepRecord, config) -> None:
    path.mkdir(parents=True, exist_ok=True)
    run.write_csv(path / "diagnostics.csv")
    snap_dir = path / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for i, (t, w) in enumerate(run.snapshots):
        write_snapshot(snap_dir / f"omega_{i:03d}.adlb", w, t, run.nu)
    with open(path / "concentration.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "sup_concentration"])
        for r, v in rec.diagnostics["concentration"].items():
            w.writerow([repr(r), repr(v)])
    with open(path / "maximal.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "s", "M_s", "bound"])
        s_vals = np.asarray(config.maximal_fractions) * AREA
        for t, lhs, bound in rec.diagnostics["maximal_table"]:
            for s, a, b in zip(s_vals, lhs, np.broadcast_to(bound, s_vals.shape)):
                w.writerow([repr(float(t)), repr(float(s)), repr(a), repr(float(b))])


def run_sweep(config: SweepConfig, out_dir=None, workers: int | None = None) -> list[SweepRecord]:
    """One run per viscosity; records are returned sorted by decreasing nu."""
    workers = config.workers if workers is None else workers
    out = None if out_dir is None else Path(out_dir)
    if workers > 1 and len(config.nu_list) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_one, config, nu, out) for nu in config.nu_list]
            records = [f.result() for f in futures]
    else:
        records = [run_one(config, nu, out) for nu in config.nu_list]
    records.sort(key=lambda r: -r.nu)
    if out is not None:
        write_summary(out / "summary.csv", records)
        write_metadata(out / "metadata.json", config, records)
    return records


def write_summary(path, records) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for rec in records:
            w.writerow([repr(float(v)) for v in rec.summary_row()])


def write_metadata(path, config: SweepConfig, records) -> None:
    runs = []
    for rec in records:
        d = {k: v for k, v in rec.diagnostics.items() if k not in ("maximal_table", "traceback")}
        runs.append({"nu": rec.nu, "status": rec.status, "error": rec.error, **d})
    with open(path, "w") as fh:
        json.dump({"config": config.to_dict(), "runs": runs}, fh, indent=2, sort_keys=True,
                  default=float)


def read_summary(path) -> list[SweepRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SUMMARY_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"summary file lacks columns {sorted(missing)}")
        return [SweepRecord(**{c: float(row[c]) for c in SUMMARY_COLUMNS}) for row in reader]


# -- rate fit ---------------------------------------------------------------


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    slope_origin: float
    r_squared_origin: float
    x_values: np.ndarray
    y_values: np.ndarray
    nu_values: np.ndarray

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("x_values", "y_values", "nu_values"):
            d[k] = [float(v) for v in d[k]]
        return d


def _r_squared(y, fit) -> float:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - fit) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)


def fit_log_rate(records, delta: float | None = None) -> RateFit:
    """Least squares of zeta_delta against x = |log nu|^(-1/4), affine and through the origin.

    ``records`` are objects with ``nu`` and ``zeta_delta`` (failed runs are
    skipped).  When ``delta`` is given, records with another delta are rejected.
    """
    rows = [r for r in records if getattr(r, "status", "ok") == "ok" and np.isfinite(r.zeta_delta)]
    if delta is not None and any(abs(r.delta - delta) > 1e-12 for r in rows):
        raise ValueError("records mix different delta values")
    if len(rows) < 3:
        raise ValueError("rate fit needs at least three successful records")
    rows.sort(key=lambda r: -r.nu)
    nu = np.array([r.nu for r in rows])
    if np.any(nu >= 1):
        raise ValueError("the |log nu| abscissa needs nu < 1")
    x = np.abs(np.log(nu)) ** -0.25
    y = np.array([r.zeta_delta for r in rows])
    if np.ptp(x) <= 1e-12 * np.max(x):
        raise ValueError("degenerate spread in |log nu|^(-1/4)")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    slope0 = float(x @ y / (x @ x))
    return RateFit(float(slope), float(intercept), _r_squared(y, A @ [slope, intercept]),
                   slope0, _r_squared(y, slope0 * x), x, y, nu)


# -- concentration verdict --------------------------------------------------


@dataclass
class NoDiracsReport:
    radii: list
    values: list  # triple sup, listed by decreasing radius
    smallest_radius_value: float
    max_value: float
    threshold: float
    ok: bool


def verify_no_diracs(records, r_list=None, threshold: float = 0.1) -> NoDiracsReport:
    """sup over runs and sampled times of the sup-disk mass, per radius.

    ``ok`` means the value at the smallest radius is at most ``threshold``
    times the largest value in the table.
    """
    tables = [r.diagnostics["concentration"] for r in records
              if getattr(r, "status", "ok") == "ok" and "concentration" in r.diagnostics]
    if not tables:
        raise ValueError("no concentration diagnostics to verify")
    radii = sorted(tables[0]) if r_list is None else [float(r) for r in r_list]
    radii = sorted(radii, reverse=True)
    values = [max(t[r] for t in tables) for r in radii]
    # enforce the (mathematically automatic) monotonicity against rounding
    values = list(np.minimum.accumulate(values))
    small, peak = values[-1], max(values)
    return NoDiracsReport(radii, [float(v) for v in values], float(small), float(peak),
                          threshold, bool(small <= threshold * peak))

