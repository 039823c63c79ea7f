"""Run orchestration, diagnostics, fits and convergence studies."""

from __future__ import annotations

import csv
import io
import logging
import math
import platform
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy

from . import __version__
from .config import RunConfig
from .io import (
    read_field,
    read_gamma_history,
    read_profile,
    write_field,
    write_gamma_history,
    write_profile,
)
from .norms import (
    interpolation_bound,
    interpolation_exponent,
    interpolation_ratio,
    lorentz_norm,
    lp_norm,
)
from .propagator import (
    EvolutionAbort,
    EvolveConfig,
    energy,
    evolve,
    free_propagate,
    galilean_weight,
    integrate,
)
from .scattering import (
    Coupling,
    PhaseAccumulator,
    ScatteringProfile,
    coulomb_density,
    extract_profile,
    gauged_amplitude,
    ode_residual,
    reconstruct,
    self_cell_average,
    update_phase,
)
from .spectral import (
    BoundaryWarning,
    ComplexField,
    GridSpec,
    boundary_mass_fraction,
    coulomb_constant,
    gauge_rate,
    lattice_offset,
    mass,
)
from .wavepacket import (
    GammaSlice,
    VelocityGrid,
    freq_comparison,
    gamma_batch,
    lemma_constants,
    nu,
    ray_comparison,
    velocity_derivative_norm,
)

log = logging.getLogger(__name__)

COLUMNS = (
    "t", "mass", "l2", "linf", "lorentz", "h0beta", "jbeta", "jbeta_free", "ratio",
    "boundary_mass", "energy", "gauge", "gamma_linf", "gamma_l2", "gamma_deriv", "ray", "freq",
    "residual", "residual_alt", "tail", "bound_linf", "bound_l2", "bound_deriv", "bound_ray",
    "bound_freq", "wall_per_step",
)
# columns that depend on neighbouring rows or on timing
LAGGED = ("residual", "residual_alt", "tail")
TIMING = ("wall_per_step",)


# -- datum and grids ---------------------------------------------------------


def make_grid_for(cfg: RunConfig) -> GridSpec:
    return GridSpec(cfg.d, cfg.n, cfg.L)


def make_velocity_grid(cfg: RunConfig) -> VelocityGrid:
    return VelocityGrid(cfg.d, cfg.n_velocities, cfg.velocity_max)


def h0beta_of(values: np.ndarray, grid: GridSpec, beta: float) -> float:
    l2 = math.sqrt(np.sum(np.abs(values) ** 2) * grid.cell_volume)
    mom = math.sqrt(np.sum(grid.r2**beta * np.abs(values) ** 2) * grid.cell_volume)
    return l2 + mom


def make_datum(cfg: RunConfig, grid: GridSpec | None = None) -> np.ndarray:
    """Gaussian ``exp(-|x - x0|^2 / 2 sigma^2 + i k0.x)`` scaled to ``H^{0,beta}`` norm epsilon."""
    grid = make_grid_for(cfg) if grid is None else grid
    x0 = cfg.center or (0.0,) * cfg.d
    k0 = cfg.boost or (0.0,) * cfg.d
    axes = grid.axes("x")
    r2 = sum((a - c) ** 2 for a, c in zip(axes, x0))
    phase = sum(a * k for a, k in zip(axes, k0))
    u = np.exp(-r2 / (2 * cfg.sigma**2) + 1j * phase)
    return u * (cfg.epsilon / h0beta_of(u, grid, cfg.beta))


# -- per-snapshot diagnostics ------------------------------------------------


@dataclass
class SnapshotAnalysis:
    row: dict
    gamma: GammaSlice


def analyse_snapshot(u: ComplexField, cfg: RunConfig, vgrid: VelocityGrid,
                     nonlinear: float = 1.0) -> SnapshotAnalysis:
    """All diagnostics that depend on a single snapshot."""
    grid, t, beta = u.grid, u.t, cfg.beta
    consts = lemma_constants(grid.d, beta, cfg.profile_width, grid)
    vals = u.values
    m = mass(vals, grid)
    back = free_propagate(u, -t).values
    moment = math.sqrt(np.sum(grid.r2**beta * np.abs(back) ** 2) * grid.cell_volume)
    l2 = math.sqrt(m)
    linf = float(np.max(np.abs(vals)))
    jb = lp_norm(galilean_weight(u, t, beta), 2)
    gam = gamma_batch(u, vgrid, cfg.profile_width)
    g_deriv = velocity_derivative_norm(gam, beta)
    ray = ray_comparison(u, gam)
    freq = freq_comparison(u, gam)
    c = gauge_rate(m, grid) * nonlinear
    row = {
        "t": t,
        "mass": m,
        "l2": l2,
        "linf": linf,
        "lorentz": lorentz_norm(u, interpolation_exponent(grid.d), 2),
        "h0beta": l2 + moment,
        "jbeta": jb,
        "jbeta_free": moment,
        "ratio": interpolation_ratio(u) if linf > 0 else math.nan,
        "boundary_mass": boundary_mass_fraction(vals, grid),
        "energy": energy(u, nonlinear),
        "gauge": c,
        "gamma_linf": gam.linf(),
        "gamma_l2": gam.l2(),
        "gamma_deriv": g_deriv,
        "ray": ray,
        "freq": freq,
        "residual": math.nan,
        "residual_alt": math.nan,
        "tail": math.nan,
        "bound_linf": _ratio(gam.linf(), consts.linf * t ** (grid.d / 2) * linf),
        "bound_l2": _ratio(gam.l2(), consts.l2 * l2),
        "bound_deriv": _ratio(g_deriv, consts.deriv * jb),
        "bound_ray": _ratio(ray, consts.ray * t ** (-beta / 2 - grid.d / 4) * jb),
        "bound_freq": _ratio(freq, consts.freq * t ** (grid.d / 4 - beta / 2) * jb),
        "wall_per_step": math.nan,
    }
    return SnapshotAnalysis(row, gam)


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 0.0 if a == 0 else math.inf
    return a / b


# -- CSV ---------------------------------------------------------------------


def format_value(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] = COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r[c]) for c in columns])
    return buf.getvalue()


def csv_to_rows(text: str) -> tuple[list[str], list[dict]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = [{k: float(v) for k, v in zip(header, rec)} for rec in reader]
    return header, rows


def read_diagnostics(path) -> list[dict]:
    return csv_to_rows(Path(path).read_text())[1]


# -- run -----------------------------------------------------------------------


@dataclass
class RunResult:
    cfg: RunConfig
    rows: list[dict]
    times: np.ndarray
    gammas: list[GammaSlice]
    free_gammas: list[GammaSlice]
    G: np.ndarray
    profile: ScatteringProfile | None
    snapshots: dict = field(default_factory=dict)
    reconstruction: list[dict] = field(default_factory=list)
    energy0: float = math.nan
    mass0: float = math.nan
    gauge: float = 0.0
    output_dir: Path | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def true_gammas(self) -> np.ndarray:
        return np.array([g.values * np.exp(-1j * self.gauge * g.t) for g in self.gammas])


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:010.4f}.bin"


def _dyadic_triple(times: np.ndarray, T: float):
    pts = []
    for tq in (T / 4, T / 2, T):
        idx = int(np.argmin(np.abs(times - tq)))
        if abs(times[idx] - tq) > 1e-9 * max(1.0, tq):
            return None
        pts.append(idx)
    return pts


def manifest_entries(cfg: RunConfig, grid: GridSpec, extra: dict | None = None) -> dict:
    consts = lemma_constants(cfg.d, cfg.beta, cfg.profile_width, grid)
    entries = {f"config.{k}": v for k, v in
               (line.split(" = ", 1) for line in cfg.to_text().splitlines())}
    entries.update({
        "config_hash": cfg.hash(),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": f"{platform.system()}-{platform.machine()}",
        "determinism": "bitwise (sequential pocketfft transforms, fixed reduction order)",
        "transform.forward": "(2 pi)^{-d/2} h^d sum_x e^{-i x.xi} f(x)",
        "transform.inverse": "(2 pi)^{-d/2} (2 pi/L)^d sum_xi e^{i x.xi} g(xi)",
        "coulomb.c_d": repr(coulomb_constant(cfg.d)),
        "coulomb.symbol": "(2 pi)^{d/2} c_d |xi|^{1-d}, zero mode 0",
        "gauge.lattice_offset": repr(lattice_offset(cfg.d)),
        "velocity.self_cell": repr(self_cell_average(cfg.d, 2 * cfg.velocity_max / cfg.n_velocities)),
        "velocity.vmax": repr(cfg.velocity_max),
        "profile.nu": repr(nu(cfg.d)),
        "lemma.linf": repr(consts.linf),
        "lemma.l2": repr(consts.l2),
        "lemma.deriv": repr(consts.deriv),
        "lemma.ray": repr(float(consts.ray)),
        "lemma.freq": repr(float(consts.freq)),
        "interpolation.bound": repr(interpolation_bound(cfg.d)),
    })
    if extra:
        entries.update(extra)
    return entries


def write_manifest(path, entries: dict):
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in entries.items()))


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def config_from_manifest(entries: dict) -> RunConfig:
    text = "".join(f"{k[len('config.'):]} = {v}\n" for k, v in entries.items()
                   if k.startswith("config."))
    return RunConfig.from_text(text)


def run(cfg: RunConfig, output_dir=None, write: bool = True, progress=None) -> RunResult:
    """Evolve the configured datum and compute every diagnostic.

    With ``write`` the run directory receives ``manifest.txt``,
    ``diagnostics.csv``, snapshots, ``profile.bin``, gamma histories and
    ``reconstruction.csv``.  An abort writes ``error.txt`` and re-raises.
    """
    cfg.validate()
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(cfg.to_text())
    grid = make_grid_for(cfg)
    vgrid = make_velocity_grid(cfg)
    coupling = Coupling.get(cfg.coupling, cfg.d)
    alt = Coupling.get("paper" if cfg.coupling == "derived" else "derived", cfg.d)
    nonlinear = 0.0 if cfg.linear else 1.0
    datum = make_datum(cfg, grid)
    u0 = ComplexField(grid, 0.0, datum)
    e0 = energy(u0, nonlinear)
    m0 = mass(datum, grid)
    c = gauge_rate(m0, grid) * nonlinear
    ecfg = EvolveConfig(grid, datum, t0=0.0, t_end=cfg.t_end, tau=cfg.tau,
                        diag_every=cfg.diag_stride, diag_start=cfg.diag_start,
                        snapshot_times=cfg.snapshot_times, nonlinear=nonlinear)

    rows: list[dict] = []
    gammas: list[GammaSlice] = []
    free: list[GammaSlice] = []
    G: list[np.ndarray] = []
    snaps: dict[float, Path | np.ndarray] = {}
    acc = None
    row_index: dict[float, int] = {}
    last_wall, last_step = time.perf_counter(), 0

    def finish_residual(i: int):
        if 0 < i < len(gammas) - 1:
            try:
                rows[i]["residual"] = float(np.max(ode_residual(
                    gammas[i - 1], gammas[i], gammas[i + 1], coupling=coupling, gauge_rate=c)))
                rows[i]["residual_alt"] = float(np.max(ode_residual(
                    gammas[i - 1], gammas[i], gammas[i + 1], coupling=alt, gauge_rate=c)))
            except ValueError:
                pass

    try:
        for fr in evolve(ecfg):
            if fr.snapshot:
                if write:
                    snaps[fr.t] = write_field(out / snapshot_name(fr.t), fr.field)
                else:
                    snaps[fr.t] = fr.field
            if not fr.diagnostic or fr.t < cfg.diag_start - 1e-12:
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BoundaryWarning)
                ana = analyse_snapshot(fr.field, cfg, vgrid, nonlinear)
            now = time.perf_counter()
            steps = fr.step - last_step
            ana.row["wall_per_step"] = (now - last_wall) / steps if steps else math.nan
            last_wall, last_step = now, fr.step
            gam = ana.gamma
            true = GammaSlice(gam.t, vgrid, gam.values * np.exp(-1j * c * gam.t))
            acc = PhaseAccumulator.start(true, coupling) if acc is None else update_phase(acc, true)
            G.append(gauged_amplitude(true, acc))
            rows.append(ana.row)
            gammas.append(gam)
            # tail against the row at t/2 when it exists
            j = row_index.get(round(fr.t / 2, 9))
            if j is not None:
                ana.row["tail"] = float(np.max(np.abs(G[-1] - G[j])))
            row_index[round(fr.t, 9)] = len(rows) - 1
            finish_residual(len(gammas) - 2)
            if cfg.free_reference:
                uf = free_propagate(u0, fr.t)
                free.append(gamma_batch(uf.with_values(uf.values, t=fr.t), vgrid, cfg.profile_width))
            if progress is not None:
                progress(fr.t, ana.row)
    except EvolutionAbort as exc:
        if write:
            (out / "error.txt").write_text("".join(f"{k}={v}\n" for k, v in exc.record.items()))
            (out / "diagnostics.csv").write_text(rows_to_csv(rows))
        raise

    times = np.array([r["t"] for r in rows])
    profile = None
    triple = _dyadic_triple(times, times[-1]) if len(times) >= 3 else None
    if triple is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            profile = extract_profile(times[triple], [G[i] for i in triple], vgrid,
                                      gamma_T=gammas[triple[-1]].values, coupling=coupling,
                                      gauge_rate=c)

    recon = []
    if profile is not None:
        for t, snap in sorted(snaps.items()):
            if t < cfg.diag_start:
                continue
            fieldv = read_field(snap) if isinstance(snap, Path) else snap
            rec = reconstruct(profile, t, grid)
            err = float(np.max(np.abs(fieldv.values - rec.values)))
            recon.append({"t": t, "error": err, "scaled": err * t ** (cfg.d / 2)})

    result = RunResult(cfg, rows, times, gammas, free, np.array(G), profile, snaps, recon,
                       e0, m0, c, out if write else None)
    if write:
        (out / "diagnostics.csv").write_text(rows_to_csv(rows))
        if profile is not None:
            write_profile(out / "profile.bin", profile)
        if cfg.save_gamma_history:
            write_gamma_history(out / "gamma_history.bin", gammas)
            if free:
                write_gamma_history(out / "gamma_free.bin", free)
        (out / "reconstruction.csv").write_text(
            rows_to_csv(recon, ("t", "error", "scaled")) if recon else "t,error,scaled\n")
        write_manifest(out / "manifest.txt", manifest_entries(cfg, grid, {
            "run.energy0": repr(e0), "run.mass0": repr(m0), "run.gauge_rate": repr(c),
            "run.rows": str(len(rows)), "run.coupling": coupling.name,
            "profile.accepted": str(profile.accepted if profile else None),
        }))
    return result


def load_run(run_dir) -> RunResult:
    """Rebuild a :class:`RunResult` from a run directory (no re-evolution)."""
    run_dir = Path(run_dir)
    man = read_manifest(run_dir / "manifest.txt")
    cfg = config_from_manifest(man)
    rows = read_diagnostics(run_dir / "diagnostics.csv")
    gammas = read_gamma_history(run_dir / "gamma_history.bin") if (run_dir / "gamma_history.bin").exists() else []
    free = read_gamma_history(run_dir / "gamma_free.bin") if (run_dir / "gamma_free.bin").exists() else []
    prof = read_profile(run_dir / "profile.bin") if (run_dir / "profile.bin").exists() else None
    snaps = {read_field(p).t: p for p in sorted(run_dir.glob("snapshot_t*.bin"))}
    rec = read_diagnostics(run_dir / "reconstruction.csv") if (run_dir / "reconstruction.csv").exists() else []
    c = float(man.get("run.gauge_rate", 0.0))
    times = np.array([r["t"] for r in rows])
    G = np.array([])
    if gammas:
        coupling = Coupling.get(cfg.coupling, cfg.d)
        acc, Gl = None, []
        for gam in gammas:
            true = GammaSlice(gam.t, gam.vgrid, gam.values * np.exp(-1j * c * gam.t))
            acc = PhaseAccumulator.start(true, coupling) if acc is None else update_phase(acc, true)
            Gl.append(gauged_amplitude(true, acc))
        G = np.array(Gl)
    return RunResult(cfg, rows, times, gammas, free, G, prof, snaps, rec,
                     float(man.get("run.energy0", "nan")), float(man.get("run.mass0", "nan")), c,
                     run_dir)


def analyze(run_dir, write: bool = True) -> list[dict]:
    """Recompute single-snapshot diagnostics from stored snapshots."""
    run_dir = Path(run_dir)
    cfg = config_from_manifest(read_manifest(run_dir / "manifest.txt"))
    vgrid = make_velocity_grid(cfg)
    nonlinear = 0.0 if cfg.linear else 1.0
    rows = []
    for path in sorted(run_dir.glob("snapshot_t*.bin")):
        u = read_field(path)
        if u.t < cfg.diag_start - 1e-12:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            rows.append(analyse_snapshot(u, cfg, vgrid, nonlinear).row)
    if write:
        (run_dir / "analysis.csv").write_text(rows_to_csv(rows))
    return rows


def compare_rows(a: Sequence[dict], b: Sequence[dict], skip=TIMING) -> dict:
    """Worst relative difference per column over rows matched by ``t``."""
    bt = {round(r["t"], 9): r for r in b}
    out = {}
    matched = 0
    for ra in a:
        rb = bt.get(round(ra["t"], 9))
        if rb is None:
            continue
        matched += 1
        for k, va in ra.items():
            if k in skip or k not in rb:
                continue
            vb = rb[k]
            if math.isnan(va) and math.isnan(vb):
                diff = 0.0
            elif math.isnan(va) or math.isnan(vb):
                diff = math.inf
            else:
                scale = max(abs(va), abs(vb))
                diff = 0.0 if scale == 0 else abs(va - vb) / scale
            out[k] = max(out.get(k, 0.0), diff)
    out["_matched"] = matched
    return out


def compare(run_a, run_b) -> dict:
    ra = read_diagnostics(Path(run_a) / "diagnostics.csv")
    rb = read_diagnostics(Path(run_b) / "diagnostics.csv")
    return compare_rows(ra, rb)


# -- fits ----------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    residual: float
    n: int


def fit_power_law(t: Iterable[float], y: Iterable[float],
                  window: tuple[float, float] | None = None, min_samples: int = 8) -> PowerLawFit:
    """Least squares of ``log y`` on ``log t``; ``residual`` is the max log deviation."""
    t = np.asarray(list(t), dtype=float)
    y = np.asarray(list(y), dtype=float)
    if t.shape != y.shape:
        raise ValueError("t and y must have the same length")
    if window is not None:
        sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
        t, y = t[sel], y[sel]
    if t.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples in the window, got {t.size}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("power-law fits need finite positive values")
    if np.any(t <= 0):
        raise ValueError("power-law fits need t > 0")
    lt, ly = np.log(t), np.log(y)
    A = np.stack([lt, np.ones_like(lt)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.max(np.abs(ly - (slope * lt + intercept))))
    return PowerLawFit(float(slope), float(intercept), resid, int(t.size))


def fit_quantity(rows: Sequence[dict], quantity: str, window: tuple[float, float]) -> PowerLawFit:
    column = {"linf": "linf", "h0beta": "h0beta", "residual": "residual"}.get(quantity, quantity)
    t = np.array([r["t"] for r in rows])
    y = np.array([r[column] for r in rows])
    ok = np.isfinite(y)
    return fit_power_law(t[ok], y[ok], window)


# -- convergence -----------------------------------------------------------------


@dataclass
class ConvergenceReport:
    vary: str
    values: list
    differences: list
    orders: list
    energy_drift: list
    drift_order: float | None
    floor: float = 1e-12

    @property
    def ratios(self) -> list:
        d = self.differences
        return [d[i] / d[i + 1] if d[i + 1] > 0 else math.inf for i in range(len(d) - 1)]

    def table(self) -> str:
        lines = [f"{self.vary},difference,order,energy_drift"]
        for i, v in enumerate(self.values):
            diff = self.differences[i] if i < len(self.differences) else math.nan
            order = self.orders[i] if i < len(self.orders) else math.nan
            lines.append(f"{v},{format_value(diff)},{format_value(order)},"
                         f"{format_value(self.energy_drift[i])}")
        return "\n".join(lines) + "\n"


def _restrict(values: np.ndarray, factor: int) -> np.ndarray:
    sl = tuple(slice(None, None, factor) for _ in range(values.ndim))
    return values[sl]


def convergence_study(cfg: RunConfig, vary: str = "tau", values: Sequence | None = None,
                      t_end: float | None = None) -> ConvergenceReport:
    """Self-convergence over a halving step sequence or a doubling grid sequence.

    Differences are sup norms between consecutive members at ``t_end``;
    finer grids are restricted to the coarse points, which coincide.
    """
    t_end = cfg.t_end if t_end is None else t_end
    nonlinear = 0.0 if cfg.linear else 1.0
    if vary == "tau":
        values = list(values) if values is not None else [cfg.tau, cfg.tau / 2, cfg.tau / 4]
        ratio = [values[i] / values[i + 1] for i in range(len(values) - 1)]
        grid = make_grid_for(cfg)
        datum = make_datum(cfg, grid)
        finals, drifts = [], []
        e0 = energy(ComplexField(grid, 0, datum), nonlinear)
        for tau in values:
            u = integrate(grid, datum, t_end, tau, nonlinear)
            finals.append(u.values)
            drifts.append(abs(energy(u, nonlinear) - e0) / abs(e0) if e0 else 0.0)
    elif vary == "n":
        values = list(values) if values is not None else [cfg.n, 2 * cfg.n, 4 * cfg.n]
        ratio = [values[i + 1] / values[i] for i in range(len(values) - 1)]
        finals, drifts = [], []
        for n in values:
            sub = cfg.with_updates(n=int(n))
            grid = make_grid_for(sub)
            datum = make_datum(sub, grid)
            e0 = energy(ComplexField(grid, 0, datum), nonlinear)
            u = integrate(grid, datum, t_end, cfg.tau, nonlinear)
            finals.append(_restrict(u.values, int(n) // int(values[0])))
            drifts.append(abs(energy(u, nonlinear) - e0) / abs(e0) if e0 else 0.0)
    else:
        raise ValueError("vary must be 'tau' or 'n'")
    if len(values) < 3:
        raise ValueError("convergence studies need at least three members")
    diffs = [float(np.max(np.abs(finals[i] - finals[i + 1]))) for i in range(len(finals) - 1)]
    orders = []
    for i in range(len(diffs) - 1):
        if diffs[i + 1] > 0 and diffs[i] > 0:
            orders.append(math.log(diffs[i] / diffs[i + 1]) / math.log(ratio[i]))
        else:
            orders.append(math.inf)
    drift_order = None
    if vary == "tau" and all(dr > 0 for dr in drifts):
        drift_order = float(np.polyfit(np.log(values), np.log(drifts), 1)[0])
    return ConvergenceReport(vary, list(values), diffs, orders, drifts, drift_order)
