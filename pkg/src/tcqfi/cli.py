"""Command-line batch runner.

    tcqfi simulate --config run.cfg [--workers N]
    tcqfi validate
    tcqfi fit --input run.csv [--x s] [--y qfi] [--pipeline method2]

Exit status: 0 on success, 2 on a configuration error, 3 when a numerical
invariant is violated.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from . import __version__, method1, method2
from .errors import InvariantViolation, TcqfiError
from .exact_sim import QecSchedule, simulate as exact_simulate
from .model import Coherent, Fock, ModelParams
from .validation import run_suite, summarize

log = logging.getLogger("tcqfi")

EXPERIMENTS = ("time_sweep", "interval_sweep", "atom_sweep", "validate")
PIPELINES = ("exact", "method1", "method2")
COLUMNS = ("pipeline", "schedule", "s", "interval", "t", "qfi", "code_population",
           "corner_magnitude", "heisenberg_reference")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


class ConfigError(TcqfiError, ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# --------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    experiment: str
    atoms: list[int]
    omega_c: float
    omega_a: float
    coupling: float
    field: str
    photons: int | None
    alpha: complex | None
    n_max: int | None
    intervals: list[float]
    uncorrected: bool
    times: list[float]
    t_final: float | None
    pipelines: list[str]
    basis: str
    frame: str
    sigma_convention: str
    fd_step: float | None
    cutoff: float
    output: str
    time_rescale: str = "none"
    source: dict = field(default_factory=dict)

    def params(self, s: int | None = None) -> ModelParams:
        fi = Fock(self.photons) if self.field == "fock" else Coherent(self.alpha)
        return ModelParams(s or self.atoms[0], self.omega_c, self.omega_a, self.coupling, fi,
                           n_max=self.n_max, sigma_convention=self.sigma_convention)


KNOWN_KEYS = {
    "experiment", "atoms", "omega_c_rad_per_time", "omega_a_rad_per_time", "delta_rad_per_time",
    "coupling_rad_per_time", "field", "photons", "alpha", "alpha_phase_rad", "n_max",
    "intervals_time", "uncorrected", "t_start_time", "t_stop_time", "t_points", "t_final_time",
    "pipelines", "basis", "frame", "sigma_convention", "fd_step_rad_per_time", "cutoff", "output",
    "time_rescale",
}


def _list(text: str) -> list[str]:
    return [x.strip() for x in text.replace(";", ",").split(",") if x.strip()]


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    """Parse a flat ``key = value`` file; every problem is reported at once."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError([f"unreadable config: {exc}"]) from exc
    raw = dict(cp["run"])
    problems: list[str] = [f"{k}: unknown key" for k in raw if k not in KNOWN_KEYS]

    def get(key, conv, default=None, required=False):
        if key not in raw or raw[key] == "":
            if required:
                problems.append(f"{key}: required")
            return default
        try:
            return conv(raw[key])
        except (TypeError, ValueError) as exc:
            problems.append(f"{key}: cannot parse {raw[key]!r} ({exc})")
            return default

    def boolean(x):
        v = x.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected true/false")

    experiment = get("experiment", str, required=True)
    if experiment is not None and experiment not in EXPERIMENTS:
        problems.append(f"experiment: must be one of {', '.join(EXPERIMENTS)}")
    if experiment == "validate":
        return RunConfig("validate", [3], 0, 0, 0, "fock", 0, None, None, [], False, [], None, [],
                         "collective", "cavity", "standard", None, 0.0,
                         get("output", str, "validate.csv"), "none", raw)

    atoms = get("atoms", lambda x: [int(v) for v in _list(x)], required=True) or [3]
    omega_c = get("omega_c_rad_per_time", float, required=True)
    omega_a = get("omega_a_rad_per_time", float)
    delta = get("delta_rad_per_time", float)
    if (omega_a is None) == (delta is None):
        problems.append("omega_a_rad_per_time / delta_rad_per_time: give exactly one")
    elif omega_a is None and omega_c is not None:
        omega_a = omega_c + delta
    coupling = get("coupling_rad_per_time", float, required=True)
    fld = get("field", lambda x: x.strip().lower(), required=True)
    photons = alpha = None
    if fld == "fock":
        photons = get("photons", int, required=True)
    elif fld == "coherent":
        mag = get("alpha", float, required=True)
        ph = get("alpha_phase_rad", float, 0.0)
        alpha = complex(mag * np.exp(1j * ph)) if ph else complex(mag) if mag is not None else None
    elif fld is not None:
        problems.append("field: must be fock or coherent")
    n_max = get("n_max", int)
    intervals = get("intervals_time", lambda x: [float(v) for v in _list(x)], [])
    uncorrected = get("uncorrected", boolean, True)
    t_final = get("t_final_time", float)
    times: list[float] = []
    if experiment == "time_sweep":
        t0 = get("t_start_time", float, 0.0)
        t1 = get("t_stop_time", float, required=True)
        npts = get("t_points", int, required=True)
        if None not in (t0, t1, npts):
            if npts < 1 or t1 < t0 or t0 < 0:
                problems.append("t_start_time/t_stop_time/t_points: need 0 <= start <= stop, points >= 1")
            else:
                times = [float(x) for x in np.linspace(t0, t1, npts)]
    elif experiment in ("interval_sweep", "atom_sweep") and t_final is None:
        problems.append("t_final_time: required for this experiment")
    pipelines = get("pipelines", _list, ["method2"])
    for pl in pipelines:
        if pl not in PIPELINES:
            problems.append(f"pipelines: unknown pipeline {pl!r}")
    basis = get("basis", str, "collective")
    if basis not in ("collective", "full"):
        problems.append("basis: must be collective or full")
    frame = get("frame", str, "cavity")
    if frame not in ("cavity", "lab"):
        problems.append("frame: must be cavity or lab")
    sigma = get("sigma_convention", str, "standard")
    if sigma not in ("standard", "literal"):
        problems.append("sigma_convention: must be standard or literal")
    fd_step = get("fd_step_rad_per_time", float)
    if fd_step is not None and fd_step <= 0:
        problems.append("fd_step_rad_per_time: must be positive")
    cutoff = get("cutoff", float, 1e-12)
    output = get("output", str, required=True)
    time_rescale = get("time_rescale", str, "none")
    if time_rescale not in ("none", "half_rabi"):
        problems.append("time_rescale: must be none or half_rabi")
    elif time_rescale == "half_rabi" and fld != "fock":
        problems.append("time_rescale: half_rabi needs field = fock")

    if any(e <= 0 for e in intervals):
        problems.append("intervals_time: every interval must be positive")
    if experiment in ("interval_sweep", "atom_sweep") and not intervals:
        problems.append("intervals_time: required for this experiment")
    if any(s < 1 for s in atoms):
        problems.append("atoms: must be positive")
    if intervals and any(s % 2 == 0 for s in atoms):
        problems.append("atoms: corrections need odd atom numbers")
    if experiment != "atom_sweep" and len(atoms) != 1:
        problems.append("atoms: a list is only meaningful for atom_sweep")
    if "method1" in pipelines and fld != "fock":
        problems.append("pipelines: method1 requires field = fock")
    if "method2" in pipelines and not intervals:
        problems.append("pipelines: method2 describes corrected dynamics and needs intervals_time")
    if problems:
        raise ConfigError(problems)
    if output and base_dir is not None and not os.path.isabs(output):
        output = str(base_dir / output)
    cfg = RunConfig(experiment, atoms, omega_c, omega_a, coupling, fld, photons, alpha, n_max,
                    intervals, uncorrected, times, t_final, pipelines, basis, frame, sigma,
                    fd_step, cutoff, output, time_rescale, raw)
    try:
        for s in atoms:
            cfg.params(s)
    except (ValueError, TypeError) as exc:
        raise ConfigError([f"model parameters: {exc}"]) from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return parse_config(text, path.parent)


# --------------------------------------------------------------------------
# pipelines

@dataclass(frozen=True)
class Curve:
    pipeline: str
    s: int
    interval: float | None   # None means uncorrected
    times: tuple[float, ...]

    @property
    def label(self) -> str:
        sched = "uncorrected" if self.interval is None else f"eps{self.interval:g}"
        return f"{self.pipeline}_{sched}_s{self.s}"


def evaluate_curve(cfg: RunConfig, curve: Curve):
    """``(qfi, code_population, corner_magnitude)`` arrays along ``curve.times``."""
    p = cfg.params(curve.s)
    t = np.asarray(curve.times, dtype=float)
    h = cfg.fd_step
    if curve.pipeline == "exact":
        sched = None if curve.interval is None else QecSchedule(curve.interval, cfg.frame)
        tr = exact_simulate(p, sched, t, cfg.basis, h=h, cutoff=cfg.cutoff)
        return tr.qfi, tr.code_population, np.abs(tr.corner_coherence)
    qfi, pop, corner = [], [], []
    for ti in t:
        if curve.pipeline == "method1":
            if curve.interval is None:
                rho = method1.uncorrected_density(ti, p)
                q = method1.qfi_uncorrected(ti, p, h)
            else:
                eta = int(math.floor(ti / curve.interval + 1e-9))
                tau = max(ti - eta * curve.interval, 0.0)
                rho = method1.corrected_density(eta, curve.interval, tau, p)
                q = method1.qfi_corrected(ti, curve.interval, p, h)
        else:
            rho = method2.corrected_density(ti, curve.interval, p.s, p)
            q = method2.qfi_corrected(ti, curve.interval, p.s, p, h=h)
        qfi.append(q)
        pop.append((rho[0, 0] + rho[-1, -1]).real)
        corner.append(abs(rho[0, -1]))
    return np.array(qfi), np.array(pop), np.array(corner)


def _curve_job(args):
    cfg, curve = args
    try:
        return evaluate_curve(cfg, curve)
    except InvariantViolation as exc:
        raise type(exc)(f"{curve.label} (t grid {curve.times[0]:g}..{curve.times[-1]:g}): {exc}") from exc


def plan_curves(cfg: RunConfig) -> list[Curve]:
    curves = []
    if cfg.experiment == "time_sweep":
        grid = tuple(cfg.times)
        for pl in cfg.pipelines:
            scheds = ([None] if cfg.uncorrected and pl != "method2" else []) + list(cfg.intervals)
            curves += [Curve(pl, cfg.atoms[0], e, grid) for e in scheds]
    elif cfg.experiment == "interval_sweep":
        for pl in cfg.pipelines:
            curves += [Curve(pl, cfg.atoms[0], e, (cfg.t_final,)) for e in cfg.intervals]
    elif cfg.experiment == "atom_sweep":
        for pl in cfg.pipelines:
            curves += [Curve(pl, s, cfg.intervals[0], (cfg.t_final,)) for s in cfg.atoms]
    return curves


# --------------------------------------------------------------------------
# output

def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]


def _rows(curve: Curve, values) -> list[dict]:
    qfi, pop, corner = values
    rows = []
    for t, q, c, m in zip(curve.times, qfi, pop, corner):
        rows.append({
            "pipeline": curve.pipeline,
            "schedule": "uncorrected" if curve.interval is None else "corrected",
            "s": curve.s, "interval": curve.interval, "t": t, "qfi": q,
            "code_population": c, "corner_magnitude": m,
            "heisenberg_reference": curve.s ** 2 * t ** 2,
        })
    return rows


def _check_rows(rows: list[dict]):
    for r in rows:
        if not r["qfi"] >= 0:
            raise InvariantViolation(f"negative QFI {r['qfi']} at {r}")
        if not -1e-9 <= r["code_population"] <= 1 + 1e-9:
            raise InvariantViolation(f"code population {r['code_population']} outside [0, 1] at {r}")


def write_wide(path: Path, cfg: RunConfig, curves: list[Curve], rows: list[dict]):
    """One row per sweep coordinate, one QFI column per curve (gnuplot: ``set datafile separator ','``)."""
    axis = {"time_sweep": "t", "interval_sweep": "interval", "atom_sweep": "s"}[cfg.experiment]
    table: dict = {}
    for r in rows:
        x = r[axis]
        entry = table.setdefault(x, {"heisenberg_reference": r["heisenberg_reference"]})
        label = "_".join(
            [r["pipeline"], "uncorrected" if r["interval"] is None else f"eps{r['interval']:g}"]
            + ([f"s{r['s']}"] if axis != "s" else [])
        ) if axis != "interval" else f"{r['pipeline']}_s{r['s']}"
        entry[f"qfi_{label}"] = r["qfi"]
    labels = []
    for r in rows:
        for k in table[r[axis]]:
            if k != "heisenberg_reference" and k not in labels:
                labels.append(k)
    # Optional dimensionless time: half the single-atom Rabi frequency times t.
    scale = None
    if axis == "t" and cfg.time_rescale == "half_rabi":
        scale = 0.5 * method1.rabi_params(cfg.params()).Delta
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([axis, *(["t_rescaled"] if scale else []), "heisenberg_reference", *labels])
        for x in sorted(table):
            e = table[x]
            w.writerow([fmt(x), *([fmt(scale * x)] if scale else []),
                        fmt(e["heisenberg_reference"]), *[fmt(e.get(k)) for k in labels]])


def manifest(cfg: RunConfig, outputs: dict) -> dict:
    d = asdict(cfg)
    d.pop("source")
    for k in ("alpha",):
        if d[k] is not None:
            d[k] = [d[k].real, d[k].imag]
    d["times"] = [fmt(t) for t in d["times"]]
    return {"tcqfi_version": __version__, "config_text": cfg.source, "resolved": d,
            "numpy": np.__version__, "outputs": outputs}


def run(cfg: RunConfig, workers: int | None = None, progress=None) -> SweepResult:
    """Execute a configuration and write its CSV, wide table and manifest."""
    if cfg.experiment == "validate":
        results = run_suite(progress)
        if not all(r.passed for r in results):
            raise InvariantViolation(summarize(results))
        return SweepResult()
    curves = plan_curves(cfg)
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    workers = workers or os.cpu_count() or 1
    result = SweepResult()
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        fh.flush()

        def emit(curve, values):
            rows = _rows(curve, values)
            _check_rows(rows)
            for r in rows:
                w.writerow([fmt(r[c]) for c in COLUMNS])
            fh.flush()
            result.rows.extend(rows)
            if progress:
                progress(curve)

        if workers > 1 and len(curves) > 1:
            with ProcessPoolExecutor(max_workers=min(workers, len(curves))) as pool:
                futures = [pool.submit(_curve_job, (cfg, c)) for c in curves]
                # Restore submission order before writing.
                for curve, fut in zip(curves, futures):
                    emit(curve, fut.result())
        else:
            for curve in curves:
                emit(curve, _curve_job((cfg, curve)))
    wide = out.with_name(out.stem + "_wide.csv")
    write_wide(wide, cfg, curves, result.rows)
    outputs = {"csv": str(out), "wide": str(wide)}
    if cfg.experiment == "atom_sweep":
        for pl in cfg.pipelines:
            pairs = [(r["s"], r["qfi"]) for r in result.rows if r["pipeline"] == pl]
            if len(pairs) >= 3 and all(q > 0 for _, q in pairs):
                k, r2 = fit_power_law(pairs)
                outputs[f"fit_{pl}"] = {"exponent": k, "r_squared": r2}
    man = out.with_name(out.stem + ".manifest.json")
    man.write_text(json.dumps(manifest(cfg, outputs), indent=2, sort_keys=True) + "\n")
    return result


# --------------------------------------------------------------------------
# fitting

def fit_power_law(pairs) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and its ``r^2``."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 points, got {len(pairs)}")
    x = np.array([float(a) for a, _ in pairs])
    y = np.array([float(b) for _, b in pairs])
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs strictly positive x and y")
    fit = stats.linregress(np.log(x), np.log(y))
    return float(fit.slope), float(fit.rvalue ** 2)


def read_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------
# entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tcqfi", description="QFI sweeps for error-corrected GHZ probes")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run a configuration file")
    sim.add_argument("--config", required=True)
    sim.add_argument("--workers", type=int, default=None,
                     help="worker processes (default: available CPUs)")
    sub.add_parser("validate", help="run the invariant suite")
    fit = sub.add_parser("fit", help="power-law fit of a result CSV")
    fit.add_argument("--input", required=True)
    fit.add_argument("--x", default=None, help="column for x (default: s if it varies, else t)")
    fit.add_argument("--y", default="qfi")
    fit.add_argument("--pipeline", default=None)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            results = run_suite()
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  {r.detail}")
            print(summarize(results))
            return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT
        if args.command == "simulate":
            cfg = load_config(args.config)

            def progress(item):
                print(f"done {getattr(item, 'label', getattr(item, 'name', item))}", file=sys.stderr)

            res = run(cfg, args.workers, progress)
            if cfg.experiment == "validate":
                print("all invariant checks passed")
            else:
                print(f"wrote {len(res.rows)} rows to {cfg.output}")
            return EXIT_OK
        if args.command == "fit":
            rows = read_rows(args.input)
            if args.pipeline:
                rows = [r for r in rows if r["pipeline"] == args.pipeline]
            xcol = args.x or ("s" if len({r["s"] for r in rows}) > 1 else "t")
            pairs = [(float(r[xcol]), float(r[args.y])) for r in rows
                     if r[xcol] and float(r[xcol]) > 0]
            try:
                k, r2 = fit_power_law(pairs)
            except ValueError as exc:
                print(f"fit failed: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            print(f"exponent {k:.6f} r_squared {r2:.6f} points {len(pairs)}")
            return EXIT_OK
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
