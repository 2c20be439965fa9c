"""Monte Carlo harness: sweeps, per-trial pipeline, aggregation and result files.

Trial ``i`` of every (mode, pattern, sweep value) cell is seeded with
``seed ^ i``; independent child streams drive the plan, the scene, the noise
and the jamming mask. Cells therefore share random numbers, which keeps
comparisons between schemes paired, and a FAR run matches a CAESAR run with
K = 1 draw for draw.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .angle import estimate_angles, isolate_echoes
from .beamform import EXACT, beamform, build_sensing_matrix, restrict
from .errors import ConfigError, DegenerateProblemError, IsolationError, SolverError, UndefinedMetricError
from .model import MODES, RadarConfig, sample_frequency_plan, sample_scene
from .recovery import basis_pursuit, default_lambda, extract_support, hit_count, lasso
from .synth import NONE, PATTERNS, apply_jamming, synthesize

SWEEPS = ("S", "u", "SNR")
CSV_HEADER = ("mode", "pattern", "sweep_name", "sweep_value", "hit_rate", "hit_se", "rmse_rad",
              "trials", "failures")


@dataclass(frozen=True)
class SolverSettings:
    bp_tol: float = 1e-4
    bp_max_iter: int = 20000
    lasso_tol: float = 1e-6
    lasso_max_iter: int = 50000
    lam_ratio: float = 0.1
    angle_points: int = 201

    def validate(self) -> None:
        if not (self.bp_tol > 0 and self.lasso_tol > 0 and self.lam_ratio > 0):
            raise ConfigError("solver tolerances and lam_ratio must be positive")
        if self.bp_max_iter < 1 or self.lasso_max_iter < 1 or self.angle_points < 2:
            raise ConfigError("iteration caps must be positive and the angle grid needs 2+ points")


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep over S, u or SNR (dB) for several schemes and jamming patterns.

    Values not being swept are taken from ``S``, ``u`` and ``snr_db``;
    ``snr_db = None`` means noiseless data, solved by basis pursuit.
    """

    base: RadarConfig = field(default_factory=RadarConfig)
    sweep: str = "S"
    values: tuple = (1,)
    modes: tuple = MODES
    patterns: tuple = (NONE,)
    trials: int = 100
    S: int = 5
    u: float = 1.0
    snr_db: float | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)
    estimate_angles: bool = True
    angle_spread: float = 1.0
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "modes", tuple(str(m).upper() for m in self.modes))
        object.__setattr__(self, "patterns", tuple(str(p).lower() for p in self.patterns))

    def validate(self) -> None:
        if self.sweep not in SWEEPS:
            raise ConfigError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        if not self.values:
            raise ConfigError("sweep values must be nonempty")
        if not self.modes or any(m not in MODES for m in self.modes):
            raise ConfigError(f"modes must be a nonempty subset of {MODES}")
        if not self.patterns or any(p not in PATTERNS for p in self.patterns):
            raise ConfigError(f"patterns must be a nonempty subset of {PATTERNS}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.sweep == "u" and set(self.patterns) == {NONE}:
            raise ConfigError("sweeping u needs a jamming pattern other than 'none'")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0 <= self.angle_spread <= 1:
            raise ConfigError("angle_spread must lie in [0, 1]")
        self.solver.validate()
        for v in self.values:
            self.point(v)

    def point(self, value) -> tuple[int, float, float | None]:
        """(S, u, snr_db) at one sweep value."""
        S, u, snr = self.S, self.u, self.snr_db
        if self.sweep == "S":
            S = value
        elif self.sweep == "u":
            u = value
        else:
            snr = value
        if int(S) != S or S < 1:
            raise ConfigError(f"S must be a positive integer, got {S}")
        if not 0 < u <= 1:
            raise ConfigError(f"u must lie in (0, 1], got {u}")
        if snr is not None and not math.isfinite(snr):
            raise ConfigError("SNR must be finite; omit it for noiseless runs")
        return int(S), float(u), None if snr is None else float(snr)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        radar = data.pop("radar", {})
        solver = data.pop("solver", {})
        known = {f.name for f in fields(cls)} - {"base", "solver"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
        try:
            base = RadarConfig(**radar)
            settings = SolverSettings(**solver)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(base=base, solver=settings, **data)

    @classmethod
    def from_toml(cls, path) -> "ExperimentSpec":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))


@dataclass(frozen=True)
class ResultRow:
    """Aggregate of one (mode, pattern, sweep value) cell.

    ``hit_rate`` and ``hit_se`` are stored at the 4-decimal precision used in
    the CSV. ``rmse_rad`` is None when no scatterer was ever recovered.
    """

    mode: str
    pattern: str
    sweep_name: str
    sweep_value: float
    hit_rate: float
    hit_se: float
    rmse_rad: float | None
    trials: int
    failures: int
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class TrialOutcome:
    hits: int
    S: int
    sq_errors: list
    failed: bool = False
    isolation_failed: bool = False


def trial_streams(seed: int, index: int):
    """Generators for (plan, scene, noise, mask) of trial ``index``."""
    children = np.random.SeedSequence(seed ^ index).spawn(4)
    return [np.random.default_rng(c) for c in children]


def cell_config(spec: ExperimentSpec, mode: str, snr_db: float | None) -> RadarConfig:
    kappa2 = 0.0 if snr_db is None else 10 ** (-snr_db / 10)
    return spec.base.with_mode(mode).replace(kappa2=kappa2, seed=spec.seed)


def run_trial(config: RadarConfig, S: int, u: float, pattern: str, index: int,
              spec: ExperimentSpec) -> TrialOutcome:
    """Synthesize, jam, beamform, recover and score one CPI."""
    rng_plan, rng_scene, rng_noise, rng_mask = trial_streams(spec.seed, index)
    plan = sample_frequency_plan(config, rng_plan)
    scene = sample_scene(config, S, rng_scene, angle_spread=spec.angle_spread)
    data = synthesize(scene, plan, config, rng_noise)
    mask = apply_jamming(config, u, pattern, rng_mask)
    bf = beamform(data, plan, config)
    phi = build_sensing_matrix(plan, config, EXACT)
    settings = spec.solver
    try:
        z, Phi = restrict(bf, phi, mask)
        if config.kappa2 == 0:
            beta = basis_pursuit(z, Phi, tol=settings.bp_tol, max_iter=settings.bp_max_iter)
        else:
            lam = default_lambda(z, Phi, settings.lam_ratio)
            beta = lasso(z, Phi, lam=lam, tol=settings.lasso_tol, max_iter=settings.lasso_max_iter)
    except (SolverError, DegenerateProblemError):
        return TrialOutcome(hits=0, S=S, sq_errors=[], failed=True)
    support = extract_support(beta, S)
    hits = hit_count(support, scene, config.N)
    out = TrialOutcome(hits=hits, S=S, sq_errors=[])
    if not (spec.estimate_angles and hits):
        return out
    availability = mask.sample_availability(plan, config)
    try:
        echoes = isolate_echoes(data, support, plan, config, availability)
        step = 2 * config.beam_halfwidth / (settings.angle_points - 1)
        estimates = estimate_angles(echoes, plan, config, grid_step=step, availability=availability)
    except (IsolationError, UndefinedMetricError):
        out.isolation_failed = True
        return out
    truth = dict(zip(scene.flat_indices(config.N).tolist(), scene.angles.tolist()))
    out.sq_errors = [(truth[e.s] - e.theta_hat) ** 2 for e in estimates if e.s in truth]
    return out


def _run_cell(args):
    spec, mode, pattern, value = args
    S, u, snr = spec.point(value)
    config = cell_config(spec, mode, snr)
    start = time.perf_counter()
    outcomes = [run_trial(config, S, u, pattern, i, spec) for i in range(spec.trials)]
    return aggregate(outcomes, mode, pattern, spec.sweep, value, time.perf_counter() - start)


def aggregate(outcomes, mode, pattern, sweep_name, sweep_value, wall_time=0.0) -> ResultRow:
    rates = np.array([o.hits / o.S for o in outcomes])
    se = float(rates.std(ddof=1) / np.sqrt(len(rates))) if len(rates) > 1 else 0.0
    sq = [e for o in outcomes for e in o.sq_errors]
    rmse = float(f"{math.sqrt(sum(sq) / len(sq)):.6e}") if sq else None
    return ResultRow(mode=mode, pattern=pattern, sweep_name=sweep_name, sweep_value=float(sweep_value),
                     hit_rate=round(float(rates.mean()), 4), hit_se=round(se, 4), rmse_rad=rmse,
                     trials=len(outcomes), failures=sum(o.failed or o.isolation_failed for o in outcomes),
                     wall_time=wall_time)


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    spec.validate()
    cells = [(spec, m, p, v) for m in spec.modes for p in spec.patterns for v in spec.values]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def _fmt_value(v: float) -> str:
    return repr(float(v))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.mode, r.pattern, r.sweep_name, _fmt_value(r.sweep_value), f"{r.hit_rate:.4f}",
                    f"{r.hit_se:.4f}", "" if r.rmse_rad is None else f"{r.rmse_rad:.6e}", r.trials,
                    r.failures])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ConfigError("unexpected CSV header")
    return [ResultRow(mode=d["mode"], pattern=d["pattern"], sweep_name=d["sweep_name"],
                      sweep_value=float(d["sweep_value"]), hit_rate=float(d["hit_rate"]),
                      hit_se=float(d["hit_se"]), rmse_rad=float(d["rmse_rad"]) if d["rmse_rad"] else None,
                      trials=int(d["trials"]), failures=int(d["failures"])) for d in reader]


def rows_to_json(rows) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2)


def rows_from_json(text: str) -> list[ResultRow]:
    return [ResultRow(**d) for d in json.loads(text)]


def plot_tables(rows) -> dict[str, str]:
    """Plot-ready CSV tables: sweep value column plus one column per mode/pattern."""
    if not rows:
        return {}
    sweep = rows[0].sweep_name
    series = {}
    for r in rows:
        series.setdefault(f"{r.mode}-{r.pattern}", {})[r.sweep_value] = r
    xs = sorted({r.sweep_value for r in rows})
    names = list(series)
    tables = {}
    for metric in ("hit_rate", "rmse_rad"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([sweep] + names)
        for x in xs:
            vals = []
            for n in names:
                r = series[n].get(x)
                v = None if r is None else getattr(r, metric)
                vals.append("" if v is None else (f"{v:.4f}" if metric == "hit_rate" else f"{v:.6e}"))
            w.writerow([_fmt_value(x)] + vals)
        tables[metric] = buf.getvalue()
    return tables


def emit_results(rows, out, fmt: str = "csv") -> list[Path]:
    """Write ``out`` as CSV or JSON (``both`` writes both) plus plot tables next to it."""
    rows = list(rows)
    if not rows:
        raise ConfigError("no result rows to write")
    if fmt not in ("csv", "json", "both"):
        raise ConfigError(f"unknown format {fmt!r}")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    written = []
    if fmt in ("csv", "both"):
        p = stem.with_suffix(".csv")
        p.write_text(rows_to_csv(rows))
        written.append(p)
    if fmt in ("json", "both"):
        p = stem.with_suffix(".json")
        p.write_text(rows_to_json(rows))
        written.append(p)
    for metric, text in plot_tables(rows).items():
        p = Path(f"{stem}.plot_{metric}.csv")
        p.write_text(text)
        written.append(p)
    return written


def with_overrides(spec: ExperimentSpec, **changes) -> ExperimentSpec:
    return replace(spec, **{k: v for k, v in changes.items() if v is not None})
