"""Experiment harness: seeded runs, baselines, Monte-Carlo sweeps, outputs.

Four schemes are orchestrated over shared channel realizations:

* fp-ma  — alternating auxiliary / beamformer / placement updates,
* zf-ma  — placement against -tr((H^H H)^{-1}), then one ZF construction,
* fp-fpa — the fp loop on a fixed half-wavelength uniform linear array,
* zf-fpa — one ZF construction on that array.

Reproducibility contract: every record is a pure function of the config
and the master seed, independent of thread count.  Per-realization
streams use a counter scheme: stream_seed(master, r, s) is the first
uint32 word of SeedSequence((master, r, s)), with s = 0 the scenario
stream and s = 1 + a the init stream of algorithm a in ALGO_ORDER.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import kernels
from .channel import AntennaLayout, SPEED_OF_LIGHT, channel_matrix, sample_scenario
from .errors import MamisoError, SingularGramError
from .fp import LN2, sum_rate, update_auxiliaries, update_beamformer
from .positions import LineSearchConfig, optimize_layout, zf_objective
from .zf import zf_beamformer, zf_sum_rate

logger = logging.getLogger("mamiso.harness")

ALGO_ORDER = ("fp-ma", "zf-ma", "fp-fpa", "zf-fpa")

DEFAULT_SWEEPS = {"power_dbm": (0.0, 5.0, 10.0, 15.0),
                  "region_wavelengths": (1.0, 2.0, 3.0, 4.0)}


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def stream_seed(master_seed: int, realization: int, stream: int) -> int:
    """Derived integer seed for one per-realization stream (see module docs)."""
    return int(np.random.SeedSequence((master_seed, realization, stream)).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one reproducible experiment.

    Region size and spacing are normalized by the carrier wavelength;
    powers are configured in dBm and converted to watts at this boundary.
    """

    n_antennas: int = 4
    n_users: int = 4
    n_paths: int = 4
    region_wavelengths: float = 2.0
    spacing_wavelengths: float = 0.5
    power_dbm: float = 10.0
    noise_dbm: float = -100.0
    carrier_ghz: float = 5.0
    cell_radius_m: float = 500.0
    cell_exclusion_m: float = 10.0
    drop_model: str = "disc"
    step_init: float = 10.0
    step_min: float = 1e-3
    max_sweeps: int = 20
    max_iters: int = 50
    rel_tol: float = 1e-4
    realizations: int = 100
    seed: int = 0
    algos: tuple = ALGO_ORDER

    def __post_init__(self):
        object.__setattr__(self, "algos", tuple(self.algos))
        for name in ("n_antennas", "n_users", "n_paths", "max_iters", "realizations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.max_sweeps < 0:
            raise ValueError("max_sweeps must be nonnegative")
        for name in ("region_wavelengths", "spacing_wavelengths", "carrier_ghz",
                     "cell_radius_m", "rel_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cell_exclusion_m <= 0 or self.cell_exclusion_m >= self.cell_radius_m:
            raise ValueError("cell exclusion radius must be in (0, cell_radius_m)")
        if not self.step_init > self.step_min > 0:
            raise ValueError("need step_init > step_min > 0")
        if self.n_antennas >= 2 and self.spacing_wavelengths > self.region_wavelengths * np.sqrt(2.0):
            raise ValueError("min spacing exceeds the region diagonal; no feasible layout")
        bad = [a for a in self.algos if a not in ALGO_ORDER]
        if bad or not self.algos:
            raise ValueError(f"algos must be a nonempty subset of {ALGO_ORDER}, got {self.algos}")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)

    @property
    def region_m(self) -> float:
        return self.region_wavelengths * self.wavelength_m

    @property
    def spacing_m(self) -> float:
        return self.spacing_wavelengths * self.wavelength_m

    @property
    def power_w(self) -> float:
        return dbm_to_watts(self.power_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algos"] = list(self.algos)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def line_search(self, max_sweeps=None) -> LineSearchConfig:
        return LineSearchConfig(self.step_init, self.step_min,
                                self.max_sweeps if max_sweeps is None else max_sweeps)


@dataclass
class MetricsRecord:
    """Per-run result: final rate, per-iteration trajectory, diagnostics."""

    algo: str
    sum_rate: float
    trajectory: np.ndarray     # bits/s/Hz; entry 0 before iteration 1, one per iteration after
    iters: int
    wall_ms: float
    layout: np.ndarray         # final (N, 2) positions, m
    converged: bool
    realization: int = 0
    seed: int = 0
    sweep_value: float = None
    tx_power: np.ndarray = field(default_factory=lambda: np.empty(0))
    ridge_mu: np.ndarray = field(default_factory=lambda: np.empty(0))


def ula_layout(config: ExperimentConfig) -> AntennaLayout:
    """Fixed half-wavelength uniform linear array baseline.

    The array geometry does not depend on the movable-antenna region and
    may extend past it; baselines never run the placement stage.
    """
    x = np.arange(config.n_antennas) * (config.wavelength_m / 2.0)
    pos = np.column_stack([x, np.zeros_like(x)])
    return AntennaLayout(pos, config.region_m, config.spacing_m)


def _pairwise_ok(pos: np.ndarray, spacing: float) -> bool:
    for i in range(len(pos) - 1):
        if np.any(np.sum((pos[i + 1:] - pos[i]) ** 2, axis=1) < spacing * spacing):
            return False
    return True


def initial_layout(config: ExperimentConfig, rng: np.random.Generator) -> AntennaLayout:
    """Random feasible layout: rejection sampling, then a jittered-grid fallback."""
    region, spacing, n = config.region_m, config.spacing_m, config.n_antennas
    for _ in range(10_000):
        pos = rng.uniform(0.0, region, size=(n, 2))
        if _pairwise_ok(pos, spacing):
            return AntennaLayout(pos, region, spacing)
    side = int(np.ceil(np.sqrt(n)))
    coords = np.linspace(0.0, region, side) if side > 1 else np.array([region / 2.0])
    lattice = np.array([(x, y) for y in coords for x in coords])[:n]
    pitch = region / (side - 1) if side > 1 else np.inf
    if pitch < spacing:
        raise MamisoError(
            f"cannot place {n} antennas with spacing {spacing:.4g} in a {region:.4g} region")
    amp = 0.25 * (pitch - spacing)
    jittered = np.clip(lattice + rng.uniform(-amp, amp, size=lattice.shape), 0.0, region)
    if _pairwise_ok(jittered, spacing):
        return AntennaLayout(jittered, region, spacing)
    return AntennaLayout(lattice, region, spacing)


def matched_filter(H: np.ndarray, power_budget: float) -> np.ndarray:
    """Initial beamformer: channel-matched columns sharing the budget equally."""
    norms = np.linalg.norm(H, axis=0)
    return H / norms * np.sqrt(power_budget / H.shape[1])


def run_fp(scenario, config: ExperimentConfig, init_seed=None, layout=None,
           move: bool = True) -> MetricsRecord:
    """Alternating FP design: auxiliaries, beamformer, then antenna placement.

    Stops when the sum-rate changes by less than rel_tol relative between
    outer iterations, or after max_iters iterations.  The recorded
    trajectory is non-decreasing up to float noise.
    """
    start = time.perf_counter()
    if layout is None:
        rng = np.random.default_rng(config.seed if init_seed is None else init_seed)
        layout = initial_layout(config, rng)
    noise = scenario.noise_power
    budget = config.power_w
    ls_cfg = config.line_search()
    H = channel_matrix(layout, scenario)
    W = matched_filter(H, budget)
    trajectory = [sum_rate(H, W, noise)]
    powers, mus = [], []
    converged = False
    for _ in range(config.max_iters):
        aux = update_auxiliaries(H, W, noise)
        beam, mu = update_beamformer(H, aux, noise, budget, return_multiplier=True)
        W = beam.matrix
        powers.append(beam.tx_power)
        mus.append(mu)
        if move and config.max_sweeps > 0:
            layout, _, _ = optimize_layout(layout, scenario, "fp", ls_cfg, weights=W, aux=aux)
            H = channel_matrix(layout, scenario)
        trajectory.append(sum_rate(H, W, noise))
        if abs(trajectory[-1] - trajectory[-2]) < config.rel_tol * abs(trajectory[-2]):
            converged = True
            break
    wall_ms = (time.perf_counter() - start) * 1e3
    return MetricsRecord(
        algo="fp-ma" if move else "fp-fpa",
        sum_rate=trajectory[-1],
        trajectory=np.asarray(trajectory),
        iters=len(trajectory) - 1,
        wall_ms=wall_ms,
        layout=layout.positions.copy(),
        converged=converged,
        tx_power=np.asarray(powers),
        ridge_mu=np.asarray(mus),
    )


def _zf_rates(trace_inv_values, budget, noise) -> np.ndarray:
    """ZF closed-form rates for a sequence of tr((H^H H)^{-1}) values."""
    out = []
    for trace_inv in trace_inv_values:
        out.append(float(np.sum(np.log1p(budget / (noise * trace_inv))) / LN2))
    return np.asarray(out)


def run_zf(scenario, config: ExperimentConfig, init_seed=None, layout=None,
           move: bool = True) -> MetricsRecord:
    """ZF design: optimize the layout figure of merit, then one ZF construction.

    Resamples the initial layout (up to 100 times) if its channel Gram
    matrix is singular.  The trajectory holds the ZF closed-form rate per
    placement sweep, a strictly increasing transform of the placement
    objective, so it is non-decreasing.
    """
    start = time.perf_counter()
    if layout is None:
        rng = np.random.default_rng(config.seed if init_seed is None else init_seed)
        for _ in range(100):
            candidate = initial_layout(config, rng)
            try:
                zf_objective(candidate, scenario)
            except SingularGramError:
                continue
            layout = candidate
            break
        else:
            raise SingularGramError("no nonsingular initial layout in 100 attempts")
    else:
        zf_objective(layout, scenario)  # singularity guard on the provided layout
    budget = config.power_w
    noise = scenario.noise_power
    if move and config.max_sweeps > 0:
        layout, objective_values, sweeps = optimize_layout(layout, scenario, "zf",
                                                           config.line_search())
    else:
        # baselines skip the placement stage entirely (the fixed array may
        # even sit outside the movable region)
        objective_values = [zf_objective(layout, scenario)]
        sweeps = 0
    H = channel_matrix(layout, scenario)
    zf_beamformer(H, budget)  # validates the final layout's Gram conditioning
    rate = zf_sum_rate(H, budget, noise)
    trajectory = _zf_rates([-v for v in objective_values], budget, noise)
    wall_ms = (time.perf_counter() - start) * 1e3
    return MetricsRecord(
        algo="zf-ma" if move else "zf-fpa",
        sum_rate=rate,
        trajectory=trajectory,
        iters=sweeps,
        wall_ms=wall_ms,
        layout=layout.positions.copy(),
        converged=sweeps < config.max_sweeps,
    )


def run_fpa_baseline(scenario, config: ExperimentConfig, beamforming: str = "fp") -> MetricsRecord:
    """Fixed-position baseline on the half-wavelength ULA (no placement stage)."""
    layout = ula_layout(config)
    if beamforming == "fp":
        return run_fp(scenario, config, layout=layout, move=False)
    if beamforming == "zf":
        return run_zf(scenario, config, layout=layout, move=False)
    raise ValueError(f"unknown beamforming family {beamforming!r}")


def run_algo(algo: str, scenario, config: ExperimentConfig, init_seed=None) -> MetricsRecord:
    if algo == "fp-ma":
        return run_fp(scenario, config, init_seed=init_seed)
    if algo == "zf-ma":
        return run_zf(scenario, config, init_seed=init_seed)
    if algo == "fp-fpa":
        return run_fpa_baseline(scenario, config, "fp")
    if algo == "zf-fpa":
        return run_fpa_baseline(scenario, config, "zf")
    raise ValueError(f"unknown algorithm {algo!r}")


def _run_realization(config: ExperimentConfig, realization: int) -> list:
    """All selected algorithms on one realization's shared scenario."""
    scen_seed = stream_seed(config.seed, realization, 0)
    scenario = sample_scenario(config, scen_seed)
    records = []
    for algo in config.algos:
        init_seed = stream_seed(config.seed, realization, 1 + ALGO_ORDER.index(algo))
        rec = run_algo(algo, scenario, config, init_seed=init_seed)
        rec.realization = realization
        rec.seed = scen_seed
        records.append(rec)
    return records


def _mc_job(payload):
    """Process-pool entry point; failures are reported, not raised."""
    cfg_dict, sweep_var, value, realization = payload
    config = ExperimentConfig.from_dict(cfg_dict)
    if sweep_var is not None:
        config = config.replace(**{sweep_var: value})
    try:
        records = _run_realization(config, realization)
        for rec in records:
            rec.sweep_value = value
        return value, realization, records, None
    except Exception as exc:  # noqa: BLE001 - exclusion policy needs the message
        return value, realization, [], f"{type(exc).__name__}: {exc}"


@dataclass
class MonteCarloReport:
    config: ExperimentConfig
    sweep_var: str
    sweep_values: list
    records: list
    aggregates: list
    errors: list


def monte_carlo(config: ExperimentConfig, sweep_var: str = None, sweep_values=None,
                threads: int = 1) -> MonteCarloReport:
    """Seeded Monte-Carlo over realizations (and optionally a sweep grid).

    Results are deterministic in (config, seed) and identical for any
    thread count: jobs carry derived seeds and are reduced in submission
    order.  Failed realizations are excluded with a logged count; more
    than 1% exclusions fails the whole run.
    """
    if sweep_var is not None:
        if sweep_var not in {f.name for f in fields(ExperimentConfig)}:
            raise ValueError(f"unknown sweep variable {sweep_var!r}")
        if sweep_values is None:
            sweep_values = DEFAULT_SWEEPS.get(sweep_var)
        if not sweep_values:
            raise ValueError(f"no sweep values given for {sweep_var!r}")
        values = [float(v) for v in sweep_values]
    else:
        values = [None]
    cfg_dict = config.to_dict()
    payloads = [(cfg_dict, sweep_var, value, r)
                for value in values for r in range(config.realizations)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_mc_job, payloads, chunksize=max(1, len(payloads) // (4 * threads))))
    else:
        results = [_mc_job(p) for p in payloads]

    records, errors = [], []
    for value, realization, recs, err in results:
        if err is not None:
            logger.warning("realization %s at %s=%s failed: %s", realization, sweep_var, value, err)
            errors.append((value, realization, err))
        else:
            records.extend(recs)
    if errors:
        rate = len(errors) / len(payloads)
        logger.warning("%d/%d realizations excluded", len(errors), len(payloads))
        if rate > 0.01:
            raise RuntimeError(f"{len(errors)}/{len(payloads)} realizations failed; aborting")

    aggregates = []
    for value in values:
        for algo in config.algos:
            rates = np.array([r.sum_rate for r in records
                              if r.algo == algo and r.sweep_value == value])
            if rates.size == 0:
                continue
            aggregates.append({
                "sweep_value": value,
                "algo": algo,
                "n": int(rates.size),
                "mean": float(rates.mean()),
                "std": float(rates.std(ddof=1)) if rates.size > 1 else 0.0,
                "p5": float(np.percentile(rates, 5)),
                "p95": float(np.percentile(rates, 95)),
            })
    return MonteCarloReport(config=config, sweep_var=sweep_var, sweep_values=values,
                            records=records, aggregates=aggregates, errors=errors)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_outputs(report: MonteCarloReport, out_dir) -> dict:
    """Write realizations.csv, aggregate.csv, timings.csv and manifest.json.

    realizations.csv carries only deterministic columns so that repeated
    runs with the same config and seed are byte-identical at any thread
    count; measured wall-clock times go to timings.csv.
    """
    from pathlib import Path

    from . import __version__

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("realizations", "aggregate", "timings")}
    paths["manifest"] = out / "manifest.json"

    ordered = sorted(report.records,
                     key=lambda r: (report.sweep_values.index(r.sweep_value),
                                    r.realization, ALGO_ORDER.index(r.algo)))
    with open(paths["realizations"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep_var", "algo", "realization", "seed", "sum_rate_bps_hz", "iters"])
        for rec in ordered:
            writer.writerow([_fmt(rec.sweep_value), rec.algo, rec.realization, rec.seed,
                             _fmt(float(rec.sum_rate)), rec.iters])
    with open(paths["timings"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep_var", "algo", "realization", "wall_ms"])
        for rec in ordered:
            writer.writerow([_fmt(rec.sweep_value), rec.algo, rec.realization,
                             _fmt(float(rec.wall_ms))])
    with open(paths["aggregate"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep_var", "algo", "n", "mean", "std", "p5", "p95"])
        for row in report.aggregates:
            writer.writerow([_fmt(row["sweep_value"]), row["algo"], row["n"],
                             _fmt(row["mean"]), _fmt(row["std"]),
                             _fmt(row["p5"]), _fmt(row["p95"])])

    cfg_json = json.dumps(report.config.to_dict(), sort_keys=True)
    manifest = {
        "config": report.config.to_dict(),
        "config_sha256": hashlib.sha256(cfg_json.encode()).hexdigest(),
        "seed": report.config.seed,
        "version": __version__,
        "kernel_backend": kernels.backend(),
        "sweep_var": report.sweep_var,
        "sweep_values": report.sweep_values,
        "n_records": len(report.records),
        "n_excluded": len(report.errors),
    }
    with open(paths["manifest"], "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return {k: str(v) for k, v in paths.items()}


def write_convergence_csv(records, path) -> None:
    """Per-iteration objective dump for convergence plots."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algo", "realization", "iteration", "objective_bps_hz"])
        for rec in records:
            for i, value in enumerate(rec.trajectory):
                writer.writerow([rec.algo, rec.realization, i, _fmt(float(value))])
