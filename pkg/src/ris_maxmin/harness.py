"""Batch experiment driver: config files, seeding, Monte Carlo trials over
method and dimension grids, and CSV emission.

Config files are flat UTF-8 ``key: value`` text; list values are
comma-separated. Unknown keys are rejected, and every parse or range error
names the offending key and line. Within one trial every method consumes
the same channel realization (paired comparison); per-trial seeds are
derived from the base seed and the grid/trial indices, so reruns of the
same config produce byte-identical CSVs apart from the wall-time column.
"""

import csv
import hashlib
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .alternating import METHODS, Solution, alternating_optimize
from .channel import dump_channel_text, sample_channel
from .core import SystemConfig, db10
from .errors import ConfigurationError
from .phase import LseOptions, QuantOptions
from .sdr import SdrOptions


@dataclass(frozen=True)
class ExperimentPlan:
    """What to run: trial count, seeding, methods, and sweep grids."""

    trials: int
    seed: int
    methods: tuple = ("lse", "random-baseline")
    k_grid: tuple = ()
    m_grid: tuple = ()
    n_grid: tuple = ()
    b_grid: tuple = (3,)
    quant_window: int = 50
    quant_epsilon: float = 1e-8
    n_rand: int = 200
    tol: float = 1e-4
    max_sweeps: int = 30

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigurationError(f"unknown methods {bad}; expected a subset of {METHODS}")
        if any(b < 1 for b in self.b_grid):
            raise ConfigurationError("b_grid entries must be >= 1")


def _parse_int(text):
    return int(text)


def _parse_float(text):
    return float(text)


def _parse_float_list(text):
    return tuple(float(v.strip()) for v in text.split(","))


def _parse_int_list(text):
    return tuple(int(v.strip()) for v in text.split(","))


def _parse_str_list(text):
    return tuple(v.strip() for v in text.split(","))


# key -> (parser, required). Scenario keys mirror SystemConfig, plan keys ExperimentPlan.
CONFIG_KEYS = {
    "m": (_parse_int, True),
    "n": (_parse_int, True),
    "k": (_parse_int, True),
    "alpha": (_parse_float, False),
    "sigma2_w": (_parse_float, False),
    "kappa": (_parse_float, False),
    "p_max_w": (_parse_float, False),
    "sar_ref": (_parse_float_list, False),
    "emf_max": (_parse_float_list, False),
    "gain_bs_dbi": (_parse_float, False),
    "gain_ris_dbi": (_parse_float, False),
    "gain_user_dbi": (_parse_float, False),
    "ris_position_m": (_parse_float_list, False),
    "r_min_m": (_parse_float, False),
    "r_max_m": (_parse_float, False),
    "bandwidth_hz": (_parse_float, False),
    "d_bs": (_parse_float, False),
    "d_ris": (_parse_float, False),
    "ris_corr_rho": (_parse_float, False),
    "trials": (_parse_int, True),
    "seed": (_parse_int, True),
    "methods": (_parse_str_list, False),
    "k_grid": (_parse_int_list, False),
    "m_grid": (_parse_int_list, False),
    "n_grid": (_parse_int_list, False),
    "b_grid": (_parse_int_list, False),
    "quant_window": (_parse_int, False),
    "quant_epsilon": (_parse_float, False),
    "n_rand": (_parse_int, False),
    "tol": (_parse_float, False),
    "max_sweeps": (_parse_int, False),
}

_PLAN_KEYS = ("trials", "seed", "methods", "k_grid", "m_grid", "n_grid", "b_grid",
              "quant_window", "quant_epsilon", "n_rand", "tol", "max_sweeps")


def parse_config_text(text: str):
    """Parse config text into (SystemConfig, ExperimentPlan); strict keys."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key: value', got {line!r}")
        key, _, val = line.partition(":")
        key = key.strip()
        val = val.strip()
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        parser, _ = CONFIG_KEYS[key]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigurationError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    missing = [k for k, (_, required) in CONFIG_KEYS.items() if required and k not in values]
    if missing:
        raise ConfigurationError(f"missing required keys: {', '.join(missing)}")

    scenario = {
        "m": values["m"],
        "n": values["n"],
        "k": values["k"],
        "alpha": values.get("alpha", 1.0),
        "sigma2": values.get("sigma2_w"),
        "kappa": values.get("kappa", 10.0),
        "p_max": values.get("p_max_w", 0.5),
        "sar_ref": np.asarray(values.get("sar_ref", 63e-4)),
        "emf_max": np.asarray(values.get("emf_max", 0.0029)),
        "gain_bs_dbi": values.get("gain_bs_dbi", 5.0),
        "gain_ris_dbi": values.get("gain_ris_dbi", 0.0),
        "gain_user_dbi": values.get("gain_user_dbi", 0.0),
        "r_min": values.get("r_min_m", 10.0),
        "r_max": values.get("r_max_m", 70.0),
        "bandwidth_hz": values.get("bandwidth_hz", 1e8),
        "d_bs": values.get("d_bs", 0.5),
        "d_ris": values.get("d_ris", 0.5),
        "ris_corr_rho": values.get("ris_corr_rho", 0.0),
    }
    if "ris_position_m" in values:
        pos = values["ris_position_m"]
        if len(pos) != 2:
            raise ConfigurationError("ris_position_m must have exactly two entries")
        scenario["ris_position"] = (pos[0], pos[1])
    try:
        config = SystemConfig(**scenario)
    except ConfigurationError as exc:
        raise ConfigurationError(f"invalid scenario value: {exc}") from exc

    plan_kwargs = {k: values[k] for k in _PLAN_KEYS if k in values}
    plan_kwargs.setdefault("k_grid", (config.k,))
    plan_kwargs.setdefault("m_grid", (config.m,))
    plan_kwargs.setdefault("n_grid", (config.n,))
    plan = ExperimentPlan(**plan_kwargs)
    return config, plan


def load_config(path):
    """Read and parse a config file; errors carry the key name and line."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config_text(handle.read())


def dump_config(config: SystemConfig, plan: ExperimentPlan) -> str:
    """Serialize a (config, plan) pair; parsing the output reproduces it."""
    def fmt(value):
        if isinstance(value, (tuple, list, np.ndarray)):
            return ", ".join(fmt(v) for v in value)
        if isinstance(value, float):
            return f"{value:.17g}"
        return str(value)

    lines = [
        f"m: {config.m}",
        f"n: {config.n}",
        f"k: {config.k}",
        f"alpha: {fmt(config.alpha)}",
        f"sigma2_w: {fmt(config.sigma2)}",
        f"kappa: {fmt(config.kappa)}",
        f"p_max_w: {fmt(config.p_max)}",
        f"sar_ref: {fmt(config.sar_ref)}",
        f"emf_max: {fmt(config.emf_max)}",
        f"gain_bs_dbi: {fmt(config.gain_bs_dbi)}",
        f"gain_ris_dbi: {fmt(config.gain_ris_dbi)}",
        f"gain_user_dbi: {fmt(config.gain_user_dbi)}",
        f"ris_position_m: {fmt(config.ris_position)}",
        f"r_min_m: {fmt(config.r_min)}",
        f"r_max_m: {fmt(config.r_max)}",
        f"bandwidth_hz: {fmt(config.bandwidth_hz)}",
        f"d_bs: {fmt(config.d_bs)}",
        f"d_ris: {fmt(config.d_ris)}",
        f"ris_corr_rho: {fmt(config.ris_corr_rho)}",
        f"trials: {plan.trials}",
        f"seed: {plan.seed}",
        f"methods: {fmt(plan.methods)}",
        f"k_grid: {fmt(plan.k_grid)}",
        f"m_grid: {fmt(plan.m_grid)}",
        f"n_grid: {fmt(plan.n_grid)}",
        f"b_grid: {fmt(plan.b_grid)}",
        f"quant_window: {plan.quant_window}",
        f"quant_epsilon: {fmt(plan.quant_epsilon)}",
        f"n_rand: {plan.n_rand}",
        f"tol: {fmt(plan.tol)}",
        f"max_sweeps: {plan.max_sweeps}",
    ]
    return "\n".join(lines) + "\n"


CSV_COLUMNS = (
    "seed", "k", "m", "n", "method", "bits", "min_sinr_linear", "min_sinr_db",
    "per_user_sinrs", "sweeps", "wall_time_seconds", "p_cap_used", "degenerate",
    "channel_hash", "diagnostics",
)


@dataclass
class TrialRecord:
    """One CSV row: one method run on one channel realization."""

    seed: int
    k: int
    m: int
    n: int
    method: str
    bits: int | None
    min_sinr_linear: float
    min_sinr_db: float
    per_user_sinrs: tuple
    sweeps: int
    wall_time_seconds: float
    p_cap_used: tuple
    degenerate: bool
    channel_hash: str
    diagnostics: str

    def to_row(self) -> list:
        return [
            str(self.seed), str(self.k), str(self.m), str(self.n), self.method,
            "" if self.bits is None else str(self.bits),
            _g17(self.min_sinr_linear), _g17(self.min_sinr_db),
            ";".join(_g17(v) for v in self.per_user_sinrs),
            str(self.sweeps), _g17(self.wall_time_seconds),
            ";".join(_g17(v) for v in self.p_cap_used),
            "1" if self.degenerate else "0",
            self.channel_hash, self.diagnostics,
        ]


def _g17(x: float) -> str:
    return f"{float(x):.17g}"


def derive_trial_seed(base_seed: int, grid_index: int, trial_index: int) -> int:
    """Mix the base seed with the grid and trial indices into one 63-bit seed."""
    mixed = base_seed ^ (0x9E3779B97F4A7C15 * (grid_index + 1)
                         + 0xBF58476D1CE4E5B9 * (trial_index + 1))
    return mixed & (2 ** 63 - 1)


def _scaled_config(base: SystemConfig, k: int, m: int, n: int) -> SystemConfig:
    def rebroadcast(arr):
        arr = np.asarray(arr, dtype=float)
        if arr.shape == (k,):
            return arr
        if np.all(arr == arr.flat[0]):
            return float(arr.flat[0])
        raise ConfigurationError(
            f"per-user arrays of length {arr.size} cannot be rescaled to k={k}")

    return replace(base, k=k, m=m, n=n,
                   sar_ref=rebroadcast(base.sar_ref), emf_max=rebroadcast(base.emf_max))


def _channel_hash(chan) -> str:
    digest = hashlib.sha256(dump_channel_text(chan).encode("utf-8"))
    return digest.hexdigest()[:16]


def _method_runs(plan: ExperimentPlan):
    """Expand the method list: the quantized method gets one run per bit depth."""
    runs = []
    for method in plan.methods:
        if method == "quant":
            runs.extend(("quant", b) for b in plan.b_grid)
        else:
            runs.append((method, None))
    return runs


def _phase_options(plan: ExperimentPlan, method: str, bits):
    if method == "quant":
        return QuantOptions(bits=bits, window=plan.quant_window, epsilon=plan.quant_epsilon)
    if method == "sdr":
        return SdrOptions(n_rand=plan.n_rand)
    if method == "lse":
        return LseOptions()
    return None


def run_trial(base_config: SystemConfig, plan: ExperimentPlan, grid_index: int,
              kmn: tuple, trial_index: int) -> list:
    """Run every planned method on one shared channel draw; returns records."""
    k, m, n = kmn
    config = _scaled_config(base_config, k, m, n)
    trial_seed = derive_trial_seed(plan.seed, grid_index, trial_index)
    root = np.random.SeedSequence(trial_seed)
    children = root.spawn(1 + len(plan.methods))
    chan = sample_channel(config, np.random.default_rng(children[0]))
    chash = _channel_hash(chan)
    method_stream = {name: children[1 + j] for j, name in enumerate(plan.methods)}

    records = []
    for method, bits in _method_runs(plan):
        rng = np.random.default_rng(method_stream[method])
        started = time.perf_counter()
        solution = alternating_optimize(
            config, chan, method, rng, tol=plan.tol, max_sweeps=plan.max_sweeps,
            phase_options=_phase_options(plan, method, bits))
        elapsed = time.perf_counter() - started
        records.append(_record_from_solution(
            solution, trial_seed, k, m, n, method, bits, elapsed, chash))
    return records


def _record_from_solution(solution: Solution, trial_seed, k, m, n, method, bits,
                          elapsed, chash) -> TrialRecord:
    minimum = solution.report.minimum
    return TrialRecord(
        seed=trial_seed, k=k, m=m, n=n, method=method, bits=bits,
        min_sinr_linear=minimum,
        min_sinr_db=float(db10(minimum)) if minimum > 0 else -math.inf,
        per_user_sinrs=tuple(solution.report.per_user),
        sweeps=solution.iterations,
        wall_time_seconds=elapsed,
        p_cap_used=tuple(solution.p_cap),
        degenerate=solution.degenerate,
        channel_hash=chash,
        diagnostics="; ".join(solution.diagnostics),
    )


def _run_trial_task(args):
    base_config, plan, grid_index, kmn, trial_index = args
    return (grid_index, trial_index), run_trial(base_config, plan, grid_index, kmn, trial_index)


def run_experiment(config: SystemConfig, plan: ExperimentPlan, out_path=None,
                   workers: int = 1, progress=None) -> list:
    """Execute the full plan and optionally write the CSV.

    Rows come out sorted by grid point, trial, then planned method order, so
    the output does not depend on worker scheduling. Returns the records.
    """
    grid = [(k, m, n) for k in plan.k_grid for m in plan.m_grid for n in plan.n_grid]
    tasks = [(config, plan, gi, kmn, ti)
             for gi, kmn in enumerate(grid) for ti in range(plan.trials)]

    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, records in pool.map(_run_trial_task, tasks, chunksize=1):
                results[key] = records
                if progress:
                    progress(len(results), len(tasks))
    else:
        for task in tasks:
            key, records = _run_trial_task(task)
            results[key] = records
            if progress:
                progress(len(results), len(tasks))

    ordered = []
    for gi in range(len(grid)):
        for ti in range(plan.trials):
            ordered.extend(results[(gi, ti)])

    if out_path is not None:
        write_csv(ordered, out_path)
    return ordered


def write_csv(records, out_path) -> None:
    with open(out_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.to_row())


def records_to_csv_text(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for record in records:
        writer.writerow(record.to_row())
    return buf.getvalue()
