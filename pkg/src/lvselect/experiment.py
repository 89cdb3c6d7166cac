"""Reproducible experiment harness: config parsing, seeded runs, on-disk artifacts, reports.

Layout of a run directory::

    <out_dir>/<mode>/<scenario>/seed_<seed>/
        manifest.json            config, hash, seed, code version, full-precision results
        fit_params.csv           (direct-fit) name,value
        loss_history.csv         (direct-fit) epoch,data,residual,total
        trace.csv                (select) step,name,value,active,eliminated
        mse_series.csv           (select) step,mse
        trajectory_truth.tsv     t,u,v
        trajectory_learned.tsv   t,u,v

CSV values carry six significant digits; the manifest stores exact floats.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

from . import __version__
from .errors import BlowUp, ConfigError, LVSelectError
from .model import STRUCTURAL_NAMES, BaseParams, ParameterState
from .ode import DATA_SPAN, MSE_GRID, generate_dataset, integrate, trajectory_mse
from .selection import ZERO_TOL, SelectionTrace, run_selection
from .surrogate import SurrogateConfig
from .trainer import HyperParams, fit

log = logging.getLogger(__name__)

SCENARIOS = {"full": (0.0, 20.0), "late": (10.0, 20.0)}
MODES = ("direct-fit", "select")

_DEFAULTS = {
    "scenario": None,
    "window": None,
    "r": 0.5, "a1": 0.7, "a2": 0.3, "b1": 0.3, "b2": 0.6,
    "u0": 2.0, "v0": 1.0,
    "n_points": 100,
    "epsilon": 6,
    "epochs": 5000,
    "batch_size": 100,
    "learning_rate": HyperParams.learning_rate,
    "adam_beta1": 0.9,
    "adam_beta2": 0.999,
    "adam_eps": 1e-8,
    "data_weight": 1.0,
    "residual_weight": 1.0,
    "nonnegativity": False,
    "protect_structural": False,
    "zero_tol": ZERO_TOL,
    "time_window": None,
    "out_dir": "runs",
    "seeds": [0],
}


@dataclass(frozen=True)
class ExperimentConfig:
    truth: BaseParams = field(default_factory=BaseParams)
    initial: tuple = (2.0, 1.0)
    scenario: str = "full"
    window: tuple = (0.0, 20.0)
    n_points: int = 100
    epsilon: int = 6
    hyper: HyperParams = field(default_factory=HyperParams)
    protected: tuple = ()
    zero_tol: float = ZERO_TOL
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    out_dir: str = "runs"
    seeds: tuple = (0,)

    def to_dict(self) -> dict:
        """Flat document that :func:`parse_config` maps back to an equal config."""
        hp = self.hyper
        return {
            "scenario": self.scenario,
            "window": list(self.window) if self.scenario == "custom" else None,
            **{n: getattr(self.truth, n) for n in STRUCTURAL_NAMES},
            "u0": self.initial[0], "v0": self.initial[1],
            "n_points": self.n_points,
            "epsilon": self.epsilon,
            "epochs": hp.epochs,
            "batch_size": hp.batch_size,
            "learning_rate": hp.learning_rate,
            "adam_beta1": hp.adam_beta1,
            "adam_beta2": hp.adam_beta2,
            "adam_eps": hp.adam_eps,
            "data_weight": hp.data_weight,
            "residual_weight": hp.residual_weight,
            "nonnegativity": hp.nonnegativity,
            "protect_structural": bool(self.protected),
            "zero_tol": self.zero_tol,
            "time_window": None if self.surrogate.time_window is None else list(self.surrogate.time_window),
            "out_dir": self.out_dir,
            "seeds": list(self.seeds),
        }

    def hash(self) -> str:
        """SHA-256 of the config without ``out_dir`` and ``seeds``."""
        d = self.to_dict()
        d.pop("out_dir")
        d.pop("seeds")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    @property
    def truth_state(self) -> ParameterState:
        return ParameterState.base_model(self.truth)


def _number(d, key, integer=False, minimum=None, maximum=None):
    value = d[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}", key)
    if integer and not (isinstance(value, int) or float(value).is_integer()):
        raise ConfigError(f"{key} must be an integer, got {value!r}", key)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", key)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value!r}", key)
    if maximum is not None and value > maximum:
        raise ConfigError(f"{key} must be <= {maximum}, got {value!r}", key)
    return int(value) if integer else float(value)


def _flag(d, key):
    if not isinstance(d[key], bool):
        raise ConfigError(f"{key} must be true or false, got {d[key]!r}", key)
    return d[key]


def _pair(d, key):
    value = d[key]
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{key} must be a two-element list, got {value!r}", key)
    return tuple(_number({key: x}, key) for x in value)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a flat mapping and apply defaults; errors name the offending key."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}", unknown[0])
    d = {**_DEFAULTS, **doc}

    scenario, window = d["scenario"], d["window"]
    if scenario is None and window is None:
        raise ConfigError("missing required key 'scenario'", "scenario")
    if scenario is None:
        scenario = "custom"
    if scenario not in ("full", "late", "custom"):
        raise ConfigError(f"scenario must be full, late or custom, got {scenario!r}", "scenario")
    if scenario == "custom":
        if window is None:
            raise ConfigError("scenario 'custom' requires 'window'", "window")
        window = _pair(d, "window")
        if not DATA_SPAN[0] <= window[0] <= window[1] <= DATA_SPAN[1]:
            raise ConfigError(f"window must lie within {list(DATA_SPAN)}", "window")
    else:
        if window is not None and tuple(map(float, window)) != SCENARIOS[scenario]:
            raise ConfigError(f"window conflicts with scenario {scenario!r}", "window")
        window = SCENARIOS[scenario]

    truth = {n: _number(d, n) for n in STRUCTURAL_NAMES}
    for n in ("a1", "a2", "b1", "b2", "r"):
        if truth[n] <= 0:
            raise ConfigError(f"{n} must be positive", n)
    initial = (_number(d, "u0"), _number(d, "v0"))
    for key, x in zip(("u0", "v0"), initial):
        if x <= 0:
            raise ConfigError(f"{key} must be positive", key)

    seeds = d["seeds"]
    if not isinstance(seeds, (list, tuple)) or not seeds:
        raise ConfigError("seeds must be a nonempty list", "seeds")
    seeds = tuple(_number({"seeds": s}, "seeds", integer=True, minimum=0, maximum=2**64 - 1)
                  for s in seeds)
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct", "seeds")

    hyper = HyperParams(
        epochs=_number(d, "epochs", integer=True, minimum=1),
        batch_size=_number(d, "batch_size", integer=True, minimum=1),
        learning_rate=_number(d, "learning_rate", minimum=1e-300),
        adam_beta1=_number(d, "adam_beta1", minimum=0.0, maximum=0.999999999),
        adam_beta2=_number(d, "adam_beta2", minimum=0.0, maximum=0.999999999),
        adam_eps=_number(d, "adam_eps", minimum=0.0),
        data_weight=_number(d, "data_weight", minimum=0.0),
        residual_weight=_number(d, "residual_weight", minimum=0.0),
        nonnegativity=_flag(d, "nonnegativity"),
    )
    time_window = None if d["time_window"] is None else _pair(d, "time_window")
    if time_window is not None and not time_window[1] > time_window[0]:
        raise ConfigError("time_window needs hi > lo", "time_window")
    if not isinstance(d["out_dir"], str) or not d["out_dir"]:
        raise ConfigError("out_dir must be a nonempty string", "out_dir")

    return ExperimentConfig(
        truth=BaseParams(**truth),
        initial=initial,
        scenario=scenario,
        window=window,
        n_points=_number(d, "n_points", integer=True, minimum=0),
        epsilon=_number(d, "epsilon", integer=True, minimum=0, maximum=15),
        hyper=hyper,
        protected=STRUCTURAL_NAMES if _flag(d, "protect_structural") else (),
        zero_tol=_number(d, "zero_tol", minimum=0.0),
        surrogate=SurrogateConfig(time_window=time_window),
        out_dir=d["out_dir"],
        seeds=seeds,
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse a flat JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_from_manifest(manifest: dict) -> ExperimentConfig:
    """Config that re-runs exactly the run described by ``manifest``."""
    return config_from_dict({**manifest["config"], "seeds": [manifest["seed"]]})


# -- running -----------------------------------------------------------------

@dataclass
class RunResult:
    mode: str
    scenario: str
    seed: int
    directory: Path
    status: str
    files: list
    error: Optional[str] = None


def run_dir(cfg: ExperimentConfig, mode: str, seed: int) -> Path:
    return Path(cfg.out_dir) / mode / cfg.scenario / f"seed_{seed}"


def _learned_trajectory(state, initial):
    try:
        return integrate(state, initial, DATA_SPAN)
    except BlowUp:
        return None


def _write(directory: Path, name: str, text: str, files: list):
    (directory / name).write_text(text, encoding="utf-8")
    files.append(name)


def _run_one(cfg: ExperimentConfig, mode: str, seed: int) -> RunResult:
    directory = run_dir(cfg, mode, seed)
    directory.mkdir(parents=True, exist_ok=True)
    truth = cfg.truth_state
    data = generate_dataset(truth, cfg.initial, cfg.window, cfg.n_points)
    hyper = replace(cfg.hyper, seed=seed)
    files: list = []
    manifest = {
        "mode": mode,
        "scenario": cfg.scenario,
        "seed": seed,
        "config": {**cfg.to_dict(), "seeds": [seed]},
        "config_hash": cfg.hash(),
        "code_version": __version__,
        "dataset": data.summary(),
        "status": "ok",
        "error": None,
    }
    _write(directory, "trajectory_truth.tsv", integrate(truth, cfg.initial, DATA_SPAN).to_tsv(), files)

    learned = None
    try:
        if mode == "direct-fit":
            result = fit(ParameterState.base_model(), data, hyper, cfg.surrogate)
            learned = result.state
            params = result.state.as_dict(active_only=True)
            _write(directory, "fit_params.csv", "name,value\n"
                   + "".join(f"{n},{v:.6g}\n" for n, v in params.items()), files)
            _write(directory, "loss_history.csv", result.history_csv(), files)
            try:
                mse = trajectory_mse(truth, learned, MSE_GRID, initial=cfg.initial)
            except BlowUp:
                mse = math.inf
            manifest["results"] = {"params": params, "mse": mse,
                                   "final_loss": [float(x) for x in result.loss_history[-1]]}
        else:
            trace = run_selection(ParameterState.full_family(), data, cfg.epsilon, hyper,
                                  cfg.protected, truth=truth, zero_tol=cfg.zero_tol,
                                  config=cfg.surrogate, scenario=cfg.scenario)
            learned = trace.final_state
            _write(directory, "trace.csv", trace.to_csv(), files)
            _write(directory, "mse_series.csv", trace.mse_csv(), files)
            manifest["results"] = {"trace": trace.to_dict(),
                                   "mse_series": [rec.mse for rec in trace.steps]}
            if trace.failed:
                manifest["status"] = "failed"
                manifest["error"] = trace.steps[-1].failure
    except LVSelectError as exc:
        log.error("run %s/%s/seed %d failed: %s", mode, cfg.scenario, seed, exc)
        manifest["status"] = "failed"
        manifest["error"] = str(exc)

    if learned is not None:
        traj = _learned_trajectory(learned, cfg.initial)
        if traj is not None:
            _write(directory, "trajectory_learned.tsv", traj.to_tsv(), files)
        else:
            manifest["learned_trajectory"] = "blow-up"
    manifest["files"] = sorted(files + ["manifest.json"])
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    return RunResult(mode, cfg.scenario, seed, directory, manifest["status"],
                     manifest["files"], manifest["error"])


def run_experiment(cfg: ExperimentConfig, mode: str) -> list:
    """Run ``mode`` (``"direct-fit"`` or ``"select"``) for every seed of ``cfg``."""
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}", "mode")
    return [_run_one(cfg, mode, seed) for seed in cfg.seeds]


# -- reporting ---------------------------------------------------------------

def load_manifests(paths: Iterable) -> list:
    """Read manifests from run directories, manifest files, or trees containing them."""
    out = []
    for p in map(Path, paths):
        if p.is_file():
            candidates = [p]
        elif (p / "manifest.json").is_file():
            candidates = [p / "manifest.json"]
        else:
            candidates = sorted(p.rglob("manifest.json"))
        out += [json.loads(c.read_text(encoding="utf-8")) for c in candidates]
    return out


def _majority(count: int, n: int) -> Optional[bool]:
    return None if n == 0 else 2 * count > n


def emit_report(manifests: list, truth: Optional[BaseParams] = None, tolerance: float = 0.15) -> dict:
    """Cross-scenario summary with per-seed MSEs and claim counts (majority of seeds).

    Claims:
    ``mse_decreases`` (per scenario, selection): final-step MSE below first-step MSE.
    ``full_below_late`` (paired seeds, selection): full-window final MSE below late-window.
    ``direct_fit_recovery`` (per scenario, direct fit): every structural parameter
    within ``tolerance`` of the truth.
    Claims without data are reported as ``"unavailable"``.
    """
    rows = []
    for m in manifests:
        row = {"mode": m["mode"], "scenario": m["scenario"], "seed": m["seed"],
               "status": m["status"], "first_mse": None, "final_mse": None, "final_active": None}
        res = m.get("results") or {}
        if m["mode"] == "select" and res.get("mse_series"):
            series = res["mse_series"]
            row["first_mse"], row["final_mse"] = series[0], series[-1]
            final = res["trace"]["final_active"]
            row["final_active"] = None if final is None else len(final)
        elif m["mode"] == "direct-fit" and "mse" in res:
            row["final_mse"] = res["mse"]
            row["final_active"] = len(res["params"])
            row["params"] = res["params"]
        rows.append(row)
    rows.sort(key=lambda r: (r["mode"], r["scenario"], r["seed"]))

    claims = {}
    selection = [r for r in rows if r["mode"] == "select" and r["final_mse"] is not None]
    for scen in sorted({r["scenario"] for r in selection}):
        sub = [r for r in selection if r["scenario"] == scen]
        count = sum(r["final_mse"] < r["first_mse"] for r in sub)
        claims[f"mse_decreases[{scen}]"] = {"satisfied": count, "of": len(sub),
                                            "holds": _majority(count, len(sub))}
    full = {r["seed"]: r for r in selection if r["scenario"] == "full"}
    late = {r["seed"]: r for r in selection if r["scenario"] == "late"}
    paired = sorted(set(full) & set(late))
    if paired:
        count = sum(full[s]["final_mse"] < late[s]["final_mse"] for s in paired)
        claims["full_below_late"] = {"satisfied": count, "of": len(paired),
                                     "holds": _majority(count, len(paired))}
    else:
        claims["full_below_late"] = "unavailable"

    truth = truth or BaseParams()
    direct = [r for r in rows if r["mode"] == "direct-fit" and r.get("params")]
    for scen in sorted({r["scenario"] for r in direct}):
        sub = [r for r in direct if r["scenario"] == scen]
        count = sum(all(abs(r["params"][n] - getattr(truth, n)) <= tolerance for n in STRUCTURAL_NAMES)
                    for r in sub)
        claims[f"direct_fit_recovery[{scen}]"] = {"satisfied": count, "of": len(sub),
                                                  "holds": _majority(count, len(sub))}
    if not selection:
        claims["mse_decreases"] = "unavailable"
    if not direct:
        claims["direct_fit_recovery"] = "unavailable"
    return {"rows": rows, "claims": claims}


def report_markdown(report: dict) -> str:
    def fmt(x):
        return "-" if x is None else f"{x:.6g}"

    lines = ["| mode | scenario | seed | status | first MSE | final MSE | active |",
             "|---|---|---|---|---|---|---|"]
    for r in report["rows"]:
        lines.append(f"| {r['mode']} | {r['scenario']} | {r['seed']} | {r['status']} | "
                     f"{fmt(r['first_mse'])} | {fmt(r['final_mse'])} | "
                     f"{'-' if r['final_active'] is None else r['final_active']} |")
    lines += ["", "| claim | seeds satisfying | holds |", "|---|---|---|"]
    for name, c in report["claims"].items():
        if isinstance(c, str):
            lines.append(f"| {name} | {c} | - |")
        else:
            lines.append(f"| {name} | {c['satisfied']}/{c['of']} | {c['holds']} |")
    return "\n".join(lines) + "\n"


def write_report(out_dir, manifests: list, truth: Optional[BaseParams] = None) -> dict:
    report = emit_report(manifests, truth)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.md").write_text(report_markdown(report), encoding="utf-8")
    return report
