"""Step-by-step mechanism elimination.

Each step refits the current model from a fresh initialisation, deletes the
mechanism with the smallest coefficient magnitude (or every coefficient that is
numerically zero at once), and continues until at most ``epsilon`` coefficients
remain active.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .errors import BlowUp, LVSelectError, NothingToEliminate
from .model import (
    ELIMINATION_ORDER,
    PARAM_NAMES,
    STRUCTURAL_NAMES,
    ParameterState,
    active_parameter_count,
)
from .ode import MSE_GRID, Dataset, trajectory_mse
from .surrogate import SurrogateConfig
from .trainer import HyperParams, fit

log = logging.getLogger(__name__)

ZERO_TOL = 1e-6


def derive_seed(seed: int, step: int) -> int:
    """Independent 64-bit seed for selection step ``step`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, step]).generate_state(1, np.uint64)[0])


def eliminate_smallest(fitted: ParameterState, protected: Iterable[str] = (),
                       zero_tol: float = ZERO_TOL):
    """Choose the mechanism(s) to delete from ``fitted``.

    Every active, unprotected coefficient with ``|value| < zero_tol`` goes at
    once; if there is none, the single smallest magnitude goes, ties resolved by
    :data:`ELIMINATION_ORDER`. Returns ``(new_mask, eliminated_names)``.
    """
    protected = set(protected)
    values = fitted.as_dict()
    eligible = [n for n in ELIMINATION_ORDER if fitted.is_active(n) and n not in protected]
    if not eligible:
        raise NothingToEliminate("no active unprotected parameter left")
    zeros = [n for n in eligible if abs(values[n]) < zero_tol]
    if zeros:
        eliminated = tuple(zeros)
    else:
        # min() keeps the first of equal keys, i.e. the earlier name in the fixed order
        eliminated = (min(eligible, key=lambda n: abs(values[n])),)
    return fitted.deactivate(eliminated).mask, eliminated


@dataclass
class SelectionStepRecord:
    step: int
    #: Fitted coefficients; ``None`` if the fit failed.
    state: Optional[ParameterState]
    eliminated: tuple = ()
    mse: float = math.nan
    seed: int = 0
    final_loss: float = math.nan
    failure: Optional[str] = None

    @property
    def active_count(self) -> int:
        return active_parameter_count(self.state) if self.state is not None else 0

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "values": None if self.state is None else [float(x) for x in self.state.raw_values()],
            "active": None if self.state is None else list(self.state.active_names),
            "eliminated": list(self.eliminated),
            "mse": self.mse,
            "seed": self.seed,
            "final_loss": self.final_loss,
            "failure": self.failure,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionStepRecord":
        state = None
        if d["values"] is not None:
            state = ParameterState.from_values(d["values"], active=d["active"])
        return cls(step=d["step"], state=state, eliminated=tuple(d["eliminated"]),
                   mse=float(d["mse"]), seed=int(d["seed"]),
                   final_loss=float(d["final_loss"]), failure=d["failure"])


@dataclass
class SelectionTrace:
    steps: list = field(default_factory=list)
    final_state: Optional[ParameterState] = None
    scenario: str = ""
    seed: int = 0

    def __len__(self):
        return len(self.steps)

    @property
    def failed(self) -> bool:
        return any(s.failure for s in self.steps)

    def to_dict(self) -> dict:
        final = self.final_state
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "final_values": None if final is None else [float(x) for x in final.raw_values()],
            "final_active": None if final is None else list(final.active_names),
            "steps": [s.to_dict() for s in self.steps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionTrace":
        final = None
        if d["final_values"] is not None:
            final = ParameterState.from_values(d["final_values"], active=d["final_active"])
        return cls(steps=[SelectionStepRecord.from_dict(s) for s in d["steps"]],
                   final_state=final, scenario=d["scenario"], seed=int(d["seed"]))

    def to_csv(self) -> str:
        """One row per (step, parameter); deleted parameters have an empty value."""
        lines = ["step,name,value,active,eliminated"]
        for rec in self.steps:
            for name in PARAM_NAMES:
                active = rec.state is not None and rec.state.is_active(name)
                value = f"{rec.state.value(name):.6g}" if active else ""
                lines.append(f"{rec.step},{name},{value},{int(active)},{int(name in rec.eliminated)}")
        return "\n".join(lines) + "\n"

    def mse_csv(self) -> str:
        lines = ["step,mse"] + [f"{rec.step},{rec.mse:.6g}" for rec in self.steps]
        return "\n".join(lines) + "\n"


def _safe_mse(truth, learned, initial, grid) -> float:
    try:
        return trajectory_mse(truth, learned, grid, initial=initial)
    except BlowUp:
        return math.inf


def run_selection(family: ParameterState, data: Dataset, epsilon: int = 6,
                  hyper: HyperParams = HyperParams(), protected: Iterable[str] = (),
                  truth: Optional[ParameterState] = None, zero_tol: float = ZERO_TOL,
                  grid=MSE_GRID, config: SurrogateConfig = SurrogateConfig(),
                  scenario: str = "") -> SelectionTrace:
    """Fit, delete, redefine; repeat until at most ``epsilon`` parameters are active.

    Step ``k`` trains with seed ``derive_seed(hyper.seed, k)``. When ``truth`` is
    given, each record carries the trajectory MSE of the learned ODE against it,
    both integrated from the data's initial condition (``inf`` on blow-up).
    A failed fit ends the trace with a record whose ``failure`` is set.
    """
    protected = tuple(protected)
    trace = SelectionTrace(scenario=scenario, seed=hyper.seed)
    current = family
    step = 1
    while True:
        seed = derive_seed(hyper.seed, step)
        try:
            result = fit(current, data, replace(hyper, seed=seed), config)
        except LVSelectError as exc:
            log.warning("selection step %d failed: %s", step, exc)
            trace.steps.append(SelectionStepRecord(step=step, state=None, mse=math.inf,
                                                   seed=seed, failure=str(exc)))
            break
        fitted = result.state
        mse = _safe_mse(truth, fitted, data.initial, grid) if truth is not None else math.nan
        rec = SelectionStepRecord(step=step, state=fitted, mse=mse, seed=seed,
                                  final_loss=float(result.loss_history[-1, 0]))
        trace.steps.append(rec)
        trace.final_state = fitted
        log.info("step %d: %d active, mse %.3g", step, active_parameter_count(fitted), mse)
        if active_parameter_count(fitted) <= epsilon:
            break
        try:
            mask, eliminated = eliminate_smallest(fitted, protected, zero_tol)
        except NothingToEliminate:
            break
        rec.eliminated = eliminated
        current = current.with_mask(mask)
        step += 1
    return trace


def step_mse_series(trace: SelectionTrace, truth: ParameterState, initial=(2.0, 1.0),
                    grid=MSE_GRID) -> list:
    """Per-step ``(step, mse)`` of learned vs. truth; ``inf`` marks blow-up or failure."""
    out = []
    for rec in trace.steps:
        if rec.state is None:
            out.append((rec.step, math.inf))
        else:
            out.append((rec.step, _safe_mse(truth, rec.state, initial, grid)))
    return out


PROTECT_STRUCTURAL = STRUCTURAL_NAMES
