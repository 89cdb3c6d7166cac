"""Fixed-step RK4 integration, trajectory sampling and the training datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import BlowUp, InvalidInput, InvalidWindow, OutOfRange
from .model import DEFAULT_INITIAL, ParameterState, rhs_full

DEFAULT_STEP = 1e-2
DATA_SPAN = (0.0, 20.0)
BLOWUP_BOUND = 1e6
#: Evaluation grid for trajectory MSE: 401 uniform points on [0, 20].
MSE_GRID = np.linspace(0.0, 20.0, 401)

Rhs = Callable[[float, float], tuple]


@dataclass(frozen=True)
class Trajectory:
    """Dense solution: ``times`` (n,), ``states`` (n, 2) and ``derivs`` (n, 2)."""

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float).reshape(-1, 2)
        d = np.asarray(self.derivs, dtype=float).reshape(-1, 2)
        if not (len(t) == len(s) == len(d)):
            raise InvalidInput("times, states and derivs must have equal length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise InvalidInput("times must be strictly increasing")
        if not np.all(np.isfinite(s)):
            raise InvalidInput("states must be finite")
        for name, arr in (("times", t), ("states", s), ("derivs", d)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def span(self) -> tuple:
        return float(self.times[0]), float(self.times[-1])

    def to_tsv(self) -> str:
        lines = ["t\tu\tv"]
        lines += [f"{t:.6g}\t{u:.6g}\t{v:.6g}" for t, (u, v) in zip(self.times, self.states)]
        return "\n".join(lines) + "\n"


def _as_rhs(system: Union[ParameterState, Rhs]) -> Rhs:
    if isinstance(system, ParameterState):
        vals = [float(x) for x in system.values()]
        r, a1, a2, b1, b2, al0, al1, al2, al3, al4, be0, be1, be2, be3, be4 = vals

        # Scalar fast path; same arithmetic as rhs_full.
        def f(u, v):
            uv = u * v
            du = u * (1.0 - a1 * u - a2 * v) + (al0 + al1 * u + al2 * v + al3 * uv * u + al4 * uv * v)
            dv = r * v * (1.0 - b1 * u - b2 * v) + (be0 + be1 * u + be2 * v + be3 * uv * u + be4 * uv * v)
            return du, dv
        return f
    if callable(system):
        return system
    raise InvalidInput(f"cannot integrate {type(system).__name__}")


def integrate(system, initial: Sequence[float] = DEFAULT_INITIAL,
              t_span: Sequence[float] = DATA_SPAN, step: float = DEFAULT_STEP) -> Trajectory:
    """Classical RK4 with fixed step; the last step is shortened to land on ``t1``.

    ``system`` is a :class:`ParameterState` or any callable ``f(u, v) -> (du, dv)``.
    Raises :class:`BlowUp` once a state leaves ``[-1e6, 1e6]`` or turns non-finite.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise InvalidInput(f"t_span must satisfy t1 > t0, got {t_span}")
    if not step > 0:
        raise InvalidInput(f"step must be positive, got {step}")
    u, v = map(float, initial)
    if not (math.isfinite(u) and math.isfinite(v)):
        raise InvalidInput("initial condition must be finite")
    f = _as_rhs(system)

    n_full = int(math.floor((t1 - t0) / step + 1e-9))
    times = [t0 + k * step for k in range(n_full + 1)]
    if t1 - times[-1] > 1e-9 * step:
        times.append(t1)
    else:
        times[-1] = t1

    states = [(u, v)]
    derivs = []
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(len(times) - 1):
            h = times[k + 1] - times[k]
            k1u, k1v = f(u, v)
            derivs.append((k1u, k1v))
            k2u, k2v = f(u + 0.5 * h * k1u, v + 0.5 * h * k1v)
            k3u, k3v = f(u + 0.5 * h * k2u, v + 0.5 * h * k2v)
            k4u, k4v = f(u + h * k3u, v + h * k3v)
            u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            if not (abs(u) <= BLOWUP_BOUND and abs(v) <= BLOWUP_BOUND):
                raise BlowUp(f"solution left [-{BLOWUP_BOUND:g}, {BLOWUP_BOUND:g}] "
                             f"near t={times[k + 1]:.4g}", time=times[k + 1])
            states.append((u, v))
        derivs.append(f(u, v))
    return Trajectory(np.array(times), np.array(states), np.array(derivs))


def sample(traj: Trajectory, query_times) -> np.ndarray:
    """Cubic Hermite interpolation of ``traj`` at ``query_times``; returns (m, 2).

    Stored nodes are returned exactly.
    """
    q = np.atleast_1d(np.asarray(query_times, dtype=float))
    t0, t1 = traj.span
    if q.size and (q.min() < t0 or q.max() > t1):
        raise OutOfRange(f"query times must lie in [{t0}, {t1}]")
    if len(traj.times) == 1:
        return np.repeat(traj.states, len(q), axis=0)
    spline = CubicHermiteSpline(traj.times, traj.states, traj.derivs, axis=0)
    out = spline(q)
    idx = np.searchsorted(traj.times, q)
    idx = np.clip(idx, 0, len(traj.times) - 1)
    hit = traj.times[idx] == q
    out[hit] = traj.states[idx[hit]]
    return out


@dataclass(frozen=True)
class Dataset:
    """Training points ``(t, u, v)``; the first row is the initial condition when
    ``includes_initial`` is set."""

    points: np.ndarray
    window: tuple
    includes_initial: bool = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window", tuple(float(w) for w in self.window))

    @property
    def times(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def states(self) -> np.ndarray:
        return self.points[:, 1:]

    @property
    def initial(self) -> tuple:
        return float(self.points[0, 1]), float(self.points[0, 2])

    def __len__(self):
        return len(self.points)

    def summary(self) -> dict:
        interior = self.points[1:] if self.includes_initial else self.points
        return {
            "n_points": len(self.points),
            "includes_initial": self.includes_initial,
            "window": list(self.window),
            "interior_t_min": float(interior[:, 0].min()) if len(interior) else None,
            "interior_t_max": float(interior[:, 0].max()) if len(interior) else None,
        }


def generate_dataset(truth, initial: Sequence[float] = DEFAULT_INITIAL,
                     window: Sequence[float] = DATA_SPAN, n_points: int = 100,
                     step: float = DEFAULT_STEP) -> Dataset:
    """Sample ``n_points`` uniformly spaced states in ``window`` (inclusive) and
    prepend the initial condition at ``t = 0``."""
    t_lo, t_hi = map(float, window)
    if not (DATA_SPAN[0] <= t_lo <= t_hi <= DATA_SPAN[1]):
        raise InvalidWindow(f"window {tuple(window)} must lie within {DATA_SPAN}")
    if n_points < 0:
        raise InvalidInput("n_points must be non-negative")
    u0, v0 = map(float, initial)
    rows = [(0.0, u0, v0)]
    if n_points:
        traj = integrate(truth, (u0, v0), DATA_SPAN, step)
        ts = np.linspace(t_lo, t_hi, n_points)
        uv = sample(traj, ts)
        rows += [(t, a, b) for t, (a, b) in zip(ts, uv)]
    return Dataset(np.array(rows), (t_lo, t_hi), includes_initial=True)


def trajectory_mse(a, b, grid=MSE_GRID, initial: Sequence[float] = DEFAULT_INITIAL,
                   step: float = DEFAULT_STEP) -> float:
    """Mean over grid points and both components of squared differences.

    Each source is a :class:`Trajectory` (sampled on ``grid``) or a system
    (integrated from ``initial`` across the grid span). :class:`BlowUp` propagates.
    """
    grid = np.asarray(grid, dtype=float)
    span = (float(grid[0]), float(grid[-1]))

    def values(src):
        if not isinstance(src, Trajectory):
            src = integrate(src, initial, span, step)
        return sample(src, grid)

    diff = values(a) - values(b)
    return float(np.mean(diff * diff))
