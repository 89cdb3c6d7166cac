"""Competition model, its augmented mechanism family, and long-time analysis.

The base system is the two-species competition model

    u' = u (1 - a1 u - a2 v)
    v' = r v (1 - b1 u - b2 v)

and the augmented family adds the candidate mechanisms ``{1, u, v, u^2 v, u v^2}``
to each equation with coefficients ``alpha0..alpha4`` and ``beta0..beta4``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Mapping

import numpy as np

from .errors import DegenerateNullclines, InvalidInput

STRUCTURAL_NAMES = ("r", "a1", "a2", "b1", "b2")
ALPHA_NAMES = tuple(f"alpha{i}" for i in range(5))
BETA_NAMES = tuple(f"beta{i}" for i in range(5))
AUGMENT_NAMES = ALPHA_NAMES + BETA_NAMES
#: Canonical storage / serialization order.
PARAM_NAMES = STRUCTURAL_NAMES + AUGMENT_NAMES
#: Order used to break ties when eliminating mechanisms.
ELIMINATION_ORDER = AUGMENT_NAMES + STRUCTURAL_NAMES
MECHANISM_TERMS = ("1", "u", "v", "u^2 v", "u v^2")

SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class BaseParams:
    r: float = 0.5
    a1: float = 0.7
    a2: float = 0.3
    b1: float = 0.3
    b2: float = 0.6

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise InvalidInput(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)

    def swapped(self) -> "BaseParams":
        """Exchange the roles of the two species (growth ratio is kept)."""
        return BaseParams(r=self.r, a1=self.b2, a2=self.b1, b1=self.a2, b2=self.a1)


@dataclass(frozen=True)
class AugmentParams:
    alpha0: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    alpha4: float = 0.0
    beta0: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0
    beta4: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise InvalidInput(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)


def _full_mask() -> tuple:
    return (True,) * len(PARAM_NAMES)


@dataclass(frozen=True)
class ParameterState:
    """Values of all fifteen coefficients plus an active/inactive mask.

    The mask is stored in :data:`PARAM_NAMES` order. Inactive coefficients are
    treated as hard zeros by :meth:`values` and hence by :func:`rhs_full`.
    """

    base: BaseParams = field(default_factory=BaseParams)
    augment: AugmentParams = field(default_factory=AugmentParams)
    mask: tuple = field(default_factory=_full_mask)

    def __post_init__(self):
        mask = tuple(bool(m) for m in self.mask)
        if len(mask) != len(PARAM_NAMES):
            raise InvalidInput(f"mask needs {len(PARAM_NAMES)} flags, got {len(mask)}")
        object.__setattr__(self, "mask", mask)

    # -- constructors -------------------------------------------------------
    @classmethod
    def base_model(cls, base: BaseParams | None = None) -> "ParameterState":
        """Only the five structural parameters active (the plain competition model)."""
        mask = tuple(name in STRUCTURAL_NAMES for name in PARAM_NAMES)
        return cls(base=base or BaseParams(), augment=AugmentParams(), mask=mask)

    @classmethod
    def full_family(cls, base: BaseParams | None = None,
                    augment: AugmentParams | None = None) -> "ParameterState":
        return cls(base=base or BaseParams(), augment=augment or AugmentParams())

    @classmethod
    def from_values(cls, values: Mapping[str, float] | Iterable[float],
                    active: Iterable[str] | None = None) -> "ParameterState":
        """Build from a name->value mapping or a 15-vector in canonical order.

        Names missing from a mapping default to 0. ``active`` lists the active
        names; by default every name present in the mapping (or all, for a
        vector) is active.
        """
        if isinstance(values, Mapping):
            unknown = set(values) - set(PARAM_NAMES)
            if unknown:
                raise InvalidInput(f"unknown parameter names: {sorted(unknown)}")
            vec = [float(values.get(n, 0.0)) for n in PARAM_NAMES]
            default_active = set(values)
        else:
            vec = [float(x) for x in values]
            if len(vec) != len(PARAM_NAMES):
                raise InvalidInput(f"expected {len(PARAM_NAMES)} values, got {len(vec)}")
            default_active = set(PARAM_NAMES)
        act = default_active if active is None else set(active)
        unknown = act - set(PARAM_NAMES)
        if unknown:
            raise InvalidInput(f"unknown parameter names: {sorted(unknown)}")
        base = BaseParams(*vec[:5])
        augment = AugmentParams(*vec[5:])
        return cls(base=base, augment=augment, mask=tuple(n in act for n in PARAM_NAMES))

    # -- accessors ----------------------------------------------------------
    def raw_values(self) -> np.ndarray:
        """All stored values in canonical order, ignoring the mask."""
        return np.array([getattr(self.base, n) for n in STRUCTURAL_NAMES]
                        + [getattr(self.augment, n) for n in AUGMENT_NAMES])

    def values(self) -> np.ndarray:
        """Canonical-order vector with inactive entries set to exactly 0."""
        return np.where(self.mask, self.raw_values(), 0.0)

    def value(self, name: str) -> float:
        idx = PARAM_NAMES.index(name)
        return float(self.values()[idx])

    def is_active(self, name: str) -> bool:
        return self.mask[PARAM_NAMES.index(name)]

    @property
    def active_names(self) -> tuple:
        return tuple(n for n, m in zip(PARAM_NAMES, self.mask) if m)

    def as_dict(self, active_only: bool = False) -> dict:
        vals = self.values()
        return {n: float(x) for n, x, m in zip(PARAM_NAMES, vals, self.mask)
                if m or not active_only}

    def with_mask(self, mask: Iterable[bool]) -> "ParameterState":
        return replace(self, mask=tuple(mask))

    def with_values(self, vec: Iterable[float]) -> "ParameterState":
        return ParameterState.from_values(list(vec), active=self.active_names)

    def deactivate(self, names: Iterable[str]) -> "ParameterState":
        drop = set(names)
        return self.with_mask(m and n not in drop for n, m in zip(PARAM_NAMES, self.mask))


def active_parameter_count(state: ParameterState) -> int:
    return sum(state.mask)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidInput("state values must be finite")


def rhs_full(state: ParameterState, u, v):
    """Right-hand side of the augmented family at ``(u, v)``.

    Works elementwise for scalars or numpy arrays. Returns ``(du_dt, dv_dt)``.
    """
    _check_finite(u, v)
    r, a1, a2, b1, b2, al0, al1, al2, al3, al4, be0, be1, be2, be3, be4 = \
        (float(x) for x in state.values())
    uv = u * v
    du = u * (1.0 - a1 * u - a2 * v) + (al0 + al1 * u + al2 * v + al3 * uv * u + al4 * uv * v)
    dv = r * v * (1.0 - b1 * u - b2 * v) + (be0 + be1 * u + be2 * v + be3 * uv * u + be4 * uv * v)
    return du, dv


def rhs_base(base: BaseParams, u, v):
    """Right-hand side of the plain competition model."""
    du = u * (1.0 - base.a1 * u - base.a2 * v)
    dv = base.r * v * (1.0 - base.b1 * u - base.b2 * v)
    return du, dv


def coexistence_equilibrium(base: BaseParams) -> tuple:
    """Intersection of the nontrivial nullclines ``a1 u + a2 v = 1``, ``b1 u + b2 v = 1``."""
    det = base.a1 * base.b2 - base.a2 * base.b1
    if abs(det) < SINGULAR_TOL:
        raise DegenerateNullclines(f"nullcline determinant {det:.3e} is singular")
    u_star = (base.b2 - base.a2) / det
    v_star = (base.a1 - base.b1) / det
    return u_star, v_star


class PhaseClass(enum.Enum):
    STABLE_COEXISTENCE = "StableCoexistence"
    EXCLUSION_U_WINS = "ExclusionUWins"
    EXCLUSION_V_WINS = "ExclusionVWins"
    FOUNDER_CONTROL = "FounderControl"
    DEGENERATE = "Degenerate"

    def swapped(self) -> "PhaseClass":
        return {
            PhaseClass.EXCLUSION_U_WINS: PhaseClass.EXCLUSION_V_WINS,
            PhaseClass.EXCLUSION_V_WINS: PhaseClass.EXCLUSION_U_WINS,
        }.get(self, self)


def classify_phase(base: BaseParams) -> PhaseClass:
    """Classify the long-time regime from the nullcline intercepts.

    The u-nullcline meets the axes at ``1/a1`` and ``1/a2``; the v-nullcline at
    ``1/b1`` and ``1/b2``. Comparing intercepts on both axes gives the usual
    four cases; ties on either axis are reported as degenerate.
    """
    coeffs = (base.a1, base.a2, base.b1, base.b2)
    if not all(c > 0 for c in coeffs):
        raise InvalidInput(f"competition coefficients must be positive, got {coeffs}")
    if base.a1 == base.b1 or base.a2 == base.b2:
        return PhaseClass.DEGENERATE
    u_self_limited = base.a1 > base.b1   # u-nullcline inside on the u axis
    v_self_limited = base.b2 > base.a2   # v-nullcline inside on the v axis
    if u_self_limited and v_self_limited:
        return PhaseClass.STABLE_COEXISTENCE
    if not u_self_limited and not v_self_limited:
        return PhaseClass.FOUNDER_CONTROL
    if not u_self_limited:
        return PhaseClass.EXCLUSION_U_WINS
    return PhaseClass.EXCLUSION_V_WINS


# reference truths: stable coexistence, and founder control (outcome set by the start)
FIG1A = BaseParams(r=0.5, a1=0.7, a2=0.3, b1=0.3, b2=0.6)
FIG1B = BaseParams(r=0.5, a1=0.3, a2=0.6, b1=0.7, b2=0.3)
DEFAULT_INITIAL = (2.0, 1.0)
