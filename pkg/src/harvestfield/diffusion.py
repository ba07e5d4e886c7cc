"""One-dimensional regular diffusions on (0, inf): scale/speed calculus.

A :class:`DiffusionModel` bundles drift and volatility with a restart level
``y0`` (where impulses put the state) and a reference point ``a`` anchoring
the scale integrals. Only differences of the scale function and products of
scale and speed densities ever enter downstream formulas, so the choice of
``a`` is immaterial; it defaults to ``y0``.

The scale density, speed density and their integrals come in two routes:

* a generic quadrature route valid for any sufficiently nice coefficients,
* closed forms for the logistic family ``dX = X (g - b X) dt + beta X dW``,
  whose speed integrals reduce to lower incomplete gamma functions.

The two routes are deliberately kept independent; the test-suite pins their
agreement.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammainc, gammaln

from .config import DEFAULT_NUMERICS, NumericsConfig
from .errors import DivergenceError, DomainError
from .quadrature import CumulativeIntegral, integrate_to_inf, integrate_to_zero

__all__ = [
    "LogisticParams",
    "DiffusionModel",
    "AssumptionReport",
    "logistic_model",
    "custom_model",
    "scale_density",
    "speed_density",
    "scale_function",
    "speed_measure",
    "validate_assumptions",
    "model_to_dict",
    "model_from_dict",
]


@dataclass(frozen=True)
class LogisticParams:
    """Parameters of ``dX = X (growth - crowding * X) dt + beta * X dW``."""

    growth: float
    crowding: float
    beta: float

    @property
    def q(self) -> float:
        # q < 0 is the ergodic regime; q > 0 sends the state to 0 a.s.
        return 0.5 - self.growth / self.beta**2

    @property
    def rho(self) -> float:
        return 2.0 * self.crowding / self.beta**2


@dataclass(frozen=True)
class DiffusionModel:
    drift: Callable[[float], float]
    volatility: Callable[[float], float]
    restart_level: float
    reference_point: float
    logistic: Optional[LogisticParams] = None
    drift_source: Optional[str] = None
    vol_source: Optional[str] = None

    def __post_init__(self):
        if self.restart_level <= 0.0:
            raise DomainError("restart level must be positive")
        if self.reference_point <= 0.0:
            raise DomainError("reference point must be positive")
        for x in (self.restart_level / 8.0, self.restart_level, 8.0 * self.restart_level):
            if not float(self.volatility(x)) > 0.0:
                raise DomainError(f"volatility must be positive; got {self.volatility(x)} at x={x}")
        if self.logistic is not None and self.logistic.q >= 0.0:
            raise DomainError(
                f"logistic model needs q = 1/2 - growth/beta^2 < 0 for ergodicity, got q={self.logistic.q}"
            )


def logistic_model(
    *,
    b: float,
    beta: float,
    y0: float,
    q: float | None = None,
    growth: float | None = None,
    reference_point: float | None = None,
) -> DiffusionModel:
    """Logistic diffusion, parameterized either by ``q = 1/2 - growth/beta^2`` or by ``growth``."""
    if (q is None) == (growth is None):
        raise DomainError("give exactly one of q or growth")
    if growth is None:
        growth = (0.5 - q) * beta**2
    params = LogisticParams(growth=float(growth), crowding=float(b), beta=float(beta))
    g, bb, bet = params.growth, params.crowding, params.beta
    return DiffusionModel(
        drift=lambda x: x * (g - bb * x),
        volatility=lambda x: bet * x,
        restart_level=float(y0),
        reference_point=float(y0 if reference_point is None else reference_point),
        logistic=params,
        drift_source=f"x*({g!r} - {bb!r}*x)",
        vol_source=f"{bet!r}*x",
    )


def custom_model(
    drift: Callable[[float], float],
    volatility: Callable[[float], float],
    y0: float,
    *,
    reference_point: float | None = None,
    drift_source: str | None = None,
    vol_source: str | None = None,
) -> DiffusionModel:
    return DiffusionModel(
        drift=drift,
        volatility=volatility,
        restart_level=float(y0),
        reference_point=float(y0 if reference_point is None else reference_point),
        logistic=None,
        drift_source=drift_source,
        vol_source=vol_source,
    )


class _Calculus:
    """Per-model cache of the exponent, scale and speed integrals."""

    def __init__(self, model: DiffusionModel, numerics: NumericsConfig = DEFAULT_NUMERICS):
        self.model = model
        self.numerics = numerics
        a = model.reference_point
        if model.logistic is not None:
            p = model.logistic
            # m(x) = cm * x^(-2q-1) * exp(-rho x) with all reference dependence in cm
            self._cm = (2.0 / p.beta**2) * a ** (2.0 * p.q - 1.0) * math.exp(p.rho * a)
        else:
            self._exponent = CumulativeIntegral(self._exponent_integrand, a)
        self._scale_cum = CumulativeIntegral(self.s, a)
        y0 = model.restart_level
        self._speed_cum: CumulativeIntegral | None = None
        self._xm_cum: CumulativeIntegral | None = None
        self._mum_cum: CumulativeIntegral | None = None
        self._m0_at_y0: float | None = None
        self._xm0_at_y0: float | None = None
        self._mum0_at_y0: float | None = None
        self._y0 = y0

    # -- densities ---------------------------------------------------------

    def _exponent_integrand(self, y: float) -> float:
        sigma2 = float(self.model.volatility(y)) ** 2
        if not sigma2 > 0.0 or not math.isfinite(sigma2):
            raise DomainError(f"volatility vanishes or is non-finite at x={y}")
        return 2.0 * float(self.model.drift(y)) / sigma2

    def exponent(self, x):
        p = self.model.logistic
        a = self.model.reference_point
        if p is not None:
            if isinstance(x, float):
                return (1.0 - 2.0 * p.q) * math.log(x / a) - p.rho * (x - a)
            return (1.0 - 2.0 * p.q) * np.log(np.asarray(x) / a) - p.rho * (np.asarray(x) - a)
        if np.ndim(x) != 0:
            return np.array([self._exponent(float(v)) for v in np.asarray(x)])
        return self._exponent(float(x))

    def s(self, x):
        if isinstance(x, (float, int)):
            if x <= 0.0:
                raise DomainError("scale density needs x > 0")
            return math.exp(-self.exponent(float(x)))
        if np.any(np.asarray(x) <= 0.0):
            raise DomainError("scale density needs x > 0")
        value = np.exp(-self.exponent(x))
        return float(value) if np.ndim(x) == 0 else value

    def m(self, x):
        if isinstance(x, (float, int)):
            if x <= 0.0:
                raise DomainError("speed density needs x > 0")
            sigma2 = float(self.model.volatility(float(x))) ** 2
            return 2.0 / sigma2 * math.exp(self.exponent(float(x)))
        xa = np.asarray(x, dtype=float)
        if np.any(xa <= 0.0):
            raise DomainError("speed density needs x > 0")
        if self.model.logistic is not None or np.ndim(x) == 0:
            sigma2 = np.asarray(self.model.volatility(xa)) ** 2 if self.model.logistic is not None \
                else float(self.model.volatility(float(x))) ** 2
            value = 2.0 / sigma2 * np.exp(self.exponent(x))
            return float(value) if np.ndim(x) == 0 else value
        return np.array([self.m(float(v)) for v in xa])

    # -- scale function ----------------------------------------------------

    def S(self, x) -> float:
        if np.ndim(x) != 0:
            return np.array([self.S(float(v)) for v in np.asarray(x)])
        if x <= 0.0:
            raise DomainError("scale function needs x > 0")
        return self._scale_cum(float(x))

    # -- cumulative speed integrals from 0 ----------------------------------

    def _gamma_moment(self, power: float, x) -> float:
        """Closed form of ``int_0^x u^power m(u) du`` for logistic models."""
        p = self.model.logistic
        shape = power - 2.0 * p.q
        scale = math.exp(gammaln(shape)) * p.rho ** (-shape)
        if isinstance(x, (float, int)):
            return self._cm * scale * float(gammainc(shape, p.rho * float(x)))
        value = self._cm * scale * gammainc(shape, p.rho * np.asarray(x))
        return float(value) if np.ndim(x) == 0 else value

    def _generic_zero_piece(self, weight: Callable[[float], float]) -> float:
        return integrate_to_zero(lambda u: weight(u) * self.m(u), self._y0, numerics=self.numerics)

    def M0(self, x):
        """Speed mass M[0, x]."""
        if self.model.logistic is not None:
            return self._gamma_moment(0.0, x)
        if np.ndim(x) != 0:
            return np.array([self.M0(float(v)) for v in np.asarray(x)])
        if self._speed_cum is None:
            self._m0_at_y0 = self._generic_zero_piece(lambda u: 1.0)
            self._speed_cum = CumulativeIntegral(self.m, self._y0)
        return self._m0_at_y0 + self._speed_cum(float(x))

    def xm0(self, x):
        """First speed moment ``int_0^x u m(u) du``."""
        if self.model.logistic is not None:
            return self._gamma_moment(1.0, x)
        if np.ndim(x) != 0:
            return np.array([self.xm0(float(v)) for v in np.asarray(x)])
        if self._xm_cum is None:
            self._xm0_at_y0 = self._generic_zero_piece(lambda u: u)
            self._xm_cum = CumulativeIntegral(lambda u: u * self.m(u), self._y0)
        return self._xm0_at_y0 + self._xm_cum(float(x))

    def mum0(self, x):
        """Drift-weighted speed integral ``int_0^x mu(u) m(u) du``."""
        if self.model.logistic is not None:
            p = self.model.logistic
            return p.growth * self._gamma_moment(1.0, x) - p.crowding * self._gamma_moment(2.0, x)
        if np.ndim(x) != 0:
            return np.array([self.mum0(float(v)) for v in np.asarray(x)])
        if self._mum_cum is None:
            self._mum0_at_y0 = self._generic_zero_piece(lambda u: float(self.model.drift(u)))
            self._mum_cum = CumulativeIntegral(
                lambda u: float(self.model.drift(u)) * self.m(u), self._y0
            )
        return self._mum0_at_y0 + self._mum_cum(float(x))

    def speed_mass_total(self) -> float:
        if self.model.logistic is not None:
            p = self.model.logistic
            shape = -2.0 * p.q
            return self._cm * math.exp(gammaln(shape)) * p.rho ** (-shape)
        return self.M0(self._y0) + integrate_to_inf(self.m, self._y0, numerics=self.numerics)

    def xm_total(self) -> float:
        if self.model.logistic is not None:
            p = self.model.logistic
            shape = 1.0 - 2.0 * p.q
            return self._cm * math.exp(gammaln(shape)) * p.rho ** (-shape)
        return self.xm0(self._y0) + integrate_to_inf(
            lambda u: u * self.m(u), self._y0, numerics=self.numerics
        )


@functools.lru_cache(maxsize=64)
def _calculus(model: DiffusionModel) -> _Calculus:
    return _Calculus(model)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def scale_density(model: DiffusionModel, x: float):
    """s(x) = exp(-int_a^x 2 mu / sigma^2)."""
    return _calculus(model).s(x)


def speed_density(model: DiffusionModel, x: float):
    """m(x) = (2 / sigma^2(x)) exp(int_a^x 2 mu / sigma^2); satisfies m s sigma^2 = 2."""
    return _calculus(model).m(x)


def scale_function(model: DiffusionModel, x: float) -> float:
    """S(x) = int_a^x s(u) du, normalized by S(a) = 0."""
    return _calculus(model).S(x)


def speed_measure(
    model: DiffusionModel,
    lo: float,
    hi: float,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> float:
    """Speed mass M[lo, hi]; ``lo=0`` and ``hi=inf`` are allowed as improper endpoints."""
    if lo < 0.0 or hi < lo:
        raise DomainError("need 0 <= lo <= hi")
    calc = _calculus(model)
    if lo == hi:
        return 0.0
    if math.isinf(hi):
        total = calc.speed_mass_total()
        return total if lo == 0.0 else total - calc.M0(lo)
    if lo == 0.0:
        return calc.M0(hi)
    return calc.M0(hi) - calc.M0(lo)


@dataclass(frozen=True)
class AssumptionReport:
    """Numeric evidence behind each standing-assumption probe."""

    speed_mass_finite: bool
    speed_mass: float
    first_moment_finite: bool
    first_moment: float
    turning_point_ok: bool
    turning_point: Optional[float]
    scale_diverges: bool
    scale_probe_x: float
    scale_probe_value: float
    entrance_finite: bool
    entrance_value: float
    notes: tuple[str, ...] = field(default=())

    @property
    def all_passed(self) -> bool:
        return (
            self.speed_mass_finite
            and self.first_moment_finite
            and self.turning_point_ok
            and self.scale_diverges
            and self.entrance_finite
        )

    def to_dict(self) -> dict:
        return {
            "speed_mass_finite": self.speed_mass_finite,
            "speed_mass": self.speed_mass,
            "first_moment_finite": self.first_moment_finite,
            "first_moment": self.first_moment,
            "turning_point_ok": self.turning_point_ok,
            "turning_point": self.turning_point,
            "scale_diverges": self.scale_diverges,
            "scale_probe_x": self.scale_probe_x,
            "scale_probe_value": self.scale_probe_value,
            "entrance_finite": self.entrance_finite,
            "entrance_value": self.entrance_value,
            "all_passed": self.all_passed,
            "notes": list(self.notes),
        }


def _probe_turning_point(model: DiffusionModel) -> tuple[bool, Optional[float], list[str]]:
    notes: list[str] = []
    y0 = model.restart_level
    grid = np.geomspace(y0 * 1e-2, y0 * 1e3, 241)
    mu = np.array([float(model.drift(x)) for x in grid])
    slack = 1e-12 * max(1.0, float(np.max(np.abs(mu))))
    i_star = int(np.argmax(mu))
    if i_star >= len(grid) - 1:
        notes.append("drift still rising at the largest probe point; no saturation found")
        return False, None, notes
    rising = bool(np.all(np.diff(mu[: i_star + 1]) >= -slack)) if i_star > 0 else True
    falling = bool(np.all(np.diff(mu[i_star:]) <= slack))
    strictly_falls = mu[-1] < mu[i_star] - slack
    ok = rising and falling and strictly_falls
    if not rising:
        notes.append("drift is not monotone below its maximum")
    if not (falling and strictly_falls):
        notes.append("drift does not decrease beyond its maximum")
    return ok, float(grid[i_star]), notes


def _probe_scale_divergence(model: DiffusionModel) -> tuple[bool, float, float]:
    calc = _calculus(model)
    y0 = model.restart_level
    ref = calc.s(y0)
    x = y0
    values = []
    for _ in range(40):
        x *= 2.0
        try:
            v = calc.s(x)
        except (OverflowError, DomainError):
            return True, x, math.inf
        if math.isinf(v):
            return True, x, v
        values.append(v)
        if v > 1e8 * max(ref, 1e-300):
            return True, x, v
    tail = values[-6:]
    increasing = all(b > a for a, b in zip(tail, tail[1:]))
    return (increasing and tail[-1] > 1e2 * ref), x, values[-1]


def validate_assumptions(
    model: DiffusionModel, *, numerics: NumericsConfig = DEFAULT_NUMERICS
) -> AssumptionReport:
    """Numerically probe positive recurrence, drift saturation, scale growth and the entrance boundary.

    Failures never raise; they are reported with the numbers that produced them.
    """
    calc = _calculus(model)
    notes: list[str] = []

    try:
        mass = calc.speed_mass_total()
        mass_ok = math.isfinite(mass)
    except DivergenceError as exc:
        mass, mass_ok = math.nan, False
        notes.append(f"speed mass: {exc}")
    try:
        moment = calc.xm_total()
        moment_ok = math.isfinite(moment)
    except DivergenceError as exc:
        moment, moment_ok = math.nan, False
        notes.append(f"first moment: {exc}")

    turning_ok, turning_point, turning_notes = _probe_turning_point(model)
    notes.extend(turning_notes)

    scale_ok, probe_x, probe_value = _probe_scale_divergence(model)
    if not scale_ok:
        notes.append("scale density does not appear to diverge")

    y0 = model.restart_level
    try:
        s_at_y0 = calc.S(y0)
        entrance_value = integrate_to_zero(
            lambda u: (s_at_y0 - calc.S(u)) * calc.m(u), y0, numerics=numerics
        )
        entrance_ok = math.isfinite(entrance_value)
    except DivergenceError as exc:
        entrance_value, entrance_ok = math.nan, False
        notes.append(f"entrance boundary: {exc}")

    return AssumptionReport(
        speed_mass_finite=mass_ok,
        speed_mass=mass,
        first_moment_finite=moment_ok,
        first_moment=moment,
        turning_point_ok=turning_ok,
        turning_point=turning_point,
        scale_diverges=scale_ok,
        scale_probe_x=probe_x,
        scale_probe_value=probe_value,
        entrance_finite=entrance_ok,
        entrance_value=entrance_value,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def model_to_dict(model: DiffusionModel) -> dict:
    if model.logistic is not None:
        p = model.logistic
        d = {"kind": "logistic", "q": p.q, "b": p.crowding, "beta": p.beta, "y0": model.restart_level}
    else:
        if model.drift_source is None or model.vol_source is None:
            raise DomainError("custom model without expression sources cannot be serialized")
        d = {
            "kind": "custom",
            "drift": model.drift_source,
            "vol": model.vol_source,
            "y0": model.restart_level,
        }
    if model.reference_point != model.restart_level:
        d["reference_point"] = model.reference_point
    return d


def model_from_dict(data: dict) -> DiffusionModel:
    from .expressions import parse_expression

    if not isinstance(data, dict) or "kind" not in data:
        raise DomainError("model spec must be an object with a 'kind' field")
    kind = data["kind"]
    if kind == "logistic":
        keys = {"q", "b", "beta", "y0"}
        missing = keys - data.keys()
        if missing:
            raise DomainError(f"logistic model spec is missing {sorted(missing)}")
        return logistic_model(
            q=float(data["q"]),
            b=float(data["b"]),
            beta=float(data["beta"]),
            y0=float(data["y0"]),
            reference_point=data.get("reference_point"),
        )
    if kind == "custom":
        keys = {"drift", "vol", "y0"}
        missing = keys - data.keys()
        if missing:
            raise DomainError(f"custom model spec is missing {sorted(missing)}")
        drift = parse_expression(data["drift"], "x")
        vol = parse_expression(data["vol"], "x")
        ref = data.get("reference_point")
        return custom_model(
            drift,
            vol,
            float(data["y0"]),
            reference_point=None if ref is None else float(ref),
            drift_source=data["drift"],
            vol_source=data["vol"],
        )
    raise DomainError(f"unknown model kind {kind!r}")
