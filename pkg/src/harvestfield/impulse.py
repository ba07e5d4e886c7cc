"""Single-agent long-run-average impulse optimization.

The basic problem maximizes ``(y - y0 - Kt) / xi(y)`` over thresholds y. Its
unique maximizer is the unique root of

    F(y) = xi(y) - (y - y0 - Kt) * xi'(y)

on ``[max(y0 + Kt, y2), inf)``, where y2 is the convexity switch of xi; F is
positive at the left end of that interval and strictly decreasing past it, so
bracket expansion plus bisection is exact. The general auxiliary problem
(increasing reward f, running cost h) is only known to be unimodal, so it is
solved by derivative bracketing plus golden-section refinement.

A solved instance can be re-checked through the associated optimal-stopping
problem: with ``rho`` the claimed long-run value, the stopping value

    g(x) = sup_y [ f(y) - K - E_x int_0^{tau_y} (h + rho) ]

must vanish at y0, dominate f - K everywhere, and make the claimed threshold
a stopping point. Feeding a wrong threshold (hence a sub-optimal rho) breaks
those identities, which is what :func:`verify_solution` detects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import DEFAULT_NUMERICS, NumericsConfig
from .diffusion import DiffusionModel
from .errors import DivergenceError, DomainError, NoRootError
from .hitting import XiEvaluator, get_evaluator
from .payoff import PayoffSpec
from .quadrature import CumulativeIntegral, integrate_to_zero

__all__ = [
    "ThresholdSolution",
    "StoppingValue",
    "VerificationReport",
    "optimal_threshold_basic",
    "optimal_thresholds_on_grid",
    "max_harvest_rate",
    "best_response",
    "critical_bounds",
    "solve_auxiliary",
    "stopping_value",
    "verify_solution",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ThresholdSolution:
    threshold: float
    value: float                 # long-run reward rate of R(threshold)
    residual: float              # first-order-condition residual at the threshold
    bracket: tuple[float, float]
    iterations: int
    profitable: bool = True
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "value": self.value,
            "residual": self.residual,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "profitable": self.profitable,
            "flags": list(self.flags),
        }


def _as_evaluator(model_or_ev) -> XiEvaluator:
    if isinstance(model_or_ev, XiEvaluator):
        return model_or_ev
    if isinstance(model_or_ev, DiffusionModel):
        return get_evaluator(model_or_ev)
    raise DomainError(f"expected a DiffusionModel or XiEvaluator, got {type(model_or_ev)!r}")


# ---------------------------------------------------------------------------
# basic problem: (y - y0 - Kt) / xi(y)
# ---------------------------------------------------------------------------

def optimal_threshold_basic(
    model_or_ev,
    k_tilde: float,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> ThresholdSolution:
    """Unique maximizer of ``(y - y0 - k_tilde) / xi(y)`` by bracketed bisection on F."""
    ev = _as_evaluator(model_or_ev)
    if k_tilde < 0.0:
        raise DomainError("k_tilde must be nonnegative")
    y0 = ev.y0

    def f_and_xi(y: float) -> tuple[float, float]:
        xi = ev.xi(y)
        return xi - (y - y0 - k_tilde) * ev.xi_prime(y), xi

    if k_tilde == 0.0 and ev.xi_second(y0) > 0.0:
        # zero cost with xi convex from the start: (y - y0)/xi(y) decreases on
        # all of (y0, inf), so the supremum 1/xi'(y0) is approached at y0 itself
        return ThresholdSolution(
            threshold=y0,
            value=1.0 / ev.xi_prime(y0),
            residual=0.0,
            bracket=(y0, y0),
            iterations=0,
            profitable=True,
            flags=("maximizer degenerates to the restart level",),
        )

    left = max(y0 + k_tilde, ev.convexity_switch()) + 1e-6
    lo = left
    f_lo, _ = f_and_xi(lo)
    if f_lo <= 0.0:
        # theory puts the root right of `left`; tolerate rounding at the corner
        lo = max(y0 * (1.0 + 1e-9), left - 2e-6)
        f_lo, _ = f_and_xi(lo)
        if f_lo <= 0.0:
            raise NoRootError(
                "first-order condition is nonpositive at the left end of the bracket; "
                "model assumptions are likely violated"
            )
    hi = 2.0 * lo
    for _ in range(numerics.bracket_doublings):
        f_hi, _ = f_and_xi(hi)
        if f_hi < 0.0:
            break
        lo, f_lo = hi, f_hi
        hi *= 2.0
    else:
        raise NoRootError(
            f"no sign change of the first-order condition within {numerics.bracket_doublings} "
            "doublings; the objective appears to increase without bound"
        )

    bracket = (lo, hi)
    iterations = 0
    mid, residual = 0.5 * (lo + hi), math.inf
    while iterations < 400:
        mid = 0.5 * (lo + hi)
        f_mid, xi_mid = f_and_xi(mid)
        iterations += 1
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        residual = abs(f_mid) / xi_mid
        if (hi - lo) < numerics.bracket_rel_tol * mid and residual < numerics.objective_rel_tol:
            break

    value = (mid - y0 - k_tilde) / ev.xi(mid)
    return ThresholdSolution(
        threshold=mid,
        value=value,
        residual=residual,
        bracket=bracket,
        iterations=iterations,
        profitable=value > 0.0,
        flags=() if value > 0.0 else ("unprofitable",),
    )


def optimal_thresholds_on_grid(
    model_or_ev,
    k_tildes: np.ndarray,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> np.ndarray:
    """Vectorized basic solve for an array of k_tilde values (grid scans).

    Uses the same bracket/bisection scheme with array arithmetic; only
    available when xi supports vector input (logistic models). Falls back to
    the scalar solver otherwise.
    """
    ev = _as_evaluator(model_or_ev)
    kt = np.asarray(k_tildes, dtype=float)
    if np.any(kt <= 0.0):
        raise DomainError("the vectorized solve needs strictly positive k_tilde")
    if ev.model.logistic is None:
        return np.array(
            [optimal_threshold_basic(ev, float(k), numerics=numerics).threshold for k in kt]
        )
    y0 = ev.y0

    def f_of(y: np.ndarray) -> np.ndarray:
        return np.asarray(ev.xi(y)) - (y - y0 - kt) * np.asarray(ev.xi_prime(y))

    lo = np.maximum(y0 + kt, ev.convexity_switch()) + 1e-6
    hi = 2.0 * lo
    for _ in range(numerics.bracket_doublings):
        need = f_of(hi) >= 0.0
        if not np.any(need):
            break
        lo = np.where(need, hi, lo)
        hi = np.where(need, hi * 2.0, hi)
    else:
        raise NoRootError("vectorized bracket expansion exhausted")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        pos = f_of(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.all(hi - lo < numerics.bracket_rel_tol * mid):
            break
    return 0.5 * (lo + hi)


def max_harvest_rate(model_or_ev, *, numerics: NumericsConfig = DEFAULT_NUMERICS) -> float:
    """Largest attainable long-run harvesting rate, reached by the zero-cost threshold."""
    ev = _as_evaluator(model_or_ev)
    sol = optimal_threshold_basic(ev, 0.0, numerics=numerics)
    return sol.value


def best_response(
    model_or_ev,
    payoff: PayoffSpec,
    z: float,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> ThresholdSolution:
    """Optimal threshold against a fixed interaction level z: the basic solve at K/phi(z)."""
    ev = _as_evaluator(model_or_ev)
    price = float(payoff.phi(z))
    if not price > 0.0 or not math.isfinite(price):
        raise DomainError(f"phi(z) must be positive and finite; got {price} at z={z}")
    base = optimal_threshold_basic(ev, payoff.cost / price, numerics=numerics)
    value = price * base.value
    flags = base.flags if value > 0.0 else tuple(set(base.flags) | {"no profitable harvest"})
    return ThresholdSolution(
        threshold=base.threshold,
        value=value,
        residual=base.residual,
        bracket=base.bracket,
        iterations=base.iterations,
        profitable=value > 0.0,
        flags=flags,
    )


def critical_bounds(
    model_or_ev,
    payoff: PayoffSpec,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> tuple[float, float]:
    """Range of best responses over the closed interaction domain (monotone in z)."""
    ev = _as_evaluator(model_or_ev)
    if payoff.domain is None:
        raise DomainError("payoff domain is not resolved; use meanfield.resolve_payoff")
    lo_z, hi_z = payoff.domain
    y_at_lo = best_response(ev, payoff, lo_z, numerics=numerics).threshold
    y_at_hi = best_response(ev, payoff, hi_z, numerics=numerics).threshold
    return (min(y_at_lo, y_at_hi), max(y_at_lo, y_at_hi))


# ---------------------------------------------------------------------------
# auxiliary problem with running cost
# ---------------------------------------------------------------------------

class _RunningCost:
    """Cached evaluator of ``E_x int_0^{tau_y} htilde(X) ds`` for htilde = h + rho."""

    def __init__(self, ev: XiEvaluator, h: Optional[Callable[[float], float]], rho: float = 0.0):
        self.ev = ev
        calc = ev._calc
        self._calc = calc
        y0 = ev.y0
        if h is None and rho == 0.0:
            self._trivial = True
            return
        self._trivial = False
        hfun = (lambda u: rho) if h is None else (lambda u: float(h(u)) + rho)
        self._hm = CumulativeIntegral(lambda u: hfun(u) * calc.m(u), y0)
        self._s_hm = CumulativeIntegral(lambda u: calc.S(u) * hfun(u) * calc.m(u), y0)
        try:
            self._below_y0 = integrate_to_zero(
                lambda u: hfun(u) * calc.m(u), y0, numerics=ev.numerics
            )
        except Exception as exc:  # divergence near the boundary
            raise DomainError(f"running cost is incompatible with the entrance region: {exc}")

    def __call__(self, x: float, y: float) -> float:
        if y <= x:
            return 0.0
        if self._trivial:
            return 0.0
        calc = self._calc
        s_y, s_x = calc.S(y), calc.S(x)
        kernel = s_y * (self._hm(y) - self._hm(x)) - (self._s_hm(y) - self._s_hm(x))
        below_x = self._below_y0 + self._hm(x)
        return kernel + (s_y - s_x) * below_x


def _golden_max(fn: Callable[[float], float], lo: float, hi: float, rel_tol: float):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    iterations = 0
    while (b - a) > rel_tol * max(abs(b), 1.0) and iterations < 200:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
        iterations += 1
    x_best = c if fc >= fd else d
    return x_best, fn(x_best), iterations


def solve_auxiliary(
    model_or_ev,
    f: Callable[[float], float],
    h: Optional[Callable[[float], float]],
    cost: float,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> ThresholdSolution:
    """Maximize ``(f(y) - K - E_{y0} int_0^{tau_y} h) / xi(y)`` over thresholds.

    ``f`` must be continuous and increasing with ``f(y0) = 0``; ``h``
    continuous, nonnegative, of linear growth (``None`` means identically 0).
    The maximizer is located by bracketing a sign change of the numeric
    derivative and refining with golden section, which only assumes
    unimodality.
    """
    ev = _as_evaluator(model_or_ev)
    if cost <= 0.0:
        raise DomainError("the impulse cost K must be positive")
    y0 = ev.y0
    rc = _RunningCost(ev, h, 0.0)

    def objective(y: float) -> float:
        try:
            value = (float(f(y)) - cost - rc(y0, y)) / ev.xi(y)
        except (OverflowError, DivergenceError):
            return math.nan
        return value if math.isfinite(value) else math.nan

    def derivative(y: float) -> float:
        step = min(max(1e-5, 1e-6 * y), 0.5 * (y - y0))
        return (objective(y + step) - objective(y - step)) / (2.0 * step)

    a = y0 * (1.0 + 1e-3)
    tries = 0
    while derivative(a) <= 0.0 and tries < 20:
        a = y0 + (a - y0) / 2.0
        tries += 1
    b = a
    for _ in range(numerics.bracket_doublings):
        b *= 2.0
        d = derivative(b)
        if math.isnan(d):
            raise NoRootError(
                f"auxiliary objective is not finite near y={b:.6g}; "
                "no interior maximizer was bracketed"
            )
        if d < 0.0:
            break
    else:
        raise NoRootError(
            "the auxiliary objective keeps increasing; no interior maximizer was bracketed"
        )

    y_star, value, iterations = _golden_max(
        objective, a, b, numerics.golden_rel_tol
    )
    flags: tuple[str, ...] = ()
    if value <= 0.0:
        flags = ("no profitable harvest",)
    return ThresholdSolution(
        threshold=y_star,
        value=value,
        residual=abs(derivative(y_star)),
        bracket=(a, b),
        iterations=iterations,
        profitable=value > 0.0,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# stopping-problem verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StoppingValue:
    grid: np.ndarray
    values: np.ndarray
    threshold: float

    def value_at(self, x: float) -> float:
        idx = int(np.argmin(np.abs(self.grid - x)))
        return float(self.values[idx])


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    g_at_restart: float
    u_max_on_grid: float
    u_at_threshold: float
    tolerance: float
    grid_points: int
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "g_at_restart": self.g_at_restart,
            "u_max_on_grid": self.u_max_on_grid,
            "u_at_threshold": self.u_at_threshold,
            "tolerance": self.tolerance,
            "grid_points": self.grid_points,
            "flags": list(self.flags),
        }


def stopping_value(
    model_or_ev,
    f: Callable[[float], float],
    h: Optional[Callable[[float], float]],
    cost: float,
    rho_star: float,
    grid: Optional[np.ndarray] = None,
    *,
    threshold_hint: Optional[float] = None,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> StoppingValue:
    """Value function of the stopping problem with running penalty ``h + rho_star``.

    The optimal continuation target solves ``f'(y) = d/dy E_x[running cost]``,
    whose right-hand side does not depend on the starting state x, so one
    golden-section search fixes the target for every x at once; each grid
    point then needs a single running-cost evaluation. A vectorized
    grid-candidate maximum is kept alongside as a safety net for objectives
    that are not unimodal.
    """
    ev = _as_evaluator(model_or_ev)
    y0 = ev.y0
    if threshold_hint is None:
        threshold_hint = solve_auxiliary(ev, f, h, cost, numerics=numerics).threshold
    if grid is None:
        grid = np.geomspace(1e-2 * y0, 1.5 * threshold_hint, numerics.stopping_grid_points)
    grid = np.unique(np.concatenate([np.asarray(grid, dtype=float), [y0, threshold_hint]]))
    rc = _RunningCost(ev, h, rho_star)
    calc = ev._calc

    candidates = grid[grid >= y0]
    f_cand = np.array([float(f(v)) for v in candidates])
    from_y0 = f_cand - cost - np.array([rc(y0, float(c)) for c in candidates])
    j = int(np.argmax(from_y0))
    lo = float(candidates[max(j - 1, 0)])
    hi = float(candidates[min(j + 1, len(candidates) - 1)])
    if hi > lo:
        target, _, _ = _golden_max(
            lambda yv: float(f(yv)) - cost - rc(y0, yv), lo, hi, numerics.golden_rel_tol
        )
    else:
        target = float(candidates[j])
    f_target = float(f(target)) - cost

    s_cand = np.array([calc.S(float(c)) for c in candidates])
    hm_cand = np.array([rc._hm(float(c)) for c in candidates]) if not rc._trivial else np.zeros_like(candidates)
    shm_cand = np.array([rc._s_hm(float(c)) for c in candidates]) if not rc._trivial else np.zeros_like(candidates)

    values = np.empty(len(grid))
    for i, x in enumerate(grid):
        x = float(x)
        best = -math.inf
        if x >= y0:
            best = float(f(x)) - cost
        if target > max(x, y0):
            best = max(best, f_target - rc(x, target))
        mask = candidates >= max(x, y0)
        if np.any(mask):
            if rc._trivial:
                best = max(best, float(np.max(f_cand[mask])) - cost)
            else:
                s_x, hm_x = calc.S(x), rc._hm(x)
                shm_x = rc._s_hm(x)
                below_x = rc._below_y0 + hm_x
                rc_vec = (
                    s_cand[mask] * (hm_cand[mask] - hm_x)
                    - (shm_cand[mask] - shm_x)
                    + (s_cand[mask] - s_x) * below_x
                )
                best = max(best, float(np.max(f_cand[mask] - cost - rc_vec)))
        values[i] = best
    return StoppingValue(grid=grid, values=values, threshold=float(threshold_hint))


def verify_solution(
    model_or_ev,
    solution: ThresholdSolution,
    f: Callable[[float], float],
    h: Optional[Callable[[float], float]],
    cost: float,
    *,
    grid: Optional[np.ndarray] = None,
    tolerance: float = 1e-6,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> VerificationReport:
    """Check the stopping-problem identities for a claimed solution.

    Uses the solution's own value as the running penalty, so a perturbed
    threshold (whose renewal value is sub-optimal) fails the checks.
    """
    ev = _as_evaluator(model_or_ev)
    sv = stopping_value(
        ev, f, h, cost, solution.value,
        grid=grid, threshold_hint=solution.threshold, numerics=numerics,
    )
    g = sv.values
    xs = sv.grid
    g_at_y0 = float(g[np.argmin(np.abs(xs - ev.y0))])
    u = np.array([float(f(x)) - cost - gv for x, gv in zip(xs, g)])
    u_max = float(np.max(u))
    u_at_threshold = float(u[np.argmin(np.abs(xs - solution.threshold))])
    flags = []
    if abs(g_at_y0) > tolerance:
        flags.append("stopping value does not vanish at the restart level")
    if u_max > tolerance:
        flags.append("stopping value fails to dominate the harvest payoff")
    if abs(u_at_threshold) > tolerance:
        flags.append("claimed threshold is not a stopping point")
    return VerificationReport(
        passed=not flags,
        g_at_restart=g_at_y0,
        u_max_on_grid=u_max,
        u_at_threshold=u_at_threshold,
        tolerance=tolerance,
        grid_points=len(xs),
        flags=tuple(flags),
    )
