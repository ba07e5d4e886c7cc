"""Expected threshold-hitting times and related running-cost functionals.

For a threshold ``y >= y0`` the cycle length of the threshold strategy is
``xi(y) = E_{y0}[time to first reach y]``. It is computed two independent
ways:

* a Green-kernel quadrature valid for every model,
* a power series in ``rho * y`` available for logistic models, evaluated by a
  term recurrence so no factorial overflows occur.

Derivatives come from the scale/speed calculus directly: ``xi' = s(y) M[0,y]``
and ``xi'' = (2 s / sigma^2) * int_0^y (mu(u) - mu(y)) m(u) du``. The second
derivative changes sign at most once on ``[y0, inf)``, from concave to
convex; the switch point ``y2`` localizes every root bracket used by the
impulse solver.
"""

from __future__ import annotations

import functools
import math
from typing import Callable

import numpy as np

from .config import DEFAULT_NUMERICS, NumericsConfig
from .diffusion import DiffusionModel, _calculus
from .errors import ConvergenceError, DivergenceError, DomainError
from .quadrature import integrate, integrate_to_zero

__all__ = ["XiEvaluator", "get_evaluator"]


@functools.lru_cache(maxsize=64)
def get_evaluator(model: DiffusionModel) -> "XiEvaluator":
    """Shared evaluator per model; everything it caches is value-immutable."""
    return XiEvaluator(model)


class XiEvaluator:
    """Hitting-time calculus for one immutable model; safe for concurrent reads."""

    def __init__(self, model: DiffusionModel, numerics: NumericsConfig = DEFAULT_NUMERICS):
        self.model = model
        self.numerics = numerics
        self._calc = _calculus(model)
        self.y0 = model.restart_level
        self.mass_below_restart = self._calc.M0(self.y0)
        self._scale_at_y0 = self._calc.S(self.y0)
        self._y2: float | None = None

    # ------------------------------------------------------------------
    # xi and its derivatives
    # ------------------------------------------------------------------

    def _check_domain(self, y) -> None:
        if isinstance(y, (float, int)):
            if y < self.y0 * (1.0 - 1e-12):
                raise DomainError(f"thresholds live in [y0, inf) = [{self.y0}, inf)")
            return
        if np.any(np.asarray(y) < self.y0 * (1.0 - 1e-12)):
            raise DomainError(f"thresholds live in [y0, inf) = [{self.y0}, inf)")

    def xi(self, y):
        """Expected time from y0 to the threshold y (vectorized for logistic models)."""
        self._check_domain(y)
        p = self.model.logistic
        cap = self.numerics.series_arg_cap
        if p is not None:
            if np.ndim(y) == 0:
                y = float(y)
                return self.xi_series(y) if p.rho * y < cap else self.xi_by_quadrature(y)
            t = p.rho * np.asarray(y, dtype=float)
            if np.all(t < cap):
                return self.xi_series(y)
            return np.array(
                [self.xi_series(float(v)) if p.rho * v < cap
                 else self.xi_by_quadrature(float(v)) for v in np.asarray(y)]
            )
        if np.ndim(y) == 0:
            return self.xi_by_quadrature(float(y))
        return np.array([self.xi_by_quadrature(float(v)) for v in np.asarray(y)])

    def xi_by_quadrature(self, y: float) -> float:
        """Green-kernel form: int_{y0}^{y} (S(y)-S(w)) m(w) dw + (S(y)-S(y0)) M[0,y0]."""
        self._check_domain(y)
        y = float(y)
        if y == self.y0:
            return 0.0
        s_at_y = self._calc.S(y)
        kernel = integrate(
            lambda w: (s_at_y - self._calc.S(w)) * self._calc.m(w),
            self.y0,
            y,
            abs_tol=self.numerics.quad_abs_tol,
            rel_tol=self.numerics.quad_rel_tol,
        )
        return kernel + (s_at_y - self._scale_at_y0) * self.mass_below_restart

    def _series_sum(self, t):
        """A(t) = sum_{n>=1} t^n / (n (1-2q)_n), by term recurrence."""
        p = self.model.logistic
        c = 1.0 - 2.0 * p.q
        eps = self.numerics.series_rel_eps
        if isinstance(t, float):
            term = t / c
            acc = term
            for n in range(1, self.numerics.series_max_terms):
                term = term * t * (n / ((n + 1.0) * (c + n)))
                acc += term
                if abs(term) <= eps * max(abs(acc), 1e-300):
                    return acc
            raise ConvergenceError("hitting-time series did not converge within the term budget")
        t = np.asarray(t, dtype=float)
        term = t / c
        acc = term.copy()
        for n in range(1, self.numerics.series_max_terms):
            term = term * t * (n / ((n + 1.0) * (c + n)))
            acc += term
            if np.all(np.abs(term) <= eps * np.maximum(np.abs(acc), 1e-300)):
                return acc
        raise ConvergenceError("hitting-time series did not converge within the term budget")

    def xi_series(self, y):
        """Series form for logistic models; requires rho*y below the overflow cap."""
        p = self.model.logistic
        if p is None:
            raise DomainError("series form requires a logistic model")
        self._check_domain(y)
        cap = self.numerics.series_arg_cap
        scale = 1.0 / (p.beta**2 * abs(p.q))
        if isinstance(y, (float, int)) or np.ndim(y) == 0:
            y = float(y)
            if p.rho * y >= cap:
                raise DomainError(
                    f"series argument rho*y exceeds the cap {cap}; use the quadrature form"
                )
            return scale * (
                math.log(y / self.y0)
                + self._series_sum(p.rho * y)
                - self._series_sum(p.rho * self.y0)
            )
        t = p.rho * np.asarray(y, dtype=float)
        if np.any(t >= cap):
            raise DomainError(
                f"series argument rho*y exceeds the cap {cap}; use the quadrature form"
            )
        return scale * (
            np.log(np.asarray(y, dtype=float) / self.y0)
            + self._series_sum(t)
            - self._series_sum(p.rho * self.y0)
        )

    def xi_prime(self, y):
        """xi'(y) = s(y) M[0, y] > 0."""
        self._check_domain(y)
        value = self._calc.s(y) * self._calc.M0(y)
        return float(value) if np.ndim(y) == 0 else value

    def xi_second(self, y):
        """xi''(y) = (2 s(y) / sigma^2(y)) * int_0^y (mu(u) - mu(y)) m(u) du."""
        self._check_domain(y)
        ya = np.asarray(y, dtype=float)
        if self.model.logistic is None and np.ndim(y) != 0:
            return np.array([self.xi_second(float(v)) for v in ya])
        mu_y = np.asarray(self.model.drift(ya)) if self.model.logistic is not None \
            else float(self.model.drift(float(y)))
        sigma2 = np.asarray(self.model.volatility(ya)) ** 2 if self.model.logistic is not None \
            else float(self.model.volatility(float(y))) ** 2
        i_of_y = self._calc.mum0(y) - mu_y * self._calc.M0(y)
        value = 2.0 * self._calc.s(y) / sigma2 * i_of_y
        return float(value) if np.ndim(y) == 0 else value

    # ------------------------------------------------------------------
    # convexity switch
    # ------------------------------------------------------------------

    def drift_turning_point(self) -> float:
        p = self.model.logistic
        if p is not None:
            return p.growth / (2.0 * p.crowding)
        grid = np.geomspace(self.y0 * 1e-2, self.y0 * 1e3, 241)
        mu = np.array([float(self.model.drift(x)) for x in grid])
        return float(grid[int(np.argmax(mu))])

    def convexity_switch(self) -> float:
        """Smallest y2 >= y0 with xi convex on (y2, inf); cached after the first call."""
        if self._y2 is not None:
            return self._y2
        y0 = self.y0
        if self.xi_second(y0) > 0.0:
            self._y2 = y0
            return y0
        lo = max(y0, self.drift_turning_point())
        if self.xi_second(lo) > 0.0:
            lo, hi = y0, lo
        else:
            hi = lo
            for _ in range(self.numerics.bracket_doublings):
                hi *= 2.0
                if self.xi_second(hi) > 0.0:
                    break
                lo = hi
            else:
                raise ConvergenceError("xi never turned convex within the doubling budget")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.xi_second(mid) > 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-10 * max(1.0, hi):
                break
        self._y2 = hi
        return hi

    # ------------------------------------------------------------------
    # running costs
    # ------------------------------------------------------------------

    def expected_running_cost(
        self, h: Callable[[float], float], x: float, b: float
    ) -> float:
        """E_x[int_0^{tau_b} h(X_s) ds] for continuous nonnegative h of linear growth."""
        if not 0.0 < x < b:
            raise DomainError("need 0 < x < b")
        calc = self._calc
        s_at_b = calc.S(b)
        kernel = integrate(
            lambda u: (s_at_b - calc.S(u)) * float(h(u)) * calc.m(u),
            x,
            b,
            abs_tol=self.numerics.quad_abs_tol,
            rel_tol=self.numerics.quad_rel_tol,
        )
        try:
            below = integrate_to_zero(
                lambda u: float(h(u)) * calc.m(u), x, numerics=self.numerics
            )
        except DivergenceError as exc:
            raise DomainError(f"h is incompatible with the entrance boundary: {exc}") from exc
        return kernel + (s_at_b - calc.S(x)) * below
