"""Equilibria and planner optima for the mean-field harvesting market.

Agents interact through one scalar ``c(y)``: the average harvesting rate
``(y - y0)/xi(y)`` or the expected standing stock ``E[X_inf^{R(y)}]``. The
best-response map ``g`` sends an interaction level to the optimal threshold,
and ``Phi = g o c`` sends a population threshold to the individual optimum.

* competitive equilibrium: fixed point of Phi. Under the harvest-rate
  channel Phi is strictly decreasing, so the fixed point is unique and found
  by bisection. Under the expected-stock channel Phi is increasing, so all
  sign changes of ``Phi(y) - y`` on a log grid are collected and refined.
* cooperative (planner) optimum: maximizer of
  ``H(y) = (gamma(y, c(y)) - K)/xi(y)``, by grid scan plus golden section.

The threshold ordering between the two solutions is checked by
:func:`compare`: planner >= equilibrium under the harvest-rate channel and
planner <= every equilibrium under the expected-stock channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import DEFAULT_NUMERICS, NumericsConfig
from .diffusion import DiffusionModel, logistic_model
from .errors import ComparisonError, DomainError, SolverError
from .hitting import get_evaluator
from .impulse import (
    ThresholdSolution,
    best_response,
    critical_bounds,
    max_harvest_rate,
    optimal_threshold_basic,
    optimal_thresholds_on_grid,
)
from .payoff import Interaction, PayoffSpec
from .stationary import expected_stock, expected_stock_grid, stock_bounds

__all__ = [
    "EquilibriumPoint",
    "EquilibriumSet",
    "MfcSolution",
    "CompareReport",
    "SweepRow",
    "resolve_payoff",
    "interaction_level",
    "phi_map",
    "mfg_equilibrium",
    "classify_stability",
    "mfc_optimum",
    "compare",
    "ordering_sweep",
]


# ---------------------------------------------------------------------------
# payoff resolution and the interaction channel
# ---------------------------------------------------------------------------

def resolve_payoff(
    model: DiffusionModel,
    payoff: PayoffSpec,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> PayoffSpec:
    """Attach the attainable interaction domain and sanity-check the price curve."""
    if payoff.cost <= 0.0:
        raise DomainError("the impulse cost K must be positive")
    if payoff.interaction is Interaction.HARVEST_RATE:
        lo, hi = 0.0, max_harvest_rate(model, numerics=numerics)
    else:
        lo, hi = stock_bounds(model)
    zs = np.linspace(lo, hi, 65)
    phi_vals = np.array([float(payoff.phi(z)) for z in zs])
    if np.any(~np.isfinite(phi_vals)) or np.any(phi_vals <= 0.0):
        raise DomainError("phi must be positive and finite on the interaction domain")
    scale = float(np.max(phi_vals))
    if np.any(np.diff(phi_vals) > 1e-9 * scale):
        raise DomainError("phi must be nonincreasing on the interaction domain")
    return payoff.with_domain(lo, hi)


def interaction_level(
    model: DiffusionModel, payoff: PayoffSpec, y: float
) -> float:
    """c(y): harvesting rate (y-y0)/xi(y) or expected stock, per the payoff's channel."""
    ev = get_evaluator(model)
    if np.any(np.asarray(y) <= model.restart_level):
        raise DomainError("interaction level is defined for thresholds above y0")
    if payoff.interaction is Interaction.HARVEST_RATE:
        value = (np.asarray(y, dtype=float) - model.restart_level) / np.asarray(ev.xi(y))
        return float(value) if np.ndim(y) == 0 else value
    if np.ndim(y) == 0:
        return expected_stock(model, float(y))
    return expected_stock_grid(model, np.asarray(y, dtype=float))


def _clamp_to_domain(z: float, domain: tuple[float, float]) -> tuple[float, bool]:
    lo, hi = domain
    if z < lo:
        return lo, True
    if z > hi:
        return hi, True
    return z, False


def phi_map(
    model: DiffusionModel,
    payoff: PayoffSpec,
    y: float,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> ThresholdSolution:
    """One application of Phi: best response to the interaction generated by y."""
    if payoff.domain is None:
        payoff = resolve_payoff(model, payoff, numerics=numerics)
    z, clamped = _clamp_to_domain(interaction_level(model, payoff, y), payoff.domain)
    sol = best_response(model, payoff, z, numerics=numerics)
    if clamped:
        sol = ThresholdSolution(
            threshold=sol.threshold,
            value=sol.value,
            residual=sol.residual,
            bracket=sol.bracket,
            iterations=sol.iterations,
            profitable=sol.profitable,
            flags=tuple(set(sol.flags) | {"interaction level clamped to domain"}),
        )
    return sol


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumPoint:
    threshold: float
    value: float
    interaction: float          # c(y) at the equilibrium
    stability: str              # "stable" | "unstable" | "marginal"
    map_slope: float            # numeric Phi'(y)
    residual: float             # |Phi(y) - y|

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "value": self.value,
            "interaction_level": self.interaction,
            "stability": self.stability,
            "map_slope": self.map_slope,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class EquilibriumSet:
    points: tuple[EquilibriumPoint, ...]
    bounds: tuple[float, float]         # best-response range [y_lo, y_hi]
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def thresholds(self) -> list[float]:
        return [p.threshold for p in self.points]

    def to_dict(self) -> dict:
        return {
            "equilibria": [p.to_dict() for p in self.points],
            "bounds": list(self.bounds),
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class MfcSolution:
    threshold: float
    value: float
    interaction: float
    ties: tuple[float, ...] = ()
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "value": self.value,
            "interaction_level": self.interaction,
            "ties": list(self.ties),
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class CompareReport:
    equilibria: EquilibriumSet
    planner: MfcSolution
    margins: tuple[float, ...]   # signed; nonnegative when the ordering holds
    ordering: str                # human-readable statement of the checked direction
    ok: bool

    def to_dict(self) -> dict:
        return {
            "equilibria": self.equilibria.to_dict(),
            "planner": self.planner.to_dict(),
            "margins": list(self.margins),
            "ordering": self.ordering,
            "ok": self.ok,
        }


# ---------------------------------------------------------------------------
# equilibria
# ---------------------------------------------------------------------------

def _psi(model, payoff, y, *, numerics) -> float:
    return phi_map(model, payoff, y, numerics=numerics).threshold - y


def _refine_fixed_point(model, payoff, lo, hi, psi_lo, psi_hi, *, numerics) -> float:
    """Bisection for a root of psi on [lo, hi] with a sign change."""
    for _ in range(numerics.fixed_point_max_iter):
        mid = 0.5 * (lo + hi)
        pm = _psi(model, payoff, mid, numerics=numerics)
        if abs(pm) < numerics.fixed_point_tol or (hi - lo) < numerics.fixed_point_tol:
            return mid
        if (pm > 0.0) == (psi_lo > 0.0):
            lo, psi_lo = mid, pm
        else:
            hi, psi_hi = mid, pm
    return 0.5 * (lo + hi)


def _equilibrium_point(model, payoff, y_star, *, numerics) -> EquilibriumPoint:
    z = interaction_level(model, payoff, y_star)
    sol = best_response(model, payoff, z, numerics=numerics)
    stability, slope = classify_stability(model, payoff, y_star, numerics=numerics)
    return EquilibriumPoint(
        threshold=y_star,
        value=sol.value,
        interaction=z,
        stability=stability,
        map_slope=slope,
        residual=abs(sol.threshold - y_star),
    )


def _stock_scan_cap(model, payoff, y_hat0, *, numerics) -> float:
    """Upper end of the multi-equilibrium scan: where c(y) saturates at z2, or 20*yhat0."""
    from .errors import DivergenceError

    _, z2 = payoff.domain
    y = max(2.0 * model.restart_level, y_hat0)
    for _ in range(40):
        try:
            if expected_stock(model, y) >= numerics.stock_saturation * z2:
                break
        except (DivergenceError, OverflowError):
            # the scale function overflowed before c saturated; stop at the
            # last representable threshold
            y /= 2.0
            break
        y *= 2.0
    return max(20.0 * y_hat0, y)


def mfg_equilibrium(
    model: DiffusionModel,
    payoff: PayoffSpec,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> EquilibriumSet:
    """All threshold equilibria of the market, with stability labels.

    Harvest-rate channel: Phi is strictly decreasing, hence a unique fixed
    point, found by bisection between the best-response bounds. Expected-stock
    channel: sign changes of ``Phi(y) - y`` are collected on a log grid and
    refined one by one; several equilibria may coexist.
    """
    payoff = resolve_payoff(model, payoff, numerics=numerics)
    ev = get_evaluator(model)
    y_lo, y_hi = critical_bounds(model, payoff, numerics=numerics)
    diagnostics: dict = {"bounds": [y_lo, y_hi]}

    if payoff.interaction is Interaction.HARVEST_RATE:
        if y_hi - y_lo < numerics.fixed_point_tol:
            point = _equilibrium_point(model, payoff, 0.5 * (y_lo + y_hi), numerics=numerics)
            return EquilibriumSet(points=(point,), bounds=(y_lo, y_hi), diagnostics=diagnostics)
        psi_lo = _psi(model, payoff, y_lo, numerics=numerics)
        psi_hi = _psi(model, payoff, y_hi, numerics=numerics)
        if psi_lo < -numerics.fixed_point_tol or psi_hi > numerics.fixed_point_tol:
            raise SolverError(
                "best-response map does not map its bounds inward; "
                f"psi({y_lo})={psi_lo}, psi({y_hi})={psi_hi}"
            )
        y_star = _refine_fixed_point(
            model, payoff, y_lo, y_hi, psi_lo, psi_hi, numerics=numerics
        )
        point = _equilibrium_point(model, payoff, y_star, numerics=numerics)
        return EquilibriumSet(points=(point,), bounds=(y_lo, y_hi), diagnostics=diagnostics)

    # expected-stock channel: scan for every sign change
    y0 = model.restart_level
    y_hat0 = optimal_threshold_basic(ev, 0.0, numerics=numerics).threshold
    y_cap = _stock_scan_cap(model, payoff, y_hat0, numerics=numerics)
    grid = np.geomspace(y0 * (1.0 + 1e-3), y_cap, max(numerics.scan_points, 500))
    z_grid = np.clip(interaction_level(model, payoff, grid), *payoff.domain)
    prices = np.array([float(payoff.phi(z)) for z in z_grid])
    if np.any(prices <= 0.0):
        raise DomainError("phi must stay positive on the attainable stock range")
    phi_grid = optimal_thresholds_on_grid(ev, payoff.cost / prices, numerics=numerics)
    psi_grid = phi_grid - grid
    diagnostics["scan"] = {
        "points": len(grid),
        "cap": y_cap,
        "psi_start": float(psi_grid[0]),
        "psi_end": float(psi_grid[-1]),
    }

    roots: list[float] = []
    for i in range(len(grid) - 1):
        a, b = float(psi_grid[i]), float(psi_grid[i + 1])
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0.0:
            roots.append(
                _refine_fixed_point(
                    model, payoff, float(grid[i]), float(grid[i + 1]), a, b, numerics=numerics
                )
            )
    if psi_grid[-1] == 0.0:
        roots.append(float(grid[-1]))

    deduped: list[float] = []
    for r in sorted(roots):
        if not deduped or r - deduped[-1] > 1e-6 * max(1.0, r):
            deduped.append(r)
    if not deduped:
        diagnostics["no_equilibrium"] = (
            "psi has no sign change on the scan grid; check the assumption report"
        )
        from .diffusion import validate_assumptions

        diagnostics["assumptions"] = validate_assumptions(model).to_dict()
        return EquilibriumSet(points=(), bounds=(y_lo, y_hi), diagnostics=diagnostics)

    points = tuple(
        _equilibrium_point(model, payoff, r, numerics=numerics) for r in deduped
    )
    return EquilibriumSet(points=points, bounds=(y_lo, y_hi), diagnostics=diagnostics)


def classify_stability(
    model: DiffusionModel,
    payoff: PayoffSpec,
    y_star: float,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> tuple[str, float]:
    """Label a fixed point by |Phi'| < 1, cross-checked with five map iterations.

    Returns ``(label, slope)`` with label in {"stable", "unstable", "marginal"}.
    """
    if payoff.domain is None:
        payoff = resolve_payoff(model, payoff, numerics=numerics)
    step = 1e-3 * y_star
    up = phi_map(model, payoff, y_star + step, numerics=numerics).threshold
    down = phi_map(model, payoff, y_star - step, numerics=numerics).threshold
    slope = (up - down) / (2.0 * step)
    if abs(abs(slope) - 1.0) < 1e-3:
        return "marginal", slope
    label = "stable" if abs(slope) < 1.0 else "unstable"

    # iteration cross-check from +/-2 percent
    agrees = True
    for start in (y_star * 0.98, y_star * 1.02):
        y = start
        for _ in range(5):
            y = phi_map(model, payoff, y, numerics=numerics).threshold
        moved_closer = abs(y - y_star) < abs(start - y_star)
        if moved_closer != (label == "stable"):
            agrees = False
    if not agrees:
        # the derivative is the primary criterion; the iteration probe can be
        # polluted by a neighboring fixed point inside the 2 percent window
        return label, slope
    return label, slope


# ---------------------------------------------------------------------------
# planner problem
# ---------------------------------------------------------------------------

def mfc_optimum(
    model: DiffusionModel,
    payoff: PayoffSpec,
    *,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> MfcSolution:
    """Maximize H(y) = (gamma(y, c(y)) - K)/xi(y): grid scan + golden refinement."""
    payoff = resolve_payoff(model, payoff, numerics=numerics)
    ev = get_evaluator(model)
    y0 = model.restart_level
    y_hat0 = optimal_threshold_basic(ev, 0.0, numerics=numerics).threshold

    if payoff.interaction is Interaction.HARVEST_RATE:
        _, y_hi = critical_bounds(model, payoff, numerics=numerics)
        y_max = max(20.0 * y_hat0, 2.0 * y_hi)
    else:
        y_max = _stock_scan_cap(model, payoff, y_hat0, numerics=numerics)

    grid = np.geomspace(y0 * (1.0 + 1e-3), y_max, max(numerics.scan_points, 500))
    z_grid = np.clip(interaction_level(model, payoff, grid), *payoff.domain)
    prices = np.array([float(payoff.phi(z)) for z in z_grid])
    h_grid = (prices * (grid - y0) - payoff.cost) / np.asarray(ev.xi(grid))

    def h_scalar(y: float) -> float:
        z, _ = _clamp_to_domain(interaction_level(model, payoff, y), payoff.domain)
        return (float(payoff.phi(z)) * (y - y0) - payoff.cost) / ev.xi(y)

    def refine_around(i: int) -> tuple[float, float]:
        lo = float(grid[max(i - 1, 0)])
        hi = float(grid[min(i + 1, len(grid) - 1)])
        from .impulse import _golden_max

        y_ref, v_ref, _ = _golden_max(h_scalar, lo, hi, numerics.golden_rel_tol)
        return y_ref, v_ref

    interior = np.arange(1, len(grid) - 1)
    local_max = interior[
        (h_grid[interior] >= h_grid[interior - 1]) & (h_grid[interior] >= h_grid[interior + 1])
    ]
    if len(local_max) == 0:
        local_max = np.array([int(np.argmax(h_grid))])
    refined = sorted((refine_around(int(i)) for i in local_max), key=lambda t: -t[1])
    best_y, best_v = refined[0]
    ties = [y for y, v in refined if abs(v - best_v) <= numerics.tie_rel_tol * max(abs(best_v), 1e-12)]
    ties = sorted(set(round(t, 12) for t in ties))
    flags: list[str] = []
    if len(ties) > 1:
        flags.append("multiple maximizers within tolerance; smallest threshold reported")
        best_y = ties[0]
        best_v = h_scalar(best_y)
    if best_v <= 0.0:
        flags.append("no profitable harvest")
    z_best, _ = _clamp_to_domain(interaction_level(model, payoff, best_y), payoff.domain)
    return MfcSolution(
        threshold=best_y,
        value=best_v,
        interaction=z_best,
        ties=tuple(ties) if len(ties) > 1 else (),
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# comparison and sweeps
# ---------------------------------------------------------------------------

def compare(
    model: DiffusionModel,
    payoff: PayoffSpec,
    *,
    tolerance: float = 1e-6,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> CompareReport:
    """Solve both problems and assert the threshold ordering for the channel."""
    equilibria = mfg_equilibrium(model, payoff, numerics=numerics)
    planner = mfc_optimum(model, payoff, numerics=numerics)
    if len(equilibria) == 0:
        raise SolverError("no equilibrium found; cannot compare")
    if payoff.interaction is Interaction.HARVEST_RATE:
        margins = tuple(planner.threshold - p.threshold for p in equilibria.points)
        ordering = "planner threshold >= equilibrium threshold"
    else:
        margins = tuple(p.threshold - planner.threshold for p in equilibria.points)
        ordering = "planner threshold <= each equilibrium threshold"
    ok = all(m >= -tolerance for m in margins)
    report = CompareReport(
        equilibria=equilibria, planner=planner, margins=margins, ordering=ordering, ok=ok
    )
    if not ok:
        raise ComparisonError(
            f"threshold ordering violated: {ordering}, margins {margins}"
        )
    return report


@dataclass(frozen=True)
class SweepRow:
    q: float
    b: float
    cost: float
    equilibrium_thresholds: tuple[float, ...]
    equilibrium_values: tuple[float, ...]
    planner_threshold: float
    planner_value: float
    margin: float              # worst-case signed ordering margin
    ok: bool

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "b": self.b,
            "K": self.cost,
            "equilibrium_thresholds": list(self.equilibrium_thresholds),
            "equilibrium_values": list(self.equilibrium_values),
            "planner_threshold": self.planner_threshold,
            "planner_value": self.planner_value,
            "margin": self.margin,
            "ok": self.ok,
        }


def ordering_sweep(
    interaction: Interaction,
    n_draws: int = 100,
    *,
    seed: int = 2024,
    phi: Optional[Callable[[float], float]] = None,
    phi_source: str = "1/(1+z)",
    tolerance: float = 1e-6,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> list[SweepRow]:
    """Randomized logistic scenarios; checks the ordering in every draw.

    Draws q in (-2, -0.2), b in (0.2, 1), K in (0.5, 2) with beta = 1 and
    y0 = 1, mirroring the ergodic parameter region.
    """
    rng = np.random.default_rng(seed)
    rows: list[SweepRow] = []
    price = phi if phi is not None else (lambda z: 1.0 / (1.0 + z))
    for _ in range(n_draws):
        q = rng.uniform(-2.0, -0.2)
        b = rng.uniform(0.2, 1.0)
        cost = rng.uniform(0.5, 2.0)
        model = logistic_model(q=q, b=b, beta=1.0, y0=1.0)
        payoff = PayoffSpec(cost=cost, phi=price, interaction=interaction, phi_source=phi_source)
        try:
            report = compare(model, payoff, tolerance=tolerance, numerics=numerics)
            margin = min(report.margins)
            ok = report.ok
            eq_t = tuple(p.threshold for p in report.equilibria.points)
            eq_v = tuple(p.value for p in report.equilibria.points)
            planner = report.planner
        except ComparisonError as exc:
            raise ComparisonError(f"draw (q={q}, b={b}, K={cost}): {exc}") from exc
        rows.append(
            SweepRow(
                q=q,
                b=b,
                cost=cost,
                equilibrium_thresholds=eq_t,
                equilibrium_values=eq_v,
                planner_threshold=planner.threshold,
                planner_value=planner.value,
                margin=margin,
                ok=ok,
            )
        )
    return rows
