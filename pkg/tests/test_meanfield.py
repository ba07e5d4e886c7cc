import numpy as np
import pytest
from helpers import central_diff

from harvestfield.diffusion import logistic_model
from harvestfield.errors import DomainError
from harvestfield.impulse import max_harvest_rate, optimal_threshold_basic
from harvestfield.meanfield import (
    classify_stability,
    compare,
    interaction_level,
    mfc_optimum,
    mfg_equilibrium,
    ordering_sweep,
    phi_map,
    resolve_payoff,
)
from harvestfield.payoff import Interaction, PayoffSpec


def flat_payoff(kind=Interaction.HARVEST_RATE, price=0.7, cost=1.0):
    return PayoffSpec(cost=cost, phi=lambda z: price, interaction=kind, phi_source=str(price))


# ---------------------------------------------------------------------------
# payoff resolution and the interaction channel
# ---------------------------------------------------------------------------

def test_resolve_rate_domain(benchmark_model, rate_payoff):
    payoff = resolve_payoff(benchmark_model, rate_payoff)
    lo, hi = payoff.domain
    assert lo == 0.0
    assert hi == pytest.approx(max_harvest_rate(benchmark_model), rel=1e-12)


def test_resolve_stock_domain(benchmark_model, stock_payoff):
    payoff = resolve_payoff(benchmark_model, stock_payoff)
    lo, hi = payoff.domain
    assert lo == pytest.approx(0.6077888088226672, rel=1e-9)
    assert hi == pytest.approx(2.0, rel=1e-12)


def test_resolve_rejects_increasing_price(benchmark_model):
    bad = PayoffSpec(cost=1.0, phi=lambda z: 1.0 + z, interaction=Interaction.HARVEST_RATE)
    with pytest.raises(DomainError):
        resolve_payoff(benchmark_model, bad)


def test_resolve_rejects_nonpositive_price(benchmark_model):
    bad = PayoffSpec(cost=1.0, phi=lambda z: z - 10.0, interaction=Interaction.HARVEST_RATE)
    with pytest.raises(DomainError):
        resolve_payoff(benchmark_model, bad)


def test_rate_interaction_decreasing_past_single_agent_threshold(benchmark_model, rate_payoff):
    y_hat0 = optimal_threshold_basic(benchmark_model, 0.0).threshold
    ys = np.linspace(y_hat0, 5.0 * y_hat0, 50)
    rates = interaction_level(benchmark_model, rate_payoff, ys)
    assert np.all(np.diff(rates) < 0.0)
    assert rates[0] == pytest.approx(max_harvest_rate(benchmark_model), rel=1e-6)


def test_stock_interaction_increasing(benchmark_model, stock_payoff):
    ys = np.geomspace(1.1, 20.0, 40)
    stocks = interaction_level(benchmark_model, stock_payoff, ys)
    assert np.all(np.diff(stocks) > 0.0)


# ---------------------------------------------------------------------------
# the best-response composition Phi
# ---------------------------------------------------------------------------

def test_phi_map_constant_price_is_constant(benchmark_model):
    payoff = resolve_payoff(benchmark_model, flat_payoff())
    values = [phi_map(benchmark_model, payoff, y).threshold for y in (4.6, 5.5, 7.0)]
    assert max(values) - min(values) < 1e-10
    single = optimal_threshold_basic(benchmark_model, 1.0 / 0.7).threshold
    assert values[0] == pytest.approx(single, rel=1e-9)


def test_phi_map_decreasing_for_rate_channel(benchmark_model, rate_payoff):
    payoff = resolve_payoff(benchmark_model, rate_payoff)
    lo, hi = 4.6, 5.2
    ys = np.linspace(lo, hi, 7)
    phis = [phi_map(benchmark_model, payoff, float(y)).threshold for y in ys]
    assert all(a > b for a, b in zip(phis, phis[1:]))


def test_phi_map_nondecreasing_for_stock_channel(benchmark_model, stock_payoff):
    payoff = resolve_payoff(benchmark_model, stock_payoff)
    ys = np.geomspace(1.5, 20.0, 8)
    phis = [phi_map(benchmark_model, payoff, float(y)).threshold for y in ys]
    assert all(b >= a - 1e-9 for a, b in zip(phis, phis[1:]))


def test_phi_map_fixed_point_at_equilibrium(benchmark_model, rate_payoff):
    payoff = resolve_payoff(benchmark_model, rate_payoff)
    assert phi_map(benchmark_model, payoff, 5.1308431).threshold == pytest.approx(
        5.1308431, abs=1e-4
    )


def test_phi_map_flags_clamped_interaction(benchmark_model, rate_payoff):
    # artificially narrow domain forces the clamp diagnostic
    payoff = resolve_payoff(benchmark_model, rate_payoff).with_domain(0.0, 0.2)
    sol = phi_map(benchmark_model, payoff, 5.0)  # c(5.0) ~ 0.72 > 0.2
    assert "interaction level clamped to domain" in sol.flags


# ---------------------------------------------------------------------------
# equilibria
# ---------------------------------------------------------------------------

def test_unique_equilibrium_rate_channel(benchmark_model, rate_payoff):
    eq = mfg_equilibrium(benchmark_model, rate_payoff)
    assert len(eq) == 1
    point = eq.points[0]
    assert point.threshold == pytest.approx(5.13, abs=0.05)
    assert point.value == pytest.approx(0.243, abs=0.003)
    assert point.residual < 1e-7 * point.threshold
    y_lo, y_hi = eq.bounds
    assert y_lo <= point.threshold <= y_hi
    assert point.stability == "stable"
    assert point.map_slope < 0.0  # Phi is decreasing under this channel


def test_constant_price_equilibrium_is_single_agent(benchmark_model):
    eq = mfg_equilibrium(benchmark_model, flat_payoff())
    single = optimal_threshold_basic(benchmark_model, 1.0 / 0.7)
    assert len(eq) == 1
    assert eq.points[0].threshold == pytest.approx(single.threshold, rel=1e-7)
    assert eq.points[0].value == pytest.approx(0.7 * single.value, rel=1e-6)


def test_stock_channel_equilibria_are_fixed_points(benchmark_model, stock_payoff):
    eq = mfg_equilibrium(benchmark_model, stock_payoff)
    payoff = resolve_payoff(benchmark_model, stock_payoff)
    assert len(eq) >= 1
    for point in eq.points:
        assert point.residual < 1e-7 * point.threshold
        assert eq.bounds[0] - 1e-6 <= point.threshold <= eq.bounds[1] + 1e-6
        again = phi_map(benchmark_model, payoff, point.threshold).threshold
        assert again == pytest.approx(point.threshold, abs=1e-5)
    assert list(eq.thresholds) == sorted(eq.thresholds)


def test_mild_stock_price_has_unique_equilibrium(benchmark_model):
    payoff = PayoffSpec(
        cost=1.0,
        phi=lambda z: 1.0 / (1.0 + z),
        interaction=Interaction.EXPECTED_STOCK,
        phi_source="1/(1+z)",
    )
    eq = mfg_equilibrium(benchmark_model, payoff)
    assert len(eq) == 1
    assert eq.points[0].residual < 1e-7 * eq.points[0].threshold


def test_classify_stability_constant_price(benchmark_model):
    payoff = resolve_payoff(benchmark_model, flat_payoff())
    eq = mfg_equilibrium(benchmark_model, payoff)
    label, slope = classify_stability(benchmark_model, payoff, eq.points[0].threshold)
    assert label == "stable"
    assert abs(slope) < 1e-6


@pytest.mark.parametrize(
    "slope, expected",
    [(0.5, "stable"), (-0.8, "stable"), (2.0, "unstable"), (-1.6, "unstable")],
)
def test_classify_stability_by_map_slope(benchmark_model, rate_payoff, monkeypatch, slope, expected):
    # contract check against synthetic best-response maps of known slope
    import harvestfield.meanfield as mf
    from harvestfield.impulse import ThresholdSolution

    payoff = resolve_payoff(benchmark_model, rate_payoff)
    y_star = 5.0

    def fake_phi_map(model, pay, y, *, numerics=None):
        return ThresholdSolution(
            threshold=y_star + slope * (y - y_star),
            value=1.0,
            residual=0.0,
            bracket=(0.0, 0.0),
            iterations=0,
        )

    monkeypatch.setattr(mf, "phi_map", fake_phi_map)
    label, measured = classify_stability(benchmark_model, payoff, y_star)
    assert label == expected
    assert measured == pytest.approx(slope, rel=1e-6)


def test_classify_stability_rate_equilibrium(benchmark_model, rate_payoff):
    payoff = resolve_payoff(benchmark_model, rate_payoff)
    eq = mfg_equilibrium(benchmark_model, payoff)
    label, slope = classify_stability(benchmark_model, payoff, eq.points[0].threshold)
    assert slope < 0.0
    assert label == "stable"


# ---------------------------------------------------------------------------
# planner optimum and comparison
# ---------------------------------------------------------------------------

def test_planner_benchmark_values(benchmark_model, rate_payoff):
    sol = mfc_optimum(benchmark_model, rate_payoff)
    assert sol.threshold == pytest.approx(5.9, abs=0.1)
    assert sol.value == pytest.approx(0.254, abs=0.003)
    assert not sol.ties


def test_planner_constant_price_matches_single_agent(benchmark_model):
    sol = mfc_optimum(benchmark_model, flat_payoff())
    single = optimal_threshold_basic(benchmark_model, 1.0 / 0.7)
    assert sol.threshold == pytest.approx(single.threshold, rel=1e-6)
    assert sol.value == pytest.approx(0.7 * single.value, rel=1e-8)


def test_planner_value_dominates_equilibrium(benchmark_model, rate_payoff):
    eq = mfg_equilibrium(benchmark_model, rate_payoff)
    sol = mfc_optimum(benchmark_model, rate_payoff)
    assert sol.value >= eq.points[0].value - 1e-12


def test_planner_first_order_condition(benchmark_model, benchmark_evaluator, rate_payoff):
    # d/dy H(y) = 0 at the planner optimum (total-derivative route)
    payoff = resolve_payoff(benchmark_model, rate_payoff)
    sol = mfc_optimum(benchmark_model, payoff)

    def H(y):
        z = interaction_level(benchmark_model, payoff, y)
        return (payoff.phi(z) * (y - 1.0) - 1.0) / benchmark_evaluator.xi(y)

    slope = central_diff(H, sol.threshold, 1e-5 * sol.threshold)
    curvature_scale = abs(H(sol.threshold)) / sol.threshold
    assert abs(slope) < 1e-4 * max(curvature_scale, 1e-3)


def test_equilibrium_partial_condition(benchmark_model, benchmark_evaluator, rate_payoff):
    # the equilibrium solves the partial-derivative condition of the
    # two-variable reward surface (fixed-point route equivalence)
    payoff = resolve_payoff(benchmark_model, rate_payoff)
    eq = mfg_equilibrium(benchmark_model, payoff).points[0]
    z = eq.interaction

    def section(x1):
        return (payoff.phi(z) * (x1 - 1.0) - 1.0) / benchmark_evaluator.xi(x1)

    slope = central_diff(section, eq.threshold, 1e-5 * eq.threshold)
    assert abs(slope) < 1e-6


def test_compare_rate_channel(benchmark_model, rate_payoff):
    report = compare(benchmark_model, rate_payoff)
    assert report.ok
    assert all(m >= -1e-6 for m in report.margins)
    assert report.planner.threshold >= report.equilibria.points[0].threshold


def test_compare_constant_price_is_tight(benchmark_model):
    report = compare(benchmark_model, flat_payoff())
    assert report.ok
    assert report.margins[0] == pytest.approx(0.0, abs=1e-5)


def test_compare_stock_channel_reversed(benchmark_model):
    payoff = PayoffSpec(
        cost=1.0,
        phi=lambda z: 1.0 / (1.0 + z),
        interaction=Interaction.EXPECTED_STOCK,
        phi_source="1/(1+z)",
    )
    report = compare(benchmark_model, payoff)
    assert report.ok
    for point in report.equilibria.points:
        assert report.planner.threshold <= point.threshold + 1e-6


def test_ordering_sweep_smoke():
    rows = ordering_sweep(Interaction.HARVEST_RATE, 6, seed=7)
    assert len(rows) == 6
    assert all(row.ok for row in rows)
    assert all(row.margin >= -1e-6 for row in rows)
    rows_stock = ordering_sweep(Interaction.EXPECTED_STOCK, 3, seed=11)
    assert all(row.ok for row in rows_stock)


def test_sweep_is_deterministic():
    a = ordering_sweep(Interaction.HARVEST_RATE, 3, seed=5)
    b = ordering_sweep(Interaction.HARVEST_RATE, 3, seed=5)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_concurrent_evaluation_matches_serial(benchmark_model, rate_payoff):
    # solves are pure and caches are copy-on-write: hammering the same model
    # from several threads must reproduce the serial answers exactly
    from concurrent.futures import ThreadPoolExecutor

    from harvestfield.hitting import XiEvaluator
    from harvestfield.stationary import expected_stock

    fresh = logistic_model(q=-1.0, b=0.5, beta=1.0, y0=1.0)
    ev = XiEvaluator(fresh)
    ys = list(np.linspace(1.1, 9.0, 40)) * 4

    def work(y):
        return ev.xi(y), ev.xi_prime(y), expected_stock(fresh, y)

    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(work, ys))
    serial = [work(y) for y in ys]
    for got, want in zip(results, serial):
        assert got == pytest.approx(want, rel=1e-12)
