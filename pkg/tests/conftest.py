import pytest

from harvestfield.diffusion import custom_model, logistic_model
from harvestfield.hitting import XiEvaluator
from harvestfield.payoff import Interaction, PayoffSpec


@pytest.fixture(scope="session")
def benchmark_model():
    """Logistic diffusion used throughout: q=-1, b=1/2, beta=1, y0=1."""
    return logistic_model(q=-1.0, b=0.5, beta=1.0, y0=1.0)


@pytest.fixture(scope="session")
def benchmark_evaluator(benchmark_model):
    return XiEvaluator(benchmark_model)


@pytest.fixture(scope="session")
def quadrature_twin():
    """Same coefficients as the benchmark, but without the analytic tag.

    Forces every quantity through the generic quadrature route, giving an
    independent second path for closed-form comparisons.
    """
    return custom_model(
        drift=lambda x: x * (1.5 - 0.5 * x),
        volatility=lambda x: x,
        y0=1.0,
        drift_source="x*(1.5 - 0.5*x)",
        vol_source="x",
    )


@pytest.fixture(scope="session")
def rate_payoff():
    """Price 1/(1+z) against the average harvesting rate (unique equilibrium)."""
    return PayoffSpec(
        cost=1.0,
        phi=lambda z: 1.0 / (1.0 + z),
        interaction=Interaction.HARVEST_RATE,
        phi_source="1/(z+1)",
    )


@pytest.fixture(scope="session")
def stock_payoff():
    """Sharp sigmoid price against the expected standing stock."""
    import numpy as np

    return PayoffSpec(
        cost=1.0,
        phi=lambda z: 1.0 / (1.0 + np.exp(10.0 * (z - 1.9))),
        interaction=Interaction.EXPECTED_STOCK,
        phi_source="1/(1+exp(10*(z-1.9)))",
    )
