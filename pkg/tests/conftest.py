import numpy as np
import pytest
from hypothesis import settings

from hessim.dispatch import ScenarioPolicy, default_specs, simulate_horizon
from hessim.profiles import MINUTES_PER_YEAR, MinuteSeries, synthetic_year

settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def sample_profiles():
    return synthetic_year("pv"), synthetic_year("load")


@pytest.fixture(scope="session")
def zero_profiles():
    zeros = np.zeros(MINUTES_PER_YEAR)
    return MinuteSeries(zeros, "pv"), MinuteSeries(zeros, "load")


@pytest.fixture
def specs():
    return default_specs()


@pytest.fixture(scope="session")
def one_year():
    """Cached 1-year runs on the sample profiles, keyed by scenario id."""
    cache = {}
    profiles = synthetic_year("pv"), synthetic_year("load")

    def run(scenario="s1_fixed_split", **policy_kw):
        key = (scenario, tuple(sorted(policy_kw.items())))
        if key not in cache:
            ledgers, states = simulate_horizon(ScenarioPolicy(id=scenario, **policy_kw), default_specs(),
                                               profiles, years=1)
            cache[key] = ledgers[0], states
        return cache[key]

    return run


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
