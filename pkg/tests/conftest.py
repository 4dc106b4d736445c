import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vrigid.function_model import Expression, FunctionSpec

settings.register_profile("vrigid", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("vrigid")


def expr_spec(text: str, rotation: float = 0.0) -> FunctionSpec:
    return FunctionSpec(Expression.parse(text), rotation)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criterion number -> PASS/FAIL line, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
