import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from danet.ecg_io import SynthParams, synth_record

settings.register_profile("danet", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("danet")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def clean_record():
    return synth_record(SynthParams(seed=7, rr_jitter=0.0))


@pytest.fixture(scope="session")
def benchmark_result():
    """The full synthetic benchmark, shared by the ordering and pre-training criteria."""
    from danet.benchmark import BenchmarkConfig, run_benchmark

    return run_benchmark(BenchmarkConfig())


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
