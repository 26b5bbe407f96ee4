import functools

import pytest

from gridcast.pipeline import train_pipeline
from gridcast.synth import SyntheticSpec, generate


@functools.lru_cache(maxsize=None)
def synthetic(days=850, seed=0):
    return generate(SyntheticSpec(days=days, seed=seed))


@functools.lru_cache(maxsize=None)
def trained_run(seed=0, restarts=5):
    from gridcast.mlp import ElmConfig

    ds, _ = synthetic(850, seed)
    return train_pipeline(ds, ElmConfig(seed=seed, restarts=restarts))


@pytest.fixture(scope="session")
def small_dataset():
    return synthetic(120, 7)[0]


@pytest.fixture(scope="session")
def run0():
    return trained_run(0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
