import os
import random

from hypothesis import HealthCheck, settings

from emrange.emstore import BlockStore, StoreConfig
from emrange.geometry import Point

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_store(B=16, M=16) -> BlockStore:
    return BlockStore(StoreConfig(B, M))


def random_points(n, seed=0, span=1 << 20, id0=0):
    rng = random.Random(seed)
    return [Point(rng.randrange(span), rng.randrange(span), id0 + i) for i in range(n)]


def random_box(rng, span=1 << 20):
    a, b = sorted(rng.randrange(span) for _ in range(2))
    c, d = sorted(rng.randrange(span) for _ in range(2))
    return a, b, c, d


# one line per acceptance criterion, printed together after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
