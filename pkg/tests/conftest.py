import random

import pytest
from hypothesis import settings

from sitad import Database, Descriptor

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")


def random_descriptor(rng: random.Random, dim: int, max_weight: int, max_entries: int | None = None) -> Descriptor:
    k = rng.randint(1, max_entries or dim)
    dims = sorted(rng.sample(range(1, dim + 1), min(k, dim)))
    return Descriptor(tuple((d, rng.randint(1, max_weight)) for d in dims))


def random_records(rng: random.Random, n: int, dim: int, max_weight: int, max_entries: int | None = None):
    """``n`` descriptors with distinct shuffled ids; some copies so blocks repeat."""
    descs = []
    for _ in range(n):
        if descs and rng.random() < 0.25:
            descs.append(rng.choice(descs))
        else:
            descs.append(random_descriptor(rng, dim, max_weight, max_entries))
    ids = rng.sample(range(1, 10 * n + 1), n)
    return list(zip(ids, descs))


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def worked_block():
    """Eight descriptors of squared norm 10 laid out like the worked example.

    Root runs: dimension 1 at [1, 2] with weights 3, 1; dimension 3 at
    [7, 9] holding positions 1, 6, 8 with weights 1, 1, 3; dimension 4 at
    [10, 12] with weights 3, 2, 3.
    """
    rows = [
        [(3, 1), (5, 3)],
        [(1, 3), (6, 1)],
        [(1, 1), (2, 3)],
        [(2, 1), (4, 3)],
        [(2, 1), (4, 2), (7, 2), (8, 1)],
        [(3, 1), (9, 3)],
        [(4, 3), (10, 1)],
        [(2, 1), (3, 3)],
    ]
    return Database.from_records([(i + 1, Descriptor(tuple(r))) for i, r in enumerate(rows)])


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        detail = self.detail if ok else f"{self.detail} {exc_type.__name__}: {exc}".strip()
        ACCEPTANCE[self.number] = (self.title, ok, detail)
        print(f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  {self.title}  {detail}")
        return False


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c:`` records a pass/fail line for the summary."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}  {detail}")
