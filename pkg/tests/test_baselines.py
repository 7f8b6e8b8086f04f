import random
from fractions import Fraction

import pytest
from conftest import random_records
from hypothesis import given
from hypothesis import strategies as st

from sitad import (
    Database,
    Descriptor,
    EmptyDescriptorError,
    inv_build,
    inv_search,
    ova_search,
)
from sitad.baselines import ova_search_records


def test_postings_example():
    db = Database.from_records([
        (1, Descriptor(((1, 3), (3, 1)))),
        (2, Descriptor(((1, 1), (2, 5)))),
        (3, Descriptor(((3, 2),))),
    ])
    inv = inv_build(db)
    assert inv.postings(1) == [(1, 3), (2, 1)]
    assert inv.postings(3) == [(1, 1), (3, 2)]
    assert inv.postings(4) == [] and inv.postings(0) == []
    assert len(inv) == 5 and inv.nbytes() > 0


def test_exact_values_and_order():
    db = Database.from_records([
        (4, Descriptor(((1, 2),))),
        (2, Descriptor(((1, 1),))),
        (9, Descriptor(((1, 1), (2, 1)))),
    ])
    q = Descriptor(((1, 1),))
    hits = ova_search(db, q, "0.5")
    assert [(h.id, h.similarity) for h in hits] == [(2, 1), (4, Fraction(2, 3)), (9, Fraction(1, 2))]
    assert inv_search(inv_build(db), q, "0.5") == hits
    assert ova_search(db, q, "0.5001")[-1].id == 4


def test_query_outside_dimension():
    db = Database.from_records([(1, Descriptor(((1, 1),)))])
    assert inv_search(inv_build(db), Descriptor(((7, 1),)), "0.1") == []
    assert ova_search(db, Descriptor(((7, 1),)), "0.1") == []


def test_empty_query():
    db = Database.from_records([(1, Descriptor(((1, 1),)))])
    with pytest.raises(EmptyDescriptorError):
        ova_search(db, Descriptor(), "0.5")
    with pytest.raises(EmptyDescriptorError):
        inv_search(inv_build(db), Descriptor(), "0.5")


@given(st.integers(0, 2**31), st.sampled_from(["0.3", "0.5", "0.9", "0.95", "0.98", "1"]))
def test_engines_agree_with_python_oracle(seed, eps):
    rng = random.Random(seed)
    recs = random_records(rng, rng.randint(1, 60), rng.randint(2, 16), rng.randint(1, 10))
    db = Database.from_records(recs)
    inv = inv_build(db)
    q = rng.choice(recs)[1] if rng.random() < 0.7 else random_records(rng, 1, 16, 10)[0][1]
    expect = ova_search_records(recs, q, eps)
    assert ova_search(db, q, eps) == expect
    assert inv_search(inv, q, eps) == expect
