import io

import numpy as np

from sitad import read_database, write_database
from sitad.synth import generate, sample_queries


def test_shape_and_ranges():
    db = generate(1000, 500, 5, 10, seed=1)
    assert len(db) == 1000 and db.ids.tolist() == list(range(1, 1001))
    assert db.indices.min() >= 1 and db.indices.max() <= 500
    assert db.weights.min() >= 1 and db.weights.max() <= 5
    assert abs(db.counts.mean() - 10) <= 1.0
    for r in range(0, 1000, 97):
        x = db[r]
        assert list(x.indices) == sorted(set(x.indices))


def test_deterministic_text():
    def text(seed):
        buf = io.StringIO()
        write_database(generate(300, 50, 4, 6, seed=seed, skew=1.0), buf)
        return buf.getvalue()

    assert text(3) == text(3)
    assert text(3) != text(4)


def test_empty_and_round_trip():
    assert len(generate(0, 10, 3, 2)) == 0
    db = generate(200, 40, 3, 5, seed=2)
    buf = io.StringIO()
    write_database(db, buf)
    back = read_database(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.indices, db.indices) and np.array_equal(back.weights, db.weights)


def test_near_duplicates_make_high_threshold_neighbours():
    from sitad import build_index

    db = generate(2000, 300, 5, 12, seed=0, dup_fraction=0.3)
    index = build_index(db)
    queries = sample_queries(db, 100, seed=0)
    with_neighbour = sum(len(index.search(queries[r], "0.8")[0]) > 1 for r in range(len(queries)))
    assert with_neighbour >= 10


def test_skew_concentrates_low_indices():
    flat = generate(2000, 200, 3, 8, seed=0, skew=0.0)
    skewed = generate(2000, 200, 3, 8, seed=0, skew=1.2)
    assert (skewed.indices <= 20).mean() > 2 * (flat.indices <= 20).mean()


def test_sample_queries():
    db = generate(50, 20, 3, 4, seed=0)
    q = sample_queries(db, 10, seed=5)
    assert len(q) == 10 and len(set(q.ids.tolist())) == 10
    assert len(sample_queries(db, 500)) == 50
