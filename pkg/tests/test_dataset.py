import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turnout.dataset import (
    DataError,
    Dataset,
    Record,
    decode_inputs,
    dedupe,
    dumps_csv,
    encode,
    load_csv,
    scale_id,
    split,
    split_sizes,
)
from turnout.schema import default_schema

SCHEMA = default_schema()
HEADER = ",".join(SCHEMA.columns)


def csv_bytes(*rows):
    return ("\n".join([HEADER, *(",".join(map(str, r)) for r in rows)]) + "\n").encode()


def test_load_csv_row():
    ds = load_csv(io.BytesIO(csv_bytes([3, 1, 1, 1, 1, 1, 1, 1, 1, 1])), SCHEMA)
    rec = ds.records[0]
    assert rec.feature_ids[0] == 3 and SCHEMA.features[0].label(3) == "Young"
    assert rec.target_id == 1 and SCHEMA.target.label(1) == "Partnership"


def test_load_csv_column_order_by_name():
    cols = SCHEMA.columns[::-1]
    body = ",".join(cols) + "\n" + ",".join(["2"] + ["1"] * 9) + "\n"
    ds = load_csv(body.encode(), SCHEMA)
    assert ds.records[0].target_id == 2
    assert ds.records[0].feature_ids == (1,) * 9


def test_load_csv_header_only():
    assert len(load_csv(csv_bytes(), SCHEMA)) == 0


def test_load_csv_out_of_range_names_row_and_column():
    with pytest.raises(DataError) as info:
        load_csv(csv_bytes([1] * 10, [5, 1, 1, 1, 1, 1, 1, 1, 1, 1]), SCHEMA)
    msg = str(info.value)
    assert "row 3" in msg and "Age of people" in msg and "5" in msg


@pytest.mark.parametrize(
    "body, needle",
    [
        (b"", "empty"),
        ("Age of people\n1\n".encode(), "missing columns"),
        ((HEADER + ",bogus\n").encode(), "unexpected columns"),
        ((HEADER + "\n" + ",".join(["x"] * 10) + "\n").encode(), "not an integer"),
        ((HEADER + "\n1,1\n").encode(), "expected 10 cells"),
    ],
)
def test_load_csv_errors(body, needle):
    with pytest.raises(DataError, match=needle):
        load_csv(body, SCHEMA)


def test_csv_round_trip():
    rows = [[1, 2, 3, 1, 4, 2, 3, 1, 2, 3], [3, 4, 1, 2, 1, 3, 2, 2, 1, 1]]
    ds = load_csv(csv_bytes(*rows), SCHEMA)
    assert load_csv(dumps_csv(ds).encode(), SCHEMA) == ds


def rec(*ids):
    return Record(tuple(ids[:-1]), ids[-1])


def test_dedupe_pair_and_target_difference():
    a = rec(1, 1, 1, 1, 1, 1, 1, 1, 1, 1)
    b = rec(1, 1, 1, 1, 1, 1, 1, 1, 1, 2)
    assert dedupe(Dataset(SCHEMA, (a, a))).records == (a,)
    assert dedupe(Dataset(SCHEMA, (a, b))).records == (a, b)


def random_dataset(rng, n, pool=None):
    sizes = [f.size for f in SCHEMA.features] + [SCHEMA.n_classes]
    recs = [rec(*(int(rng.integers(1, k + 1)) for k in sizes)) for _ in range(pool or n)]
    if pool:
        recs = [recs[int(i)] for i in rng.integers(0, pool, n)]
    return Dataset(SCHEMA, tuple(recs))


def test_dedupe_against_pairwise_oracle():
    rng = np.random.default_rng(3)
    ds = random_dataset(rng, 100, pool=40)
    keep = [r for i, r in enumerate(ds.records) if all(r != ds.records[j] for j in range(i))]
    assert dedupe(ds).records == tuple(keep)
    distinct = Dataset(SCHEMA, tuple(keep))
    assert dedupe(distinct).records == distinct.records


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_dedupe_idempotent(seed, n):
    ds = random_dataset(np.random.default_rng(seed), n, pool=max(1, n // 3))
    once = dedupe(ds)
    assert dedupe(once) == once


def test_encode_examples():
    assert scale_id(1, 3) == -1.0 and scale_id(2, 3) == 0.0 and scale_id(3, 3) == 1.0
    # -1 + 2*(3-1)/(4-1) = 1/3
    assert scale_id(3, 4) == pytest.approx(1.0 / 3.0, abs=1e-15)
    ds = Dataset(SCHEMA, (rec(1, 3, 1, 1, 1, 1, 1, 1, 1, 2),))
    enc = encode(ds)
    assert enc.inputs[0, 0] == -1.0
    assert enc.inputs[0, 1] == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert enc.targets[0].tolist() == [0.0, 1.0, 0.0]


def test_encode_rejects_empty():
    with pytest.raises(DataError):
        encode(Dataset(SCHEMA, ()))


def test_encode_decode_exact_for_all_ids():
    rng = np.random.default_rng(0)
    ds = random_dataset(rng, 300)
    enc = encode(ds)
    assert np.array_equal(decode_inputs(enc.inputs, SCHEMA), [r.feature_ids for r in ds.records])
    assert np.all(enc.targets.sum(axis=1) == 1.0)
    assert enc.inputs.min() >= -1.0 and enc.inputs.max() <= 1.0
    for f_idx, f in enumerate(SCHEMA.features):
        for cid in range(1, f.size + 1):
            assert decode_inputs(np.full((1, 9), scale_id(cid, f.size)), SCHEMA)[0, f_idx] == cid


def test_split_table_sizes():
    for seed in range(50):
        assert split(100, (0.70, 0.15, 0.15), seed).sizes == (70, 15, 15)
    assert split(3, (1 / 3, 1 / 3, 1 / 3), 0).sizes == (1, 1, 1)


def test_split_deterministic_and_seed_sensitive():
    assert split(100, seed=5) == split(100, seed=5)
    assert split(100, seed=5) != split(100, seed=6)


def test_split_largest_remainder_ties_go_first():
    # 10 * (0.45, 0.45, 0.1) -> 4.5, 4.5, 1.0 : one spare seat, tie broken toward train
    assert split_sizes(10, (0.45, 0.45, 0.1)) == (5, 4, 1)
    # 3.5, 1.75, 1.75 -> floors 3,1,1; two spare seats go to the .75 remainders
    assert split_sizes(7, (0.5, 0.25, 0.25)) == (3, 2, 2)


def test_split_exhaustive_coverage():
    for n in range(3, 51):
        for seed in range(100):
            s = split(n, (0.70, 0.15, 0.15), seed)
            parts = [set(s.train), set(s.validation), set(s.test)]
            assert sum(map(len, parts)) == n
            assert set().union(*parts) == set(range(n))


@pytest.mark.parametrize(
    "n, fractions",
    [(2, (0.7, 0.15, 0.15)), (10, (0.5, 0.5, 0.0)), (10, (0.5, 0.3, 0.3)), (10, (0.5, 0.5))],
)
def test_split_errors(n, fractions):
    with pytest.raises(ValueError):
        split(n, fractions, 0)
