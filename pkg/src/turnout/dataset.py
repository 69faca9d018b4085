"""Survey records: CSV ingestion, deduplication, numeric encoding and splitting."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .schema import FeatureSchema


class DataError(ValueError):
    """Input records do not conform to the schema."""


@dataclass(frozen=True)
class Record:
    feature_ids: tuple[int, ...]
    target_id: int


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    records: tuple[Record, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for i, rec in enumerate(self.records):
            _check_record(self.schema, rec, i)

    def __len__(self):
        return len(self.records)

    def class_counts(self) -> list[int]:
        counts = [0] * self.schema.n_classes
        for rec in self.records:
            counts[rec.target_id - 1] += 1
        return counts


def _check_record(schema: FeatureSchema, rec: Record, index: int):
    if len(rec.feature_ids) != schema.n_features:
        raise DataError(
            f"record {index}: expected {schema.n_features} feature ids, got {len(rec.feature_ids)}"
        )
    for feat, cid in zip(schema.features + (schema.target,), rec.feature_ids + (rec.target_id,)):
        if not isinstance(cid, (int, np.integer)) or not 1 <= cid <= feat.size:
            raise DataError(f"record {index}: {feat.name!r} id {cid!r} outside 1..{feat.size}")


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Scaled inputs in [-1, 1] and one-hot targets, one row per record."""

    inputs: np.ndarray
    targets: np.ndarray
    class_count: int

    def __post_init__(self):
        x = np.array(self.inputs, dtype=np.float64, order="C")
        t = np.array(self.targets, dtype=np.float64, order="C")
        if x.ndim != 2 or t.ndim != 2 or x.shape[0] != t.shape[0]:
            raise ValueError(f"inputs {x.shape} and targets {t.shape} must be 2-D with equal rows")
        if t.shape[1] != self.class_count:
            raise ValueError(f"targets have {t.shape[1]} columns, class_count is {self.class_count}")
        x.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", t)

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.targets, axis=1)

    def subset(self, indices) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(indices, dtype=np.intp)
        return self.inputs[idx], self.targets[idx]


@dataclass(frozen=True)
class SplitIndices:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)


# -- CSV -----------------------------------------------------------------


def load_csv(source, schema: FeatureSchema) -> Dataset:
    """Read records from UTF-8 CSV bytes (a binary stream or ``bytes``).

    Columns are matched to schema features by exact header name; rows keep
    their file order. Errors name the file line, the column and the value.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    text = io.TextIOWrapper(source, encoding="utf-8-sig", newline="")
    try:
        reader = csv.reader(text)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("CSV is empty (no header row)") from None
        expected = schema.columns
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        if missing or extra or len(header) != len(set(header)):
            parts = []
            if missing:
                parts.append(f"missing columns {missing}")
            if extra:
                parts.append(f"unexpected columns {extra}")
            if len(header) != len(set(header)):
                parts.append("repeated column names")
            raise DataError("CSV header: " + "; ".join(parts))
        order = [header.index(c) for c in expected]
        defs = schema.features + (schema.target,)
        records = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"row {line_no}: expected {len(header)} cells, got {len(row)}")
            ids = []
            for col, feat in zip(order, defs):
                cell = row[col].strip()
                try:
                    cid = int(cell)
                except ValueError:
                    raise DataError(f"row {line_no}, column {feat.name!r}: {cell!r} is not an integer") from None
                if not 1 <= cid <= feat.size:
                    raise DataError(
                        f"row {line_no}, column {feat.name!r}: value {cid} outside valid ids 1..{feat.size}"
                    )
                ids.append(cid)
            records.append(Record(tuple(ids[:-1]), ids[-1]))
    finally:
        text.detach()
    return Dataset(schema, tuple(records))


def dumps_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(dataset.schema.columns)
    for rec in dataset.records:
        writer.writerow(rec.feature_ids + (rec.target_id,))
    return buf.getvalue()


# -- transforms ----------------------------------------------------------


def dedupe(dataset: Dataset) -> Dataset:
    """Drop exact duplicate records, keeping first occurrences in order."""
    seen = set()
    kept = []
    for rec in dataset.records:
        if rec not in seen:
            seen.add(rec)
            kept.append(rec)
    return Dataset(dataset.schema, tuple(kept))


def scale_id(cat_id, k: int):
    """Map category id ``1..k`` linearly onto ``[-1, 1]``."""
    return -1.0 + 2.0 * (np.asarray(cat_id, dtype=np.float64) - 1.0) / (k - 1)


def unscale(value, k: int):
    return np.rint((np.asarray(value, dtype=np.float64) + 1.0) * (k - 1) / 2.0 + 1.0).astype(int)


def encode(dataset: Dataset) -> EncodedDataset:
    if not dataset.records:
        raise DataError("cannot encode an empty dataset")
    schema = dataset.schema
    for feat in schema.features:
        if feat.size < 2:
            raise DataError(f"feature {feat.name!r} has a single category; cannot scale")
    ids = np.array([rec.feature_ids for rec in dataset.records], dtype=np.float64)
    sizes = np.array([f.size for f in schema.features], dtype=np.float64)
    inputs = -1.0 + 2.0 * (ids - 1.0) / (sizes - 1.0)
    targets = np.zeros((len(dataset), schema.n_classes))
    targets[np.arange(len(dataset)), [rec.target_id - 1 for rec in dataset.records]] = 1.0
    return EncodedDataset(inputs, targets, schema.n_classes)


def decode_inputs(inputs, schema: FeatureSchema) -> np.ndarray:
    """Recover integer category ids from scaled inputs."""
    inputs = np.asarray(inputs, dtype=np.float64)
    return np.column_stack([unscale(inputs[:, j], f.size) for j, f in enumerate(schema.features)])


def split_sizes(n: int, fractions) -> tuple[int, ...]:
    """Largest-remainder apportionment of ``n`` items; ties go to the earlier group."""
    quotas = [n * f for f in fractions]
    # guard against 0.15 * 100 == 15.000000000000002 style noise
    floors = [math.floor(q + 1e-9) for q in quotas]
    rems = [q - fl for q, fl in zip(quotas, floors)]
    short = n - sum(floors)
    for i in sorted(range(len(fractions)), key=lambda i: -rems[i])[:short]:
        floors[i] += 1
    return tuple(floors)


def split(n: int, fractions=(0.70, 0.15, 0.15), seed: int = 0) -> SplitIndices:
    """Seeded random partition of ``range(n)`` into train/validation/test."""
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError(f"need three fractions (train, validation, test), got {len(fractions)}")
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be positive and sum to 1, got {fractions}")
    if n < len(fractions):
        raise ValueError(f"cannot split {n} records into {len(fractions)} groups")
    perm = np.random.default_rng(seed).permutation(n)
    a, b, _ = split_sizes(n, fractions)
    return SplitIndices(
        train=tuple(int(i) for i in perm[:a]),
        validation=tuple(int(i) for i in perm[a : a + b]),
        test=tuple(int(i) for i in perm[a + b :]),
        seed=seed,
    )
