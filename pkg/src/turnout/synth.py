"""Seeded synthetic survey data with a known (planted) labelling rule."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .dataset import Dataset, Record
from .schema import FeatureSchema, default_schema

ORIENTATION = "Political Orientation of people"
OFFICIALS = "Opinion of people about the election officials"
CANDIDATES = "Opinion of people about Candidates"


@dataclass(frozen=True)
class PlantedRule:
    """Deterministic label rule over named feature ids.

    ``fn`` receives a mapping ``feature name -> id`` restricted to ``uses``
    and the class count, and returns a target id in ``1..n_classes``.
    """

    name: str
    uses: tuple[str, ...]
    fn: Callable[[Mapping[str, int], int], int]
    description: str = ""

    def check(self, schema: FeatureSchema):
        names = {f.name for f in schema.features}
        missing = [u for u in self.uses if u not in names]
        if missing:
            raise ValueError(f"rule {self.name!r} needs features {missing} absent from the schema")

    def __call__(self, ids: Mapping[str, int], n_classes: int) -> int:
        return int(self.fn(ids, n_classes))


def _orientation(ids, k):
    return min(max(ids[ORIENTATION], 1), k)


def _officials(ids, k):
    return min(max(ids[OFFICIALS], 1), k)


def _trust(ids, k):
    # decision list; class centroids are not collinear, so no class is masked
    if ids[ORIENTATION] == 1:
        return 1
    if ids[OFFICIALS] == 3:
        return min(3, k)
    return min(2, k)


def _composite(ids, k):
    # sum of three 1..3 ids spans 3..9; thresholds give a 10/7/10 (of 27) class mix
    s = ids[ORIENTATION] + ids[OFFICIALS] + ids[CANDIDATES]
    cls = 1 if s <= 5 else 2 if s == 6 else 3
    return min(cls, k)


RULES = {
    "trust": PlantedRule(
        "trust", (ORIENTATION, OFFICIALS), _trust,
        "Reformists -> 1; otherwise distrust of election officials -> 3; otherwise 2",
    ),
    "orientation": PlantedRule(
        "orientation", (ORIENTATION,), _orientation,
        "target := political orientation id, clamped to the class range",
    ),
    "officials": PlantedRule(
        "officials", (OFFICIALS,), _officials,
        "target := opinion-of-election-officials id, clamped to the class range",
    ),
    "composite": PlantedRule(
        "composite", (ORIENTATION, OFFICIALS, CANDIDATES), _composite,
        "orientation + officials + candidates ids: <=5 -> 1, 6 -> 2, >=7 -> 3",
    ),
}


def get_rule(name: str) -> PlantedRule:
    try:
        return RULES[name]
    except KeyError:
        raise ValueError(f"unknown rule {name!r}; choose from {sorted(RULES)}") from None


def synthesize(
    n: int,
    seed: int,
    rule: PlantedRule | str = "trust",
    noise: float = 0.0,
    schema: FeatureSchema | None = None,
) -> Dataset:
    """Draw ``n`` records with uniform feature ids, label them by ``rule``,
    then move each label to a uniformly chosen other class with probability ``noise``."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not 0.0 <= noise < 1.0:
        raise ValueError(f"noise must lie in [0, 1), got {noise!r}")
    schema = schema or default_schema()
    rule = get_rule(rule) if isinstance(rule, str) else rule
    rule.check(schema)
    k = schema.n_classes
    rng = np.random.default_rng(seed)
    sizes = np.array([f.size for f in schema.features])
    ids = rng.integers(1, sizes + 1, size=(n, len(sizes)))
    flip = rng.random(n) < noise
    shift = rng.integers(1, k, size=n)  # offset 1..k-1 picks a different class uniformly
    col = {f.name: j for j, f in enumerate(schema.features)}
    records = []
    for r in range(n):
        row = tuple(int(v) for v in ids[r])
        target = rule({u: row[col[u]] for u in rule.uses}, k)
        if not 1 <= target <= k:
            raise ValueError(f"rule {rule.name!r} produced class {target} outside 1..{k}")
        if flip[r]:
            target = (target - 1 + int(shift[r])) % k + 1
        records.append(Record(row, target))
    return Dataset(schema, tuple(records))
