"""Categorical survey schema: feature definitions, the embedded default, and YAML I/O."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import yaml


class SchemaError(ValueError):
    """A schema document is malformed or violates a schema invariant.

    ``problems`` holds ``(line, message)`` pairs; line is 1-based or None.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(_fmt(line, msg) for line, msg in self.problems))


def _fmt(line, msg):
    return f"line {line}: {msg}" if line is not None else msg


@dataclass(frozen=True)
class FeatureDef:
    name: str
    categories: tuple[tuple[int, str], ...]

    def __post_init__(self):
        problems = _feature_problems(self.name, self.categories)
        if problems:
            raise SchemaError((None, p) for p in problems)

    @property
    def size(self) -> int:
        return len(self.categories)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for _, label in self.categories)

    def label(self, cat_id: int) -> str:
        return self.categories[cat_id - 1][1]


def _feature_problems(name, categories):
    problems = []
    if not isinstance(name, str) or not name.strip():
        problems.append(f"feature name must be a non-empty string, got {name!r}")
    name = name if isinstance(name, str) else repr(name)
    if len(categories) < 2:
        problems.append(f"feature {name!r} needs at least 2 categories, has {len(categories)}")
    ids = [cid for cid, _ in categories]
    if ids != list(range(1, len(ids) + 1)):
        problems.append(f"feature {name!r} category ids must be 1..{len(ids)} in order, got {ids}")
    labels = [label for _, label in categories]
    if len(set(labels)) != len(labels):
        problems.append(f"feature {name!r} has duplicate category labels")
    return problems


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureDef, ...]
    target: FeatureDef

    def __post_init__(self):
        names = [f.name for f in self.features] + [self.target.name]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SchemaError([(None, f"duplicate feature names: {dupes}")])
        if not self.features:
            raise SchemaError([(None, "schema needs at least one input feature")])

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_classes(self) -> int:
        return self.target.size

    @property
    def columns(self) -> list[str]:
        return [f.name for f in self.features] + [self.target.name]

    def to_dict(self) -> dict:
        def feat(f):
            return {"name": f.name, "categories": {cid: label for cid, label in f.categories}}

        return {"features": [feat(f) for f in self.features], "target": feat(self.target)}

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True, width=100)


# -- parsing with line diagnostics ---------------------------------------


def _line(node):
    return node.start_mark.line + 1


def _mapping(node, what, problems):
    if not isinstance(node, yaml.MappingNode):
        problems.append((_line(node), f"{what} must be a mapping"))
        return None
    out = {}
    for key, value in node.value:
        if not isinstance(key, yaml.ScalarNode):
            problems.append((_line(key), f"{what} keys must be scalars"))
            continue
        if key.value in out:
            problems.append((_line(key), f"duplicate key {key.value!r} in {what}"))
            continue
        out[key.value] = (key, value)
    return out


def _parse_feature(node, what, problems):
    before = len(problems)
    entries = _mapping(node, what, problems)
    if entries is None:
        return None
    unknown = set(entries) - {"name", "categories"}
    for key in sorted(unknown):
        problems.append((_line(entries[key][0]), f"unknown key {key!r} in {what}"))
    if "name" not in entries:
        problems.append((_line(node), f"{what} is missing 'name'"))
        return None
    name_node = entries["name"][1]
    if not isinstance(name_node, yaml.ScalarNode) or not name_node.value.strip():
        problems.append((_line(name_node), f"{what} name must be a non-empty string"))
        return None
    name = name_node.value
    if "categories" not in entries:
        problems.append((_line(node), f"feature {name!r} is missing 'categories'"))
        return None
    cat_entries = _mapping(entries["categories"][1], f"categories of {name!r}", problems)
    if cat_entries is None:
        return None
    cats = []
    for raw_id, (key_node, label_node) in cat_entries.items():
        try:
            cid = int(raw_id)
        except ValueError:
            problems.append((_line(key_node), f"category id {raw_id!r} of {name!r} is not an integer"))
            continue
        if not isinstance(label_node, yaml.ScalarNode):
            problems.append((_line(label_node), f"label for id {cid} of {name!r} must be a string"))
            continue
        cats.append((cid, label_node.value))
    if len(problems) > before:
        return None
    feature_problems = _feature_problems(name, cats)
    if feature_problems:
        problems.extend((_line(node), p) for p in feature_problems)
        return None
    return FeatureDef(name, tuple(cats)), _line(node)


def parse_schema(text: str) -> FeatureSchema:
    """Parse a YAML schema document, collecting every problem with its line number."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise SchemaError([(mark.line + 1 if mark else None, f"malformed YAML: {exc.problem}")]) from None
    if root is None:
        raise SchemaError([(None, "schema document is empty")])
    problems = []
    top = _mapping(root, "schema", problems)
    if top is None:
        raise SchemaError(problems)
    for key in sorted(set(top) - {"features", "target"}):
        problems.append((_line(top[key][0]), f"unknown top-level key {key!r}"))
    for key in ("features", "target"):
        if key not in top:
            problems.append((_line(root), f"schema is missing {key!r}"))

    features = []
    if "features" in top:
        seq = top["features"][1]
        if not isinstance(seq, yaml.SequenceNode) or not seq.value:
            problems.append((_line(seq), "'features' must be a non-empty list"))
        else:
            for i, item in enumerate(seq.value):
                parsed = _parse_feature(item, f"feature #{i + 1}", problems)
                if parsed:
                    features.append(parsed)
    target = _parse_feature(top["target"][1], "target", problems) if "target" in top else None

    seen = {}
    for feat, line in features + ([target] if target else []):
        if feat.name in seen:
            problems.append((line, f"duplicate feature name {feat.name!r} (first at line {seen[feat.name]})"))
        else:
            seen[feat.name] = line
    if problems:
        raise SchemaError(problems)
    return FeatureSchema(tuple(f for f, _ in features), target[0])


def read_schema(path) -> FeatureSchema:
    with open(path, encoding="utf-8") as fh:
        return parse_schema(fh.read())


def default_schema_text() -> str:
    return resources.files("turnout").joinpath("data/default_schema.yaml").read_text(encoding="utf-8")


def default_schema() -> FeatureSchema:
    return parse_schema(default_schema_text())
