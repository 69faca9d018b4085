import textwrap

import pytest
import yaml

from turnout.schema import FeatureDef, FeatureSchema, SchemaError, default_schema, parse_schema


def test_default_schema_matches_survey_tables():
    s = default_schema()
    assert s.n_features == 9
    assert s.features[0].name == "Age of people"
    assert s.features[0].categories == ((1, "Old"), (2, "Middle-aged"), (3, "Young"))
    assert s.features[1].labels == ("PhD", "Masters", "BA", "Under license")
    assert s.features[3].labels == ("Reformists", "Fundamentalists", '"Velayi"')
    assert s.features[4].labels == ("Mortgage", "targeted subsidies", "Marriage Loans", "Fuel Rationing")
    assert s.target.categories == (
        (1, "Partnership"),
        (2, "possible participation"),
        (3, "Without participation"),
    )
    assert [f.size for f in s.features] == [3, 4, 3, 3, 4, 3, 3, 3, 3]


def test_dump_round_trips():
    s = default_schema()
    assert parse_schema(s.dumps()) == s


def test_feature_invariants():
    with pytest.raises(SchemaError, match="at least 2"):
        FeatureDef("x", ((1, "a"),))
    with pytest.raises(SchemaError, match="1..2"):
        FeatureDef("x", ((1, "a"), (3, "b")))
    with pytest.raises(SchemaError, match="duplicate category labels"):
        FeatureDef("x", ((1, "a"), (2, "a")))
    f = FeatureDef("x", ((1, "a"), (2, "b")))
    with pytest.raises(SchemaError, match="duplicate feature names"):
        FeatureSchema((f, f), FeatureDef("y", ((1, "a"), (2, "b"))))


BAD = textwrap.dedent(
    """\
    features:
      - name: Age
        categories: {1: Old, 2: Young}
      - name: Age
        categories: {1: a, 2: b}
      - name: Degree
        categories: {1: PhD, 3: BA}
    target:
      name: turnout
      categories: {1: yes, 2: no}
    """
)


def test_validation_reports_lines():
    with pytest.raises(SchemaError) as info:
        parse_schema(BAD)
    lines = dict((msg, line) for line, msg in info.value.problems)
    assert any("duplicate feature name 'Age'" in m and ln == 4 for m, ln in lines.items())
    assert any("1..2" in m and ln == 6 for m, ln in lines.items())


def test_malformed_yaml_has_line():
    with pytest.raises(SchemaError) as info:
        parse_schema("features:\n  - name: [unclosed\n")
    assert info.value.problems[0][0] is not None
    assert "line" in str(info.value)


@pytest.mark.parametrize(
    "doc, needle",
    [
        ("", "empty"),
        ("features: []\ntarget: {name: t, categories: {1: a, 2: b}}\n", "non-empty list"),
        ("features:\n  - name: a\n    categories: {1: x, 2: y}\n", "missing 'target'"),
        ("features:\n  - name: a\n    categories: {one: x, 2: y}\ntarget: {name: t, categories: {1: a, 2: b}}\n",
         "not an integer"),
        ("features:\n  - {name: a, categories: {1: x, 2: y}, extra: 1}\ntarget: {name: t, categories: {1: a, 2: b}}\n",
         "unknown key"),
    ],
)
def test_validation_failures(doc, needle):
    with pytest.raises(SchemaError, match=needle):
        parse_schema(doc)


def test_ten_feature_schema_accepted():
    doc = yaml.safe_load(default_schema().dumps())
    doc["features"].append({"name": "Tenth", "categories": {1: "a", 2: "b"}})
    s = parse_schema(yaml.safe_dump(doc))
    assert s.n_features == 10
