from __future__ import annotations

import json

import pytest

from punc import api, fileio, oracle
from punc.errors import InvalidCircuitError, ParseError
from punc.generate import FAMILIES, GeneratorConfig, generate


def distribution(c):
    return oracle.enumerate(lambda x: api.probability(c, x), api.cardinalities(c))


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("mode", ["kronecker", "hadamard"])
def test_round_trip(family, mode):
    c = generate(GeneratorConfig(seed=13, num_vars=3, cardinality=3, family=family, combine_mode=mode))
    data = fileio.write(c)
    back = fileio.parse(data)
    assert fileio.family_of(back) == family
    assert fileio.write(back) == data
    ok, dev = oracle.distributions_equal(distribution(c), distribution(back), 0.0)
    assert ok, dev


def test_writer_is_deterministic():
    cfg = GeneratorConfig(seed=2, family="d_punc", structured=False)
    assert fileio.write(generate(cfg)) == fileio.write(generate(cfg))
    assert fileio.write(generate(cfg)).endswith(b"\n")


def test_file_helpers(tmp_path):
    c = generate(GeneratorConfig(seed=1))
    path = tmp_path / "c.json"
    fileio.write_file(c, str(path))
    assert fileio.write(fileio.read_file(str(path))) == path.read_bytes()


def sd_dict() -> dict:
    return json.loads(fileio.write(generate(GeneratorConfig(seed=1, num_vars=2))))


def dag_dict() -> dict:
    return json.loads(fileio.write(generate(GeneratorConfig(seed=1, num_vars=3, family="d_punc"))))


def test_bad_weight_names_unit():
    d = dag_dict()
    i, unit = next((i, u) for i, u in enumerate(d["units"]) if u["kind"] == "sum")
    unit["weights"] = [1.1] + [0.0] * (len(unit["weights"]) - 1)
    with pytest.raises(InvalidCircuitError) as exc:
        fileio.parse(json.dumps(d))
    assert any(v.kind == "weights" and v.where == f"unit {unit['id']}" for v in exc.value.violations)
    c = fileio.parse(json.dumps(d), validate=False)
    assert api.validate(c)


@pytest.mark.parametrize("text", ["", "   \n"])
def test_empty_file(text):
    with pytest.raises(ParseError, match="empty"):
        fileio.parse(text)


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as exc:
        fileio.parse('{"family": ')
    assert "line 1" in str(exc.value)


def test_unknown_field_rejected():
    d = sd_dict()
    d["extra"] = 1
    with pytest.raises(ParseError, match="extra"):
        fileio.parse(json.dumps(d))
    assert fileio.family_of(fileio.parse(json.dumps(d), strict=False)) == "sd_punc"


def test_bad_version_and_family():
    d = sd_dict()
    d["format_version"] = 2
    with pytest.raises(ParseError) as exc:
        fileio.parse(json.dumps(d))
    assert exc.value.location == "$.format_version"
    d = sd_dict()
    d["family"] = "circuit"
    with pytest.raises(ParseError):
        fileio.parse(json.dumps(d))
    with pytest.raises(ParseError):
        fileio.parse("[1, 2]")


def test_nested_location_reported():
    d = dag_dict()
    i = next(i for i, u in enumerate(d["units"]) if u["kind"] == "leaf")
    d["units"][i]["povm"] = "oops"
    with pytest.raises(ParseError) as exc:
        fileio.parse(json.dumps(d))
    assert exc.value.location.startswith(f"$.units[{i}]")


def test_duplicate_unit_id():
    d = dag_dict()
    d["units"].append(d["units"][0])
    with pytest.raises(ParseError, match="duplicate"):
        fileio.parse(json.dumps(d))


def test_variables_must_be_ordered():
    d = sd_dict()
    d["variables"].reverse()
    with pytest.raises(ParseError):
        fileio.parse(json.dumps(d))
