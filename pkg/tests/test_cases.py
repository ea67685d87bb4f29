import json

import pytest

from metric_ga.cases import (CaseParseError, HypothesisRecord, SentenceCase,
                             case_to_dict, load_cases, parse_case, read_cases,
                             write_cases)


def _line(**overrides):
    obj = {"id": "c1", "src": "zdroj", "refs": ["ref one"],
           "hyps": [{"text": "hyp one", "logprob": -2.5, "origin": "beam"}]}
    obj.update(overrides)
    return json.dumps(obj)


def test_load_round_trip(tmp_path):
    path = tmp_path / "cases.jsonl"
    cases = [SentenceCase("a", "s", ["r"], [HypothesisRecord("t", -1.0, "sample")])]
    write_cases(str(path), cases)
    loaded = read_cases(str(path))
    assert loaded == cases
    assert case_to_dict(loaded[0])["hyps"][0]["origin"] == "sample"


def test_load_cases_skips_blank_lines():
    cases = load_cases([_line(), "", "   ", _line(id="c2")])
    assert [c.id for c in cases] == ["c1", "c2"]


def test_defaults_for_optional_fields():
    case = parse_case(json.loads(_line(hyps=[{"text": "bare"}])))
    assert case.hyps[0].logprob == 0.0
    assert case.hyps[0].origin == "user"
    case = parse_case({"id": "x", "src": "s", "hyps": [{"text": "t"}]})
    assert case.refs == []


def test_parse_errors_carry_line_numbers():
    with pytest.raises(CaseParseError, match="line 2"):
        load_cases([_line(), "{not json"])
    with pytest.raises(CaseParseError, match="line 1"):
        load_cases(['{"id": "x", "src": "s", "hyps": []}'])
    with pytest.raises(CaseParseError, match="missing required field"):
        load_cases(['{"src": "s", "hyps": [{"text": "t"}]}'])


def test_unknown_origin_rejected():
    with pytest.raises(CaseParseError, match="origin"):
        parse_case(json.loads(_line(hyps=[{"text": "t", "origin": "oracle"}])))


def test_hyp_texts_property():
    case = parse_case(json.loads(_line(hyps=[{"text": "a"}, {"text": "b"}])))
    assert case.hyp_texts == ["a", "b"]
