import json

import pytest

from spikesym.codec import make_alphabet
from spikesym.grammar import (
    ALL_TERMINAL,
    MAX_STEPS,
    NO_RULE,
    LanguageSpec,
    derive,
    enumerate_language,
    generation_validity,
    is_member,
    register_predicate,
)
from spikesym.rules import AbstractRule, DecisionStream, RuleSet
from spikesym.tasks import anbn_rules

ANBN = anbn_rules()


def test_derivation_replay():
    tr = derive(ANBN, 50, DecisionStream.replay([0.2, 0.2, 0.9]))
    assert tr.final == [3, 3, 3, 4, 4, 4]
    assert tr.terminated_by == ALL_TERMINAL
    assert [s.rule for s in tr.steps] == [0, 0, 1]


def test_termination_causes():
    loop = RuleSet((AbstractRule(0, (0,)),), 0, {3})
    assert derive(loop, 5, DecisionStream(0)).terminated_by == MAX_STEPS
    stuck = RuleSet((AbstractRule(0, (5,)),), 0, {3})
    tr = derive(stuck, 5, DecisionStream(0))
    assert tr.terminated_by == NO_RULE and tr.final == [5]


def test_max_steps_checked_after_terminal():
    tr = derive(ANBN, 1, DecisionStream.replay([0.9]))
    assert tr.terminated_by == ALL_TERMINAL and len(tr.steps) == 1


def test_trace_jsonl(tmp_path):
    tr = derive(ANBN, 50, DecisionStream.replay([0.2, 0.9]))
    p = tmp_path / "trace.jsonl"
    tr.write_jsonl(p)
    lines = [json.loads(x) for x in p.read_text().splitlines()]
    assert lines[0] == {"step": 0, "before": [0], "rule": 0, "position": 0, "after": [3, 0, 4]}
    assert lines[-1] == {"terminated_by": "all_terminal"}


def test_spiking_derivation_matches_oracle():
    alphabet = make_alphabet(6, seed=0)
    for seed in range(5):
        a = derive(ANBN, 50, DecisionStream(seed))
        b = derive(ANBN, 50, DecisionStream(seed), engine="spiking", alphabet=alphabet)
        assert a.final == b.final and a.terminated_by == b.terminated_by


def test_membership():
    spec = LanguageSpec.anbn(max_n=4)
    assert is_member([3, 3, 4, 4], spec)
    assert not is_member([3, 4, 4], spec)
    assert not is_member([3] * 5 + [4] * 5, spec)
    assert not is_member([], spec)
    aba = LanguageSpec("pattern_ABA")
    assert is_member([5, 6, 5], aba) and not is_member([5, 5, 5], aba)
    abb = LanguageSpec("pattern_ABB", tokens=frozenset({5, 6}))
    assert is_member([5, 6, 6], abb) and not is_member([7, 6, 6], abb)


def test_custom_predicate():
    @register_predicate("even_length")
    def _even(s):
        return len(s) % 2 == 0

    spec = LanguageSpec("custom", predicate="even_length")
    assert is_member([1, 2], spec) and not is_member([1], spec)


def test_language_spec_roundtrip():
    for spec in [LanguageSpec.enumerated([[3, 4], [3]]), LanguageSpec.anbn(5, 6, 3)]:
        assert LanguageSpec.from_dict(spec.to_dict()) == spec


def test_enumeration_anbn():
    e = enumerate_language(ANBN, max_len=8, max_depth=4)
    assert e.sentences == {(3, 4), (3, 3, 4, 4), (3, 3, 3, 4, 4, 4), (3, 3, 3, 3, 4, 4, 4, 4)}
    assert not e.truncated


def test_enumeration_cap():
    rs = RuleSet((AbstractRule(0, (0, 0)), AbstractRule(0, (3,)), AbstractRule(0, (4,))), 0, {3, 4})
    e = enumerate_language(rs, max_len=12, max_depth=20, node_cap=50)
    assert e.truncated


def test_generation_validity():
    assert generation_validity(ANBN, LanguageSpec.anbn(max_n=4), 200, 0) == 1.0
    assert generation_validity(ANBN, LanguageSpec.enumerated([[3, 4]]), 400, 1) == pytest.approx(0.5, abs=0.08)
    with pytest.raises(ValueError):
        generation_validity(ANBN, LanguageSpec.anbn(), 0, 0)
