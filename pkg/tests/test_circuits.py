import itertools

import numpy as np
import pytest

from spikesym.chain import ChainError, ChainSpec, build_chain
from spikesym.circuits import (
    CompileError,
    EqualityResponder,
    SpikingEngine,
    audit_suppression,
    build_equality_rule,
    compile_rule,
)
from spikesym.codec import DIFF, SAME, NoiseModel, make_alphabet
from spikesym.equivalence import check_equivalence, random_case
from spikesym.rules import (
    ANYWHERE_BEFORE,
    LEFT_ADJACENT,
    AbstractRule,
    OracleEngine,
    RuleSet,
)

ALPHABET = make_alphabet(12, seed=0)
ANBN = RuleSet((AbstractRule(0, (3, 0, 4), 0.5), AbstractRule(0, (3, 4), 0.5)), 0, {3, 4})


def test_detector_finds_condition_positions():
    eng = SpikingEngine(ANBN, ALPHABET)
    assert eng.eligible([3, 0, 4]) == [(1, 0), (1, 1)]
    assert eng.eligible([3, 4]) == []
    assert eng.diagnostics == []


def test_rewrite_inserts_tokens():
    eng = SpikingEngine(ANBN, ALPHABET)
    assert eng.rewrite([0], 0, 0) == [3, 0, 4]
    assert eng.rewrite([3, 0, 4], 1, 0) == [3, 3, 0, 4, 4]
    assert eng.rewrite([3, 3, 0, 4, 4], 2, 1) == [3, 3, 3, 4, 4, 4]


def test_replacement_suppresses_original():
    rs = RuleSet((AbstractRule(5, (6,)),), 0, {6})
    eng = SpikingEngine(rs, ALPHABET)
    assert eng.rewrite([3, 5, 4], 1, 0) == [3, 6, 4]
    assert audit_suppression(eng.chain, ALPHABET, eng.last_trace, 3, 1, 5, 6) == 0


@pytest.mark.parametrize("rel", [LEFT_ADJACENT, ANYWHERE_BEFORE])
def test_context_gating_exhaustive(rel):
    rs = RuleSet((AbstractRule(3, (5,), 1.0, 4, rel),), 0, {4, 5})
    eng = SpikingEngine(rs, ALPHABET)
    ora = OracleEngine(rs)
    for n in range(1, 4):
        for s in itertools.product([3, 4, 5], repeat=n):
            assert eng.eligible(list(s)) == ora.eligible(list(s)), s


def test_compile_errors():
    chain = build_chain(ChainSpec())
    with pytest.raises(CompileError, match="not in alphabet"):
        compile_rule(AbstractRule(3, (99,)), chain, 1, ALPHABET)
    with pytest.raises(CompileError, match="tap"):
        compile_rule(AbstractRule(3, (4,)), chain, 5, ALPHABET)
    with pytest.raises(CompileError, match="stride"):
        compile_rule(AbstractRule(3, (4, 4, 4)), chain, 1, ALPHABET, stride=2)
    short = build_chain(ChainSpec(delay=55))
    with pytest.raises(CompileError, match="delay"):
        compile_rule(AbstractRule(3, (4,)), short, 1, ALPHABET)


def test_equivalence_small_batch():
    for i in range(10):
        rng = np.random.default_rng(i)
        rules, sentence = random_case(rng, ALPHABET)
        rep = check_equivalence(rules, sentence, i, 4, ALPHABET)
        assert rep.equal, rep.divergence
        assert rep.suppression_leaks == 0


def test_large_jitter_breaks_equivalence():
    # jitter far beyond eps must be caught, not silently absorbed
    bad = 0
    for i in range(10):
        rules, sentence = random_case(np.random.default_rng(i), ALPHABET)
        rep = check_equivalence(rules, sentence, i, 4, ALPHABET, noise=NoiseModel(jitter_max=12))
        bad += not rep.equal
    assert bad >= 5


def test_equality_circuit_answers():
    resp = EqualityResponder(ALPHABET)
    assert resp([3, 4, 3]) == SAME
    assert resp([3, 4, 4]) == DIFF
    assert resp([7, 9, 7]) == SAME
    assert resp([7, 9, 11]) == DIFF


def test_equality_circuit_tolerates_eps_jitter():
    resp = EqualityResponder(ALPHABET, noise=NoiseModel(jitter_max=ALPHABET.eps), rng=np.random.default_rng(0))
    for a, b in [(3, 4), (5, 8), (10, 6)]:
        assert resp([a, b, a]) == SAME
        assert resp([a, b, b]) == DIFF


def test_equality_circuit_arguments():
    chain = build_chain(ChainSpec())
    with pytest.raises(ChainError):
        build_equality_rule(chain, ALPHABET, 2, 1)
    with pytest.raises(ChainError, match="pitch"):
        build_equality_rule(chain, ALPHABET, 0, 2, tol=30)
