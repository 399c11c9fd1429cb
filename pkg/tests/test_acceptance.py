"""Acceptance gate: one PASS/FAIL line per criterion, at full scale."""

import json

import numpy as np
import pytest

from conftest import ACCEPTANCE
from spikesym.chain import ChainSpec, pass_through
from spikesym.circuits import SpikingEngine
from spikesym.cli import run
from spikesym.codec import make_alphabet
from spikesym.config import from_dict
from spikesym.evolution import GenerationRecord, price_terms
from spikesym.grammar import LanguageSpec, enumerate_language, generation_validity
from spikesym.quasispecies import QuasispeciesConfig, late_mean, quasispecies_run, quasispecies_threshold
from spikesym.rules import ANYWHERE_BEFORE, LEFT_ADJACENT, AbstractRule, OracleEngine, RuleSet
from spikesym.seeding import substream
from spikesym.tasks import anbn_rules, run_equivalence_suite, run_grammar_evolution, run_marcus


def report(k, ok, detail):
    line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def equiv_report():
    return run_equivalence_suite(from_dict({"seed": 0}))


def test_1_pass_through():
    spec = ChainSpec()
    ok = 0
    for i in range(200):
        rng = substream(0, "accept-pass", i)
        alphabet = make_alphabet(int(rng.integers(3, 13)), seed=int(rng.integers(2**31)))
        sentence = [int(s) for s in rng.choice(alphabet.symbols, size=int(rng.integers(1, 9)))]
        r = pass_through(spec, alphabet, sentence)
        ok += r.slots == sentence and all(m == 0 for m in r.mismatches)
    report(1, ok == 200, f"pass-through {ok}/200 exact")


def test_2_oracle_equivalence(equiv_report):
    r = equiv_report
    report(2, r["failures"] == 0, f"equivalence {r['cases'] - r['failures']}/{r['cases']} ({r['rewrites']} rewrites)")


def test_3_suppression(equiv_report):
    r = equiv_report
    report(3, r["suppression_leaks"] == 0 and r["rewrites"] > 0,
           f"suppression leaks {r['suppression_leaks']} over {r['rewrites']} rewrites")


def test_4_gating():
    alphabet = make_alphabet(8, seed=0)
    syms = [3, 4, 5, 6]
    ok = sat = unsat = 0
    for i in range(50):
        rng = substream(0, "accept-gate", i)
        cond, ctx = (int(s) for s in rng.choice(syms, size=2, replace=False))
        rel = LEFT_ADJACENT if i % 2 == 0 else ANYWHERE_BEFORE
        rule = AbstractRule(cond, (int(rng.choice(syms)),), 1.0, ctx, rel)
        rs = RuleSet((rule,), 0, frozenset(syms))
        sentence = [int(s) for s in rng.choice(syms, size=int(rng.integers(2, 5)))]
        sentence[int(rng.integers(len(sentence)))] = cond
        expect = [(p, 0) for p, t in enumerate(sentence) if t == cond and rule.context_ok(sentence, p)]
        eng = SpikingEngine(rs, alphabet)
        got = eng.eligible(sentence)
        good = got == expect == OracleEngine(rs).eligible(sentence)
        if good and expect:
            pos = expect[0][0]
            good = eng.rewrite(sentence, pos, 0) == OracleEngine(rs).rewrite(sentence, pos, 0)
        ok += good
        sat += bool(expect)
        unsat += any(t == cond for t in sentence) and len(expect) < sentence.count(cond)
    report(4, ok == 50 and sat > 0 and unsat > 0,
           f"gating {ok}/50 ({sat} with context satisfied, {unsat} with a blocked position)")


def test_5_grammar_soundness():
    rules = anbn_rules()
    v = generation_validity(rules, LanguageSpec.anbn(max_n=4), 1000, 0)
    e = enumerate_language(rules, max_len=8, max_depth=4)
    want = {(3,) * n + (4,) * n for n in range(1, 5)}
    report(5, v == 1.0 and e.sentences == want and not e.truncated,
           f"a^n b^n validity {v:.3f} over 1000; depth-4 language {sorted(len(s) for s in e.sentences)}")


def test_6_marcus():
    cfg = from_dict({"marcus": {"jitter_levels": [0, 1, 3, 6], "seeds": 5}})
    r = run_marcus(cfg)
    acc = {lv["jitter_max"] // cfg.alphabet.eps: lv for lv in r["by_noise"]}
    z = acc[0]
    mean = {k: (v["train_accuracy"] + v["heldout_accuracy"]) / 2 for k, v in acc.items()}
    ok = (
        z["heldout_accuracy"] == 1.0
        and z["train_accuracy"] == z["heldout_accuracy"]
        and acc[1]["heldout_accuracy"] >= 0.99
        and acc[1]["train_accuracy"] >= 0.99
        and mean[1] >= mean[3] >= mean[6]
        and mean[6] < mean[1]
    )
    report(6, ok, "marcus " + ", ".join(f"{k}eps={mean[k]:.3f}" for k in sorted(mean))
           + f" (zero noise train {z['train_accuracy']:.3f} held-out {z['heldout_accuracy']:.3f})")


def test_7_price_identity():
    worst = 0.0
    for i in range(1000):
        rng = substream(0, "accept-price", i)
        n = int(rng.integers(2, 60))
        w = rng.integers(0, 6, n).astype(float)
        w[int(rng.integers(n))] += 1
        z = rng.normal(0, rng.uniform(0.1, 10), n)
        zp = z + rng.normal(0, 1, n)
        dz, cov, trans = price_terms(GenerationRecord(list(range(n)), [None] * n, list(w), list(z), list(zp)))
        worst = max(worst, abs(dz - (cov + trans)) / max(1.0, abs(dz)))
    report(7, worst < 1e-9, f"Price identity worst residual {worst:.2e} over 1000 records")


def test_8_error_catastrophe():
    mu_star = quasispecies_threshold(10, 10.0)
    lo, hi = [], []
    for s in range(5):
        for mult, out in ((0.5, lo), (1.5, hi)):
            cfg = QuasispeciesConfig(L=10, sigma=10.0, mu=mult * mu_star, pop_size=1000, generations=500)
            out.append(late_mean(quasispecies_run(cfg, substream(s, "accept-eigen", int(mult * 10)))))
    ok = all(x > 0.1 for x in lo) and all(x < 0.02 for x in hi)
    report(8, ok, f"mu*={mu_star:.4f}; master freq at 0.5mu* min {min(lo):.3f}, at 1.5mu* max {max(hi):.4f}")


def test_9_evolution_smoke():
    solved = []
    for s in range(5):
        cfg = from_dict({"seed": s, "evolution": {"pop_size": 50, "generations": 50}})
        r = run_grammar_evolution(cfg)
        solved.append(r["solved_at"])
    hits = sum(g is not None and g <= 50 for g in solved)
    report(9, hits >= 4, f"evolution reached 1 - lambda*k in {hits}/5 seeds (generation {solved})")


def test_10_reproducibility(tmp_path):
    small = {
        "evolution": {"pop_size": 10, "generations": 3, "samples": 5, "validation_samples": 5},
        "marcus": {"seeds": 1, "n_sentences": 6},
        "equiv": {"cases": 5},
        "eigen": {"pop_size": 200, "generations": 50, "seeds": 1},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(small))
    cmds = [["alphabet"], ["simulate"], ["derive", "--engine", "spiking"], ["equiv"], ["evolve"],
            ["marcus"], ["eigen-sweep"]]
    same = 0
    for cmd in cmds:
        files = []
        for k in range(2):
            out = tmp_path / f"{cmd[0]}-{k}"
            run([*cmd, "--config", str(cfg_path), "--seed", "11", "--out-dir", str(out)])
            files.append(json.loads((out / "manifest.json").read_text())["files"])
        same += files[0] == files[1] and len(files[0]) > 0
    report(10, same == len(cmds), f"reproducible outputs {same}/{len(cmds)} subcommands")
