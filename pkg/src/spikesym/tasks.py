"""End-to-end experiments: Marcus ABA/ABB, grammar evolution, equivalence suite, eigen sweep."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import EqualityResponder, SpikingEngine
from .codec import DIFF, SAME, Alphabet, NoiseModel, make_alphabet
from .config import ConfigError, ExperimentConfig
from .equivalence import check_equivalence, random_case
from .evolution import (
    ErrorModel,
    IdSource,
    fitness_discrimination,
    fitness_language,
    price_terms,
    random_genome,
    step_generation,
    tournament,
)
from .grammar import LanguageSpec, derive_with, generation_validity
from .output import RunManifest, write_csv, write_json
from .quasispecies import QuasispeciesConfig, late_mean, quasispecies_run, quasispecies_threshold
from .rules import AbstractRule, DecisionStream, OracleEngine, RuleSet
from .seeding import child_seed, substream

A_SYM, B_SYM = 3, 4


def anbn_rules(a: int = A_SYM, b: int = B_SYM, start: int = 0) -> RuleSet:
    return RuleSet(
        (AbstractRule(start, (a, start, b), 0.5), AbstractRule(start, (a, b), 0.5)),
        start,
        frozenset({a, b}),
    )


def grammar_from_config(cfg: ExperimentConfig) -> tuple[RuleSet, LanguageSpec]:
    g = cfg.grammar
    if g.rules is None:
        rules = anbn_rules(start=g.start)
    else:
        d = {"start": g.start, "rules": g.rules}
        if g.terminals is not None:
            d["terminals"] = g.terminals
        try:
            rules = RuleSet.from_dict(d)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"/grammar/rules: {exc}") from None
    target = LanguageSpec.from_dict(g.target) if g.target else LanguageSpec.anbn(max_n=cfg.chain.capacity // 2)
    return rules, target


# -- Marcus ----------------------------------------------------------------------


@dataclass
class MarcusDataset:
    train_tokens: list[int]
    test_tokens: list[int]
    train: list[tuple[list[int], int]]
    test: list[tuple[list[int], int]]


def _pattern_sentences(tokens, n, rng):
    out = []
    for i in range(n):
        a, b = (int(t) for t in rng.choice(tokens, size=2, replace=False))
        if i % 2 == 0:
            out.append(([a, b, a], SAME))
        else:
            out.append(([a, b, b], DIFF))
    return out


def make_marcus_dataset(
    alphabet: Alphabet, n_train_tokens: int, n_test_tokens: int, n_sentences: int, seed: int
) -> MarcusDataset:
    """ABA (label SAME) and ABB (label DIFF) sentences over disjoint token sets.

    ``n_sentences`` sentences are made from the training tokens and as many
    again from the held-out tokens; labels alternate, so classes balance
    within one.
    """
    if n_test_tokens < 1:
        raise ValueError("n_test_tokens must be >= 1: no held-out tokens, nothing to generalize to")
    if n_train_tokens < 2 or n_test_tokens < 2:
        raise ValueError("each token split needs at least 2 tokens to form A != B")
    pool = alphabet.terminals()
    if len(pool) < n_train_tokens + n_test_tokens:
        raise ValueError(
            f"alphabet too small: {len(pool)} terminals for "
            f"{n_train_tokens} train + {n_test_tokens} test tokens"
        )
    rng = np.random.default_rng(seed)
    picked = [int(t) for t in rng.permutation(pool)[: n_train_tokens + n_test_tokens]]
    train_tok, test_tok = sorted(picked[:n_train_tokens]), sorted(picked[n_train_tokens:])
    return MarcusDataset(
        train_tok,
        test_tok,
        _pattern_sentences(train_tok, n_sentences, rng),
        _pattern_sentences(test_tok, n_sentences, rng),
    )


SLOT_PAIRS = ((0, 1), (0, 2), (1, 2))


def evolve_marcus_slots(
    alphabet: Alphabet,
    spec,
    train,
    rng: np.random.Generator,
    pop_size: int = 20,
    generations: int = 10,
    tap: int = 1,
    mu: float = 0.2,
) -> tuple[tuple[int, int], float]:
    """Search the pair of slots the equality circuit compares.

    Genomes are slot pairs; fitness is noise-free training accuracy.
    Tournament selection (k=3) with one elite; a child is redrawn uniformly
    with probability ``mu``.
    """
    fit = {p: fitness_discrimination(EqualityResponder(alphabet, spec, p, tap), train) for p in SLOT_PAIRS}
    pop = [SLOT_PAIRS[int(i)] for i in rng.integers(len(SLOT_PAIRS), size=pop_size)]
    for _ in range(generations):
        f = [fit[p] for p in pop]
        nxt = [pop[int(np.argmax(f))]]
        while len(nxt) < pop_size:
            child = pop[tournament(f, 3, rng)]
            if rng.random() < mu:
                child = SLOT_PAIRS[int(rng.integers(len(SLOT_PAIRS)))]
            nxt.append(child)
        pop = nxt
    f = [fit[p] for p in pop]
    i = int(np.argmax(f))
    return pop[i], f[i]


def _marcus_data(cfg, alphabet, s):
    m = cfg.marcus
    try:
        return make_marcus_dataset(
            alphabet, m.n_train_tokens, m.n_test_tokens, m.n_sentences,
            child_seed(cfg.seed, "marcus-data", s),
        )
    except ValueError as exc:
        raise ConfigError(f"/marcus: {exc}") from None


def run_marcus(cfg: ExperimentConfig, manifest: RunManifest | None = None) -> dict:
    alphabet = cfg.make_alphabet()
    spec = cfg.chain_spec()
    m = cfg.marcus
    rows, levels = [], []
    slots = {}
    for s in range(m.seeds):
        if m.mode == "fixed":
            slots[s] = (0, 2)
            continue
        ds = _marcus_data(cfg, alphabet, s)
        slots[s], _ = evolve_marcus_slots(
            alphabet, spec, ds.train, substream(cfg.seed, "marcus-evolve", s),
            m.evo_pop, m.evo_generations, cfg.chain.tap,
        )
    for li, level in enumerate(m.jitter_levels):
        jitter = int(level * alphabet.eps)
        noise = NoiseModel(jitter, cfg.noise.p_delete, cfg.noise.p_insert)
        tr, te = [], []
        for s in range(m.seeds):
            ds = _marcus_data(cfg, alphabet, s)
            resp = EqualityResponder(
                alphabet, spec, slots[s], tap=cfg.chain.tap, noise=noise,
                rng=substream(cfg.seed, "marcus-noise", li, s),
            )
            a_tr = fitness_discrimination(resp, ds.train)
            a_te = fitness_discrimination(resp, ds.test)
            tr.append(a_tr)
            te.append(a_te)
            rows.append((jitter, s, a_tr, a_te))
        levels.append(
            {"jitter_max": jitter, "train_accuracy": float(np.mean(tr)), "heldout_accuracy": float(np.mean(te))}
        )
    zero = next((lv for lv in levels if lv["jitter_max"] == 0), levels[0])
    report = {
        "task": "marcus",
        "train_accuracy": zero["train_accuracy"],
        "heldout_accuracy": zero["heldout_accuracy"],
        "by_noise": levels,
        "mode": m.mode,
        "slots": [list(slots[s]) for s in range(m.seeds)],
    }
    if manifest is not None:
        write_csv(
            manifest.path("accuracy_by_noise.csv"),
            ["jitter_max", "seed", "train_accuracy", "heldout_accuracy"],
            rows,
        )
        write_json(manifest.path("report.json"), report)
    return report


# -- grammar evolution -------------------------------------------------------------


def run_grammar_evolution(cfg: ExperimentConfig, manifest: RunManifest | None = None) -> dict:
    ev = cfg.evolution
    seed = cfg.seed
    target = LanguageSpec.from_dict(ev.target)
    template = RuleSet((), cfg.grammar.start, frozenset(ev.terminals))
    symbols = sorted({template.start, *ev.terminals})
    em = ErrorModel(ev.mu_sub, ev.mu_del, ev.mu_dup, ev.mu_p)
    fit_seed = child_seed(seed, "fitness")
    capacity = cfg.chain.capacity
    max_steps = cfg.grammar.max_steps

    def fitness(g):
        return fitness_language(g, target, ev.samples, ev.lam, fit_seed, max_steps, capacity)

    ids = IdSource()
    pop = [random_genome(template, symbols, substream(seed, "init", i), ev.r_init, ids()) for i in range(ev.pop_size)]
    for g in pop:
        g.fitness = fitness(g)

    history = []
    solved_at = None

    def stats(gen, pop, rec):
        fit = [g.fitness for g in pop]
        best = pop[int(np.argmax(fit))]
        cov = trans = None
        if rec is not None:
            _, cov, trans = price_terms(rec)
        return [gen, max(fit), float(np.mean(fit)), float(np.mean([len(g.rules) for g in pop])), cov, trans], best

    for gen in range(ev.generations + 1):
        best = pop[int(np.argmax([g.fitness for g in pop]))]
        if solved_at is None and best.fitness >= 1.0 - ev.lam * len(best.rules) - 1e-12:
            solved_at = gen
        rec = None
        nxt = pop
        if gen < ev.generations:
            nxt, rec = step_generation(
                pop, ev.tournament_k, ev.elite, em, fitness, substream(seed, "select", gen),
                symbols, ev.r_max, ids,
            )
        row, _ = stats(gen, pop, rec)
        history.append(row)
        pop = nxt

    best = pop[int(np.argmax([g.fitness for g in pop]))]
    val_seed = child_seed(seed, "validate")
    n_val = ev.validation_samples
    validity_oracle = generation_validity(best.rules, target, n_val, val_seed, max_steps, capacity)
    alphabet = make_alphabet(
        max(symbols) + 1, cfg.alphabet.W, cfg.alphabet.D, cfg.alphabet.d_min,
        seed=child_seed(seed, "alphabet"), eps=cfg.alphabet.eps, m_max=cfg.alphabet.m_max,
    )
    engine = SpikingEngine(best.rules, alphabet, cfg.chain_spec(), tap=cfg.chain.tap)
    validity_spiking = generation_validity(
        best.rules, target, n_val, val_seed, max_steps, capacity, engine=engine
    )
    report = {
        "task": "evolve",
        "generations": ev.generations,
        "best_fitness": best.fitness,
        "best_rule_count": len(best.rules),
        "best_rules": best.rules.to_dict(),
        "solved_at": solved_at,
        "validity_oracle": validity_oracle,
        "validity_spiking": validity_spiking,
        "engines_agree": validity_oracle == validity_spiking,
        "initial": {"best": history[0][1], "mean": history[0][2], "rule_count_mean": history[0][3]},
    }
    if manifest is not None:
        write_csv(
            manifest.path("history.csv"),
            ["gen", "best", "mean", "rule_count_mean", "price_cov", "price_trans"],
            history,
        )
        best.rules.save(manifest.path("best_rules.json"))
        write_json(manifest.path("report.json"), report)
    report["history"] = history
    return report


# -- equivalence suite -------------------------------------------------------------


def run_equivalence_suite(cfg: ExperimentConfig, manifest: RunManifest | None = None) -> dict:
    q = cfg.equiv
    a = cfg.alphabet
    rows, failures, leaks, rewrites = [], 0, 0, 0
    for i in range(q.cases):
        rng = substream(cfg.seed, "equiv-case", i)
        alphabet = make_alphabet(
            3 + q.max_symbols, a.W, a.D, a.d_min, seed=child_seed(cfg.seed, "equiv-alphabet", i),
            eps=a.eps, m_max=a.m_max,
        )
        rules, sentence = random_case(rng, alphabet, q.max_rules, q.max_symbols, q.max_len)
        spec = cfg.chain_spec()
        rep = check_equivalence(
            rules, sentence, child_seed(cfg.seed, "equiv-stream", i), q.steps, alphabet, spec,
            cfg.chain.tap, cfg.noise_model(),
        )
        failures += not rep.equal
        leaks += rep.suppression_leaks
        rewrites += rep.rewrites
        kind = rep.divergence["kind"] if rep.divergence else ""
        rows.append((i, int(rep.equal), len(rules), len(sentence), rep.rewrites, rep.suppression_leaks, kind))
    report = {
        "task": "equiv",
        "cases": q.cases,
        "failures": failures,
        "rewrites": rewrites,
        "suppression_leaks": leaks,
        "passed": failures == 0 and leaks == 0,
    }
    if manifest is not None:
        write_csv(
            manifest.path("equiv.csv"),
            ["case", "equal", "rules", "sentence_len", "rewrites", "suppression_leaks", "divergence"],
            rows,
        )
        write_json(manifest.path("report.json"), report)
    return report


# -- quasispecies sweep -------------------------------------------------------------


def run_eigen_sweep(cfg: ExperimentConfig, manifest: RunManifest | None = None) -> dict:
    e = cfg.eigen
    mu_star = quasispecies_threshold(e.L, e.sigma)
    rows = []
    for mi, mult in enumerate(e.multiples):
        mu = min(mult * mu_star, 1.0)
        qc = QuasispeciesConfig(e.L, e.sigma, mu, e.pop_size, e.generations, e.alphabet_size)
        freqs = [late_mean(quasispecies_run(qc, substream(cfg.seed, "eigen", mi, s))) for s in range(e.seeds)]
        rows.append((mu, float(np.mean(freqs))))
    report = {"task": "eigen-sweep", "mu_star": mu_star, "L": e.L, "sigma": e.sigma,
              "sweep": [{"mu": mu, "mean_master_freq": f} for mu, f in rows]}
    if manifest is not None:
        write_csv(manifest.path("eigen_sweep.csv"), ["mu", "mean_master_freq"], rows)
        write_json(manifest.path("report.json"), report)
    return report


# -- single derivation ----------------------------------------------------------------


def run_derive(cfg: ExperimentConfig, engine: str = "oracle", manifest: RunManifest | None = None):
    rules, target = grammar_from_config(cfg)
    stream = DecisionStream(child_seed(cfg.seed, "derive", 0))
    capacity = cfg.chain.capacity
    if engine == "oracle":
        eng = OracleEngine(rules, capacity)
    else:
        n = max(rules.symbols) + 1
        a = cfg.alphabet
        alphabet = make_alphabet(max(n, a.n), a.W, a.D, a.d_min, seed=cfg.seed, eps=a.eps, m_max=a.m_max)
        eng = SpikingEngine(rules, alphabet, cfg.chain_spec(), tap=cfg.chain.tap)
    trace = derive_with(eng, stream, cfg.grammar.max_steps, cfg.grammar.sentence)
    from .grammar import is_member

    report = {
        "task": "derive",
        "engine": engine,
        "steps": len(trace.steps),
        "final": trace.final,
        "terminated_by": trace.terminated_by,
        "member": is_member(trace.final, target),
        "decisions": stream.to_list(),
    }
    if manifest is not None:
        trace.write_jsonl(manifest.path("trace.jsonl"))
        rules.save(manifest.path("rules.json"))
        write_json(manifest.path("report.json"), report)
    return trace, report
