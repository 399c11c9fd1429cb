"""Command-line entry point: ``spikesym <command> [--config F] [--seed N] [--out-dir D]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .chain import build_chain, read_sentence, write_sentence
from .codec import AlphabetInfeasible
from .config import ConfigError, ExperimentConfig, from_dict, load_config, validate
from .output import RunManifest, write_json
from .rules import RuleError
from .seeding import substream
from .substrate import write_trace_csv
from . import tasks

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_EQUIV = 4


def _common(p: argparse.ArgumentParser) -> None:
    # SUPPRESS lets flags appear before or after the subcommand without clobbering
    p.add_argument("--config", default=argparse.SUPPRESS, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (overrides config)")
    p.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory (default: runs/<command>)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spikesym", description="Symbol rewriting on spiking delay-line chains.")
    _common(p)
    sub = p.add_subparsers(dest="command", required=True)
    sub_help = {
        "alphabet": "generate and save a spike-template alphabet",
        "simulate": "write a sentence into the chain and read it back at every stage",
        "derive": "run one derivation from the start symbol",
        "equiv": "oracle vs. spiking equivalence on random rule sets",
        "evolve": "evolve rule sets toward a target language",
        "marcus": "ABA/ABB discrimination with the equality circuit",
        "eigen-sweep": "master-sequence frequency across error rates",
    }
    for name, help_ in sub_help.items():
        sp = sub.add_parser(name, help=help_)
        _common(sp)
        if name == "derive":
            sp.add_argument("--engine", choices=("oracle", "spiking"), default="oracle")
        if name == "equiv":
            sp.add_argument("--cases", type=int, default=None, help="number of random cases")
        if name == "simulate":
            sp.add_argument("--sentence", type=int, nargs="+", default=None)
    return p


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else from_dict({})
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "cases", None) is not None:
        cfg.equiv.cases = args.cases
    validate(cfg)
    return cfg


def _simulate(cfg: ExperimentConfig, args, m: RunManifest) -> dict:
    alphabet = cfg.make_alphabet()
    spec = cfg.chain_spec()
    sentence = args.sentence or cfg.grammar.sentence or [3, 4, 3]
    unknown = [s for s in sentence if s not in alphabet.templates]
    if unknown:
        raise ConfigError(f"/grammar/sentence: symbols {unknown} not in the alphabet")
    chain = build_chain(spec)
    noise = cfg.noise_model()
    write_sentence(chain, sentence, alphabet, 0, 1, noise, substream(cfg.seed, "simulate"))
    chain.network.run_until(chain.horizon(spec.L - 1, len(sentence)))
    stages = []
    for k in range(spec.L):
        r = read_sentence(chain, alphabet, k, 0, len(sentence))
        stages.append({"stage": k, "tokens": [str(s) if not isinstance(s, int) else s for s in r.slots]})
    write_trace_csv(chain.network.trace, m.path("trace.csv"))
    chain.save_layout(m.path("layout.json"))
    report = {"task": "simulate", "sentence": list(sentence), "stages": stages,
              "recovered": stages[-1]["tokens"] == list(sentence)}
    write_json(m.path("report.json"), report)
    return report


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cmd = args.command
    try:
        cfg = _load(args)
        out = Path(getattr(args, "out_dir", None) or Path("runs") / cmd)
        m = RunManifest(out, cmd, cfg.to_dict(), cfg.seed)
        code = EXIT_OK
        if cmd == "alphabet":
            alphabet = cfg.make_alphabet()
            alphabet.save(m.path("alphabet.json"))
            summary = f"{len(alphabet.symbols)} symbols, W={alphabet.W}, D={alphabet.D}"
        elif cmd == "simulate":
            r = _simulate(cfg, args, m)
            summary = f"recovered={r['recovered']}"
        elif cmd == "derive":
            trace, r = tasks.run_derive(cfg, args.engine, m)
            summary = f"{r['final']} ({r['terminated_by']}, {r['steps']} steps)"
        elif cmd == "equiv":
            r = tasks.run_equivalence_suite(cfg, m)
            summary = f"{r['cases'] - r['failures']}/{r['cases']} equal, {r['suppression_leaks']} leaks"
            if not r["passed"]:
                code = EXIT_EQUIV
        elif cmd == "evolve":
            r = tasks.run_grammar_evolution(cfg, m)
            summary = f"best fitness {r['best_fitness']:.4f} with {r['best_rule_count']} rules"
        elif cmd == "marcus":
            r = tasks.run_marcus(cfg, m)
            summary = f"train {r['train_accuracy']:.3f}, held-out {r['heldout_accuracy']:.3f}"
        else:
            r = tasks.run_eigen_sweep(cfg, m)
            summary = f"mu*={r['mu_star']:.5f}"
        m.finish()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuleError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AlphabetInfeasible as exc:
        print(f"infeasible alphabet: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"{cmd}: {summary} -> {out}")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
