"""Experiment configuration: JSON with strict validation and materialized defaults."""

from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field

from .chain import ChainSpec
from .codec import Alphabet, NoiseModel, make_alphabet

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class AlphabetConfig:
    n: int = 12
    W: int = 8
    D: int = 50
    d_min: int = 4
    eps: int = 3
    m_max: int = 0


@dataclass
class ChainConfig:
    L: int = 6
    delay: int = 100
    pitch: int = 120
    capacity: int = 8
    refractory: int = 58
    lead: int = 5
    tap: int = 1


@dataclass
class NoiseConfig:
    jitter_max: int = 0
    p_delete: float = 0.0
    p_insert: float = 0.0


@dataclass
class GrammarConfig:
    # None selects the built-in a^n b^n grammar over symbols 3 and 4
    rules: list | None = None
    start: int = 0
    terminals: list | None = None
    target: dict | None = None
    max_steps: int = 50
    sentence: list | None = None


@dataclass
class EvolutionConfig:
    pop_size: int = 50
    generations: int = 50
    tournament_k: int = 3
    elite: int = 1
    lam: float = 0.01
    samples: int = 20
    validation_samples: int = 20
    r_max: int = 8
    r_init: int = 3
    mu_sub: float = 0.05
    mu_del: float = 0.05
    mu_dup: float = 0.05
    mu_p: float = 0.0
    target: dict = field(default_factory=lambda: {"kind": "enumerated_set", "sentences": [[3, 4]]})
    terminals: list = field(default_factory=lambda: [3, 4])


@dataclass
class MarcusConfig:
    n_train_tokens: int = 4
    n_test_tokens: int = 4
    n_sentences: int = 40
    # jitter levels in units of eps
    jitter_levels: list = field(default_factory=lambda: [0, 1, 3, 6])
    seeds: int = 5
    # "fixed" wires slots (0, 2); "evolve" searches slot pairs on the training set
    mode: str = "fixed"
    evo_pop: int = 20
    evo_generations: int = 10


@dataclass
class EquivConfig:
    cases: int = 100
    steps: int = 6
    max_rules: int = 8
    max_symbols: int = 6
    max_len: int = 4


@dataclass
class EigenConfig:
    L: int = 10
    sigma: float = 10.0
    pop_size: int = 1000
    generations: int = 500
    alphabet_size: int = 4
    multiples: list = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0, 1.25, 1.5])
    seeds: int = 5


@dataclass
class ExperimentConfig:
    version: int = SCHEMA_VERSION
    seed: int = 0
    alphabet: AlphabetConfig = field(default_factory=AlphabetConfig)
    chain: ChainConfig = field(default_factory=ChainConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    grammar: GrammarConfig = field(default_factory=GrammarConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    marcus: MarcusConfig = field(default_factory=MarcusConfig)
    equiv: EquivConfig = field(default_factory=EquivConfig)
    eigen: EigenConfig = field(default_factory=EigenConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def chain_spec(self) -> ChainSpec:
        a, c = self.alphabet, self.chain
        return ChainSpec(
            W=a.W,
            L=c.L,
            delay=c.delay,
            pitch=c.pitch,
            capacity=c.capacity,
            refractory=c.refractory,
            lead=c.lead,
            D=a.D,
            eps=a.eps,
        )

    def noise_model(self) -> NoiseModel:
        return NoiseModel(**dataclasses.asdict(self.noise))

    def make_alphabet(self) -> Alphabet:
        a = self.alphabet
        return make_alphabet(a.n, a.W, a.D, a.d_min, seed=self.seed, eps=a.eps, m_max=a.m_max)


def _check_type(value, tp, path):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        for arg in typing.get_args(tp):
            if arg is type(None) and value is None:
                return
            try:
                _check_type(value, arg, path)
                return
            except ConfigError:
                pass
        raise ConfigError(f"{path}: unexpected value {value!r}")
    if tp is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif tp is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, origin or tp)
    if not ok:
        raise ConfigError(f"{path}: expected {getattr(tp, '__name__', tp)}, got {value!r}")


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '/'}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{path}/{key}: unknown key")
    kw = {}
    for name in names:
        if name not in data:
            continue
        tp, sub = hints[name], f"{path}/{name}"
        if dataclasses.is_dataclass(tp):
            kw[name] = _build(tp, data[name], sub)
        else:
            _check_type(data[name], tp, sub)
            kw[name] = float(data[name]) if tp is float else data[name]
    return cls(**kw)


def validate(cfg: ExperimentConfig) -> None:
    if cfg.version != SCHEMA_VERSION:
        raise ConfigError(f"/version: unsupported schema version {cfg.version}")
    if cfg.seed < 0:
        raise ConfigError("/seed: must be >= 0")
    v = cfg.chain_spec().violations()
    if v:
        raise ConfigError("/chain: violates " + "; ".join(v))
    if not 0 <= cfg.chain.tap < cfg.chain.L - 1:
        raise ConfigError(f"/chain/tap: must be in [0, {cfg.chain.L - 1})")
    try:
        cfg.noise_model()
    except ValueError as exc:
        raise ConfigError(f"/noise: {exc}") from None
    ev = cfg.evolution
    if not 0 <= ev.elite < ev.pop_size:
        raise ConfigError("/evolution/elite: must be in [0, pop_size)")
    if ev.tournament_k < 1:
        raise ConfigError("/evolution/tournament_k: must be >= 1")
    if cfg.marcus.mode not in ("fixed", "evolve"):
        raise ConfigError(f"/marcus/mode: expected 'fixed' or 'evolve', got {cfg.marcus.mode!r}")
    if cfg.eigen.sigma <= 1:
        raise ConfigError("/eigen/sigma: must be > 1")


def from_dict(data: dict) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data, "")
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return from_dict(data)
