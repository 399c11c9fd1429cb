"""Single-peak quasispecies: master-sequence persistence under copying error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuasispeciesConfig:
    L: int = 10
    sigma: float = 10.0
    mu: float = 0.0
    pop_size: int = 1000
    generations: int = 500
    alphabet_size: int = 4

    def __post_init__(self):
        if self.sigma <= 1:
            raise ValueError(f"sigma must be > 1, got {self.sigma}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must be in [0, 1], got {self.mu}")
        if self.L < 1 or self.pop_size < 1 or self.alphabet_size < 2:
            raise ValueError("need L >= 1, pop_size >= 1, alphabet_size >= 2")


def quasispecies_threshold(L: int, sigma: float) -> float:
    """Critical per-symbol error rate ``1 - sigma**(-1/L)``.

    Above it the master's effective growth ``sigma * (1 - mu)**L`` drops
    below the background's and the master is lost (no back-mutation).
    """
    if sigma <= 1:
        raise ValueError(f"sigma must be > 1, got {sigma}")
    return 1.0 - sigma ** (-1.0 / L)


def quasispecies_run(cfg: QuasispeciesConfig, rng: np.random.Generator) -> np.ndarray:
    """Wright-Fisher run started from an all-master population.

    Each generation parents are resampled in proportion to fitness (sigma
    for the all-zero master, 1 otherwise), then every symbol is miscopied
    with probability ``mu`` to a uniformly chosen different symbol. Returns
    the master frequency after each generation.
    """
    pop = np.zeros((cfg.pop_size, cfg.L), dtype=np.int8)
    traj = np.empty(cfg.generations)
    for t in range(cfg.generations):
        master = ~pop.any(axis=1)
        w = np.where(master, cfg.sigma, 1.0)
        parents = rng.choice(cfg.pop_size, size=cfg.pop_size, p=w / w.sum())
        pop = pop[parents]
        if cfg.mu:
            err = rng.random(pop.shape) < cfg.mu
            shift = rng.integers(1, cfg.alphabet_size, size=pop.shape, dtype=np.int8)
            pop = np.where(err, (pop + shift) % cfg.alphabet_size, pop).astype(np.int8)
        traj[t] = np.mean(~pop.any(axis=1))
    return traj


def late_mean(traj: np.ndarray, frac: float = 0.5) -> float:
    """Mean of the last ``frac`` of a trajectory."""
    n = max(1, int(len(traj) * frac))
    return float(np.mean(traj[-n:]))
