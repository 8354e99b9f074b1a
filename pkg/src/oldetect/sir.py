"""Discrete-time SIR spreading from a seed set.

Infection travels against follow edges: a followee infects its followers.
Each step, every infectious node tries each susceptible contact once
(infecting it when a uniform draw is below ``tau``), then recovers with
probability ``gamma``; nodes infected during a step become infectious from
the next one.

Draws come from a counter-based hash of ``(stream key, edge, age of the
infectious node)`` rather than a sequential generator. Two runs that share
keys but differ in ``tau`` therefore see the same numbers for the same
contacts, and the infected-ever set grows monotonically with ``tau``.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import _backend
from .errors import ValidationError
from .graph import DirectedGraph

EASY = {"tau": 0.5, "gamma": 1.0}
HARD = {"tau": 0.015, "gamma": 1.0}
MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class SIRConfig:
    tau: float
    gamma: float = 1.0
    seeds: tuple[int, ...] = ()
    repetitions: int = 50
    rng_seed: int = 0
    direction: str = "influence"

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError("tau must lie in [0, 1]")
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError("gamma must lie in (0, 1]")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        if not self.seeds:
            raise ValidationError("seed set is empty")
        if self.direction not in ("influence", "undirected"):
            raise ValidationError("direction must be 'influence' or 'undirected'")


@dataclass(frozen=True, eq=False)
class SIRTrace:
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    ever: np.ndarray

    @property
    def steps(self) -> int:
        return self.S.size - 1

    @property
    def final_infected_ever(self) -> int:
        return int(self.ever.sum())

    @property
    def infected_ever_curve(self) -> np.ndarray:
        n = self.S[0] + self.I[0] + self.R[0]
        return n - self.S


@dataclass(frozen=True, eq=False)
class SIRSummary:
    config: SIRConfig
    finals: np.ndarray
    mean_curve: np.ndarray

    @property
    def mean_final(self) -> float:
        return float(self.finals.mean())

    @property
    def std_final(self) -> float:
        return float(self.finals.std())


def stream_keys(rng_seed: int, repetition: int) -> tuple[int, int]:
    """Infection and recovery keys for one repetition."""
    k = np.random.SeedSequence(rng_seed, spawn_key=(repetition,)).generate_state(2, np.uint64)
    return int(k[0]), int(k[1])


def _contacts(graph: DirectedGraph, direction: str):
    return graph.adjacency("in" if direction == "influence" else "undirected")


def _check_seeds(graph: DirectedGraph, seeds) -> None:
    bad = [s for s in seeds if not 0 <= s < graph.node_count]
    if bad:
        raise ValidationError(f"seeds outside the graph: {bad[:5]}")


def run_sir(graph: DirectedGraph, cfg: SIRConfig, repetition: int = 0) -> SIRTrace:
    _check_seeds(graph, cfg.seeds)
    indptr, indices = _contacts(graph, cfg.direction)
    ki, kr = stream_keys(cfg.rng_seed, repetition)
    S, I, R, ever = _backend.kernels().sir_run(indptr, indices, np.asarray(cfg.seeds, dtype=np.int64),
                                               cfg.tau, cfg.gamma, ki, kr, MAX_STEPS)
    return SIRTrace(S, I, R, np.asarray(ever, dtype=bool))


def evaluate_seeds(graph: DirectedGraph, cfg: SIRConfig, threads: int = 1) -> SIRSummary:
    """Run ``cfg.repetitions`` independent traces and average them.

    Repetition ``r`` uses the stream keys of ``(rng_seed, r)``, so the summary
    does not depend on ``threads``.
    """
    _check_seeds(graph, cfg.seeds)
    reps = range(cfg.repetitions)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            traces = list(ex.map(lambda r: run_sir(graph, cfg, r), reps))
    else:
        traces = [run_sir(graph, cfg, r) for r in reps]
    finals = np.array([t.final_infected_ever for t in traces], dtype=np.int64)
    longest = max(t.S.size for t in traces)
    curves = np.empty((len(traces), longest), dtype=np.int64)
    for k, t in enumerate(traces):
        c = t.infected_ever_curve
        curves[k, :c.size] = c
        curves[k, c.size:] = c[-1]
    return SIRSummary(cfg, finals, curves.sum(axis=0) / len(traces))


def summary_to_csv(summary: SIRSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "mean_infected_ever"])
    for step, v in enumerate(summary.mean_curve.tolist()):
        w.writerow([step, repr(v)])
    return buf.getvalue()


def summary_to_json(summary: SIRSummary, **extra) -> str:
    cfg = asdict(summary.config)
    cfg["seeds"] = list(cfg["seeds"])
    doc = {"config": cfg, "mean_final_infected_ever": summary.mean_final,
           "std_final_infected_ever": summary.std_final, "steps": int(summary.mean_curve.size - 1), **extra}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
