"""Pipeline configuration: TOML files layered over named presets.

A config file may name a ``preset`` (``"twitter-style"`` or
``"twitch-style"``); its own keys then override the preset section by
section. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import copy
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import DataIOError, ParseError, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EMBEDDING_METHODS = ("deepwalk", "node2vec", "asne-lite")
RANKING_METHODS = ("nlcrank", "asnerank", "leaderrank")


def parse_toml(text: str, name: str = "<config>") -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(str(exc), source=name) from None


@dataclass
class DataSection:
    edges: str | None = None
    attributes: str | None = None
    snapshots: str | None = None
    header: bool = False
    separator: str | None = None
    id_column: str | None = None
    attribute_columns: list | None = None


@dataclass
class WalkSection:
    walk_length: int = 80
    num_walks: int = 10
    window: int = 10
    dim: int = 64
    negatives: int = 5
    epochs: int = 1
    lr: float = 0.025
    direction: str = "out"
    p: float = 1.0
    q: float = 1.0


@dataclass
class AsneSection:
    d_struct: int = 20
    d_attr_emb: int = 40
    epochs: int = 20
    batch: int = 128
    lr: float = 0.001
    negatives: int = 5


@dataclass
class EmbeddingSection:
    methods: list = field(default_factory=lambda: list(EMBEDDING_METHODS))
    deepwalk: WalkSection = field(default_factory=WalkSection)
    node2vec: WalkSection = field(default_factory=lambda: WalkSection(dim=128, p=0.25, q=4.0))
    asne_lite: AsneSection = field(default_factory=AsneSection)


@dataclass
class RankingSection:
    methods: list = field(default_factory=lambda: list(RANKING_METHODS))
    report_n: int = 5
    damping: float = 0.85
    tolerance: float = 1e-10
    max_iter: int = 1000
    normalize: bool = False
    hops: int = 3
    leaderrank_tolerance: float = 1e-10
    leaderrank_max_iter: int = 10000


@dataclass
class SirSection:
    tau: float = 0.015
    gamma: float = 1.0
    repetitions: int = 50
    n: int = 100
    direction: str = "influence"


@dataclass
class CombineSection:
    n: int = 15
    ratio: list = field(default_factory=lambda: [1, 2])
    outlier_percentile: float = 10.0


@dataclass
class PipelineConfig:
    preset: str | None = None
    rng_seed: int = 0
    out: str = "out"
    threads: int | None = None
    data: DataSection = field(default_factory=DataSection)
    embedding: EmbeddingSection = field(default_factory=EmbeddingSection)
    ranking: RankingSection = field(default_factory=RankingSection)
    sir: SirSection = field(default_factory=SirSection)
    combine: CombineSection = field(default_factory=CombineSection)
    base_dir: str = "."

    def echo(self) -> dict:
        """Config as plain data, without machine-specific fields."""
        d = asdict(self)
        d.pop("base_dir")
        d.pop("out")
        d.pop("threads")
        return d


PRESETS = {
    "twitter-style": {
        "embedding": {
            "deepwalk": {"walk_length": 80, "num_walks": 10, "window": 10, "dim": 64},
            "node2vec": {"walk_length": 80, "num_walks": 10, "window": 10, "dim": 128, "p": 0.25, "q": 4.0},
            "asne-lite": {"d_struct": 20, "d_attr_emb": 40, "epochs": 20, "batch": 128, "lr": 0.001},
        },
        "sir": {"tau": 0.015, "gamma": 1.0, "repetitions": 50, "n": 100, "direction": "influence"},
    },
    "twitch-style": {
        "embedding": {
            "deepwalk": {"walk_length": 40, "num_walks": 80, "window": 10, "dim": 64, "direction": "undirected"},
            "node2vec": {"walk_length": 40, "num_walks": 80, "window": 10, "dim": 64, "p": 0.25, "q": 4.0,
                         "direction": "undirected"},
            "asne-lite": {"d_struct": 60, "d_attr_emb": 40, "epochs": 30, "batch": 128, "lr": 0.001},
        },
        "sir": {"tau": 0.015, "gamma": 1.0, "repetitions": 50, "n": 100, "direction": "undirected"},
    },
}

_KEYMAP = {"asne-lite": "asne_lite"}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _build(cls, raw: dict, where: str):
    if not isinstance(raw, dict):
        raise ValidationError(f"[{where}] must be a table")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, val in raw.items():
        name = _KEYMAP.get(key, key)
        if name not in known:
            raise ValidationError(f"unknown key {key!r} in [{where}]")
        default = known[name].default_factory() if callable(known[name].default_factory) else None
        if default is not None and hasattr(default, "__dataclass_fields__"):
            val = _build(type(default), val, f"{where}.{key}" if where else key)
        kwargs[name] = val
    return cls(**kwargs)


def _check(cfg: PipelineConfig) -> None:
    def positive(section, *names):
        for nm in names:
            v = getattr(section, nm)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
                raise ValidationError(f"{nm} must be a positive number, got {v!r}")

    bad = [m for m in cfg.embedding.methods if m not in EMBEDDING_METHODS]
    if bad:
        raise ValidationError(f"unknown embedding methods {bad}; choose from {EMBEDDING_METHODS}")
    bad = [m for m in cfg.ranking.methods if m not in RANKING_METHODS]
    if bad:
        raise ValidationError(f"unknown ranking methods {bad}; choose from {RANKING_METHODS}")
    for w in (cfg.embedding.deepwalk, cfg.embedding.node2vec):
        positive(w, "walk_length", "num_walks", "window", "dim", "epochs", "lr", "p", "q")
        if w.direction not in ("out", "undirected"):
            raise ValidationError("walk direction must be 'out' or 'undirected'")
    positive(cfg.embedding.asne_lite, "d_struct", "d_attr_emb", "epochs", "batch", "lr")
    positive(cfg.ranking, "report_n", "tolerance", "max_iter", "hops", "leaderrank_tolerance")
    if not 0 < cfg.ranking.damping < 1:
        raise ValidationError("ranking.damping must lie in (0, 1)")
    if not 0 <= cfg.sir.tau <= 1 or not 0 < cfg.sir.gamma <= 1:
        raise ValidationError("sir.tau must lie in [0, 1] and sir.gamma in (0, 1]")
    positive(cfg.sir, "repetitions", "n")
    if cfg.sir.direction not in ("influence", "undirected"):
        raise ValidationError("sir.direction must be 'influence' or 'undirected'")
    if len(cfg.combine.ratio) != 2 or min(cfg.combine.ratio) < 1:
        raise ValidationError("combine.ratio needs two positive integers")
    if not 0 <= cfg.combine.outlier_percentile < 100:
        raise ValidationError("combine.outlier_percentile must lie in [0, 100)")
    if cfg.threads is not None and cfg.threads < 1:
        raise ValidationError("threads must be >= 1")
    if not isinstance(cfg.rng_seed, int) or cfg.rng_seed < 0:
        raise ValidationError("rng_seed must be a non-negative integer")
    if cfg.data.edges is None and cfg.data.snapshots is None:
        raise ValidationError("[data] needs either 'edges' or 'snapshots'")
    if cfg.data.edges is not None and cfg.data.snapshots is not None:
        raise ValidationError("[data] takes 'edges' or 'snapshots', not both")
    if cfg.data.snapshots is not None and cfg.data.attributes is not None:
        raise ValidationError("with 'snapshots', give attribute files per snapshot in the manifest")


def config_from_dict(raw: dict, base_dir: str | os.PathLike = ".") -> PipelineConfig:
    raw = dict(raw)
    preset = raw.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        raw = _merge(PRESETS[preset], raw)
    cfg = _build(PipelineConfig, raw, "")
    cfg.base_dir = str(base_dir)
    _check(cfg)
    return cfg


def check_paths(cfg: PipelineConfig) -> None:
    """Raise :class:`DataIOError` naming the first configured input that does not exist."""
    from .graph import resolve_data_path
    for key in ("edges", "attributes", "snapshots"):
        rel = getattr(cfg.data, key)
        if rel is not None:
            p = resolve_data_path(rel, cfg.base_dir)
            if not p.is_file():
                raise DataIOError(f"{key} file not found: {p}")


def load_config(path: str | os.PathLike, validate_paths: bool = True) -> PipelineConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataIOError(f"cannot read config {p}: {exc.strerror}") from exc
    cfg = config_from_dict(parse_toml(text, str(p)), p.parent)
    if validate_paths:
        check_paths(cfg)
    return cfg
