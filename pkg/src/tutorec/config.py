"""Engine configuration: a JSON tree of paths, filter, and training knobs.

Command-line flags override file values, which override defaults. The
``STREAMLINK_CONFIG`` environment variable supplies the config path when no
flag does. A per-section ``seed`` beats the engine-wide one; the ``--seed``
flag beats everything.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .filtering import FilterConfig
from .nn import TrainConfig

CONFIG_ENV = "STREAMLINK_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass
class PathsConfig:
    transcripts: str | None = None
    tutorials: str | None = None
    ontology: str | None = None
    annotations: str | None = None
    embeddings: str | None = None
    model_dir: str = "models"
    stats_cache: str | None = None

    def require(self, name: str) -> Path:
        value = getattr(self, name)
        if not value:
            raise ConfigError(f"config is missing paths.{name}")
        path = Path(value)
        if not path.exists():
            raise ConfigError(f"paths.{name}: {path} does not exist")
        return path

    def stats_cache_path(self) -> Path:
        if self.stats_cache:
            return Path(self.stats_cache)
        return Path(self.model_dir) / "stats-cache.txt"


@dataclass
class SummarizerConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    select_threshold: float = 0.5


@dataclass
class SupervisedConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    negative_ratio: int = 3
    decision_threshold: float = 0.5


@dataclass
class EvalConfig:
    granularity: str = "transcript"
    normalize_scores: bool = False

    def __post_init__(self) -> None:
        if self.granularity not in ("transcript", "sentence"):
            raise ConfigError(f"unknown eval granularity {self.granularity!r}")


@dataclass
class EngineConfig:
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    summarizer: SummarizerConfig = field(default_factory=SummarizerConfig)
    ranker: TrainConfig = field(default_factory=TrainConfig)
    supervised: SupervisedConfig = field(default_factory=SupervisedConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)


def _check_empty(section: dict, where: str) -> None:
    if section:
        raise ConfigError(f"unknown keys in {where}: {sorted(section)}")


def _float(value) -> float:
    # JSON has no -inf literal; accept "inf"/"-inf" strings for thresholds
    if isinstance(value, str):
        return float(value)
    return float(value)


def _train_config(section: dict, where: str, default_seed: int) -> TrainConfig:
    cfg = TrainConfig(
        learning_rate=_float(section.pop("learning_rate", 0.01)),
        epochs=int(section.pop("epochs", 100)),
        seed=int(section.pop("seed", default_seed)),
        alpha=_float(section.pop("alpha", 1.0)),
        beta=_float(section.pop("beta", 1.0)),
        loss_mix_alpha=_float(section.pop("loss_mix_alpha", 1.0)),
        loss_mix_beta=_float(section.pop("loss_mix_beta", 1.0)),
        hidden_dim=int(section.pop("hidden_dim", 64)),
    )
    _check_empty(section, where)
    return cfg


def parse_engine_config(tree: dict, seed_override: int | None = None) -> EngineConfig:
    tree = dict(tree)
    seed = int(tree.pop("seed", 0))
    if seed_override is not None:
        seed = seed_override

    paths_raw = dict(tree.pop("paths", {}))
    paths = PathsConfig(
        transcripts=paths_raw.pop("transcripts", None),
        tutorials=paths_raw.pop("tutorials", None),
        ontology=paths_raw.pop("ontology", None),
        annotations=paths_raw.pop("annotations", None),
        embeddings=paths_raw.pop("embeddings", None),
        model_dir=paths_raw.pop("model_dir", "models"),
        stats_cache=paths_raw.pop("stats_cache", None),
    )
    _check_empty(paths_raw, "paths")

    filt_raw = dict(tree.pop("filter", {}))
    filt = FilterConfig(
        delta=_float(filt_raw.pop("delta", float("-inf"))),
        fallback_min_keep=int(filt_raw.pop("fallback_min_keep", 5)),
    )
    _check_empty(filt_raw, "filter")

    summ_raw = dict(tree.pop("summarizer", {}))
    select_threshold = _float(summ_raw.pop("select_threshold", 0.5))
    summarizer = SummarizerConfig(
        train=_train_config(summ_raw, "summarizer", seed),
        select_threshold=select_threshold,
    )

    ranker = _train_config(dict(tree.pop("ranker", {})), "ranker", seed)

    sup_raw = dict(tree.pop("supervised", {}))
    negative_ratio = int(sup_raw.pop("negative_ratio", 3))
    decision_threshold = _float(sup_raw.pop("decision_threshold", 0.5))
    supervised = SupervisedConfig(
        train=_train_config(sup_raw, "supervised", seed),
        negative_ratio=negative_ratio,
        decision_threshold=decision_threshold,
    )

    eval_raw = dict(tree.pop("eval", {}))
    eval_cfg = EvalConfig(
        granularity=eval_raw.pop("granularity", "transcript"),
        normalize_scores=bool(eval_raw.pop("normalize_scores", False)),
    )
    _check_empty(eval_raw, "eval")
    _check_empty(tree, "config")

    if seed_override is not None:
        for section in (summarizer.train, ranker, supervised.train):
            section.seed = seed_override
    return EngineConfig(
        seed=seed,
        paths=paths,
        filter=filt,
        summarizer=summarizer,
        ranker=ranker,
        supervised=supervised,
        eval=eval_cfg,
    )


def load_engine_config(path: str | None, seed_override: int | None = None) -> EngineConfig:
    """Read the config file (flag, else $STREAMLINK_CONFIG, else defaults)."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return parse_engine_config({}, seed_override)
    try:
        with open(path, encoding="utf-8") as fh:
            tree = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: config root must be an object")
    return parse_engine_config(tree, seed_override)
