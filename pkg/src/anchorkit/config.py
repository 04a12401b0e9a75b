"""Run configuration: a JSON file, optionally overridden by CLI flags."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .pick import LimeParams, SweepGrid
from .search import SearchConfig


@dataclass
class DatasetConfig:
    path: str
    label_column: str
    schema_hints: dict = field(default_factory=dict)


@dataclass
class ModelConfig:
    n_trees: int = 100
    max_depth: int = 8
    seed: int = 0
    aggregation: str = "score-sum"


@dataclass
class RunConfig:
    dataset: DatasetConfig
    quantiles: int = 4
    split_seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    anchor: SearchConfig = field(default_factory=SearchConfig)
    lime: LimeParams = field(default_factory=LimeParams)
    tau: float = 0.3
    sweep: SweepGrid = field(default_factory=SweepGrid)
    top_k: int = 2
    seed: int = 0
    threads: int = 1
    output_dir: str = "out"

    def to_json(self) -> dict:
        d = asdict(self)
        d["lime"]["lambda"] = d["lime"].pop("lam")
        return d

    def digest(self) -> str:
        # threads and the output location must not change any artifact, so they stay out of the digest
        d = self.to_json()
        d.pop("threads")
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _build(cls, d, where):
    if d is None:
        return cls()
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_json(doc: dict, base_dir: str = ".") -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc = dict(doc)
    known = {f for f in RunConfig.__dataclass_fields__}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    if "dataset" not in doc:
        raise ConfigError("config needs a 'dataset' section")
    ds = _build(DatasetConfig, doc.pop("dataset"), "dataset")
    if not os.path.isabs(ds.path):
        ds.path = os.path.normpath(os.path.join(base_dir, ds.path))
    lime = dict(doc.pop("lime", None) or {})
    if "lambda" in lime:
        lime["lam"] = lime.pop("lambda")
    cfg = RunConfig(
        dataset=ds,
        model=_build(ModelConfig, doc.pop("model", None), "model"),
        anchor=_build(SearchConfig, doc.pop("anchor", None), "anchor"),
        lime=_build(LimeParams, lime, "lime"),
        sweep=_build(SweepGrid, doc.pop("sweep", None), "sweep"),
        **doc,
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.quantiles < 2:
        raise ConfigError("quantiles must be >= 2")
    if cfg.model.n_trees < 1 or cfg.model.max_depth < 0:
        raise ConfigError("model.n_trees must be >= 1 and model.max_depth >= 0")
    if cfg.model.aggregation not in ("vote", "score-sum"):
        raise ConfigError("model.aggregation must be 'vote' or 'score-sum'")
    if cfg.lime.sigma <= 0 or cfg.lime.n_samples < cfg.lime.K_feat + 1 or cfg.lime.K_feat < 0 or cfg.lime.lam < 0:
        raise ConfigError("lime parameters out of range")
    if not 0.0 <= cfg.tau <= 1.0:
        raise ConfigError("tau must lie in [0, 1]")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    if cfg.top_k < 1:
        raise ConfigError("top_k must be >= 1")
    if not os.path.isfile(cfg.dataset.path):
        raise ConfigError(f"dataset file not found: {cfg.dataset.path}")


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_json(doc, os.path.dirname(os.path.abspath(path)))
