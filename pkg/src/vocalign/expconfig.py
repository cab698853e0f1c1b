"""Experiment configuration: a flat, typed key-value document.

Configs are JSON objects with only scalar values (published schema
below). Unknown keys and wrong types are rejected outright. Environment
variables named VOCALIGN_<KEY> may override path-valued keys — and only
those — so batch jobs can relocate inputs without being able to touch
hyperparameters.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .embeddings import ExtractionStrategy
from .errors import ConfigError
from .pairs import DatasetSpec
from .siamese import SiameseConfig

__all__ = ["SCHEMA", "PATH_KEYS", "ExperimentConfig", "load_config"]

# key -> (type, default, description); None defaults mean "not set"
SCHEMA: dict[str, tuple[type, object, str]] = {
    "atom_file": (str, None, "pipe-delimited AUI|STR|SRC|CUI input file"),
    "vector_file": (str, None, "word2vec-format token vectors (omit for random init)"),
    "out_dir": (str, "runs/run", "run directory for all artifacts"),
    "encoder_registry": (str, None, "JSON file mapping encoder names to locators"),
    "encoder_model": (str, "mock", "contextual encoder name or locator (extract)"),
    "cross_model": (str, "lexical", "pair classifier name or locator (cross-eval)"),
    "seed": (int, 0, "global seed; every random draw derives from it"),
    # pair generation
    "negative_ratio": (float, 7.6, "negatives per positive"),
    "topn": (int, 10, "hard negatives mined per anchor atom"),
    "weight_topn_sim": (float, 1 / 3, "TOPN_SIM share of the negative quota"),
    "weight_ran_sim": (float, 1 / 3, "RAN_SIM share of the negative quota"),
    "weight_ran_nosim": (float, 1 / 3, "RAN_NOSIM share of the negative quota"),
    "cross_source_only": (bool, True, "keep only cross-source positives"),
    "test_fraction": (float, 0.2, "held-out share per stratum"),
    # extraction
    "occurrence": (str, "AVERAGE", "FIRST | LAST | AVERAGE"),
    "layer_pool": (str, "LAST_LAYER", "LAST_LAYER | AVG_LAST4"),
    "extract_corpus": (str, "all", "'all' atom strings or 'train' pairs only"),
    # siamese
    "siamese_tokenizer": (str, "word", "'word' or a contextual-encoder locator to borrow"),
    "embed_dim": (int, 50, "embedding width (must match vector_file if set)"),
    "lstm_hidden": (int, 50, "recurrent units per direction"),
    "dense1_units": (int, 128, "first dense layer width"),
    "dense2_units": (int, 50, "tower output width"),
    "use_attention": (bool, False, "additive attention pooling instead of final states"),
    "max_tokens": (int, 30, "token cap per atom string"),
    "learning_rate": (float, 0.001, "Adam step size"),
    "batch_size": (int, 8192, "training mini-batch size"),
    "epochs": (int, 100, "training epochs"),
    "threshold": (float, 0.5, "decision threshold for label 1"),
    "trainable_embeddings": (bool, True, "update the embedding layer during training"),
    "loss": (str, "bce", "bce | mse"),
    # cross-encoder
    "cross_max_len": (int, 64, "packed sequence length cap"),
    "cross_invert_scores": (bool, False, "flip head polarity (1 - p)"),
}

PATH_KEYS = ("atom_file", "vector_file", "out_dir", "encoder_registry")


def _schema_defaults() -> dict:
    return {key: default for key, (_, default, _) in SCHEMA.items()}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=_schema_defaults)

    def __post_init__(self):
        merged = _schema_defaults()
        for key, value in self.values.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            expected, _, _ = SCHEMA[key]
            if value is None:
                if key in PATH_KEYS:
                    merged[key] = None
                    continue
                raise ConfigError(f"config key {key!r} must not be null")
            if expected is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, expected) or (
                expected is not bool and isinstance(value, bool)
            ):
                raise ConfigError(
                    f"config key {key!r} must be {expected.__name__}, "
                    f"got {type(value).__name__}"
                )
            merged[key] = value
        self.values = merged
        # fail fast on invalid hyperparameter combinations
        self.dataset_spec()
        self.siamese_config()
        self.strategy()

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str):
        return self.values.get(key)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        merged = dict(self.values)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig(merged)

    def dataset_spec(self) -> DatasetSpec:
        try:
            return DatasetSpec(
                negative_ratio=self["negative_ratio"],
                topn=self["topn"],
                stratum_weights=(
                    self["weight_topn_sim"],
                    self["weight_ran_sim"],
                    self["weight_ran_nosim"],
                ),
                seed=self["seed"],
                cross_source_only=self["cross_source_only"],
                test_fraction=self["test_fraction"],
            )
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def siamese_config(self) -> SiameseConfig:
        return SiameseConfig(
            embed_dim=self["embed_dim"],
            lstm_hidden=self["lstm_hidden"],
            dense1_units=self["dense1_units"],
            dense2_units=self["dense2_units"],
            use_attention=self["use_attention"],
            max_tokens=self["max_tokens"],
            learning_rate=self["learning_rate"],
            batch_size=self["batch_size"],
            epochs=self["epochs"],
            threshold=self["threshold"],
            seed=self["seed"],
            trainable_embeddings=self["trainable_embeddings"],
            loss=self["loss"],
        )

    def strategy(self) -> ExtractionStrategy:
        try:
            return ExtractionStrategy(self["occurrence"], self["layer_pool"])
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def resolve_encoder(self, key: str) -> str:
        """Map an encoder name through the registry file, if one is
        configured and contains it; otherwise the value is the locator."""
        name = self[key]
        registry_path = self.get("encoder_registry")
        if registry_path:
            try:
                registry = json.loads(Path(registry_path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read encoder registry {registry_path!r}: {e}") from None
            if not isinstance(registry, dict):
                raise ConfigError(f"encoder registry {registry_path!r} must be a JSON object")
            if name in registry:
                return str(registry[name])
        return name

    def to_json(self) -> str:
        return json.dumps(self.values, sort_keys=True, indent=2) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(
            json.dumps(self.values, sort_keys=True).encode("utf-8")
        ).hexdigest()


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Defaults <- config file <- VOCALIGN_* env paths <- CLI overrides."""
    values: dict = {}
    if path is not None:
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {path!r}: {e}") from None
        try:
            loaded = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path!r} is not valid JSON: {e}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path!r} must hold a JSON object")
        values.update(loaded)
    for key in PATH_KEYS:
        env = os.environ.get(f"VOCALIGN_{key.upper()}")
        if env is not None:
            values[key] = env
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(values)
