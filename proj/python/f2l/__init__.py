"""Deterministic federated few-shot learning simulator."""

from ._f2l import (
    ConfigError,
    Dataset,
    DomainError,
    EpisodeError,
    ParseError,
    ShapeError,
    adaptive_temperature,
    aggregate,
    config_keys,
    cross_entropy,
    derive_seed,
    kd_loss,
    load_csv,
    mi_loss,
    parse_config,
    partition,
    run_experiment,
    serialize_config,
    softmax_rows,
    split_classes,
    synth_gaussian,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "DomainError",
    "EpisodeError",
    "ParseError",
    "ShapeError",
    "adaptive_temperature",
    "aggregate",
    "config_keys",
    "cross_entropy",
    "derive_seed",
    "kd_loss",
    "load_csv",
    "mi_loss",
    "parse_config",
    "partition",
    "run_experiment",
    "serialize_config",
    "softmax_rows",
    "split_classes",
    "synth_gaussian",
]
