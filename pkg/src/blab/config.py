"""Flat `key = value` config files with bracketed sections.

Sections map onto the experiment config: [dataset], [network], [train],
[projector], [experiment]. Unknown sections or keys are errors so typos
never silently fall back to defaults. CLI overrides beat file values.
"""

from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from .boundary import ProjectorOptions
from .experiments import DatasetSpec, ExperimentConfig
from .nn import TrainConfig


class ConfigError(ValueError):
    pass


_DATASET_KEYS = {f.name for f in fields(DatasetSpec)}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
_PROJECTOR_KEYS = {f.name for f in fields(ProjectorOptions)}
_EXPERIMENT_KEYS = {"iterations", "master_seed", "unconverged_abort_fraction",
                    "kappa", "dims_b", "eval_fraction", "test_fraction"}
_SECTIONS = {"dataset": _DATASET_KEYS, "network": {"dims"}, "train": _TRAIN_KEYS,
             "projector": _PROJECTOR_KEYS, "experiment": _EXPERIMENT_KEYS}


def _coerce(value: str, target_type):
    if target_type is bool:
        return value.lower() in ("1", "true", "yes")
    return target_type(value)


def _parse_dims(value: str) -> list[int]:
    try:
        return [int(v) for v in value.replace(" ", "").split(",") if v]
    except ValueError as e:
        raise ConfigError(f"bad dims value {value!r}") from e


def _apply(obj, key: str, value: str) -> None:
    current = getattr(obj, key)
    if key == "adam_betas":
        parts = value.replace(" ", "").split(",")
        setattr(obj, key, (float(parts[0]), float(parts[1])))
        return
    if isinstance(current, bool):
        setattr(obj, key, _coerce(value, bool))
    elif isinstance(current, int):
        setattr(obj, key, int(value))
    elif isinstance(current, float):
        setattr(obj, key, float(value))
    else:
        setattr(obj, key, value)


def parse_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read a config file and apply `section.key -> value` overrides."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e

    cfg = ExperimentConfig()
    items: list[tuple[str, str, str]] = []
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            items.append((section, key, value))
    for dotted, value in (overrides or {}).items():
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must be section.key")
        section, key = dotted.split(".", 1)
        items.append((section, key, value))

    for section, key, value in items:
        if section not in _SECTIONS or key not in _SECTIONS[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        if section == "dataset":
            _apply(cfg.dataset, key, value)
        elif section == "network":
            cfg.dims = _parse_dims(value)
        elif section == "train":
            _apply(cfg.train, key, value)
        elif section == "projector":
            _apply(cfg.projector, key, value)
        else:
            if key == "dims_b":
                cfg.dims_b = _parse_dims(value) if value.strip() else None
            else:
                _apply(cfg, key, value)
    try:
        cfg.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = ["[dataset]"]
    for f in fields(DatasetSpec):
        lines.append(f"{f.name} = {getattr(cfg.dataset, f.name)}")
    lines += ["", "[network]", "dims = " + ",".join(str(d) for d in cfg.dims)]
    lines += ["", "[train]"]
    for f in fields(TrainConfig):
        v = getattr(cfg.train, f.name)
        if f.name == "adam_betas":
            v = f"{v[0]},{v[1]}"
        lines.append(f"{f.name} = {v}")
    lines += ["", "[projector]"]
    for f in fields(ProjectorOptions):
        lines.append(f"{f.name} = {getattr(cfg.projector, f.name)}")
    lines += ["", "[experiment]"]
    lines.append(f"iterations = {cfg.iterations}")
    lines.append(f"master_seed = {cfg.master_seed}")
    lines.append(f"unconverged_abort_fraction = {cfg.unconverged_abort_fraction}")
    lines.append(f"kappa = {cfg.kappa}")
    if cfg.dims_b is not None:
        lines.append("dims_b = " + ",".join(str(d) for d in cfg.dims_b))
    lines.append(f"eval_fraction = {cfg.eval_fraction}")
    lines.append(f"test_fraction = {cfg.test_fraction}")
    return "\n".join(lines) + "\n"
