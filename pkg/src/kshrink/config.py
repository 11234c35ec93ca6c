"""Strict YAML configuration for experiments and dataset estimation.

The file mirrors the in-memory types field for field. Unknown keys are
rejected rather than ignored, since a silently dropped setting would
invalidate a reproduction run. Two top-level sections are understood:

``experiment``
    Mirrors ExperimentConfig: p, k, n, sigma2, v, q, mean_configs,
    estimators, replicates, seed, threads, positive_part_js.

``hyper``
    Mirrors Hyperparameters: a, b, c, big_l, alpha.

``dataset``
    Used by the estimate command: kind ("ksample" or "regression"), v0
    (multi-sample scale matrices), q (optional loss weights), estimators.

Matrices are written as "identity", {scaled_identity: s}, or an explicit
row-major list of rows; a stack is either one such spec applied to every
group or a list of k specs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import yaml

from .estimators import ESTIMATOR_ORDER, resolve_estimator
from .model import Hyperparameters
from .montecarlo import ExperimentConfig, MeanConfig


class ConfigError(ValueError):
    """A configuration file is malformed, mistyped, or has unknown keys."""


_EXPERIMENT_KEYS = {
    "p", "k", "n", "sigma2", "v", "q", "mean_configs", "estimators",
    "replicates", "seed", "threads", "positive_part_js",
}
_HYPER_KEYS = {"a", "b", "c", "big_l", "alpha"}
_DATASET_KEYS = {"kind", "v0", "q", "estimators"}
_MEAN_KEYS = {"name", "scales", "mu"}


def _require_mapping(node: Any, where: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(node) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")


_REQUIRED = object()


def _get_int(node: dict, key: str, where: str, default: Any = _REQUIRED) -> Any:
    if key not in node:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r} in {where}")
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    return value


def _get_float(node: dict, key: str, where: str, default: Any = None, required: bool = False) -> Any:
    if key not in node:
        if required:
            raise ConfigError(f"missing required key {key!r} in {where}")
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _get_bool(node: dict, key: str, where: str, default: bool) -> bool:
    if key not in node:
        return default
    value = node[key]
    if not isinstance(value, bool):
        raise ConfigError(f"{where}.{key} must be true or false, got {value!r}")
    return value


def _number_list(node: Any, where: str) -> list[float]:
    if not isinstance(node, list) or not node:
        raise ConfigError(f"{where} must be a non-empty list of numbers")
    out = []
    for j, v in enumerate(node):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}[{j}] must be a number, got {v!r}")
        out.append(float(v))
    return out


def parse_matrix(node: Any, p: int, where: str) -> np.ndarray:
    """Parse one p x p matrix spec."""
    if node == "identity":
        return np.eye(p)
    if isinstance(node, dict):
        _check_keys(node, {"scaled_identity"}, where)
        s = _get_float(node, "scaled_identity", where, required=True)
        if s <= 0:
            raise ConfigError(f"{where}.scaled_identity must be positive, got {s}")
        return s * np.eye(p)
    if isinstance(node, list):
        if len(node) != p:
            raise ConfigError(f"{where} must have {p} rows, got {len(node)}")
        rows = []
        for i, row in enumerate(node):
            values = _number_list(row, f"{where}[{i}]")
            if len(values) != p:
                raise ConfigError(
                    f"{where}[{i}] must have {p} entries, got {len(values)}"
                )
            rows.append(values)
        return np.asarray(rows, dtype=float)
    raise ConfigError(
        f"{where} must be 'identity', {{scaled_identity: s}}, or a list of rows"
    )


def parse_matrix_stack(node: Any, k: int, p: int, where: str) -> np.ndarray:
    """Parse a (k, p, p) stack: one spec for all groups, or a list of k."""
    per_group = isinstance(node, list) and all(
        isinstance(el, (str, dict)) or (isinstance(el, list) and el and isinstance(el[0], list))
        for el in node
    )
    if per_group:
        if len(node) != k:
            raise ConfigError(f"{where} must list {k} matrices, got {len(node)}")
        return np.stack([parse_matrix(el, p, f"{where}[{i}]") for i, el in enumerate(node)])
    single = parse_matrix(node, p, where)
    return np.broadcast_to(single, (k, p, p)).copy()


def parse_mean_configs(node: Any, k: int, p: int, where: str) -> tuple[MeanConfig, ...]:
    if not isinstance(node, list) or not node:
        raise ConfigError(f"{where} must be a non-empty list")
    out = []
    for i, entry in enumerate(node):
        here = f"{where}[{i}]"
        entry = _require_mapping(entry, here)
        _check_keys(entry, _MEAN_KEYS, here)
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise ConfigError(f"{here}.name must be a non-empty string")
        if ("scales" in entry) == ("mu" in entry):
            raise ConfigError(f"{here} needs exactly one of 'scales' or 'mu'")
        if "scales" in entry:
            scales = _number_list(entry["scales"], f"{here}.scales")
            if len(scales) != k:
                raise ConfigError(f"{here}.scales must have {k} entries, got {len(scales)}")
            out.append(MeanConfig.from_scales(name, scales, p))
        else:
            rows = entry["mu"]
            if not isinstance(rows, list) or len(rows) != k:
                raise ConfigError(f"{here}.mu must list {k} rows")
            parsed = []
            for j, r in enumerate(rows):
                values = _number_list(r, f"{here}.mu[{j}]")
                if len(values) != p:
                    raise ConfigError(f"{here}.mu must be {k}x{p}")
                parsed.append(values)
            out.append(MeanConfig(name=name, mu=np.asarray(parsed, dtype=float)))
    return tuple(out)


def parse_estimators(node: Any, where: str) -> tuple[str, ...]:
    if node is None:
        return ESTIMATOR_ORDER
    if not isinstance(node, list) or not node:
        raise ConfigError(f"{where} must be a non-empty list of estimator names")
    names = []
    for i, entry in enumerate(node):
        if not isinstance(entry, str):
            raise ConfigError(f"{where}[{i}] must be a string, got {entry!r}")
        try:
            name, _ = resolve_estimator(entry)
        except KeyError as exc:
            raise ConfigError(f"{where}[{i}]: {exc.args[0]}") from None
        names.append(name)
    return tuple(names)


def parse_hyper(node: Any) -> Hyperparameters:
    if node is None:
        return Hyperparameters()
    node = _require_mapping(node, "hyper")
    _check_keys(node, _HYPER_KEYS, "hyper")
    base = Hyperparameters()
    return Hyperparameters(
        a=_get_float(node, "a", "hyper", base.a),
        b=_get_float(node, "b", "hyper", base.b),
        c=_get_float(node, "c", "hyper", base.c),
        big_l=_get_float(node, "big_l", "hyper", base.big_l),
        alpha=_get_float(node, "alpha", "hyper", base.alpha),
    )


def load_document(path: str) -> dict:
    """Load and type-check the top level of a config file."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if doc is None:
        doc = {}
    doc = _require_mapping(doc, f"{path} top level")
    _check_keys(doc, {"experiment", "hyper", "dataset"}, f"{path} top level")
    return doc


def experiment_from_document(
    doc: dict,
    seed: int | None = None,
    threads: int | None = None,
    replicates: int | None = None,
) -> ExperimentConfig:
    """Build an ExperimentConfig; CLI overrides beat file values."""
    if "experiment" not in doc:
        raise ConfigError("missing 'experiment' section")
    node = _require_mapping(doc["experiment"], "experiment")
    _check_keys(node, _EXPERIMENT_KEYS, "experiment")
    p = _get_int(node, "p", "experiment")
    k = _get_int(node, "k", "experiment")
    n = _get_int(node, "n", "experiment")
    if "v" not in node:
        raise ConfigError("missing required key 'v' in experiment")
    if "mean_configs" not in node:
        raise ConfigError("missing required key 'mean_configs' in experiment")
    v = parse_matrix_stack(node["v"], k, p, "experiment.v")
    q = None
    if "q" in node and node["q"] is not None:
        q = parse_matrix_stack(node["q"], k, p, "experiment.q")
    return ExperimentConfig(
        p=p,
        k=k,
        n=n,
        sigma2=_get_float(node, "sigma2", "experiment", required=True),
        v=v,
        q=q,
        mean_configs=parse_mean_configs(node["mean_configs"], k, p, "experiment.mean_configs"),
        estimators=parse_estimators(node.get("estimators"), "experiment.estimators"),
        replicates=replicates if replicates is not None else _get_int(node, "replicates", "experiment", 5000),
        seed=seed if seed is not None else _get_int(node, "seed", "experiment", 20260816),
        threads=threads if threads is not None else _get_int(node, "threads", "experiment", 1),
        hyper=parse_hyper(doc.get("hyper")),
        positive_part_js=_get_bool(node, "positive_part_js", "experiment", False),
    )


@dataclass(frozen=True)
class DatasetSpec:
    """Estimation settings: dataset kind, scale matrices, loss, estimators.

    v0_node and q_node hold the raw matrix specs; the dimensions are only
    known after the dataset is read, so materialize with v0_matrices /
    q_matrices at that point.
    """

    kind: str
    v0_node: Any
    q_node: Any
    estimators: tuple[str, ...]
    hyper: Hyperparameters

    def v0_matrices(self, k: int, p: int) -> np.ndarray:
        if self.v0_node is None:
            return np.broadcast_to(np.eye(p), (k, p, p)).copy()
        return parse_matrix_stack(self.v0_node, k, p, "dataset.v0")

    def q_matrices(self, k: int, p: int) -> np.ndarray | None:
        if self.q_node is None:
            return None
        return parse_matrix_stack(self.q_node, k, p, "dataset.q")


def dataset_from_document(doc: dict) -> DatasetSpec:
    if "dataset" not in doc:
        raise ConfigError("missing 'dataset' section")
    node = _require_mapping(doc["dataset"], "dataset")
    _check_keys(node, _DATASET_KEYS, "dataset")
    kind = node.get("kind")
    if kind not in ("ksample", "regression"):
        raise ConfigError(f"dataset.kind must be 'ksample' or 'regression', got {kind!r}")
    if kind == "regression" and node.get("v0") is not None:
        raise ConfigError("dataset.v0 applies only to kind 'ksample'")
    return DatasetSpec(
        kind=kind,
        v0_node=node.get("v0"),
        q_node=node.get("q"),
        estimators=parse_estimators(node.get("estimators"), "dataset.estimators"),
        hyper=parse_hyper(doc.get("hyper")),
    )
