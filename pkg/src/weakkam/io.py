"""Config files, spec (de)serialization and output writers."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from . import model
from .model import HamiltonianSpec, ScalarField
from .semigroup import SemigroupConfig

__all__ = [
    "ExperimentConfig",
    "spec_from_dict",
    "spec_to_dict",
    "load_config",
    "dump_config",
    "semigroup_config",
    "write_csv",
    "write_json",
    "write_histogram",
]


# -- spec blocks -------------------------------------------------------------------

def _field_from(block, prefix, default=None):
    cos = block.get(f"{prefix}_cos")
    sin = block.get(f"{prefix}_sin")
    if cos is None and sin is None:
        return default
    return ScalarField(tuple(cos or (0.0,)), tuple(sin or (0.0,)), "custom")


def spec_from_dict(block: dict) -> HamiltonianSpec:
    """Build a spec from a config block.

    ``family = "mechanical"`` takes ``U_cos``/``U_sin`` (default: pendulum with
    ``amplitude``); ``"mane"`` takes ``b_cos``/``b_sin`` (default ``sin 2 pi x``);
    ``"remark"`` takes ``amplitude``; ``"custom"`` takes all four lists.
    """
    family = block.get("family", "mechanical")
    if family == "mechanical":
        if block.get("potential") == "zero":
            return model.zero()
        U = _field_from(block, "U")
        if U is None:
            return model.pendulum(float(block.get("amplitude", 1.0)))
        return model.mechanical(U)
    if family == "mane":
        return model.mane(_field_from(block, "b"))
    if family == "remark":
        return model.remark(float(block.get("amplitude", 0.1)))
    if family == "custom":
        zero = model.zero_field()
        return model.custom(_field_from(block, "b", zero), _field_from(block, "U", zero))
    raise ValueError(f"unknown spec family {family!r}")


def spec_to_dict(spec: HamiltonianSpec) -> dict:
    d = {"family": spec.family}
    if spec.param("potential") == "zero":
        d["potential"] = "zero"
        return d
    if spec.family == "remark":
        d["amplitude"] = spec.param("amplitude", 0.1)
        return d
    if spec.family in ("mechanical", "custom"):
        d["U_cos"] = list(spec.U.cos_coef)
        d["U_sin"] = list(spec.U.sin_coef)
    if spec.family in ("mane", "custom"):
        d["b_cos"] = list(spec.b.cos_coef)
        d["b_sin"] = list(spec.b.sin_coef)
    return d


# -- experiment config ----------------------------------------------------------------

_SG_FIELDS = {f.name for f in fields(SemigroupConfig)}


@dataclass
class ExperimentConfig:
    """Everything an experiment needs; ``options`` holds experiment-specific knobs."""

    experiment: str
    spec: dict = field(default_factory=lambda: {"family": "mechanical"})
    lambdas: list = field(default_factory=lambda: [0.1])
    n: int = 1024
    semigroup: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.semigroup) - _SG_FIELDS
        if unknown:
            raise ValueError(f"unknown semigroup keys: {sorted(unknown)}")
        self.lambdas = [float(v) for v in self.lambdas]
        self.n = int(self.n)
        self.seed = int(self.seed)

    def build_spec(self) -> HamiltonianSpec:
        return spec_from_dict(self.spec)

    def option(self, key, default=None):
        return self.options.get(key, default)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["out"] is None:
            del d["out"]
        return d


def semigroup_config(cfg: ExperimentConfig) -> SemigroupConfig:
    return SemigroupConfig(**cfg.semigroup)


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    if experiment is not None:
        data.setdefault("experiment", experiment)
    return ExperimentConfig(**data)


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "wb") as fh:
        tomli_w.dump(cfg.to_dict(), fh)


# -- writers ------------------------------------------------------------------------------

def _clean(obj):
    """Make numpy scalars and non-finite floats JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path, columns: dict, meta: dict | None = None) -> None:
    """Columns of equal length with ``#``-prefixed metadata lines and a header row."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with open(path, "w") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k} = {json.dumps(_clean(v))}\n")
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def write_histogram(path, hist: np.ndarray, meta: dict) -> None:
    """Dense matrix CSV (rows = x bins, columns = p bins) plus a JSON sidecar."""
    path = Path(path)
    np.savetxt(path, hist, delimiter=",", fmt="%.10g")
    write_json(meta, path.with_suffix(".json"))
