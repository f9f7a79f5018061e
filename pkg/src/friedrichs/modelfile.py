"""Model definition files (TOML).

Example::

    units = "natural units, hbar = 1"
    spectrum = "full_line"
    levels = [1.0]
    labels = ["phi1"]

    [[channel]]
    kind = "lorentzian"
    g = [[0.1, 0.0]]        # (re, im) per level
    center = 1.0
    width = 0.05

Flat windows take ``lam_min``/``lam_max`` (``inf`` allowed for the
Markovian case), ohmic channels ``exponent``/``cutoff``.
"""
from __future__ import annotations

import hashlib
import math
from pathlib import Path

import tomli

from .errors import ModelError
from .model import LevelSet, SpectralDensityModel, make_channel

UNITS = "natural units, hbar = 1"
_PARAMS = {"flat_window": ("lam_min", "lam_max"), "lorentzian": ("center", "width"),
           "ohmic": ("exponent", "cutoff")}


def model_from_dict(doc: dict) -> SpectralDensityModel:
    units = doc.get("units", UNITS)
    if units != UNITS:
        raise ModelError(f"unsupported units {units!r}; expected {UNITS!r}")
    unknown = set(doc) - {"units", "spectrum", "levels", "labels", "channel"}
    if unknown:
        raise ModelError(f"unknown top-level keys: {sorted(unknown)}")
    if "levels" not in doc:
        raise ModelError("model file needs 'levels'")
    levels = LevelSet(tuple(doc["levels"]), tuple(doc.get("labels", ())))
    channels = []
    for c, block in enumerate(doc.get("channel", [])):
        block = dict(block)
        kind = block.pop("kind", None)
        if kind not in _PARAMS:
            raise ModelError(f"channel {c}: unknown kind {kind!r}")
        try:
            g = [complex(float(re), float(im)) for re, im in block.pop("g")]
        except (KeyError, TypeError, ValueError):
            raise ModelError(f"channel {c}: 'g' must be a list of [re, im] pairs") from None
        params = {}
        for key in _PARAMS[kind]:
            if key not in block:
                raise ModelError(f"channel {c} ({kind}): missing {key!r}")
            params[key] = float(block.pop(key))
        if block:
            raise ModelError(f"channel {c} ({kind}): unknown keys {sorted(block)}")
        channels.append(make_channel(kind, g, **params))
    return SpectralDensityModel(levels, tuple(channels), doc.get("spectrum", "full_line"))


def loads(text: str) -> SpectralDensityModel:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ModelError(f"model file is not valid TOML: {exc}") from None
    return model_from_dict(doc)


def load(path) -> SpectralDensityModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from None
    return loads(text)


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _str(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dumps(model: SpectralDensityModel) -> str:
    """Serialize to TOML; floats use ``repr`` so parsing round-trips exactly."""
    lines = [f"units = {_str(UNITS)}",
             f"spectrum = {_str(model.spectrum_kind)}",
             "levels = [" + ", ".join(_num(e) for e in model.levels.energies) + "]",
             "labels = [" + ", ".join(_str(s) for s in model.levels.labels) + "]"]
    for ch in model.channels:
        lines += ["", "[[channel]]", f"kind = {_str(ch.kind)}",
                  "g = [" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in ch.g) + "]"]
        lines += [f"{k} = {_num(v)}" for k, v in ch.params().items()]
    return "\n".join(lines) + "\n"


def dump(model: SpectralDensityModel, path) -> None:
    Path(path).write_text(dumps(model))


def model_hash(model: SpectralDensityModel) -> str:
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(dumps(model).encode()).hexdigest()
