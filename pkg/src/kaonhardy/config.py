"""Run configuration files (TOML or JSON) and their validation.

Recognised keys::

    [physics]   gamma_s, gamma_l, delta_m          (units of Gamma_S)
    [regen]     r_abs, r_arg                        (r_arg may be "hardy")
    [state]     T (tau_S; may be "hardy"), neglect_rprime (drop the K_S K_S term)
    [detector]  eta, etabar, lifetime_eff, misid
    [mc]        events_per_setting, seed, settings, confidence, workers
    [output]    format ("json" | "csv"), path

``"hardy"`` (the default for ``regen.r_arg`` and ``state.T``) means "take
the value from the Hardy solver for this r_abs".
"""

from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .hardy import HardyCertificate, solve_hardy_time
from .kaon import PhysicsParams, RegenParams
from .measurement import DetectorModel, Setting
from .montecarlo import ExperimentConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

HARDY = "hardy"

DEFAULTS: dict[str, dict[str, Any]] = {
    "physics": {"gamma_s": 1.0, "gamma_l": 1.0 / 579.0, "delta_m": 0.47},
    "regen": {"r_abs": 0.005, "r_arg": HARDY},
    "state": {"T": HARDY, "neglect_rprime": False},
    "detector": {"eta": 1.0, "etabar": 1.0, "lifetime_eff": 1.0, "misid": 0.0},
    "mc": {"events_per_setting": 120_000, "seed": 42, "settings": [1, 2, 3, 4], "confidence": 3.0, "workers": 1},
    "output": {"format": "json", "path": None},
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _number(key: str, value, *, allow_hardy: bool = False):
    if allow_hardy and value == HARDY:
        return HARDY
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return float(value)


def _integer(key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def _boolean(key: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(key, f"expected true or false, got {value!r}")
    return value


def _settings(key: str, value) -> list[int]:
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError(key, "expected a non-empty list of settings 1..4")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= 4:
            raise ConfigError(key, f"unknown setting {v!r}")
    return sorted(set(value))


def _format(key: str, value) -> str:
    if value not in ("json", "csv"):
        raise ConfigError(key, f"format must be 'json' or 'csv', got {value!r}")
    return value


def _path(key: str, value):
    if value is not None and not isinstance(value, str):
        raise ConfigError(key, "expected a path string")
    return value


_COERCE = {
    ("physics", "gamma_s"): _number,
    ("physics", "gamma_l"): _number,
    ("physics", "delta_m"): _number,
    ("regen", "r_abs"): _number,
    ("regen", "r_arg"): lambda k, v: _number(k, v, allow_hardy=True),
    ("state", "T"): lambda k, v: _number(k, v, allow_hardy=True),
    ("state", "neglect_rprime"): _boolean,
    ("detector", "eta"): _number,
    ("detector", "etabar"): _number,
    ("detector", "lifetime_eff"): _number,
    ("detector", "misid"): _number,
    ("mc", "events_per_setting"): _integer,
    ("mc", "seed"): _integer,
    ("mc", "settings"): _settings,
    ("mc", "confidence"): _number,
    ("mc", "workers"): _integer,
    ("output", "format"): _format,
    ("output", "path"): _path,
}


def read_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError("--config", f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("--config", "top level must be a table")
    return data


def merge(raw: dict[str, Any], overrides: dict[str, Any] | None = None) -> dict[str, dict[str, Any]]:
    """Validate ``raw`` (nested) and dotted ``overrides`` on top of the defaults."""
    merged = {section: dict(values) for section, values in DEFAULTS.items()}
    flat: list[tuple[str, Any]] = []
    for section, values in raw.items():
        if section not in DEFAULTS:
            raise ConfigError(section, "unknown section")
        if not isinstance(values, dict):
            raise ConfigError(section, "expected a table")
        flat.extend((f"{section}.{k}", v) for k, v in values.items())
    flat.extend((overrides or {}).items())
    for dotted, value in flat:
        section, _, key = dotted.partition(".")
        if section not in DEFAULTS or key not in DEFAULTS[section]:
            raise ConfigError(dotted, "unknown key")
        merged[section][key] = _COERCE[(section, key)](dotted, value)
    return merged


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsParams
    regen: RegenParams
    T: float
    neglect_rprime: bool
    detector: DetectorModel
    events_per_setting: int
    seed: int
    settings: tuple[Setting, ...]
    confidence: float
    workers: int
    output_format: str
    output_path: str | None
    certificate: HardyCertificate | None

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig(
            physics=self.physics,
            r_abs=self.regen.r_abs,
            r_arg=self.regen.r_arg,
            T=self.T,
            detector=self.detector,
            events_per_setting=self.events_per_setting,
            seed=self.seed,
            settings=self.settings,
            confidence=self.confidence,
            neglect_rprime=self.neglect_rprime,
        )

    def echo(self) -> dict[str, Any]:
        return {
            "physics": {
                "gamma_s": self.physics.gamma_s,
                "gamma_l": self.physics.gamma_l,
                "delta_m": self.physics.delta_m,
            },
            "regen": {"r_abs": self.regen.r_abs, "r_arg": self.regen.r_arg},
            "state": {"T": self.T, "neglect_rprime": self.neglect_rprime},
            "detector": {
                "eta": self.detector.eta,
                "etabar": self.detector.etabar,
                "lifetime_eff": self.detector.lifetime_eff,
                "misid": self.detector.misid,
            },
            "mc": {
                "events_per_setting": self.events_per_setting,
                "seed": self.seed,
                "settings": [int(s) for s in self.settings],
                "confidence": self.confidence,
                "workers": self.workers,
            },
        }


def _build(section: str, factory, values: dict[str, Any]):
    try:
        return factory(**values)
    except ValueError as exc:
        # owning-module validators name the offending field in the message
        msg = str(exc)
        field = next((k for k in values if re.search(rf"\b{k}\b", msg)), None)
        raise ConfigError(f"{section}.{field}" if field else section, msg) from exc


def resolve(merged: dict[str, dict[str, Any]]) -> RunConfig:
    physics = _build("physics", PhysicsParams, merged["physics"])
    r_abs = merged["regen"]["r_abs"]
    if not 0.0 <= r_abs < 1.0:
        raise ConfigError("regen.r_abs", f"must lie in [0, 1), got {r_abs}")
    cert = None
    r_arg, T = merged["regen"]["r_arg"], merged["state"]["T"]
    if HARDY in (r_arg, T):
        if r_abs == 0.0:
            what = "state.T" if T == HARDY else "regen.r_arg"
            raise ConfigError("regen.r_abs", f"must be > 0 to derive {what} from the Hardy condition")
        cert = solve_hardy_time(r_abs, physics)
        r_arg = cert.required_arg_r if r_arg == HARDY else r_arg
        T = cert.T_star if T == HARDY else T
    if T < 0.0:
        raise ConfigError("state.T", f"must be >= 0, got {T}")
    detector = _build("detector", DetectorModel, merged["detector"])
    mc = merged["mc"]
    if mc["events_per_setting"] < 1:
        raise ConfigError("mc.events_per_setting", "must be >= 1")
    if not 0 <= mc["seed"] < 2**64:
        raise ConfigError("mc.seed", "must be a 64-bit unsigned integer")
    if mc["confidence"] <= 0.0:
        raise ConfigError("mc.confidence", "must be positive")
    if mc["workers"] < 1:
        raise ConfigError("mc.workers", "must be >= 1")
    return RunConfig(
        physics=physics,
        regen=RegenParams(r_abs, r_arg),
        T=T,
        neglect_rprime=merged["state"]["neglect_rprime"],
        detector=detector,
        events_per_setting=mc["events_per_setting"],
        seed=mc["seed"],
        settings=tuple(Setting(s) for s in mc["settings"]),
        confidence=mc["confidence"],
        workers=mc["workers"],
        output_format=merged["output"]["format"],
        output_path=merged["output"]["path"],
        certificate=cert,
    )


def load(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    raw = read_config_file(path) if path is not None else {}
    return resolve(merge(raw, overrides))
