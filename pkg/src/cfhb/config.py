"""TOML run configuration.

Every section and key is optional; omitted values take the prototype
defaults. Unknown sections or keys are rejected so typos do not silently
fall back to a default.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .params import (
    DEFAULT_IMAX,
    ConverterParams,
    DerivedParams,
    DeviceParams,
    InfeasibleOperatingPoint,
    ModulationScheme,
    Scheme,
    derive,
    rated_ratio,
    zcs_margin_ratio,
)

# Boost inductance used to approximate ripple-free operation (H).
ZERO_RIPPLE_INDUCTANCE = 0.1
DEFAULT_SAMPLES = 200


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    converter: ConverterParams = field(default_factory=ConverterParams)
    devices: DeviceParams = field(default_factory=DeviceParams)
    dcpsm_i_max: float = DEFAULT_IMAX
    idcpsm_r: Optional[float] = None      # None: match the fixed-peak scheme at the grid peak
    spsm_i_max: float = DEFAULT_IMAX
    out_dir: str = "out"
    samples_per_interval: int = DEFAULT_SAMPLES
    zero_ripple: bool = False

    def params(self) -> ConverterParams:
        if self.zero_ripple:
            return dataclasses.replace(self.converter, l1=ZERO_RIPPLE_INDUCTANCE, l2=ZERO_RIPPLE_INDUCTANCE)
        return self.converter

    def derived(self) -> DerivedParams:
        return derive(self.params())

    def ratio(self) -> float:
        if self.idcpsm_r is not None:
            return self.idcpsm_r
        return rated_ratio(derive(self.converter), self.dcpsm_i_max)

    def scheme(self, tag: Scheme | str) -> ModulationScheme:
        tag = Scheme.parse(tag) if isinstance(tag, str) else tag
        if tag is Scheme.DCPSM:
            return ModulationScheme.dcpsm(self.dcpsm_i_max)
        if tag is Scheme.IDCPSM:
            return ModulationScheme.idcpsm(self.ratio())
        return ModulationScheme.spsm(self.spsm_i_max)

    def with_overrides(self, **changes: Any) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        cfg = dataclasses.replace(self, **changes)
        _validate(cfg)
        return cfg


_FLOAT_SECTIONS = {
    "converter": [f.name for f in dataclasses.fields(ConverterParams)],
    "devices": [f.name for f in dataclasses.fields(DeviceParams)],
}
_SCHEME_KEYS = {"dcpsm": ("i_max",), "idcpsm": ("r",), "spsm": ("i_max",)}
_OUTPUT_KEYS = ("out_dir", "samples_per_interval", "zero_ripple")


def _number(section: str, key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _table(doc: dict, section: str) -> dict:
    table = doc.get(section, {})
    if not isinstance(table, dict):
        raise ConfigError(f"{section}: expected a table")
    return table


def _reject_unknown(section: str, table: dict, allowed) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    known = set(_FLOAT_SECTIONS) | set(_SCHEME_KEYS) | {"output"}
    for section in doc:
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")

    kwargs: dict[str, Any] = {}
    built = {}
    for section, names in _FLOAT_SECTIONS.items():
        table = _table(doc, section)
        _reject_unknown(section, table, names)
        values = {k: _number(section, k, v) for k, v in table.items()}
        cls = ConverterParams if section == "converter" else DeviceParams
        try:
            built[section] = cls(**values)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}") from None
    kwargs["converter"] = built["converter"]
    kwargs["devices"] = built["devices"]

    for section, names in _SCHEME_KEYS.items():
        table = _table(doc, section)
        _reject_unknown(section, table, names)
        for key, value in table.items():
            kwargs[f"{section}_{key}"] = _number(section, key, value)

    out = _table(doc, "output")
    _reject_unknown("output", out, _OUTPUT_KEYS)
    if "out_dir" in out:
        if not isinstance(out["out_dir"], str) or not out["out_dir"]:
            raise ConfigError("output.out_dir: expected a non-empty string")
        kwargs["out_dir"] = out["out_dir"]
    if "samples_per_interval" in out:
        s = out["samples_per_interval"]
        if isinstance(s, bool) or not isinstance(s, int):
            raise ConfigError(f"output.samples_per_interval: expected an integer, got {s!r}")
        kwargs["samples_per_interval"] = s
    if "zero_ripple" in out:
        if not isinstance(out["zero_ripple"], bool):
            raise ConfigError("output.zero_ripple: expected true or false")
        kwargs["zero_ripple"] = out["zero_ripple"]

    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    try:
        derived = cfg.derived()
    except (InfeasibleOperatingPoint, ValueError) as exc:
        raise ConfigError(f"[converter] {exc}") from None
    for name in ("dcpsm_i_max", "spsm_i_max"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name.replace('_', '.', 1)} must be > 0")
    if cfg.samples_per_interval < 2:
        raise ConfigError("output.samples_per_interval must be >= 2")
    if cfg.idcpsm_r is not None:
        bound = zcs_margin_ratio(derived)
        if not cfg.idcpsm_r > bound:
            raise ConfigError(
                f"idcpsm.r = {cfg.idcpsm_r:g} violates the ZCS margin rule r > {bound:.4f} "
                "(the peak must clear the grid current plus inductor ripple)"
            )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def config_document(cfg: RunConfig) -> dict:
    doc: dict[str, Any] = {
        "converter": dataclasses.asdict(cfg.converter),
        "devices": dataclasses.asdict(cfg.devices),
        "dcpsm": {"i_max": cfg.dcpsm_i_max},
        "spsm": {"i_max": cfg.spsm_i_max},
        "output": {
            "out_dir": cfg.out_dir,
            "samples_per_interval": cfg.samples_per_interval,
            "zero_ripple": cfg.zero_ripple,
        },
    }
    if cfg.idcpsm_r is not None:
        doc["idcpsm"] = {"r": cfg.idcpsm_r}
    return doc


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_document(cfg))
