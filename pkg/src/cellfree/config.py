"""Scenario files: TOML sections [layout] [propagation] [simulation] [cellular] [output].

Every key is optional; the defaults describe a 1 km x 1 km area with 400
single-antenna APs on a grid, 40 UEs, 10 pilots, 100 mW UE power, -96 dBm
noise and 200-symbol coherence blocks, compared against four 100-antenna BSs.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .geometry import ConfigurationError, LayoutConfig
from .harness import PropagationConfig, Scenario, SimulationPlan, normalize_levels

FORMATS = ("csv", "json", "both")
SEED_ENV = "SIM_SEED"
# layout.seed only seeds standalone place_network calls; drops derive theirs from master_seed
_HIDDEN = {"layout": {"seed"}}


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "results"
    format: str = "both"

    def validate(self) -> None:
        if self.format not in FORMATS:
            raise ConfigurationError(f"output.format must be one of {', '.join(FORMATS)}")


@dataclass(frozen=True)
class CellularConfig:
    enabled: bool = True


@dataclass(frozen=True)
class FronthaulConfig:
    """Only read by the ``fronthaul`` subcommand."""

    tau_c: int = 200
    tau_p: int = 10
    antennas_per_ap: int = 4
    num_aps: int = 100
    num_ues: int = 40
    sweep: tuple = ()  # (first, last) tau_c, inclusive


@dataclass(frozen=True)
class ScenarioConfig:
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    simulation: SimulationPlan = field(default_factory=SimulationPlan)
    cellular: CellularConfig = field(default_factory=CellularConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    fronthaul: FronthaulConfig = field(default_factory=FronthaulConfig)

    def scenario(self) -> Scenario:
        return Scenario(self.layout, self.simulation, self.propagation, self.cellular.enabled)

    def validate(self) -> None:
        self.scenario().validate()
        self.output.validate()

    def to_dict(self) -> dict:
        out = {}
        for name in _SECTIONS:
            section = {}
            for f in dataclasses.fields(_SECTIONS[name]):
                if f.name in _HIDDEN.get(name, ()):
                    continue
                value = getattr(getattr(self, name), f.name)
                section[f.name] = list(value) if isinstance(value, tuple) else value
            out[name] = section
        return out


_SECTIONS = {
    "layout": LayoutConfig,
    "propagation": PropagationConfig,
    "simulation": SimulationPlan,
    "cellular": CellularConfig,
    "output": OutputConfig,
    "fronthaul": FronthaulConfig,
}


def _coerce(section: str, f: dataclasses.Field, value):
    where = f"{section}.{f.name}"
    default = f.default if f.default is not dataclasses.MISSING else None
    if f.name == "levels":
        return normalize_levels(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{where} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigurationError(f"{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"{where} must be a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"{where} must be a list, got {value!r}")
        return tuple(value)
    return value


def from_dict(doc: dict) -> ScenarioConfig:
    """Build and validate a config from parsed TOML (or an echoed summary)."""
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a table of sections")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigurationError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    parts = {}
    for name, cls in _SECTIONS.items():
        raw = doc.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigurationError(f"[{name}] must be a table")
        fields = {f.name: f for f in dataclasses.fields(cls) if f.name not in _HIDDEN.get(name, ())}
        bad = set(raw) - set(fields)
        if bad:
            raise ConfigurationError(f"unknown key(s) in [{name}]: {', '.join(sorted(bad))}")
        kwargs = {k: _coerce(name, fields[k], v) for k, v in raw.items()}
        try:
            parts[name] = cls(**kwargs)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"[{name}]: {exc}") from exc
    cfg = ScenarioConfig(**parts)
    cfg.validate()
    return cfg


def packaged_scenarios() -> list[str]:
    root = resources.files("cellfree") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def read_config_text(path_or_name: str) -> str:
    """Read a scenario file from disk, or a packaged scenario by name."""
    path = Path(path_or_name)
    if path.is_file():
        return path.read_text()
    name = path_or_name[:-5] if path_or_name.endswith(".toml") else path_or_name
    if name in packaged_scenarios():
        return (resources.files("cellfree") / "scenarios" / f"{name}.toml").read_text()
    raise ConfigurationError(f"config file not found: {path_or_name}")


def parse_override(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigurationError(f"override must look like key=value, got {text!r}")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def _locate(doc: dict, key: str) -> tuple[str, str]:
    if "." in key:
        section, _, name = key.partition(".")
        return section, name
    owners = [
        s
        for s, cls in _SECTIONS.items()
        if s != "fronthaul" and key in {f.name for f in dataclasses.fields(cls)} - _HIDDEN.get(s, set())
    ]
    if len(owners) != 1:
        if not owners:
            raise ConfigurationError(f"unknown override key {key!r}")
        raise ConfigurationError(f"ambiguous override key {key!r}; use one of {', '.join(o + '.' + key for o in owners)}")
    return owners[0], key


def apply_overrides(doc: dict, overrides) -> dict:
    doc = {k: dict(v) if isinstance(v, dict) else v for k, v in doc.items()}
    for item in overrides or ():
        key, value = parse_override(item) if isinstance(item, str) else item
        section, name = _locate(doc, key)
        doc.setdefault(section, {})[name] = value
    return doc


def load_config(path_or_name: str, overrides=(), env=None) -> ScenarioConfig:
    """Parse (TOML, or a summary JSON), apply ``key=value`` overrides and ``SIM_SEED``, then validate."""
    text = read_config_text(path_or_name)
    try:
        if text.lstrip().startswith("{"):
            # a summary JSON: re-run from its echoed effective config
            doc = json.loads(text)
            doc = doc.get("config", doc)
        else:
            doc = tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot parse {path_or_name}: {exc}") from exc
    doc = apply_overrides(doc, overrides)
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV], 0)
        except ValueError as exc:
            raise ConfigurationError(f"{SEED_ENV} must be an integer") from exc
        doc.setdefault("simulation", {})["master_seed"] = seed
    return from_dict(doc)


def dumps_toml(cfg: ScenarioConfig) -> str:
    """Serialize the effective config back to TOML (round-trips through ``load_config``)."""
    lines = []
    for section, values in cfg.to_dict().items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {v!r}")
