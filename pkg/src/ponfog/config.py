"""JSON run configuration with one section per module.

Example::

    {
      "topology": {"cells": 4},
      "power": {"card_policy": "per-cell"},
      "sim": {"tuning_us": 2, "routing_map": "table1"}
    }

Every section and field is optional; omitted values take the defaults of
the corresponding dataclass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from ponfog.errors import ConfigError, PonFogError
from ponfog.power import CARD_POLICIES, PER_CELL, PowerConfig, PowerParams
from ponfog.topology import OltCapacity, SpineLeafParams, TopologyParams

AUTO_MAP = "auto"


@dataclass(frozen=True)
class SimSettings:
    """Simulator constants; the topology and routing map come from elsewhere."""

    line_rate_gbps: float = 10.0
    propagation_us_per_km: float = 5.0
    olt_processing_us: int = 10
    tuning_us: int = 1
    control_msg_us: int = 1
    seed: int = 0
    # "auto" (published table when it fits, else solved), "table1", "solve" or a CSV path
    routing_map: str = AUTO_MAP


@dataclass(frozen=True)
class RunConfig:
    topology: TopologyParams = field(default_factory=TopologyParams)
    olt: OltCapacity = field(default_factory=OltCapacity)
    spine_leaf: SpineLeafParams = field(default_factory=SpineLeafParams)
    power: PowerParams = field(default_factory=PowerParams)
    card_policy: str = PER_CELL
    sim: SimSettings = field(default_factory=SimSettings)

    def power_config(self) -> PowerConfig:
        return PowerConfig(self.topology, self.olt, self.spine_leaf, self.power, self.card_policy)


_SECTIONS = {
    "topology": TopologyParams,
    "olt": OltCapacity,
    "spine_leaf": SpineLeafParams,
    "power": PowerParams,
    "sim": SimSettings,
}


def _build(section: str, cls: type, raw: Any) -> Any:
    if not isinstance(raw, dict):
        raise ConfigError(f"{section}: expected an object, got {type(raw).__name__}")
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{section}.{key}: unknown field")
    for key, value in raw.items():
        if isinstance(value, bool) or not isinstance(value, (int, float, str, list)):
            raise ConfigError(f"{section}.{key}: unsupported value {value!r}")
    try:
        obj = cls(**raw)
        if hasattr(obj, "validate"):
            obj.validate()
    except PonFogError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    return obj


def config_from_dict(doc: Any) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    for key in doc:
        if key not in _SECTIONS:
            raise ConfigError(f"{key}: unknown section (expected one of {', '.join(_SECTIONS)})")
    parts: dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        raw = dict(doc.get(name, {})) if isinstance(doc.get(name, {}), dict) else doc[name]
        if name == "power" and isinstance(raw, dict) and "card_policy" in raw:
            policy = raw.pop("card_policy")
            if policy not in CARD_POLICIES:
                raise ConfigError(f"power.card_policy: {policy!r} not in {CARD_POLICIES}")
            parts["card_policy"] = policy
        parts[name] = _build(name, cls, raw)
    if not isinstance(parts["sim"].seed, int):
        raise ConfigError("sim.seed: must be an integer")
    return RunConfig(
        topology=parts["topology"],
        olt=parts["olt"],
        spine_leaf=parts["spine_leaf"],
        power=parts["power"],
        card_policy=parts.get("card_policy", PER_CELL),
        sim=parts["sim"],
    )


def load_config(path: str | Path | None) -> RunConfig:
    """Read a config file; ``None`` yields the defaults.

    Raises:
        ConfigError: Unreadable file, bad JSON (with line and column) or a
            field that fails validation (with its dotted name).
    """
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
