"""Scenario configuration files.

A scenario is a JSON object::

    {
      "model": "torsion" | "sphere" | "rve" | "rve-reuss" | "rve-voigt"
               | "torsion-oracle" | "sphere-oracle" | "rve-oracle",
      "materials": {"<id>": {"E": ..., "nu": ..., "yield_stress": ..., "hardening": ...}},
      "geometry": {...},          # model specific, see below
      "protocol": {...},          # model specific, see below
      "output": {"dir": "...", "name": "..."},
      "tolerances": {"yield": 1e-10, "sweep_limit": 200, "split_onset": true}
    }

Geometry blocks

* torsion: ``radius``, ``n_subdomains`` (or explicit ``radii``),
  ``material``; the oracle adds ``n_points`` and ``panels``.
* sphere: ``r_in``, ``r_out``, ``n_subdomains`` (or ``radii``),
  ``material``, ``dissipation`` (``nominal``/``consistent``),
  ``solid_angle``, ``inner``/``outer`` (``displacement`` or ``free``);
  the oracle adds ``elements_per_subdomain`` and ``order``.
* rve: ``name`` (``fig1``, ``fig4``, ``fig12``) or ``file`` (geometry JSON)
  or ``inline`` (geometry dict), plus ``materials``: the config material
  ids assigned to geometry material 0, 1, ...; the oracle adds
  ``per_unit`` elements per unit length.

Protocol blocks

* torsion: ``twist``: a protocol (``{"segments": [...]}``).
* sphere: ``u_out`` and/or ``u_in``: protocols.
* rve: ``components``: ``{"11": protocol, "12": protocol, ...}`` over the
  plain tensor components of ``e_M``; missing components stay zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError, DomainError
from ..tensor import NAMES, Material
from .protocol import LoadProtocol

MODELS = (
    "torsion",
    "sphere",
    "rve",
    "rve-reuss",
    "rve-voigt",
    "torsion-oracle",
    "sphere-oracle",
    "rve-oracle",
)


@dataclass
class ScenarioConfig:
    model: str
    materials: dict
    geometry: dict
    protocol: dict
    output: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def family(self):
        return self.model.split("-")[0]

    @property
    def is_oracle(self):
        return self.model.endswith("-oracle")

    @property
    def yield_tol(self):
        return float(self.tolerances.get("yield", 1e-10))

    @property
    def split_onset(self):
        return bool(self.tolerances.get("split_onset", True))

    @property
    def sweep_limit(self):
        return int(self.tolerances.get("sweep_limit", 200))

    def material(self, key):
        try:
            return self.materials[str(key)]
        except KeyError:
            raise ConfigError(f"unknown material id {key!r}") from None

    def protocols(self):
        """Name -> LoadProtocol for every driven quantity."""
        if self.family == "torsion":
            return {"twist": self.protocol["twist"]}
        if self.family == "sphere":
            return {k: self.protocol[k] for k in ("u_in", "u_out") if k in self.protocol}
        return dict(self.protocol["components"])

    def to_dict(self):
        if self.family == "rve":
            proto = {"components": {k: p.to_dict() for k, p in self.protocol["components"].items()}}
        else:
            proto = {k: p.to_dict() for k, p in self.protocol.items()}
        return {
            "model": self.model,
            "materials": {
                k: {"E": m.E, "nu": m.nu, "yield_stress": m.yield_stress, "hardening": m.hardening}
                for k, m in self.materials.items()
            },
            "geometry": self.geometry,
            "protocol": proto,
            "output": self.output,
            "tolerances": self.tolerances,
        }


def _parse_material(key, d):
    try:
        return Material(float(d["E"]), float(d["nu"]), float(d["yield_stress"]), float(d.get("hardening", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"material {key!r} is missing {exc}") from exc
    except DomainError as exc:
        raise ConfigError(f"material {key!r}: {exc}") from exc


def _require(d, keys, where):
    missing = [k for k in keys if k not in d]
    if missing:
        raise ConfigError(f"{where} is missing {', '.join(missing)}")


def parse_config(data):
    """Validate a config dictionary and build a :class:`ScenarioConfig`.

    Raises
    ------
    ConfigError
        On any schema violation.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _require(data, ("model", "materials", "geometry", "protocol"), "config")
    model = data["model"]
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")
    if not isinstance(data["materials"], dict) or not data["materials"]:
        raise ConfigError("materials must be a non-empty object")
    materials = {str(k): _parse_material(k, v) for k, v in data["materials"].items()}
    geometry = dict(data["geometry"])
    proto_in = data["protocol"]
    tolerances = dict(data.get("tolerances", {}))
    for k, v in tolerances.items():
        if k == "split_onset":
            if not isinstance(v, bool):
                raise ConfigError("split_onset must be true or false")
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"tolerance {k!r} must be a number")
        elif k == "sweep_limit":
            if int(v) != v or v < 1:
                raise ConfigError("sweep_limit must be a positive integer")
        elif not v > 0:
            raise ConfigError(f"tolerance {k!r} must be positive")

    family = model.split("-")[0]
    if family == "torsion":
        _require(geometry, ("material",), "torsion geometry")
        if "radii" not in geometry:
            _require(geometry, ("radius",), "torsion geometry")
        _require(proto_in, ("twist",), "torsion protocol")
        protocol = {"twist": LoadProtocol.from_dict(proto_in["twist"])}
        refs = [geometry["material"]]
    elif family == "sphere":
        _require(geometry, ("material",), "sphere geometry")
        if "radii" not in geometry:
            _require(geometry, ("r_in", "r_out", "n_subdomains"), "sphere geometry")
        for side in ("inner", "outer"):
            if geometry.get(side, "displacement") not in ("displacement", "free"):
                raise ConfigError(f"sphere {side} boundary must be 'displacement' or 'free'")
        protocol = {k: LoadProtocol.from_dict(proto_in[k]) for k in ("u_in", "u_out") if k in proto_in}
        if not protocol:
            raise ConfigError("sphere protocol needs u_in and/or u_out")
        refs = [geometry["material"]]
    else:
        if not any(k in geometry for k in ("name", "file", "inline")):
            raise ConfigError("rve geometry needs 'name', 'file' or 'inline'")
        _require(geometry, ("materials",), "rve geometry")
        _require(proto_in, ("components",), "rve protocol")
        comps = {}
        for k, v in proto_in["components"].items():
            if k not in NAMES:
                raise ConfigError(f"unknown strain component {k!r}; expected one of {NAMES}")
            comps[k] = LoadProtocol.from_dict(v)
        if not comps:
            raise ConfigError("rve protocol needs at least one component")
        protocol = {"components": comps}
        refs = list(geometry["materials"])
    for r in refs:
        if str(r) not in materials:
            raise ConfigError(f"geometry refers to unknown material id {r!r}")
    return ScenarioConfig(model, materials, geometry, protocol, dict(data.get("output", {})), tolerances)


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    cfg = parse_config(data)
    cfg.geometry.setdefault("_base", str(Path(path).resolve().parent))
    return cfg
