"""Typed parameter ingestion and validation.

All physical constants live in a flat key-value file (YAML mapping) whose
keys carry explicit unit suffixes, e.g. ``rotor_diameter_m``. Values are
stored in those canonical units and never converted afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml


class ConfigError(Exception):
    """Base class for configuration problems."""


class MissingKeyError(ConfigError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"missing required config key: {key!r}")


class ValidationError(ConfigError):
    def __init__(self, field: str, value, reason: str):
        self.field = field
        self.value = value
        super().__init__(f"invalid value for {field}: {value!r} ({reason})")


def _require_positive(field: str, value: float) -> float:
    if not math.isfinite(value) or value <= 0.0:
        raise ValidationError(field, value, "must be finite and > 0")
    return float(value)


@dataclass(frozen=True)
class TurbineParams:
    """Rotor geometry and aerodynamic constants."""

    rotor_diameter: float   # D [m]
    hub_height: float       # h [m]
    ct1: float              # Glauert high-induction parameter, dimensionless
    air_density: float      # rho [kg/m^3]

    def __post_init__(self):
        _require_positive("rotor_diameter_m", self.rotor_diameter)
        _require_positive("hub_height_m", self.hub_height)
        _require_positive("air_density_kg_m3", self.air_density)
        if not math.isfinite(self.ct1) or self.ct1 <= 1.0:
            raise ValidationError("glauert_ct1", self.ct1, "must be > 1")

    @property
    def rotor_area(self) -> float:
        """Physical disc swept area pi*(D/2)^2 [m^2]."""
        return math.pi * (0.5 * self.rotor_diameter) ** 2


@dataclass(frozen=True)
class PlatformParams:
    """Mass, inertia, stiffness and damping of the floating base."""

    mass: float             # m0 [kg]
    added_mass: float       # dm [kg]
    inertia: float          # Iyy0 [kg m^2]
    added_inertia: float    # dIyy [kg m^2]
    pitch_stiffness: float  # k_phi [N m / rad]
    pitch_damping: float    # c_phi [N m s / rad]
    surge_stiffness: float  # k_x [N / m]
    surge_damping: float    # c_x [N s / m]

    _FIELD_KEYS = {
        "mass": "mass_kg",
        "added_mass": "added_mass_kg",
        "inertia": "inertia_kg_m2",
        "added_inertia": "added_inertia_kg_m2",
        "pitch_stiffness": "pitch_stiffness_nm_per_rad",
        "pitch_damping": "pitch_damping_nms_per_rad",
        "surge_stiffness": "surge_stiffness_n_per_m",
        "surge_damping": "surge_damping_ns_per_m",
    }

    def __post_init__(self):
        for name, key in self._FIELD_KEYS.items():
            _require_positive(key, getattr(self, name))

    @property
    def total_mass(self) -> float:
        """Effective mass m0 + dm used in every downstream equation."""
        return self.mass + self.added_mass

    @property
    def total_inertia(self) -> float:
        """Effective inertia Iyy0 + dIyy used in every downstream equation."""
        return self.inertia + self.added_inertia


@dataclass(frozen=True)
class NumericalParams:
    """Time steps, wake resolution and inflow."""

    dt_wake: float          # [s]
    dt_floater: float       # [s]
    num_rings: int          # vortex generations kept
    core_size: float        # sigma [m]
    inflow: tuple           # (u, v) [m/s]

    def __post_init__(self):
        _require_positive("dt_wake_s", self.dt_wake)
        _require_positive("dt_floater_s", self.dt_floater)
        _require_positive("core_size_m", self.core_size)
        if self.num_rings < 1:
            raise ValidationError("num_rings", self.num_rings, "must be >= 1")
        n = round(self.dt_wake / self.dt_floater)
        if n < 1 or abs(self.dt_wake - n * self.dt_floater) > 1e-9 * self.dt_wake:
            raise ValidationError(
                "dt_wake_s", self.dt_wake,
                "must be an integer multiple of dt_floater_s")
        if not all(math.isfinite(v) for v in self.inflow):
            raise ValidationError("inflow", self.inflow, "must be finite")

    @property
    def substeps_per_wake_step(self) -> int:
        return round(self.dt_wake / self.dt_floater)

    @property
    def inflow_vector(self) -> np.ndarray:
        return np.array(self.inflow, dtype=float)


@dataclass(frozen=True)
class LayoutParams:
    """Turbine layout and rotor-plane sampling."""

    downstream_spacing: float        # x-position of virtual turbine 1 [m]
    virtual_turbine_induction: float  # a1, dimensionless
    rotor_samples: int               # points across the rotor line, odd

    def __post_init__(self):
        _require_positive("downstream_spacing_m", self.downstream_spacing)
        a1 = self.virtual_turbine_induction
        if not (0.0 <= a1 < 1.0):
            raise ValidationError("virtual_turbine_induction", a1, "must be in [0, 1)")
        if self.rotor_samples < 1 or self.rotor_samples % 2 == 0:
            raise ValidationError(
                "rotor_samples", self.rotor_samples, "must be odd and >= 1")


_PLATFORM_DOFS = ("both", "pitch", "surge", "none")


@dataclass(frozen=True)
class SimConfig:
    """Validated bundle of every simulation parameter."""

    turbine: TurbineParams
    platform: PlatformParams
    numerics: NumericalParams
    layout: LayoutParams
    platform_dofs: str = "both"   # both | pitch | surge | none

    def __post_init__(self):
        if self.platform_dofs not in _PLATFORM_DOFS:
            raise ValidationError(
                "platform_dofs", self.platform_dofs,
                f"must be one of {_PLATFORM_DOFS}")

    def with_dofs(self, dofs: str) -> "SimConfig":
        return replace(self, platform_dofs=dofs)


_REQUIRED_KEYS = (
    "rotor_diameter_m", "hub_height_m", "glauert_ct1", "air_density_kg_m3",
    "mass_kg", "added_mass_kg", "inertia_kg_m2", "added_inertia_kg_m2",
    "pitch_stiffness_nm_per_rad", "pitch_damping_nms_per_rad",
    "surge_stiffness_n_per_m", "surge_damping_ns_per_m",
    "dt_wake_s", "dt_floater_s", "num_rings", "core_size_m",
    "inflow_u_m_per_s", "inflow_v_m_per_s",
)

# Optional keys and the rationale for their defaults:
#   rotor_samples=9      hub point plus four samples per side
#   a1 = 1/3             individual optimum of the virtual-rotor power law
#   downstream_spacing   5 rotor diameters
DEFAULT_ROTOR_SAMPLES = 9
DEFAULT_VIRTUAL_INDUCTION = 1.0 / 3.0


def config_from_dict(doc: dict) -> SimConfig:
    """Build a validated SimConfig from a flat key-value mapping."""
    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise MissingKeyError(key)

    def num(key):
        value = doc[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(key, value, "must be a number")
        return float(value)

    turbine = TurbineParams(
        rotor_diameter=num("rotor_diameter_m"),
        hub_height=num("hub_height_m"),
        ct1=num("glauert_ct1"),
        air_density=num("air_density_kg_m3"),
    )
    platform = PlatformParams(
        mass=num("mass_kg"),
        added_mass=num("added_mass_kg"),
        inertia=num("inertia_kg_m2"),
        added_inertia=num("added_inertia_kg_m2"),
        pitch_stiffness=num("pitch_stiffness_nm_per_rad"),
        pitch_damping=num("pitch_damping_nms_per_rad"),
        surge_stiffness=num("surge_stiffness_n_per_m"),
        surge_damping=num("surge_damping_ns_per_m"),
    )
    numerics = NumericalParams(
        dt_wake=num("dt_wake_s"),
        dt_floater=num("dt_floater_s"),
        num_rings=int(doc["num_rings"]),
        core_size=num("core_size_m"),
        inflow=(num("inflow_u_m_per_s"), num("inflow_v_m_per_s")),
    )
    spacing = float(doc.get("downstream_spacing_m",
                            5.0 * turbine.rotor_diameter))
    layout = LayoutParams(
        downstream_spacing=spacing,
        virtual_turbine_induction=float(
            doc.get("virtual_turbine_induction", DEFAULT_VIRTUAL_INDUCTION)),
        rotor_samples=int(doc.get("rotor_samples", DEFAULT_ROTOR_SAMPLES)),
    )
    return SimConfig(
        turbine=turbine, platform=platform, numerics=numerics, layout=layout,
        platform_dofs=str(doc.get("platform_dofs", "both")),
    )


def config_to_dict(cfg: SimConfig) -> dict:
    """Flat mapping that round-trips through config_from_dict unchanged."""
    return {
        "rotor_diameter_m": cfg.turbine.rotor_diameter,
        "hub_height_m": cfg.turbine.hub_height,
        "glauert_ct1": cfg.turbine.ct1,
        "air_density_kg_m3": cfg.turbine.air_density,
        "mass_kg": cfg.platform.mass,
        "added_mass_kg": cfg.platform.added_mass,
        "inertia_kg_m2": cfg.platform.inertia,
        "added_inertia_kg_m2": cfg.platform.added_inertia,
        "pitch_stiffness_nm_per_rad": cfg.platform.pitch_stiffness,
        "pitch_damping_nms_per_rad": cfg.platform.pitch_damping,
        "surge_stiffness_n_per_m": cfg.platform.surge_stiffness,
        "surge_damping_ns_per_m": cfg.platform.surge_damping,
        "dt_wake_s": cfg.numerics.dt_wake,
        "dt_floater_s": cfg.numerics.dt_floater,
        "num_rings": cfg.numerics.num_rings,
        "core_size_m": cfg.numerics.core_size,
        "inflow_u_m_per_s": cfg.numerics.inflow[0],
        "inflow_v_m_per_s": cfg.numerics.inflow[1],
        "downstream_spacing_m": cfg.layout.downstream_spacing,
        "virtual_turbine_induction": cfg.layout.virtual_turbine_induction,
        "rotor_samples": cfg.layout.rotor_samples,
        "platform_dofs": cfg.platform_dofs,
    }


def load_config(source) -> SimConfig:
    """Load a SimConfig from a path, a text stream, or a mapping."""
    if isinstance(source, dict):
        return config_from_dict(source)
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a flat key-value mapping")
    return config_from_dict(doc)


def save_config(cfg: SimConfig, path) -> None:
    Path(path).write_text(
        yaml.safe_dump(config_to_dict(cfg), sort_keys=False))


def table1_config(**overrides) -> SimConfig:
    """Reference 10 MW turbine on a triple-spar platform.

    Keyword overrides replace individual flat keys, e.g.
    ``table1_config(num_rings=30)``.
    """
    doc = {
        "rotor_diameter_m": 178.3,
        "hub_height_m": 119.0,
        "glauert_ct1": 2.3,
        "air_density_kg_m3": 1.225,
        "mass_kg": 1.1e6,
        "added_mass_kg": 2.8e7,
        "inertia_kg_m2": 3.9e10,
        "added_inertia_kg_m2": 1.1e10,
        "pitch_stiffness_nm_per_rad": 6.2e9,
        "pitch_damping_nms_per_rad": 7.3e8,
        "surge_stiffness_n_per_m": 8.3e4,
        "surge_damping_ns_per_m": 1.7e5,
        "dt_wake_s": 3.6,
        "dt_floater_s": 0.9,
        "num_rings": 60,
        "core_size_m": 17.8,
        "inflow_u_m_per_s": 10.0,
        "inflow_v_m_per_s": 0.0,
    }
    doc.update(overrides)
    return config_from_dict(doc)
