"""Run settings and the plain ``key = value`` config file."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .curvature import FULL, PAIR


@dataclass
class Settings:
    n: int = 3
    omega_n: float = 2.0
    weyl_convention: str = PAIR
    cap_window: float = 1e-3
    einstein_tol: float = 1e-8
    # einstein-ode
    series_order: int = 15
    check_order: int = 101
    ode_tol: float = 1e-10
    ode_r_max: float = 10.0
    ode_r0: float = 1e-2
    ode_points: int = 1001
    # profiles and volumes
    profile_r_max: float = 15.0
    profile_points: int = 3001
    eps_hi: float = 0.2
    eps_lo: float = 0.02
    eps_points: int = 12
    fit_tail: int = 4
    renvol_method: str = "closed-form"
    s_h_grid_points: int = 20
    s_h_min: float = 0.2
    s_h_max: float = 2.0
    # yamabe and volume comparison
    yamabe_grid: int = 256
    yamabe_lambdas: tuple = (0.05, 0.5, 1.0, 2.0, 10.0)
    mc_samples: int = 1_000_000
    mc_seed: int = 20240611
    mc_radii: tuple = (1.0, 2.0, 3.0)
    mc_lambdas: tuple = (0.5, 1.0, 2.0)
    gate_samples: int = 20_000
    workers: int = 1
    # theorem thresholds, unset unless supplied
    delta: float | None = None
    eta: float | None = None
    epsilon: float | None = None
    lambda0: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weyl_convention not in (PAIR, FULL):
            raise ValueError(f"weyl_convention must be {PAIR!r} or {FULL!r}")
        if self.renvol_method not in ("closed-form", "quadrature-fit"):
            raise ValueError("renvol_method must be 'closed-form' or 'quadrature-fit'")
        if self.n < 3:
            raise ValueError("n must be at least 3")

    def replace(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "extra"}


_FIELDS = {f.name: f for f in dataclasses.fields(Settings) if f.name != "extra"}


def _convert(name, text):
    default = _FIELDS[name].default
    text = text.strip()
    if text.lower() in ("none", "null", ""):
        return None
    if isinstance(default, tuple):
        return tuple(float(x) for x in text.replace(",", " ").split())
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(float(text)) if "e" in text.lower() else int(text)
    if isinstance(default, float) or default is None:
        return float(text)
    return text


def load_settings(path=None, **overrides):
    """Settings from an optional config file, then keyword overrides (None skipped)."""
    values = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        parser.read_string("[settings]\n" + text)
        for key, raw in parser["settings"].items():
            key = key.strip().replace("-", "_")
            if key not in _FIELDS:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = _convert(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**values)
