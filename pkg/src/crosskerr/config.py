"""System configuration: dimensionless parameters, rescaling, parsing.

All downstream computation consumes :class:`SystemConfig`, whose couplings
are dimensionless profiles of the dimensionless time tau.  A dimensionful
parameter set can be turned into one via :func:`rescale`, which divides all
rates by the mechanical frequency and substitutes t = tau / omega_m.
"""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import scipy.constants

from .profiles import (
    ConstantProfile,
    ProfileError,
    SinusoidProfile,
    is_constant,
    parse_profile,
)


class ConfigError(ValueError):
    """Raised for invalid or malformed configurations."""


_PROFILE_KEYS = ("omega_c", "g1_plus", "g1_minus", "g2_plus", "g2_minus", "g2_prime")
_SCALAR_KEYS = (
    "mu", "r_T", "tau_max", "samples", "cutoff_a", "cutoff_b",
    "eps_quad", "eps_ode", "eps_tail", "oracle_dt",
)


@dataclass(frozen=True)
class SystemConfig:
    """Dimensionless parameter set driving both pipelines."""

    omega_c: object = field(default_factory=lambda: ConstantProfile(0.0))
    g1_plus: object = field(default_factory=lambda: ConstantProfile(0.0))
    g1_minus: object = field(default_factory=lambda: ConstantProfile(0.0))
    g2_plus: object = field(default_factory=lambda: ConstantProfile(0.0))
    g2_minus: object = field(default_factory=lambda: ConstantProfile(0.0))
    g2_prime: object = field(default_factory=lambda: ConstantProfile(0.0))
    mu: complex = 0.0 + 0.0j
    r_T: float = 0.0
    tau_max: float = 10.0
    samples: int = 101
    cutoff_a: int = 32
    cutoff_b: int = 60
    eps_quad: float = 1e-10
    eps_ode: float = 1e-9
    eps_tail: float = 1e-12
    oracle_dt: float = 1e-3

    def __post_init__(self):
        if self.r_T < 0:
            raise ConfigError("r_T must be >= 0")
        if self.tau_max <= 0:
            raise ConfigError("tau_max must be > 0")
        if self.samples < 2:
            raise ConfigError("samples must be >= 2")
        if self.cutoff_a < 2 or self.cutoff_b < 2:
            raise ConfigError("Fock cutoffs must be >= 2")
        for name in ("eps_quad", "eps_ode", "eps_tail"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.oracle_dt <= 0:
            raise ConfigError("oracle_dt must be > 0")

    def has_squeezing(self) -> bool:
        """True when either quadratic coupling can be nonzero."""
        for p in (self.g2_plus, self.g2_minus):
            if not (is_constant(p) and p.value == 0.0):
                return True
        return False

    def all_constant(self) -> bool:
        return all(is_constant(getattr(self, k)) for k in _PROFILE_KEYS)

    def with_overrides(self, **kwargs) -> "SystemConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class DimensionfulConfig:
    """Laboratory-frame parameters (rad/s, kelvin) plus injected constants."""

    omega_m: float
    omega_c: object = field(default_factory=lambda: ConstantProfile(0.0))
    g1_plus: object = field(default_factory=lambda: ConstantProfile(0.0))
    g1_minus: object = field(default_factory=lambda: ConstantProfile(0.0))
    g2_plus: object = field(default_factory=lambda: ConstantProfile(0.0))
    g2_minus: object = field(default_factory=lambda: ConstantProfile(0.0))
    g2_prime: object = field(default_factory=lambda: ConstantProfile(0.0))
    temperature: float = 0.0
    hbar: float = scipy.constants.hbar
    k_B: float = scipy.constants.k

    def __post_init__(self):
        if self.omega_m <= 0:
            raise ConfigError("omega_m must be > 0")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")


def thermal_r(temperature: float, omega_m: float,
              hbar: float = scipy.constants.hbar,
              k_B: float = scipy.constants.k) -> float:
    """Thermal squeezing parameter r with tanh r = exp(-hbar*omega_m/(2*k_B*T)).

    sinh^2 r equals the Bose occupation of the mechanical mode; T = 0 gives 0.
    """
    if omega_m <= 0:
        raise ConfigError("omega_m must be > 0")
    if temperature < 0:
        raise ConfigError("temperature must be >= 0")
    if temperature == 0.0:
        return 0.0
    return math.atanh(math.exp(-hbar * omega_m / (2.0 * k_B * temperature)))


def _rescale_profile(p, omega_m: float):
    """Divide a rate profile by omega_m and substitute t = tau / omega_m."""
    if isinstance(p, ConstantProfile):
        return ConstantProfile(p.value / omega_m)
    if isinstance(p, SinusoidProfile):
        return SinusoidProfile(p.amplitude / omega_m, p.frequency / omega_m,
                               p.phase, p.offset / omega_m)
    # piecewise / tabulated: scale the time axis and the values
    from .profiles import PiecewiseProfile, TabulatedProfile
    if isinstance(p, PiecewiseProfile):
        return PiecewiseProfile(tuple(t * omega_m for t in p.breakpoints),
                                tuple(v / omega_m for v in p.values))
    if isinstance(p, TabulatedProfile):
        return TabulatedProfile(tuple(t * omega_m for t in p.taus),
                                tuple(v / omega_m for v in p.values), p.source)
    raise ConfigError(f"cannot rescale profile of type {type(p).__name__}")


def rescale(d: DimensionfulConfig, **system_kwargs) -> SystemConfig:
    """Map a dimensionful configuration to the dimensionless one."""
    return SystemConfig(
        omega_c=_rescale_profile(d.omega_c, d.omega_m),
        g1_plus=_rescale_profile(d.g1_plus, d.omega_m),
        g1_minus=_rescale_profile(d.g1_minus, d.omega_m),
        g2_plus=_rescale_profile(d.g2_plus, d.omega_m),
        g2_minus=_rescale_profile(d.g2_minus, d.omega_m),
        g2_prime=_rescale_profile(d.g2_prime, d.omega_m),
        r_T=thermal_r(d.temperature, d.omega_m, d.hbar, d.k_B),
        **system_kwargs,
    )


_COMPLEX_RE = re.compile(
    r"^\s*([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*"
    r"(?:([+-])\s*(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*i)?\s*$"
)


def parse_complex(text: str) -> complex:
    """Parse a complex literal of the form ``a``, ``a+bi`` or ``a-bi``."""
    m = _COMPLEX_RE.match(text)
    if not m:
        raise ConfigError(f"bad complex literal {text!r}")
    real = float(m.group(1))
    if m.group(2) is None:
        return complex(real, 0.0)
    imag = float(m.group(3))
    if m.group(2) == "-":
        imag = -imag
    return complex(real, imag)


def format_complex(z: complex) -> str:
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def parse_config(text: str, base_dir: Path | None = None) -> SystemConfig:
    """Parse `key = value` lines into a validated SystemConfig.

    Unknown keys and duplicate keys are rejected; errors carry the line
    number they occurred on.
    """
    seen: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key not in _PROFILE_KEYS and key not in _SCALAR_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _PROFILE_KEYS:
                seen[key] = parse_profile(value, base_dir)
            elif key == "mu":
                seen[key] = parse_complex(value)
            elif key in ("samples", "cutoff_a", "cutoff_b"):
                seen[key] = int(value)
            else:
                seen[key] = float(value)
        except (ProfileError, ValueError) as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    try:
        return SystemConfig(**seen)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def format_config(cfg: SystemConfig) -> str:
    """Canonical text form; parse(format(cfg)) round-trips."""
    lines = []
    for key in _PROFILE_KEYS:
        lines.append(f"{key} = {getattr(cfg, key).spec()}")
    lines.append(f"mu = {format_complex(cfg.mu)}")
    for key in ("r_T", "tau_max"):
        lines.append(f"{key} = {getattr(cfg, key)!r}")
    for key in ("samples", "cutoff_a", "cutoff_b"):
        lines.append(f"{key} = {getattr(cfg, key)}")
    for key in ("eps_quad", "eps_ode", "eps_tail", "oracle_dt"):
        lines.append(f"{key} = {getattr(cfg, key)!r}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: SystemConfig) -> str:
    return hashlib.sha256(format_config(cfg).encode()).hexdigest()[:16]


def load_config(path) -> SystemConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)
