"""Time-dependent coupling profiles and their exact integrals.

Every coupling entering the dimensionless Hamiltonian is represented by a
profile object that can be evaluated at any dimensionless time tau >= 0 and
integrated from 0 to tau.  Integrals are closed-form for every kind: the
tabulated kind integrates its linear interpolant exactly via trapezoid
prefix sums, so no adaptive quadrature error enters downstream formulas.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ProfileError(ValueError):
    """Raised for malformed profile specifications."""


@dataclass(frozen=True)
class ConstantProfile:
    value: float

    kind = "constant"

    def __call__(self, tau):
        return self.value * np.ones_like(np.asarray(tau, dtype=float))

    def integral(self, tau):
        return self.value * np.asarray(tau, dtype=float)

    def spec(self) -> str:
        return f"constant:{self.value!r}"


@dataclass(frozen=True)
class SinusoidProfile:
    """A*sin(w*tau + phase) + offset."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0

    kind = "sinusoid"

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.amplitude * np.sin(self.frequency * tau + self.phase) + self.offset

    def integral(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.frequency == 0.0:
            return (self.amplitude * np.sin(self.phase) + self.offset) * tau
        osc = (np.cos(self.phase) - np.cos(self.frequency * tau + self.phase)) / self.frequency
        return self.amplitude * osc + self.offset * tau

    def spec(self) -> str:
        return f"sin:{self.amplitude!r},{self.frequency!r},{self.phase!r},{self.offset!r}"


@dataclass(frozen=True)
class PiecewiseProfile:
    """Right-continuous piecewise-constant profile.

    ``breakpoints[i]`` is where ``values[i]`` starts to apply; the first
    breakpoint must be 0 so the profile is defined on all tau >= 0.
    """

    breakpoints: tuple
    values: tuple

    kind = "piecewise"

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.size == 0 or bp[0] != 0.0:
            raise ProfileError("piecewise profile must start at tau=0")
        if bp.size != len(self.values):
            raise ProfileError("piecewise breakpoints/values length mismatch")
        if np.any(np.diff(bp) <= 0):
            raise ProfileError("piecewise breakpoints must be strictly increasing")

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        idx = np.searchsorted(self.breakpoints, tau, side="right") - 1
        return np.asarray(self.values, dtype=float)[np.clip(idx, 0, None)]

    def integral(self, tau):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        # cumulative integral up to each breakpoint
        seg = np.diff(bp) * vals[:-1]
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        tau = np.asarray(tau, dtype=float)
        idx = np.clip(np.searchsorted(bp, tau, side="right") - 1, 0, None)
        return cum[idx] + (tau - bp[idx]) * vals[idx]

    def spec(self) -> str:
        parts = ";".join(f"{t!r}:{v!r}" for t, v in zip(self.breakpoints, self.values))
        return f"piecewise:{parts}"


@dataclass(frozen=True)
class TabulatedProfile:
    """Linear interpolation of sorted (tau, value) samples, clamped outside."""

    taus: tuple
    values: tuple
    source: str = ""

    kind = "tabulated"

    def __post_init__(self):
        t = np.asarray(self.taus, dtype=float)
        if t.size < 2:
            raise ProfileError("tabulated profile needs at least two samples")
        if np.any(np.diff(t) <= 0):
            raise ProfileError("tabulated sample times must be strictly increasing")

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.interp(tau, self.taus, self.values)

    def integral(self, tau):
        scalar = np.ndim(tau) == 0
        tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
        out = self._raw_integral(tau_arr) - self._raw_integral(np.array([0.0]))[0]
        return out[0] if scalar else out

    def _raw_integral(self, tau):
        """Integral of the clamped interpolant from taus[0] to tau, exactly."""
        t = np.asarray(self.taus, dtype=float)
        v = np.asarray(self.values, dtype=float)
        seg = 0.5 * (v[1:] + v[:-1]) * np.diff(t)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        out = np.empty_like(tau)
        below = tau <= t[0]
        above = tau >= t[-1]
        mid = ~(below | above)
        out[below] = v[0] * (tau[below] - t[0])
        out[above] = cum[-1] + v[-1] * (tau[above] - t[-1])
        if np.any(mid):
            tm = tau[mid]
            idx = np.clip(np.searchsorted(t, tm, side="right") - 1, 0, t.size - 2)
            vm = np.interp(tm, t, v)
            out[mid] = cum[idx] + 0.5 * (v[idx] + vm) * (tm - t[idx])
        return out

    def spec(self) -> str:
        return f"table:{self.source}"


def parse_profile(text: str, base_dir: Path | None = None):
    """Parse a profile spec string.

    Grammar::

        constant:<v>
        sin:<A>,<w>,<phase>,<offset>
        piecewise:<t0>:<v0>;<t1>:<v1>;...
        table:<path>          (two-column CSV tau,value)
    """
    text = text.strip()
    kind, sep, body = text.partition(":")
    if not sep:
        raise ProfileError(f"profile spec {text!r} is missing ':'")
    kind = kind.strip()
    if kind == "constant":
        return ConstantProfile(_number(body))
    if kind == "sin":
        parts = body.split(",")
        if len(parts) != 4:
            raise ProfileError(f"sin profile needs 4 parameters, got {len(parts)}")
        a, w, ph, off = (_number(p) for p in parts)
        return SinusoidProfile(a, w, ph, off)
    if kind == "piecewise":
        pairs = [p for p in body.split(";") if p.strip()]
        if not pairs:
            raise ProfileError("piecewise profile needs at least one breakpoint")
        taus, vals = [], []
        for pair in pairs:
            t, s, v = pair.partition(":")
            if not s:
                raise ProfileError(f"malformed piecewise segment {pair!r}")
            taus.append(_number(t))
            vals.append(_number(v))
        return PiecewiseProfile(tuple(taus), tuple(vals))
    if kind == "table":
        path = Path(body.strip())
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
        except OSError as exc:
            raise ProfileError(f"cannot read table {path}: {exc}") from exc
        if data.shape[1] != 2:
            raise ProfileError(f"table {path} must have two columns, got {data.shape[1]}")
        return TabulatedProfile(tuple(data[:, 0]), tuple(data[:, 1]), source=str(body.strip()))
    raise ProfileError(f"unknown profile kind {kind!r}")


def _number(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError as exc:
        raise ProfileError(f"bad number {text.strip()!r}") from exc


def is_constant(profile) -> bool:
    return isinstance(profile, ConstantProfile)
