"""
Samplers - reproducible draws from the three Sigma-invariant benchmark laws

wss1d:r=<r>     x = xi^(1/3)/r + k/r on [0, 1), invariant under translation by 1/r
mog8:std=<s>    8 isotropic Gaussians centred on the unit circle
disk:l=<l>      radius sqrt(xi), angle (2*pi/l)*(theta^(1/3) + k), invariant under rotation by 2*pi/l
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import MOG8_COMPONENTS, MOG8_STD
from .errors import ArgumentError
from .parser import parse_spec_string
from .streams import generator


class SamplerKind(str, Enum):
    WSS1D = "wss1d"
    MOG8 = "mog8"
    DISK = "disk"


_PARAM_NAMES = {SamplerKind.WSS1D: "r", SamplerKind.MOG8: "std", SamplerKind.DISK: "l"}


@dataclass(frozen=True)
class SamplerSpec:
    """Which benchmark law to draw from, and its one parameter."""

    kind: SamplerKind
    param: float
    seed: int = 0

    def __post_init__(self):
        try:
            kind = SamplerKind(self.kind)
        except ValueError as e:
            raise ArgumentError(f"unknown distribution {self.kind!r}") from e
        object.__setattr__(self, "kind", kind)

        if kind is SamplerKind.MOG8:
            if not self.param > 0:
                raise ArgumentError(f"mog8 std must be positive, got {self.param}")
            object.__setattr__(self, "param", float(self.param))
        else:
            _check_order(self.param, _PARAM_NAMES[kind])
            object.__setattr__(self, "param", int(self.param))

        if not 0 <= int(self.seed) < 2 ** 64:
            raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SamplerSpec":
        """Parse "wss1d:r=4", "mog8:std=0.05" (std optional) or "disk:l=16"."""
        name, params = parse_spec_string(text)
        try:
            kind = SamplerKind(name)
        except ValueError as e:
            raise ArgumentError(f"unknown distribution {name!r}, expected wss1d, mog8 or disk") from e

        key = _PARAM_NAMES[kind]
        unknown = set(params) - {key}
        if unknown:
            raise ArgumentError(f"unknown parameter(s) {sorted(unknown)} for {name}")

        if kind is SamplerKind.MOG8:
            return cls(kind, _to_float(params.get(key, MOG8_STD), key), seed)
        if key not in params:
            raise ArgumentError(f"{name} needs {key}=<order>")
        return cls(kind, _to_int(params[key], key), seed)

    def __str__(self) -> str:
        param = self.param if self.kind is SamplerKind.MOG8 else int(self.param)
        return f"{self.kind.value}:{_PARAM_NAMES[self.kind]}={param}"

    def draw(self, n: int) -> np.ndarray:
        """n points, shape (n, d)."""
        if self.kind is SamplerKind.WSS1D:
            return sample_wss1d(int(self.param), n, self.seed)
        if self.kind is SamplerKind.MOG8:
            return sample_mog8(n, float(self.param), self.seed)
        return sample_disk(int(self.param), n, self.seed)


def _to_int(value, name: str) -> int:
    try:
        return int(value)
    except ValueError as e:
        raise ArgumentError(f"{name} must be an integer, got {value!r}") from e


def _to_float(value, name: str) -> float:
    try:
        return float(value)
    except ValueError as e:
        raise ArgumentError(f"{name} must be a number, got {value!r}") from e


def _check_order(value, name: str) -> None:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ArgumentError(f"{name} must be a positive integer, got {value}")


def _check_count(n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ArgumentError(f"sample count must be >= 1, got {n}")


# ============================================================================
# SAMPLERS
# ============================================================================

def sample_wss1d(r: int, n: int, seed: int) -> np.ndarray:
    """x_i = xi_i^(1/3)/r + eta_i, eta uniform on {0, 1/r, ..., (r-1)/r}."""
    _check_order(r, "r")
    _check_count(n)
    rng = generator(seed)
    xi = rng.random(n)
    eta = rng.integers(0, r, size=n) / r
    x = np.cbrt(xi) / r + eta
    # cbrt can round up to 1.0 for xi just below 1
    x = np.mod(x, 1.0)
    x[x >= 1.0] = 0.0
    return x.reshape(-1, 1)


def sample_mog8(n: int, std: float = MOG8_STD, seed: int = 0) -> np.ndarray:
    """Uniform component over 8 unit-circle centres plus N(0, std^2 I) noise."""
    if not std > 0:
        raise ArgumentError(f"std must be positive, got {std}")
    _check_count(n)
    rng = generator(seed)
    component = rng.integers(0, MOG8_COMPONENTS, size=n)
    angle = 2.0 * math.pi * component / MOG8_COMPONENTS
    centres = np.column_stack((np.cos(angle), np.sin(angle)))
    return centres + rng.normal(0.0, std, size=(n, 2))


def sample_disk(l: int, n: int, seed: int) -> np.ndarray:
    """Radius sqrt(xi), angle (2*pi/l)*theta^(1/3) + k*(2*pi/l) with k uniform in 0..l-1."""
    _check_order(l, "l")
    _check_count(n)
    rng = generator(seed)
    xi = rng.random(n)
    theta = rng.random(n)
    sector = rng.integers(0, l, size=n)
    width = 2.0 * math.pi / l
    angle = width * np.cbrt(theta) + sector * width
    radius = np.sqrt(xi)
    return np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
