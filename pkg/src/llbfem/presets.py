"""The six reference simulations: domain, coefficients and initial data."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .scheme import SchemeParams

TWO_PI = 2.0 * np.pi


def sim1_u0(p):
    x, y = p[:, 0], p[:, 1]
    return np.column_stack([np.cos(TWO_PI * x), np.sin(TWO_PI * y), 2 * np.cos(TWO_PI * x) * np.sin(TWO_PI * y)])


def sim2_u0(p):
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    return np.column_stack([2 * np.cos(TWO_PI * x), np.sin(TWO_PI * y), 2 * np.cos(TWO_PI * y) * np.sin(TWO_PI * z)])


def sim3_u0(p):
    sx, sy = np.sin(np.pi * p[:, 0]) ** 2, np.sin(np.pi * p[:, 1]) ** 2
    s2x, s2y = np.sin(TWO_PI * p[:, 0]) ** 2, np.sin(TWO_PI * p[:, 1]) ** 2
    return np.column_stack([2 * sx * sy, 4 * s2x * sy, 8 * sx * s2y])


def sim5_u0(p):
    x, y = p[:, 0], p[:, 1]
    return np.column_stack([2 * x ** 2, 2 * y, x ** 2 - 2 * y ** 2])


def sim6_u0(p):
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    return np.column_stack([2 * x ** 2, 2 * z, x ** 2 - 2 * y ** 2])


@dataclass(frozen=True)
class Preset:
    name: str
    domain: str
    params: SchemeParams
    T: float
    N: int
    u0: Callable
    n: int  # default resolution (subdivisions per unit length)


_STRONG = dict(kappa1=5.0, kappa2=2.0, mu=1.0, gamma=50.0)
_CORNER = dict(kappa1=0.5, kappa2=2.0, mu=1.0, gamma=50.0)

# T = 0.5 with k = 2.5e-3 gives N = 200; simulation 3 prescribes h = 8e-3
# instead of k, the nearest structured square mesh is n = 177 (h = sqrt(2)/n).
PRESETS = {
    "sim1": Preset("sim1", "unit_square", SchemeParams(**_STRONG, epsilon=0.001), 0.5, 200, sim1_u0, 32),
    "sim2": Preset("sim2", "unit_cube", SchemeParams(**_STRONG, epsilon=0.001), 0.5, 200, sim2_u0, 8),
    "sim3": Preset("sim3", "unit_square",
                   SchemeParams(kappa1=0.02, kappa2=0.04, mu=0.5, gamma=0.05, epsilon=0.001),
                   0.5, 200, sim3_u0, 177),
    "sim4": Preset("sim4", "unit_square", SchemeParams(**_STRONG, epsilon=0.0), 0.5, 200, sim1_u0, 32),
    "sim5": Preset("sim5", "l_shape", SchemeParams(**_CORNER, epsilon=0.001), 0.5, 200, sim5_u0, 16),
    "sim6": Preset("sim6", "fichera", SchemeParams(**_CORNER, epsilon=0.001), 0.5, 200, sim6_u0, 4),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
