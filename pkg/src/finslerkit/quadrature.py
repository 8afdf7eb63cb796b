"""Product quadrature rules on the unit sphere S^(n-1), n = 2, 3, 4.

The azimuth uses the periodic trapezoid rule (spectrally accurate for smooth
periodic integrands); polar angles use Gauss rules in cos(theta) whose weight
absorbs the sin^k(theta) Jacobian.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.special import roots_gegenbauer, roots_legendre

from .errors import DimensionError

DEFAULT_NODES = {2: 64, 3: 64, 4: 32}


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@functools.lru_cache(maxsize=None)
def sphere_rule(n: int, m: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (K, n) on S^(n-1) and weights (K,) summing to the sphere area."""
    if n not in DEFAULT_NODES:
        raise DimensionError(f"sphere quadrature supports n in 2..4, got {n}")
    m = m or DEFAULT_NODES[n]
    phi = 2 * np.pi * np.arange(m) / m
    wphi = np.full(m, 2 * np.pi / m)
    if n == 2:
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return pts, wphi
    t, wt = roots_legendre(m)
    if n == 3:
        T, P = np.meshgrid(t, phi, indexing="ij")
        S = np.sqrt(1 - T * T)
        pts = np.stack([S * np.cos(P), S * np.sin(P), T], axis=-1).reshape(-1, 3)
        w = (wt[:, None] * wphi[None, :]).ravel()
        return pts, w
    # n == 4: y = (t1, s1 t2, s1 s2 cos phi, s1 s2 sin phi), dOmega = s1 dt1 dt2 dphi
    t1, w1 = roots_gegenbauer(m, 1.0)
    T1, T2, P = np.meshgrid(t1, t, phi, indexing="ij")
    S1, S2 = np.sqrt(1 - T1 * T1), np.sqrt(1 - T2 * T2)
    pts = np.stack([T1, S1 * T2, S1 * S2 * np.cos(P), S1 * S2 * np.sin(P)], axis=-1).reshape(-1, 4)
    w = (w1[:, None, None] * wt[None, :, None] * wphi[None, None, :]).ravel()
    return pts, w
