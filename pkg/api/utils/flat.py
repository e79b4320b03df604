"""Planar helpers for straight lines on developed triangles (complex numbers)"""
from typing import Optional, Tuple
import numpy as np

T_MIN = 1e-9


def cross(a, b):
    return np.imag(np.conj(a) * b)


def local_corners(he_vals: np.ndarray) -> np.ndarray:
    """Per-face triangle (F, 3) with corner 0 at the origin"""
    w = he_vals.reshape(-1, 3)
    return np.stack([np.zeros(len(w), dtype=complex), w[:, 0], w[:, 0] + w[:, 1]], axis=1)


def exit_edge(P: np.ndarray, p: complex, d: complex, entry: Optional[int] = None) -> Optional[Tuple[int, float, float]]:
    """Edge ``(i, s, t)`` through which the line ``p + s*d`` leaves triangle P.

    Edge i runs from ``P[i]`` to ``P[(i+1) % 3]`` and is hit at parameter t.
    With an entry edge the other intersected edge is returned even when the
    triangle is folded (s < 0).
    """
    scale = max(abs(P[1] - P[0]), abs(P[2] - P[0]), abs(P[2] - P[1]))
    hits = []
    for i in range(3):
        if i == entry:
            continue
        a = P[i]
        e = P[(i + 1) % 3] - a
        denom = cross(d, e)
        if abs(denom) <= 1e-14 * abs(e):
            continue
        hits.append((i, cross(a - p, e) / denom, cross(a - p, d) / denom))
    if not hits:
        return None
    inside = [h for h in hits if -1e-9 <= h[2] <= 1 + 1e-9]
    if entry is None:
        forward = [h for h in inside if h[1] > 1e-12 * scale]
        return min(forward, key=lambda h: h[1]) if forward else None
    if not inside:
        inside = [min(hits, key=lambda h: max(-h[2], h[2] - 1))]
    return max(inside, key=lambda h: min(h[2], 1 - h[2]))


def clamp_t(t: float) -> float:
    return min(max(t, T_MIN), 1.0 - T_MIN)


def point_segment_distance(z, p: complex, q: complex):
    """Distance from point(s) z to the segment p-q"""
    seg = q - p
    length2 = abs(seg) ** 2
    if length2 == 0.0:
        return np.abs(np.asarray(z) - p)
    s = np.clip(np.real(np.conj(seg) * (np.asarray(z) - p)) / length2, 0.0, 1.0)
    return np.abs(np.asarray(z) - (p + s * seg))


def barycentric(P: np.ndarray, z: complex) -> np.ndarray:
    a, b, c = P
    area = cross(b - a, c - a)
    l1 = cross(z - a, c - a) / area
    l2 = cross(b - a, z - a) / area
    return np.array([1.0 - l1 - l2, l1, l2])


def lagrange_reduce(b1: complex, b2: complex) -> Tuple[complex, complex]:
    """Gauss-Lagrange reduced, positively oriented basis of a planar lattice"""
    for _ in range(200):
        if abs(b1) > abs(b2):
            b1, b2 = b2, b1
        mu = round(np.real(np.conj(b1) * b2) / abs(b1) ** 2)
        if mu == 0:
            break
        b2 = b2 - mu * b1
    if cross(b1, b2) < 0:
        b2 = -b2
    return complex(b1), complex(b2)
