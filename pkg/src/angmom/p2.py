"""Closed forms for R^4 (p = 2).

Every positive hermitian structure on R^4 has a representative R(phi, theta)
with phi in [-pi/2, pi/2], theta in [0, 2 pi).  On this sphere chart
f(phi, theta) = nu_1 nu_2 = det Sigma, and the frequencies follow from
nu_1 + nu_2 = trace S0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import freqmap, matkit
from .freqmap import HermitianStructure, InertiaSpectrum

TWO_PI = 2.0 * np.pi

# the three great circles of adapted structures and their six intersections
J0 = matkit.standard_complex_structure(2)
J1 = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
J2 = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, -1, 0, 0], [1, 0, 0, 0]], dtype=float)


@dataclass(frozen=True)
class SphereCoords:
    phi: float
    theta: float

    def __post_init__(self):
        phi = float(self.phi)
        theta = float(self.theta)
        if not (np.isfinite(phi) and np.isfinite(theta)):
            raise ValueError("coordinates must be finite")
        # fold phi into [-pi/2, pi/2]: R(phi + pi, theta) and R(-phi, theta + pi)
        # are U(2)-equivalent up to the chart
        phi = (phi + np.pi) % TWO_PI - np.pi
        if phi > np.pi / 2:
            phi, theta = np.pi - phi, theta + np.pi
        elif phi < -np.pi / 2:
            phi, theta = -np.pi - phi, theta + np.pi
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta % TWO_PI)


def _coords(c):
    return c if isinstance(c, SphereCoords) else SphereCoords(*c)


def rotation_at(c):
    c = _coords(c)
    cp, sp = np.cos(c.phi), np.sin(c.phi)
    ct, st = np.cos(c.theta), np.sin(c.theta)
    return np.array(
        [
            [cp, -sp * ct, sp * st, 0.0],
            [sp, cp * ct, -cp * st, 0.0],
            [0.0, st, ct, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def structure_at(c):
    return HermitianStructure(rotation_at(c))


def structure_matrix(c):
    """J(phi, theta) written out entrywise."""
    c = _coords(c)
    cp, sp = np.cos(c.phi), np.sin(c.phi)
    ct, st = np.cos(c.theta), np.sin(c.theta)
    return np.array(
        [
            [0.0, -cp * st, -cp * ct, -sp],
            [cp * st, 0.0, sp, -cp * ct],
            [cp * ct, -sp, 0.0, cp * st],
            [sp, cp * ct, -cp * st, 0.0],
        ]
    )


def _spectrum(s):
    s = s if isinstance(s, InertiaSpectrum) else InertiaSpectrum(s)
    if s.p != 2:
        raise ValueError(f"this closed form needs p = 2, got p = {s.p}")
    return s


def _hk_products(phi, theta, sigma):
    """S0 scalar products of the row vectors h1, h2, k1, k2 of R(phi, theta)."""
    cp, sp = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    zero = np.zeros_like(cp * ct)
    one = np.ones_like(zero)
    h1 = np.stack([cp + zero, -sp * ct, sp * st, zero])
    h2 = np.stack([sp + zero, cp * ct, -cp * st, zero])
    k1 = np.stack([zero, st + zero, ct + zero, zero])
    k2 = np.stack([zero, zero, zero, one])
    sig = np.asarray(sigma, dtype=float).reshape((4,) + (1,) * zero.ndim)

    def dot(u, v):
        return np.sum(sig * u * v, axis=0)

    return {
        "h1h1": dot(h1, h1), "k1k1": dot(k1, k1), "h2h2": dot(h2, h2), "k2k2": dot(k2, k2),
        "h1h2": dot(h1, h2), "k1k2": dot(k1, k2), "k1h2": dot(k1, h2), "h1k2": dot(h1, k2),
    }


def f_value(c, s):
    """det Sigma = nu_1 nu_2 at (phi, theta)."""
    c = _coords(c)
    return f_grid(c.phi, c.theta, s)


def f_grid(phi, theta, s):
    """f evaluated elementwise on broadcast arrays of coordinates."""
    s = _spectrum(s)
    d = _hk_products(np.asarray(phi, dtype=float), np.asarray(theta, dtype=float), s.sigma)
    c11 = d["h1h1"] + d["k1k1"]
    c22 = d["h2h2"] + d["k2k2"]
    re = d["h1h2"] + d["k1k2"]
    im = d["k1h2"] - d["h1k2"]
    return c11 * c22 - re**2 - im**2


def delta_value(c, s):
    """Discriminant (c11 - c22)^2 + 4 |c12|^2 of Sigma."""
    c = _coords(c)
    s = _spectrum(s)
    d = _hk_products(np.asarray(c.phi), np.asarray(c.theta), s.sigma)
    c11 = d["h1h1"] + d["k1k1"]
    c22 = d["h2h2"] + d["k2k2"]
    re = d["h1h2"] + d["k1k2"]
    im = d["k1h2"] - d["h1k2"]
    return float((c11 - c22) ** 2 + 4 * re**2 + 4 * im**2)


def frequencies_at(c, s):
    """(nu_1, nu_2) = ((I + sqrt(delta)) / 2, (I - sqrt(delta)) / 2)."""
    s = _spectrum(s)
    root = np.sqrt(max(delta_value(c, s), 0.0))
    return np.array([0.5 * (s.trace + root), 0.5 * (s.trace - root)])


def frequencies_from_f(f, trace):
    """Invert nu_1 nu_2 = f, nu_1 + nu_2 = trace with nu_1 >= nu_2."""
    f = np.asarray(f, dtype=float)
    root = np.sqrt(np.clip(0.25 * trace**2 - f, 0.0, None))
    return 0.5 * trace + root, 0.5 * trace - root


def f_gradient(c, s):
    """(df/dphi, df/dtheta) from the closed-form derivatives."""
    c = _coords(c)
    s1, s2, s3, s4 = _spectrum(s).sigma
    return f_gradient_grid(c.phi, c.theta, (s1, s2, s3, s4))


def f_gradient_grid(phi, theta, sigma):
    s1, s2, s3, s4 = (float(x) for x in (sigma.sigma if isinstance(sigma, InertiaSpectrum) else sigma))
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    c2 = np.cos(theta) ** 2
    s2t = np.sin(theta) ** 2
    d_phi = (s1 - (s2 * c2 + s3 * s2t)) * (s2 * s2t + s3 * c2 - s4) + (s2 - s3) ** 2 * c2 * s2t
    df_dphi = 2 * np.sin(phi) * np.cos(phi) * d_phi
    df_dtheta = 2 * (s2 - s3) * (s4 - s1) * np.cos(theta) * np.sin(theta) * np.cos(phi) ** 2
    return df_dphi, df_dtheta


@dataclass(frozen=True)
class CriticalAnalysis:
    structures: dict
    values: dict
    fmin: float
    fmax: float
    nu1_interval: tuple

    def to_dict(self):
        return {
            "critical_points": {
                name: {"phi": pt[0], "theta": pt[1], "f": self.values[name]}
                for name, pt in self.structures.items()
            },
            "critical_values": sorted(set(self.values.values())),
            "fmin": self.fmin,
            "fmax": self.fmax,
            "nu1_interval": list(self.nu1_interval),
        }


# chart coordinates of the six critical structures
CRITICAL_POINTS = {
    "+J0": (0.0, 0.0),
    "-J0": (0.0, np.pi),
    "+J1": (0.0, 1.5 * np.pi),
    "-J1": (0.0, 0.5 * np.pi),
    "+J2": (0.5 * np.pi, 0.0),
    "-J2": (-0.5 * np.pi, 0.0),
}


def critical_values(s):
    """f at J0, J1, J2: the pair-sum products for the three pairings of {1, 2, 3, 4}."""
    s1, s2, s3, s4 = _spectrum(s).sigma
    return {
        "J0": (s1 + s3) * (s2 + s4),
        "J1": (s1 + s2) * (s3 + s4),
        "J2": (s1 + s4) * (s2 + s3),
    }


def critical_analysis(s):
    s = _spectrum(s)
    cv = critical_values(s)
    values = {name: cv[name[1:]] for name in CRITICAL_POINTS}
    fmin = min(cv.values())
    fmax = max(cv.values())
    upper, _ = frequencies_from_f(fmin, s.trace)
    lower, _ = frequencies_from_f(fmax, s.trace)
    return CriticalAnalysis(dict(CRITICAL_POINTS), values, fmin, fmax, (float(lower), float(upper)))


def round_3d_check(s, trials, seed=0):
    """Largest deviation of sampled frequencies from (2I/3, I/3) for S0 = diag(sigma, sigma, sigma, 0)."""
    s = _spectrum(s)
    sig = s.sigma
    if not (sig[0] == sig[1] == sig[2] and sig[3] == 0):
        raise ValueError("expected an inertia spectrum of the form (sigma, sigma, sigma, 0)")
    nus = freqmap.sample_frequencies(s, trials, seed=seed)
    target = np.array([2 * s.trace / 3, s.trace / 3])
    return float(np.max(np.abs(nus - target)))


def grid(s, n_phi=30, n_theta=60):
    """Rows (phi, theta, f, nu_1, nu_2) on a grid with both endpoints included."""
    s = _spectrum(s)
    phis = np.linspace(-np.pi / 2, np.pi / 2, n_phi)
    thetas = np.linspace(0.0, TWO_PI, n_theta)
    pp, tt = np.meshgrid(phis, thetas, indexing="ij")
    f = f_grid(pp, tt, s)
    nu1, nu2 = frequencies_from_f(f, s.trace)
    return phis, thetas, f, nu1, nu2


def contour_segments(phis, thetas, values, level):
    """Marching-squares segments of {values = level} on a (phi, theta) grid."""
    segs = []
    above = values > level
    n_phi, n_theta = values.shape
    for i in range(n_phi - 1):
        for j in range(n_theta - 1):
            corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)]
            flags = [above[c] for c in corners]
            if all(flags) or not any(flags):
                continue
            pts = []
            for a in range(4):
                ca, cb = corners[a], corners[(a + 1) % 4]
                if above[ca] != above[cb]:
                    va, vb = values[ca], values[cb]
                    t = (level - va) / (vb - va)
                    pa = np.array([phis[ca[0]], thetas[ca[1]]])
                    pb = np.array([phis[cb[0]], thetas[cb[1]]])
                    pts.append(pa + t * (pb - pa))
            # saddle cells give four crossings; pair them in order
            for k in range(0, len(pts) - 1, 2):
                segs.append((pts[k], pts[k + 1]))
    return segs


def contour_components(phis, thetas, values, level):
    """Number of connected contour curves at ``level``.

    Segment endpoints are matched after folding theta mod 2 pi, so curves
    crossing the chart seam count once.
    """
    segs = contour_segments(phis, thetas, values, level)
    parent = {}

    def key(pt):
        return (round(float(pt[0]), 9), round(float(pt[1]) % TWO_PI, 9) % round(TWO_PI, 9))

    def find(k):
        parent.setdefault(k, k)
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for a, b in segs:
        ra, rb = find(key(a)), find(key(b))
        if ra != rb:
            parent[ra] = rb
    return len({find(k) for k in list(parent)})
