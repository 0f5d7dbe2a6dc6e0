"""Horn polytopes for the frequency image, the basic set and the Monte-Carlo check.

For a descending inertia spectrum sigma_1 >= ... >= sigma_{2p}, the image of
the adapted structures is the Horn polytope of the odd/even split
lambda = (sigma_1, sigma_3, ...), mu = (sigma_2, sigma_4, ...): the set of
ordered spectra of lambda-matrix + mu-matrix.  It lives in the hyperplane
sum(nu) = trace S0 and is cut out by explicit inequalities for p <= 3.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import freqmap, matkit
from .freqmap import InertiaSpectrum

DEFAULT_TOL = 1e-9
VERTEX_DEDUP_TOL = 1e-8
MAX_EXACT_P = 3


class UnsupportedDimensionError(ValueError):
    """No explicit inequality system is available for this p."""


@dataclass(frozen=True)
class SpectrumPair:
    lam: tuple
    mu: tuple

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lam)
        mu = tuple(float(x) for x in self.mu)
        if len(lam) != len(mu) or not lam:
            raise ValueError("both spectra must have the same positive length")
        for name, v in (("lambda", lam), ("mu", mu)):
            if any(a < b for a, b in zip(v, v[1:])):
                raise ValueError(f"{name} must be descending")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def p(self):
        return len(self.lam)


@dataclass(frozen=True)
class Inequality:
    coeffs: tuple
    bound: float
    family: str

    def slack(self, nu):
        return self.bound - np.asarray(nu, dtype=float) @ np.asarray(self.coeffs, dtype=float)


@dataclass(frozen=True)
class SpectralPolytope:
    """{nu : nu_1 >= ... >= nu_p, sum(nu) = trace_value, a.nu <= b for each inequality}."""

    p: int
    trace_value: float
    inequalities: tuple

    def matrix(self):
        if not self.inequalities:
            return np.zeros((0, self.p)), np.zeros(0)
        a = np.array([ineq.coeffs for ineq in self.inequalities], dtype=float)
        b = np.array([ineq.bound for ineq in self.inequalities], dtype=float)
        return a, b

    def to_dict(self):
        return {
            "p": self.p,
            "trace": self.trace_value,
            "inequalities": [
                {"coefficients": list(q.coeffs), "bound": q.bound, "family": q.family}
                for q in self.inequalities
            ],
        }


def fflp_split(s):
    """lambda = odd-indexed, mu = even-indexed entries of the descending spectrum."""
    s = s if isinstance(s, InertiaSpectrum) else InertiaSpectrum(s)
    return SpectrumPair(tuple(s.sigma[0::2]), tuple(s.sigma[1::2]))


def _ineq(p, idx, bound, family):
    coeffs = [0.0] * p
    for i in idx:
        coeffs[i - 1] = 1.0
    return Inequality(tuple(coeffs), float(bound), family)


def horn_polytope(pair):
    """Horn polytope of (lambda, mu) for p <= 3.

    p = 2: the three Weyl inequalities.  p = 3: six Weyl inequalities, five
    of Lidskii-Wielandt type and the remaining Horn triple (13, 13, 23).
    """
    lam = (None,) + pair.lam  # 1-based
    mu = (None,) + pair.mu
    p = pair.p
    trace = float(sum(pair.lam) + sum(pair.mu))
    if p > MAX_EXACT_P:
        raise UnsupportedDimensionError(f"explicit Horn inequalities are only provided for p <= {MAX_EXACT_P}")
    ineqs = []
    if p == 2:
        ineqs = [
            _ineq(2, [1], lam[1] + mu[1], "weyl"),
            _ineq(2, [2], lam[1] + mu[2], "weyl"),
            _ineq(2, [2], lam[2] + mu[1], "weyl"),
        ]
    elif p == 3:
        ineqs = [
            _ineq(3, [1], lam[1] + mu[1], "weyl"),
            _ineq(3, [2], lam[1] + mu[2], "weyl"),
            _ineq(3, [2], lam[2] + mu[1], "weyl"),
            _ineq(3, [3], lam[1] + mu[3], "weyl"),
            _ineq(3, [3], lam[2] + mu[2], "weyl"),
            _ineq(3, [3], lam[3] + mu[1], "weyl"),
            _ineq(3, [1, 2], lam[1] + lam[2] + mu[1] + mu[2], "lidskii-wielandt"),
            _ineq(3, [1, 3], lam[1] + lam[3] + mu[1] + mu[2], "lidskii-wielandt"),
            _ineq(3, [2, 3], lam[2] + lam[3] + mu[1] + mu[2], "lidskii-wielandt"),
            _ineq(3, [1, 3], lam[1] + lam[2] + mu[1] + mu[3], "lidskii-wielandt"),
            _ineq(3, [2, 3], lam[1] + lam[2] + mu[2] + mu[3], "lidskii-wielandt"),
            _ineq(3, [2, 3], lam[1] + lam[3] + mu[1] + mu[3], "horn"),
        ]
    return SpectralPolytope(p, trace, tuple(ineqs))


def frequency_polytope(s):
    """The polytope of adapted-structure frequencies for an inertia spectrum."""
    return horn_polytope(fflp_split(s))


def _scale(poly):
    return max(1.0, abs(poly.trace_value))


def slacks(poly, nus):
    """Per-point slacks: (inequality slacks, chamber slacks, trace defect)."""
    nus = np.atleast_2d(np.asarray(nus, dtype=float))
    a, b = poly.matrix()
    ineq = b[None, :] - nus @ a.T
    chamber = nus[:, :-1] - nus[:, 1:]
    trace_defect = np.abs(nus.sum(axis=1) - poly.trace_value)
    return ineq, chamber, trace_defect


def violations(poly, nus):
    """Non-negative violation amount per point (0 when inside)."""
    ineq, chamber, trace_defect = slacks(poly, nus)
    worst = np.zeros(ineq.shape[0])
    if ineq.shape[1]:
        worst = np.maximum(worst, -ineq.min(axis=1))
    if chamber.shape[1]:
        worst = np.maximum(worst, -chamber.min(axis=1))
    return np.maximum(worst, trace_defect)


def contains(poly, nu, tol=DEFAULT_TOL):
    """(inside, worst_slack) with tolerances scaled by max(1, |trace|)."""
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (poly.p,):
        raise ValueError(f"expected a vector of length {poly.p}")
    ineq, chamber, trace_defect = slacks(poly, nu)
    parts = [ineq[0], chamber[0]]
    worst = float(np.min(np.concatenate(parts))) if any(x.size for x in parts) else 0.0
    t = tol * _scale(poly)
    inside = trace_defect[0] <= t and worst >= -t
    return bool(inside), worst


def _all_rows(poly):
    a, b = poly.matrix()
    p = poly.p
    walls = np.zeros((p - 1, p))
    for i in range(p - 1):
        walls[i, i] = -1.0
        walls[i, i + 1] = 1.0
    return np.vstack([a, walls]), np.concatenate([b, np.zeros(p - 1)])


def vertices(poly, tol=DEFAULT_TOL):
    """Vertices, by intersecting every (p-1)-subset of constraint hyperplanes
    with the trace hyperplane, descending-lexicographically sorted."""
    p = poly.p
    if p > MAX_EXACT_P:
        raise UnsupportedDimensionError(f"vertex enumeration is only provided for p <= {MAX_EXACT_P}")
    if p == 1:
        return [np.array([poly.trace_value])]
    rows, rhs = _all_rows(poly)
    found = []
    for combo in itertools.combinations(range(rows.shape[0]), p - 1):
        m = np.vstack([rows[list(combo)], np.ones(p)])
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        nu = np.linalg.solve(m, np.concatenate([rhs[list(combo)], [poly.trace_value]]))
        if not contains(poly, nu, tol)[0]:
            continue
        if any(np.max(np.abs(nu - v)) <= VERTEX_DEDUP_TOL * _scale(poly) for v in found):
            continue
        found.append(nu)
    found.sort(key=lambda v: tuple(-v))
    return found


def on_chamber_wall(nu, tol=VERTEX_DEDUP_TOL):
    nu = np.asarray(nu, dtype=float)
    return bool(np.any(np.abs(nu[:-1] - nu[1:]) <= tol * max(1.0, np.max(np.abs(nu)))))


def basic_set(s):
    """Descending pair-sum vectors of every pairing, in pairing enumeration order."""
    s = s if isinstance(s, InertiaSpectrum) else InertiaSpectrum(s)
    return [freqmap.basic_frequencies(pr, s) for pr in freqmap.enumerate_pairings(s.p)]


def labelled_basic_points(s):
    """One (label, nu, pairing) triple per pairing, labels 1, 2, ... in
    descending lexicographic order of nu; ties keep pairing enumeration order."""
    s = s if isinstance(s, InertiaSpectrum) else InertiaSpectrum(s)
    pts = [(freqmap.basic_frequencies(pr, s), pr) for pr in freqmap.enumerate_pairings(s.p)]
    order = sorted(range(len(pts)), key=lambda i: tuple(-pts[i][0]))
    return [(k + 1, pts[i][0], pts[i][1]) for k, i in enumerate(order)]


def pair_sum_chain(s):
    """All sigma_a + sigma_b (a < b) in lexicographic order of (a, b)."""
    s = s if isinstance(s, InertiaSpectrum) else InertiaSpectrum(s)
    n = s.sigma.size
    return [((a + 1, b + 1), s.sigma[a] + s.sigma[b]) for a in range(n) for b in range(a + 1, n)]


def half_splits(s):
    """Every split of the spectrum into two halves (sigma_-, sigma_+), each descending."""
    s = s if isinstance(s, InertiaSpectrum) else InertiaSpectrum(s)
    n = s.sigma.size
    out = []
    for idx in itertools.combinations(range(n), n // 2):
        rest = [i for i in range(n) if i not in idx]
        out.append(SpectrumPair(tuple(s.sigma[list(idx)]), tuple(s.sigma[rest])))
    return out


def sample_sum_spectra(pair, count, rng):
    """Ordered spectra of Q diag(lambda) Q^T + diag(mu) for Haar-random Q in SO(p)."""
    p = pair.p
    if p == 1:
        return np.full((count, 1), pair.lam[0] + pair.mu[0])
    q = matkit.haar_rotations(p, count, rng)
    m = (q * np.asarray(pair.lam)) @ np.swapaxes(q, -1, -2) + np.diag(pair.mu)
    return matkit.eigvals_sym_batch(m)


def lidskii_violations(pair, nus):
    """Violation of nu - lambda being majorized by mu, per point.

    The permutohedron conv{lambda + w(mu)} is the hull of the basic vectors
    of the odd/even pairings and contains the Horn polytope, so this is a
    necessary containment test valid for every p.
    """
    nus = np.atleast_2d(np.asarray(nus, dtype=float))
    lam = np.asarray(pair.lam)
    mu = np.asarray(pair.mu)
    d = np.sort(nus - lam, axis=1)[:, ::-1]
    partial = np.cumsum(d, axis=1)
    bound = np.cumsum(mu)
    excess = partial[:, :-1] - bound[:-1] if d.shape[1] > 1 else np.zeros((d.shape[0], 0))
    worst = np.max(excess, axis=1, initial=0.0)
    trace_defect = np.abs(partial[:, -1] - bound[-1])
    chamber = np.max(nus[:, 1:] - nus[:, :-1], axis=1, initial=0.0)
    return np.maximum(np.maximum(worst, trace_defect), np.maximum(chamber, 0.0))


@dataclass(frozen=True)
class ConjectureReport:
    p: int
    sigma: tuple
    trace: float
    samples: int
    seed: int
    max_violation: float
    coverage_gap: object
    vertices: list
    basic_set: list
    partial: bool

    def to_dict(self):
        return {
            "p": self.p,
            "sigma": list(self.sigma),
            "trace": self.trace,
            "samples": self.samples,
            "seed": self.seed,
            "max_violation": self.max_violation,
            "coverage_gap": self.coverage_gap,
            "vertices": [list(map(float, v)) for v in self.vertices],
            "basic_set": [list(map(float, v)) for v in self.basic_set],
            "partial_certificate": self.partial,
        }


def coverage_gap(points, targets):
    """Largest distance from a target point to its nearest sampled point."""
    points = np.asarray(points, dtype=float)
    gap = 0.0
    for t in targets:
        gap = max(gap, float(np.min(np.linalg.norm(points - np.asarray(t), axis=1))))
    return gap


def conjecture_verify(s, samples, seed=0, workers=1, hull_only=False):
    """Sample the frequency map and compare with the polytope of the odd/even split.

    For p <= 3 the explicit inequalities are used and the coverage gap is
    measured against the polytope vertices.  For larger p, or with
    ``hull_only``, only the Lidskii outer hull is checked and the report is
    flagged as partial.
    """
    s = s if isinstance(s, InertiaSpectrum) else InertiaSpectrum(s)
    if samples < 1:
        raise ValueError("samples must be at least 1")
    nus = freqmap.sample_frequencies(s, samples, seed=seed, workers=workers)
    pair = fflp_split(s)
    basics = basic_set(s) if s.p <= freqmap.MAX_PAIRING_P else []
    if s.p <= MAX_EXACT_P and not hull_only:
        poly = horn_polytope(pair)
        viol = float(np.max(violations(poly, nus)))
        verts = vertices(poly)
        gap = coverage_gap(nus, verts)
        partial = False
    else:
        viol = float(np.max(lidskii_violations(pair, nus)))
        verts = []
        gap = None
        partial = True
    return ConjectureReport(
        p=s.p,
        sigma=tuple(float(x) for x in s.sigma),
        trace=s.trace,
        samples=int(samples),
        seed=int(seed),
        max_violation=viol,
        coverage_gap=gap,
        vertices=verts,
        basic_set=basics,
        partial=partial,
    )
