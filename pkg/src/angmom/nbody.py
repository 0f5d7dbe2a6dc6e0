"""N-body configurations, the Newton potential and relative-equilibrium algebra.

Positions are stored as a d x N matrix ``X`` (column k is body k), masses as
a length-N vector.  Gradients are taken for the mass scalar product
``x'.x'' = sum_k m_k <r'_k, r''_k>``, so ``xdd = grad U(x)`` is Newton's law.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import matkit

DEFAULT_CERTIFY_TOL = 1e-8
RANK_TOL = 1e-9


class CollisionError(ValueError):
    """Two bodies occupy the same position."""

    def __init__(self, i, j):
        super().__init__(f"bodies {i + 1} and {j + 1} collide")
        self.pair = (i, j)


class ConfigurationFormatError(ValueError):
    """A configuration document could not be parsed."""


@dataclass(frozen=True)
class Configuration:
    """Barycentric N-body configuration; positions are recentred on construction."""

    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        m = np.array(self.masses, dtype=float).ravel()
        if x.ndim != 2:
            raise ValueError("positions must be a d x N matrix")
        if m.size < 2:
            raise ValueError("need at least two bodies")
        if x.shape[1] != m.size:
            raise ValueError(f"{x.shape[1]} positions for {m.size} masses")
        if np.any(m <= 0) or not np.all(np.isfinite(m)):
            raise ValueError("masses must be positive and finite")
        if not np.all(np.isfinite(x)):
            raise ValueError("positions must be finite")
        x = x - (x @ m)[:, None] / m.sum()
        x.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_bodies(cls, bodies, masses):
        """Build from a list of per-body coordinate lists."""
        return cls(np.asarray(bodies, dtype=float).T, masses)

    @property
    def dim(self):
        return self.positions.shape[0]

    @property
    def n(self):
        return self.masses.size

    def embed(self, dim):
        """The same configuration in R^dim, padded with zero coordinates."""
        if dim < self.dim:
            raise ValueError("cannot embed into a smaller space")
        x = np.zeros((dim, self.n))
        x[: self.dim] = self.positions
        return Configuration(x, self.masses)

    def mutual_distances(self):
        x = self.positions
        i, j = np.triu_indices(self.n, 1)
        return np.linalg.norm(x[:, i] - x[:, j], axis=0)


@dataclass(frozen=True)
class State:
    configuration: Configuration
    velocities: np.ndarray

    def __post_init__(self):
        y = np.array(self.velocities, dtype=float)
        if y.shape != self.configuration.positions.shape:
            raise ValueError("velocities must have the same shape as positions")
        m = self.configuration.masses
        y = y - (y @ m)[:, None] / m.sum()
        y.setflags(write=False)
        object.__setattr__(self, "velocities", y)


@dataclass(frozen=True)
class BalanceCertificate:
    status: str
    multiplier: object
    residual: float
    central_residual: float
    balanced_residual: float

    def to_dict(self):
        mult = self.multiplier
        if isinstance(mult, np.ndarray):
            mult = mult.tolist()
        return {
            "status": self.status,
            "multiplier": mult,
            "residual": self.residual,
            "central_residual": self.central_residual,
            "balanced_residual": self.balanced_residual,
        }


def load_configuration(source):
    """Parse the JSON document {"masses": [...], "positions": [[...], ...], "dim": d}.

    ``source`` is a path or an already-decoded dict.
    """
    if isinstance(source, dict):
        doc = source
    else:
        try:
            with open(source) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationFormatError(f"malformed JSON: {exc}") from exc
    try:
        masses = [float(m) for m in doc["masses"]]
        bodies = [[float(c) for c in body] for body in doc["positions"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationFormatError(f"bad configuration document: {exc}") from exc
    if len(masses) != len(bodies):
        raise ConfigurationFormatError(f"{len(bodies)} positions for {len(masses)} masses")
    dim = doc.get("dim", len(bodies[0]) if bodies else 0)
    if any(len(b) != dim for b in bodies):
        raise ConfigurationFormatError(f"every position must have {dim} coordinates")
    try:
        return Configuration.from_bodies(bodies, masses)
    except ValueError as exc:
        raise ConfigurationFormatError(str(exc)) from exc


def _pair_data(c):
    x = c.positions
    diff = x[:, None, :] - x[:, :, None]  # diff[:, k, j] = r_j - r_k
    dist = np.linalg.norm(diff, axis=0)
    np.fill_diagonal(dist, np.inf)
    k, j = np.unravel_index(np.argmin(dist), dist.shape)
    if dist[k, j] == 0.0:
        raise CollisionError(min(k, j), max(k, j))
    return diff, dist


def potential(c):
    """U(x) = sum_{i<j} m_i m_j / |r_i - r_j|."""
    _, dist = _pair_data(c)
    m = c.masses
    i, j = np.triu_indices(c.n, 1)
    return float(np.sum(m[i] * m[j] / dist[i, j]))


def gradient_U(c):
    """Mass-metric gradient; column k is sum_{j != k} m_j (r_j - r_k) / |r_j - r_k|^3."""
    diff, dist = _pair_data(c)
    w = c.masses[None, :] / dist**3  # w[k, j] = m_j / r_kj^3
    return np.einsum("dkj,kj->dk", diff, w)


def mass_dot(c, a, b):
    return float(np.sum(c.masses * np.sum(a * b, axis=0)))


def wintner_conley(c):
    """The N x N matrix A with grad U(x) = 2 X A.

    Off-diagonal A[i, j] = m_i / (2 r_ij^3); each column sums to zero.
    """
    _, dist = _pair_data(c)
    a = 0.5 * c.masses[:, None] / dist**3
    np.fill_diagonal(a, 0.0)
    np.fill_diagonal(a, -a.sum(axis=0))
    return a


def inertia_tensor(c):
    """S = X M X^T; its trace is the moment of inertia."""
    x = c.positions
    return matkit.symmetrize((x * c.masses) @ x.T)


def moment_of_inertia(c):
    return float(np.sum(c.masses * np.sum(c.positions**2, axis=0)))


def _mass_norm(c, y):
    return np.sqrt(max(mass_dot(c, y, y), 0.0))


def certify(c, tol=DEFAULT_CERTIFY_TOL):
    """Classify ``c`` as central, balanced or neither.

    Central: grad U = lambda x with lambda = -U/I forced by homogeneity.
    Balanced: the intrinsic inertia B = X^T X and A satisfy B A = A^T B
    (B A is symmetric), equivalent to grad U = Sigma x with Sigma symmetric.
    """
    grad = gradient_U(c)
    u = potential(c)
    inertia = moment_of_inertia(c)
    lam = -u / inertia
    gnorm = _mass_norm(c, grad)
    central_res = _mass_norm(c, grad - lam * c.positions) / gnorm

    a = wintner_conley(c)
    b = c.positions.T @ c.positions
    ba = b @ a
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    balanced_res = float(np.linalg.norm(ba - ba.T) / denom)

    if central_res <= tol:
        return BalanceCertificate("central", lam, central_res, central_res, balanced_res)
    if balanced_res <= tol:
        return BalanceCertificate("balanced", balance_matrix(c), balanced_res, central_res, balanced_res)
    return BalanceCertificate("neither", None, min(central_res, balanced_res), central_res, balanced_res)


def balance_matrix(c):
    """Symmetric Sigma with grad U = Sigma x on the span of the configuration."""
    x = c.positions
    s = inertia_tensor(c)
    sigma = gradient_U(c) @ (c.masses[:, None] * x.T) @ np.linalg.pinv(s)
    return matkit.symmetrize(sigma)


def expm_antisymmetric(omega, t=1.0):
    """exp(t Omega) for antisymmetric Omega through the spectrum of -Omega^2.

    With -Omega^2 = V diag(w^2) V^T, exp(t Omega) = V cos(t w) V^T
    + Omega V (sin(t w)/w) V^T, the second factor taken as t where w = 0.
    """
    omega = matkit.antisymmetrize(omega)
    lam, v = matkit.eigen_sym(-(omega @ omega))
    w = np.sqrt(np.clip(lam, 0.0, None))
    tw = t * w
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(w > 0, np.sin(tw) / np.where(w > 0, w, 1.0), t)
    return (v * np.cos(tw)) @ v.T + omega @ ((v * sinc) @ v.T)


def rigid_motion(c, omega, t):
    """Configuration exp(t Omega) X0."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (c.dim, c.dim):
        raise ValueError("Omega must act on the configuration space")
    return Configuration(expm_antisymmetric(omega, t) @ c.positions, c.masses)


def relative_equilibrium_state(c, omega):
    """Initial state (X0, Omega X0) of the rigid motion generated by Omega."""
    return State(c, np.asarray(omega, dtype=float) @ c.positions)


def central_omega(c, j):
    """Omega = sqrt(-lambda) J for a central configuration, so Omega^2 X0 = grad U."""
    lam = -potential(c) / moment_of_inertia(c)
    return np.sqrt(-lam) * np.asarray(j, dtype=float)


def angular_momentum(s):
    """C = -X M Y^T + Y M X^T."""
    x = s.configuration.positions
    y = s.velocities
    m = s.configuration.masses
    return matkit.antisymmetrize(-(x * m) @ y.T + (y * m) @ x.T)


def _rank(m, rel_tol=RANK_TOL):
    sv = np.linalg.svd(m, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def albouy_bounds(s):
    """(k, d, holds) with rank C = 2k, d the dimension spanned by positions and
    velocities, and holds = 2k <= d <= k + N - 1."""
    c = angular_momentum(s)
    k = _rank(c) // 2
    span = np.concatenate([s.configuration.positions, s.velocities], axis=1)
    d = _rank(span)
    n = s.configuration.n
    return k, d, bool(2 * k <= d <= k + n - 1)


# -- fixtures ----------------------------------------------------------------


def equilateral_triangle(side=1.0, masses=(1.0, 1.0, 1.0), dim=2):
    r = side / np.sqrt(3.0)
    ang = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    x = np.zeros((dim, 3))
    x[0] = r * np.cos(ang)
    x[1] = r * np.sin(ang)
    return Configuration(x, masses)


def regular_tetrahedron(mass=1.0, dim=3, scale=1.0):
    x = np.zeros((dim, 4))
    x[:3] = scale * np.array([[1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float)
    return Configuration(x, [mass] * 4)
