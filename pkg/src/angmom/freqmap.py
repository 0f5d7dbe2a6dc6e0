"""The frequency map of a fixed inertia spectrum over hermitian structures.

A positive hermitian structure on R^{2p} is stored through a rotation
representative ``R``: ``J = R^T J0 R``.  For a diagonal inertia matrix
``S0 = diag(sigma)`` the hermitian matrix

    Sigma = J0^{-1} (R S0 R^T) J0 + R S0 R^T

commutes with ``J0`` and so reads as a complex p x p hermitian matrix
``P + iQ``.  Its ordered spectrum is the frequency vector of ``J``.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import matkit
from .matkit import ComplexHermitian, standard_complex_structure

MAX_PAIRING_P = 8
SAMPLE_CHUNK = 8192


@dataclass(frozen=True)
class InertiaSpectrum:
    """Descending, non-negative diagonal of the inertia matrix on R^{2p}."""

    sigma: np.ndarray
    trace: float = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float).ravel()
        if s.size == 0 or s.size % 2:
            raise ValueError(f"need an even number of inertia eigenvalues, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise ValueError("inertia eigenvalues must be finite")
        if np.any(s < 0):
            raise ValueError("inertia eigenvalues must be non-negative")
        if np.any(np.diff(s) > 0):
            raise ValueError("inertia eigenvalues must be listed in descending order")
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "trace", float(s.sum()))

    @classmethod
    def from_values(cls, values):
        """Sort arbitrary non-negative values into a spectrum."""
        return cls(np.sort(np.asarray(values, dtype=float))[::-1])

    @property
    def p(self):
        return self.sigma.size // 2

    def matrix(self):
        return np.diag(self.sigma)


@dataclass(frozen=True)
class HermitianStructure:
    """Positive hermitian structure J = R^T J0 R, kept as its representative R."""

    representative: np.ndarray

    def __post_init__(self):
        r = np.array(self.representative, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] % 2:
            raise ValueError(f"representative must be a 2p x 2p matrix, got {r.shape}")
        if not matkit.is_rotation(r, tol=1e-10):
            raise ValueError("representative is not in SO(2p)")
        r.setflags(write=False)
        object.__setattr__(self, "representative", r)

    @property
    def p(self):
        return self.representative.shape[0] // 2

    @property
    def J(self):
        r = self.representative
        return matkit.antisymmetrize(r.T @ standard_complex_structure(self.p) @ r)

    def same_structure(self, other, tol=1e-10):
        """U(p)-coset equality, decided on the J matrices."""
        return self.p == other.p and np.max(np.abs(self.J - other.J)) <= tol

    @classmethod
    def standard(cls, p):
        return cls(np.eye(2 * p))


def _spectrum_of(s):
    return s if isinstance(s, InertiaSpectrum) else InertiaSpectrum(s)


def _check_dims(j, s):
    if j.p != s.p:
        raise ValueError(f"structure acts on R^{2 * j.p} but the spectrum has {2 * s.p} entries")


def sigma_parts(reps, sigma):
    """Real and imaginary parts of the complex form of Sigma, for stacked R.

    ``reps`` has shape (B, 2p, 2p).  Matrix route: ``S = R S0 R^T`` split into
    blocks, ``P = S_hh + S_kk`` and ``Q = S_kh - S_hk``.
    """
    reps = np.asarray(reps, dtype=float)
    p = reps.shape[-1] // 2
    s = (reps * sigma) @ np.swapaxes(reps, -1, -2)
    s_hh, s_hk = s[..., :p, :p], s[..., :p, p:]
    s_kh, s_kk = s[..., p:, :p], s[..., p:, p:]
    return s_hh + s_kk, s_kh - s_hk


def sigma_of(j, s, method="coefficients"):
    """The hermitian matrix Sigma of ``j`` for the diagonal inertia ``s``.

    ``method="coefficients"`` pairs the complex row vectors ``h_i + i k_i`` of
    the representative through the S0 scalar product; ``method="matrix"``
    evaluates ``J0^{-1} (R S0 R^T) J0 + R S0 R^T`` and reads off its complex
    form.  The two agree to rounding.
    """
    s = _spectrum_of(s)
    _check_dims(j, s)
    r = j.representative
    p = j.p
    if method == "coefficients":
        z = r[:p] + 1j * r[p:]
        h = (z * s.sigma) @ z.conj().T
        return ComplexHermitian.from_complex(h)
    if method == "matrix":
        j0 = standard_complex_structure(p)
        gram = r @ s.matrix() @ r.T
        big = -j0 @ gram @ j0 + gram
        return ComplexHermitian(big[:p, :p], big[p:, :p])
    raise ValueError(f"unknown method {method!r}")


def frequency_map(j, s, tol=matkit.DEFAULT_TOL):
    """Ordered spectrum (nu_1 >= ... >= nu_p) of Sigma for the structure ``j``."""
    s = _spectrum_of(s)
    return matkit.eigen_hermitian(sigma_of(j, s), tol=tol)


def frequency_map_batch(reps, s):
    """Frequency vectors for a stack of representatives, shape (B, p).

    ``s`` may also be a bare diagonal in any order (used for sub-blocks).
    """
    sigma = s.sigma if isinstance(s, InertiaSpectrum) else np.asarray(s, dtype=float)
    real, imag = sigma_parts(reps, sigma)
    return matkit.hermitian_spectra_batch(real, imag)


def angular_momentum_matrix(j, s_full, omega=1.0):
    """omega (S0 J + J S0): the angular momentum of the rigid rotation omega*J."""
    s_full = matkit.symmetrize(s_full)
    jm = j.J
    return matkit.antisymmetrize(omega * (s_full @ jm + jm @ s_full))


def antisymmetric_frequencies(c):
    """Moduli of the eigenvalues +-i nu_k of a real antisymmetric matrix, descending.

    ``C^T C`` is symmetric with spectrum nu_1^2, nu_1^2, nu_2^2, ...
    """
    c = matkit.antisymmetrize(c)
    w = matkit.eigvals_sym_batch(c.T @ c)[0]
    w = np.sqrt(np.clip(w, 0.0, None))
    return 0.5 * (w[0::2] + w[1::2])


# -- the symmetry group ------------------------------------------------------


@dataclass(frozen=True)
class GammaElement:
    """Involution R -> D' R D'' with D' = diag(Id, eta Id), D'' = diag(dpp).

    (eta, D'') and (eta, -D'') give the same involution; the stored sign
    pattern is normalized so that its first entry is +1.
    """

    eta: int
    dpp: tuple

    def __post_init__(self):
        if self.eta not in (1, -1):
            raise ValueError("eta must be +1 or -1")
        v = tuple(int(x) for x in self.dpp)
        if len(v) % 2 or any(x not in (1, -1) for x in v):
            raise ValueError("D'' must be an even-length list of +-1")
        p = len(v) // 2
        if self.eta ** p * int(np.prod(v)) != 1:
            raise ValueError("sign pattern violates eta^p det D'' = +1")
        if v[0] == -1:
            v = tuple(-x for x in v)
        object.__setattr__(self, "dpp", v)

    @property
    def p(self):
        return len(self.dpp) // 2

    def d_prime(self):
        p = self.p
        return np.diag([1.0] * p + [float(self.eta)] * p)

    def d_second(self):
        return np.diag(np.array(self.dpp, dtype=float))


def gamma_group(p):
    """All 2^(2p-1) elements of the symmetry group for R^{2p}."""
    elements = []
    for eta in (1, -1):
        for rest in itertools.product((1, -1), repeat=2 * p - 1):
            v = (1,) + rest
            if eta ** p * int(np.prod(v)) == 1:
                elements.append(GammaElement(eta, v))
    return elements


def gamma_act(g, j):
    if g.p != j.p:
        raise ValueError("group element and structure act on different dimensions")
    return HermitianStructure(g.d_prime() @ j.representative @ g.d_second())


def fixes(g, j, tol=1e-10):
    """True when the involution ``g`` leaves the structure ``j`` unchanged."""
    d = g.d_second()
    return np.max(np.abs(g.eta * d @ j.J @ d - j.J)) <= tol


def stabilizer_order(j):
    return int(sum(fixes(g, j) for g in gamma_group(j.p)))


# -- pairings, basic and adapted structures -----------------------------------


def enumerate_pairings(p):
    """All partitions of {1..2p} into p pairs, 1*3*5*...*(2p-1) of them.

    Each pairing is a tuple of (a, b) with a < b, sorted by first element;
    the list is in the order produced by always pairing the smallest free
    index with each remaining index in turn.
    """
    if p < 1:
        raise ValueError("p must be positive")
    if p > MAX_PAIRING_P:
        raise ValueError(f"p={p} is too large to enumerate pairings (limit {MAX_PAIRING_P})")

    def rec(free):
        if not free:
            yield ()
            return
        a = free[0]
        for i in range(1, len(free)):
            b = free[i]
            rest = free[1:i] + free[i + 1:]
            for tail in rec(rest):
                yield ((a, b),) + tail

    return list(rec(tuple(range(1, 2 * p + 1))))


def validate_pairing(pairing, p=None):
    pairs = tuple(tuple(sorted(int(x) for x in pr)) for pr in pairing)
    if any(len(pr) != 2 for pr in pairs):
        raise ValueError("every block of a pairing must have two elements")
    pairs = tuple(sorted(pairs))
    n = 2 * len(pairs)
    if p is not None and n != 2 * p:
        raise ValueError(f"pairing covers {n} indices, expected {2 * p}")
    if sorted(x for pr in pairs for x in pr) != list(range(1, n + 1)):
        raise ValueError("pairing must partition {1, ..., 2p}")
    return pairs


def pairing_permutation(pairing):
    """Signed permutation P with rows e_{a_i} (i <= p) and e_{b_i} (i > p), det +1.

    If the plain permutation is odd, its last row is negated.
    """
    pairs = validate_pairing(pairing)
    p = len(pairs)
    perm = np.zeros((2 * p, 2 * p))
    for i, (a, b) in enumerate(pairs):
        perm[i, a - 1] = 1.0
        perm[p + i, b - 1] = 1.0
    if np.linalg.det(perm) < 0:
        perm[-1] *= -1.0
    return perm


def basic_structure(pairing):
    """Structure turning each pair (a, b) into a complex line, J e_a = +-e_b."""
    return HermitianStructure(pairing_permutation(pairing))


def basic_frequencies(pairing, s):
    s = _spectrum_of(s)
    pairs = validate_pairing(pairing, s.p)
    sums = np.array([s.sigma[a - 1] + s.sigma[b - 1] for a, b in pairs])
    return np.sort(sums)[::-1]


def is_signed_permutation(m, tol=1e-12):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    mag = np.abs(m)
    if not np.all((np.abs(mag) <= tol) | (np.abs(mag - 1.0) <= tol)):
        return False
    ones = mag > 0.5
    return bool(np.all(ones.sum(axis=0) == 1) and np.all(ones.sum(axis=1) == 1))


def adapted_structure(rho, perm):
    """J_{rho,P}, with representative diag(rho, Id) P."""
    rho = np.asarray(rho, dtype=float)
    perm = np.asarray(perm, dtype=float)
    p = rho.shape[0]
    if perm.shape != (2 * p, 2 * p):
        raise ValueError("P must be 2p x 2p for a p x p rho")
    if not is_signed_permutation(perm):
        raise ValueError("P is not a signed permutation")
    if np.linalg.det(perm) < 0:
        raise ValueError("P must have determinant +1")
    if not matkit.is_rotation(rho, tol=1e-10):
        raise ValueError("rho is not in SO(p)")
    block = np.eye(2 * p)
    block[:p, :p] = rho
    return HermitianStructure(block @ perm)


def adapted_involution(perm):
    """The element (-1, D''_P) with D''_P = P^{-1} diag(Id, -Id) P."""
    perm = np.asarray(perm, dtype=float)
    p = perm.shape[0] // 2
    d = perm.T @ np.diag([1.0] * p + [-1.0] * p) @ perm
    return GammaElement(-1, tuple(int(round(x)) for x in np.diag(d)))


def pairing_of_permutation(perm):
    """Pairing {pi(i), pi(p+i)} induced by a signed permutation."""
    perm = np.asarray(perm)
    p = perm.shape[0] // 2
    cols = np.argmax(np.abs(perm), axis=1) + 1
    return validate_pairing([(cols[i], cols[p + i]) for i in range(p)])


# -- sampling ----------------------------------------------------------------


def chunk_rng(seed, index):
    """Generator for sample chunk ``index``; independent of how chunks are scheduled."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def sample_frequencies(s, samples, seed=0, workers=1, chunk=SAMPLE_CHUNK):
    """Frequency vectors of ``samples`` Haar-random structures, shape (samples, p).

    Rotations are drawn from the Haar measure on SO(2p) and pushed to the
    coset space.  Chunk ``i`` always uses the stream seeded by (seed, i), so
    the output does not depend on ``workers``.
    """
    s = _spectrum_of(s)
    if samples < 1:
        raise ValueError("samples must be at least 1")
    sizes = [min(chunk, samples - start) for start in range(0, samples, chunk)]

    def run(i):
        reps = matkit.haar_rotations(2 * s.p, sizes[i], chunk_rng(seed, i))
        return frequency_map_batch(reps, s)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return np.concatenate(parts, axis=0)


# -- balanced splittings -----------------------------------------------------


@dataclass(frozen=True)
class BalancedSplitting:
    """Block frequencies omega_1 > ... > omega_r > 0 on blocks of dims 2(k_i + 1)."""

    omegas: tuple
    dims: tuple

    def __post_init__(self):
        om = tuple(float(w) for w in self.omegas)
        dims = tuple(int(d) for d in self.dims)
        if len(om) != len(dims) or not om:
            raise ValueError("need one block dimension per frequency")
        if any(w <= 0 for w in om) or any(a <= b for a, b in zip(om, om[1:])):
            raise ValueError("block frequencies must be positive and strictly decreasing")
        if any(d <= 0 or d % 2 for d in dims):
            raise ValueError("block dimensions must be positive and even")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "dims", dims)

    @property
    def p(self):
        return sum(self.dims) // 2


def bifurcation_frequencies(split, s, assignment, structures=None):
    """Angular momentum frequencies of Omega = diag(omega_1 J_1, ..., omega_r J_r).

    ``assignment`` lists, per block, the 1-based indices of the inertia axes
    spanning it.  ``structures`` optionally gives a HermitianStructure per
    block (default: the standard one).  Returns the per-block frequencies
    (each block descending, blocks concatenated) and the defect of
    sum_m (1/omega_m) sum_j nu_m^j = trace S0.
    """
    s = _spectrum_of(s)
    blocks = [tuple(int(i) for i in b) for b in assignment]
    if len(blocks) != len(split.dims):
        raise ValueError("assignment must have one block per frequency")
    if [len(b) for b in blocks] != list(split.dims):
        raise ValueError("assignment block sizes do not match the splitting")
    if sorted(i for b in blocks for i in b) != list(range(1, 2 * s.p + 1)):
        raise ValueError("assignment must partition the inertia axes")
    if structures is None:
        structures = [HermitianStructure.standard(d // 2) for d in split.dims]
    nus = []
    weighted = 0.0
    for omega, block, j in zip(split.omegas, blocks, structures):
        if j.p != len(block) // 2:
            raise ValueError("block structure has the wrong dimension")
        # each block structure acts on its axes in the order listed
        sub = np.array(block) - 1
        nu = omega * frequency_map_batch(j.representative[None], s.sigma[sub])[0]
        nus.append(nu)
        weighted += nu.sum() / omega
    return np.concatenate(nus), abs(weighted - s.trace)


def bifurcation_omega(split, assignment, structures=None):
    """The full 2p x 2p matrix Omega for a splitting, in the inertia basis."""
    blocks = [np.array(b, dtype=int) - 1 for b in assignment]
    n = sum(len(b) for b in blocks)
    if structures is None:
        structures = [HermitianStructure.standard(len(b) // 2) for b in blocks]
    omega = np.zeros((n, n))
    for w, b, j in zip(split.omegas, blocks, structures):
        omega[np.ix_(b, b)] = w * j.J
    return omega
