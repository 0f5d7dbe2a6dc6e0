"""Small dense matrix kit: Jacobi eigensolver, hermitian spectra, Haar rotations.

Matrices here are at most 12x12, so everything is plain numpy on arrays of
shape ``(n, n)`` or stacked ``(batch, n, n)``.  The eigensolver is a cyclic
Jacobi iteration vectorized over the batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 100
PAIR_TOL = 1e-8

# largest off-diagonal entry, relative to the largest entry, at which a matrix
# counts as diagonal
_OFFDIAG_STOP = 1e-13
_NEGLIGIBLE = 1e-18
# batch members per Jacobi pass; keeps the working set cache-sized
_CHUNK = 2048


class EigenConvergenceError(RuntimeError):
    """Raised when the Jacobi sweeps do not drive the off-diagonal part to zero."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def symmetrize(m):
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def antisymmetrize(m):
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (m - np.swapaxes(m, -1, -2))


def standard_complex_structure(p):
    """J0 = [[0, -Id], [Id, 0]] on R^{2p}."""
    j = np.zeros((2 * p, 2 * p))
    j[:p, p:] = -np.eye(p)
    j[p:, :p] = np.eye(p)
    return j


def is_rotation(r, tol=1e-12):
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        return False
    n = r.shape[0]
    if np.max(np.abs(r.T @ r - np.eye(n))) > tol:
        return False
    return abs(np.linalg.det(r) - 1.0) <= max(tol, 1e-10)


def is_complex_structure(j, tol=DEFAULT_TOL):
    """True iff ``j`` squares to -Id and is orthogonal, both within ``tol`` per entry."""
    j = np.asarray(j, dtype=float)
    n = j.shape[0]
    if j.ndim != 2 or n != j.shape[1] or n % 2:
        return False
    eye = np.eye(n)
    return bool(np.max(np.abs(j @ j + eye)) <= tol and np.max(np.abs(j.T @ j - eye)) <= tol)


def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair once (circle method)."""
    m = n + (n % 2)
    ring = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            p, q = ring[i], ring[m - 1 - i]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        rounds.append((np.array([pq[0] for pq in pairs]), np.array([pq[1] for pq in pairs])))
        ring = [ring[0], ring[-1]] + ring[1:-1]
    return rounds


def _rotate_sweep(a, v, rounds, scale):
    # each round rotates a set of disjoint (p, q) planes at once; the plane
    # rotations commute, so columns and then rows can be updated in bulk
    for ps, qs in rounds:
        apq = a[ps, qs]
        d = a[qs, qs] - a[ps, ps]
        denom = np.abs(d) + np.sqrt(d * d + 4.0 * apq * apq)
        sgn = np.where(d >= 0, 1.0, -1.0)
        # negligible couplings are dropped, not rotated: a 45 degree turn
        # between equal diagonal entries would re-mix the rest of the rows
        live = (denom > 0) & (np.abs(apq) > _NEGLIGIBLE * scale)
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(live, sgn * 2.0 * apq / denom, 0.0)
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = t * c
        cp = a[:, ps]
        cq = a[:, qs]
        a[:, ps] = c * cp - s * cq
        a[:, qs] = s * cp + c * cq
        c2 = c[:, None]
        s2 = s[:, None]
        rp = a[ps]
        rq = a[qs]
        a[ps] = c2 * rp - s2 * rq
        a[qs] = s2 * rp + c2 * rq
        a[ps, qs] = 0.0
        a[qs, ps] = 0.0
        if v is not None:
            vp = v[:, ps]
            vq = v[:, qs]
            v[:, ps] = c * vp - s * vq
            v[:, qs] = s * vp + c * vq


def _jacobi_batch(a, want_vectors):
    # a: (B, n, n) symmetric.  Work is done batch-last so row/column slices
    # are contiguous; a member leaves the active set once its largest
    # off-diagonal entry is below _OFFDIAG_STOP relative to its scale.
    nb, n, _ = a.shape
    out_a = np.ascontiguousarray(np.moveaxis(a, 0, -1))
    out_v = None
    if want_vectors:
        out_v = np.zeros((n, n, nb))
        out_v[np.arange(n), np.arange(n)] = 1.0

    # each member is normalized to unit max entry so that squares of tiny or
    # huge entries neither underflow nor overflow
    norm = np.max(np.abs(out_a), axis=(0, 1)) if n else np.ones(nb)
    norm = np.where(norm > 0, norm, 1.0)

    def result():
        return np.moveaxis(out_a * norm, -1, 0), (np.moveaxis(out_v, -1, 0) if want_vectors else None)

    out_a /= norm
    if n < 2:
        return result()
    scale = np.ones(nb)
    iu = np.triu_indices(n, 1)
    rounds = _round_robin(n)
    active = np.arange(nb)
    a, v = out_a, out_v
    off = np.max(np.abs(a[iu[0], iu[1]]), axis=0) / scale
    for _ in range(MAX_SWEEPS):
        done = off <= _OFFDIAG_STOP
        if np.any(done):
            if active.size < nb:
                out_a[..., active] = a
                if want_vectors:
                    out_v[..., active] = v
            if np.all(done):
                return result()
            keep = ~done
            active, off, scale = active[keep], off[keep], scale[keep]
            a = np.ascontiguousarray(a[..., keep])
            v = np.ascontiguousarray(v[..., keep]) if want_vectors else None
        _rotate_sweep(a, v, rounds, scale)
        off = np.max(np.abs(a[iu[0], iu[1]]), axis=0) / scale
    if np.all(off <= _OFFDIAG_STOP):
        out_a[..., active] = a
        if want_vectors:
            out_v[..., active] = v
        return result()
    residual = float(np.max(off))
    raise EigenConvergenceError(
        f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps "
        f"(relative off-diagonal {residual:.3e})",
        residual,
    )


def _sorted_desc(w, v=None):
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    if v is not None:
        v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return w, v


def eigvals_sym_batch(m):
    """Descending eigenvalues of a stack of symmetric matrices, shape (B, n)."""
    a = symmetrize(m)
    if a.ndim == 2:
        a = a[None]
    w = np.empty(a.shape[:2])
    for start in range(0, a.shape[0], _CHUNK):
        block, _ = _jacobi_batch(a[start:start + _CHUNK].copy(), want_vectors=False)
        w[start:start + _CHUNK] = np.diagonal(block, axis1=1, axis2=2)
    return _sorted_desc(w)[0]


def eigen_sym(m, tol=DEFAULT_TOL):
    """Eigen-decomposition of a real symmetric matrix.

    Returns ``(w, v)`` with ``w`` descending and the columns of ``v`` the
    matching orthonormal eigenvectors.  Raises :class:`EigenConvergenceError`
    if the sweep budget runs out or the residual exceeds ``tol * max|m|``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = symmetrize(m)
    a, v = _jacobi_batch(m[None].copy(), want_vectors=True)
    w = np.diagonal(a[0]).copy()
    w, v = _sorted_desc(w, v[0])
    norm = max(np.max(np.abs(m)), np.finfo(float).tiny)
    residual = np.max(np.abs(m @ v - v * w)) / norm if m.size else 0.0
    if residual > tol:
        raise EigenConvergenceError(f"eigenpair residual {residual:.3e} exceeds tol {tol:.1e}", residual)
    return w, v


@dataclass(frozen=True)
class ComplexHermitian:
    """Hermitian p x p matrix ``real + i*imag`` (real symmetric, imag antisymmetric)."""

    real: np.ndarray
    imag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "real", symmetrize(self.real))
        object.__setattr__(self, "imag", antisymmetrize(self.imag))
        if self.real.shape != self.imag.shape:
            raise ValueError("real and imaginary parts differ in shape")

    @classmethod
    def from_complex(cls, h):
        h = np.asarray(h, dtype=complex)
        return cls(h.real, h.imag)

    @property
    def dim(self):
        return self.real.shape[-1]

    def to_complex(self):
        return self.real + 1j * self.imag

    def realify(self):
        return realify(self.real, self.imag)


def realify(real, imag):
    """Real 2p x 2p form [[P, -Q], [Q, P]] of P + iQ; works on stacks."""
    real = np.asarray(real, dtype=float)
    imag = np.asarray(imag, dtype=float)
    top = np.concatenate([real, -imag], axis=-1)
    bottom = np.concatenate([imag, real], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def hermitian_spectra_batch(real, imag, pair_tol=PAIR_TOL):
    """Descending spectra of stacked hermitian matrices via their real form.

    Each eigenvalue of the real form appears twice; consecutive pairs of the
    sorted real spectrum are merged after checking they agree within
    ``pair_tol`` relative to the matrix scale.
    """
    big = realify(real, imag)
    if big.ndim == 2:
        big = big[None]
    w = eigvals_sym_batch(big)
    first, second = w[:, 0::2], w[:, 1::2]
    scale = np.maximum(np.max(np.abs(big), axis=(1, 2)), 1.0)
    gap = np.max(np.abs(first - second), axis=1) / scale
    if np.any(gap > pair_tol):
        raise EigenConvergenceError(
            f"real-form eigenvalues do not pair up (gap {gap.max():.3e})", float(gap.max())
        )
    return 0.5 * (first + second)


def eigen_hermitian(h, tol=DEFAULT_TOL):
    """Descending spectrum of a :class:`ComplexHermitian`."""
    if not isinstance(h, ComplexHermitian):
        h = ComplexHermitian.from_complex(h)
    # the single-matrix path also enforces the residual contract
    w, _ = eigen_sym(h.realify(), tol=tol)
    first, second = w[0::2], w[1::2]
    scale = max(np.max(np.abs(h.realify())), 1.0)
    if np.max(np.abs(first - second)) / scale > PAIR_TOL:
        raise EigenConvergenceError("real-form eigenvalues do not pair up", float(np.max(np.abs(first - second))))
    return 0.5 * (first + second)


def haar_rotations(dim, count, rng):
    """``count`` independent Haar-distributed elements of SO(dim), shape (count, dim, dim).

    QR of a Gaussian matrix with the R-diagonal sign fix gives Haar on O(dim);
    flipping the first column of the improper draws maps them onto SO(dim)
    and preserves the measure.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    g = rng.standard_normal((count, dim, dim))
    q, r = np.linalg.qr(g)
    d = np.sign(np.diagonal(r, axis1=1, axis2=2))
    # a zero pivot has probability zero; redraw those matrices if it happens
    bad = np.any(d == 0, axis=1)
    while np.any(bad):
        g2 = rng.standard_normal((int(bad.sum()), dim, dim))
        q2, r2 = np.linalg.qr(g2)
        q[bad], r[bad] = q2, r2
        d = np.sign(np.diagonal(r, axis1=1, axis2=2))
        bad = np.any(d == 0, axis=1)
    q = q * d[:, None, :]
    neg = np.linalg.det(q) < 0
    q[neg, :, 0] *= -1.0
    return q


def haar_rotation(dim, seed):
    if dim < 2 or dim % 2:
        raise ValueError(f"dim must be even and >= 2, got {dim}")
    return haar_rotations(dim, 1, np.random.default_rng(seed))[0]
