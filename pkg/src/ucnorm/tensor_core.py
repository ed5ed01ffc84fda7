"""Dense complex linear algebra kernel.

Matrices are plain complex ``numpy`` arrays.  An n-tuple of d x d matrices
(the carrier of a linear map ``z -> sum_j z_j T_j``) is a complex array of
shape ``(n, d, d)``; :func:`as_tuple` validates and normalizes one.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ArityError, DimensionError, InfeasibleError, PositivityError

# Relative tolerance for spectral decisions.
EIG_RTOL = 1e-12


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError("matrix has non-finite entries")
    return a


def as_tuple(t) -> np.ndarray:
    """Return ``t`` as a complex ``(n, d, d)`` array, checking squareness."""
    if isinstance(t, np.ndarray) and t.ndim == 3:
        arr = t.astype(complex, copy=False)
    else:
        mats = [as_matrix(m) for m in t]
        if not mats:
            raise DimensionError("a matrix tuple needs at least one entry")
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            raise DimensionError(f"tuple entries have different shapes {sorted(shapes)}")
        arr = np.stack(mats)
    if arr.shape[0] < 1 or arr.shape[1] != arr.shape[2]:
        raise DimensionError(f"tuple must hold n >= 1 square matrices, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("tuple has non-finite entries")
    return arr


def kron(a, b) -> np.ndarray:
    """Kronecker product; entry ``(i*b.rows + p, j*b.cols + q)`` is ``a[i, j] * b[p, q]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def op_norm(a) -> float:
    """Largest singular value."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def is_psd(a, tol: float = 0.0) -> bool:
    """True iff ``a`` is Hermitian to within ``tol`` and its Hermitian part has
    no eigenvalue below ``-tol``."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"PSD test needs a square matrix, got {a.shape}")
    if a.size == 0:
        return True
    if op_norm(a - a.conj().T) > tol:
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(a))[0] >= -tol)


def gram_factor(p, tol: float = EIG_RTOL) -> np.ndarray:
    """Factor a PSD matrix as ``F @ F.conj().T``.

    Eigenvalues at or below ``tol * ||p||`` are dropped, so the number of
    columns of ``F`` is the numerical rank of ``p``.
    """
    p = as_matrix(p)
    scale = op_norm(p)
    if not is_psd(p, tol * max(1.0, scale)):
        raise PositivityError("matrix is not positive semidefinite")
    w, v = np.linalg.eigh(hermitian_part(p))
    keep = w > tol * scale
    return v[:, keep] * np.sqrt(w[keep])


def pair_tuples(s, t) -> np.ndarray:
    """``sum_j kron(S_j, T_j)``; its norm is the minimal tensor norm of the pairing."""
    s = as_tuple(s)
    t = as_tuple(t)
    if s.shape[0] != t.shape[0]:
        raise ArityError(f"tuples have {s.shape[0]} and {t.shape[0]} entries")
    out = np.zeros((s.shape[1] * t.shape[1],) * 2, dtype=complex)
    for sj, tj in zip(s, t):
        out += np.kron(sj, tj)
    return out


def commutator_residual(t) -> float:
    t = as_tuple(t)
    worst = 0.0
    for i, j in combinations(range(t.shape[0]), 2):
        worst = max(worst, op_norm(t[i] @ t[j] - t[j] @ t[i]))
    return worst


def commutes(t, tol: float = 1e-9) -> bool:
    return commutator_residual(t) <= tol


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR of a Ginibre matrix with phase fix)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


@dataclass(frozen=True)
class IsometryData:
    """Columns ``domain[:, i] -> image[:, i]`` of a prospective isometry on C^d."""

    domain: np.ndarray
    image: np.ndarray

    def __post_init__(self):
        dom = np.asarray(self.domain, dtype=complex)
        img = np.asarray(self.image, dtype=complex)
        if dom.ndim == 1:
            dom = dom.reshape(-1, 0) if dom.size == 0 else dom[:, None]
        if img.ndim == 1:
            img = img.reshape(-1, 0) if img.size == 0 else img[:, None]
        if dom.shape != img.shape:
            raise DimensionError(f"domain {dom.shape} and image {img.shape} differ")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "image", img)

    @property
    def dim(self) -> int:
        return self.domain.shape[0]

    def gram_mismatch(self) -> float:
        gd = self.domain.conj().T @ self.domain
        gi = self.image.conj().T @ self.image
        return float(np.max(np.abs(gd - gi), initial=0.0))


def _orthonormal_range(x: np.ndarray, rtol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    if s.size == 0:
        return u[:, :0], s[:0], vh[:0]
    r = int(np.sum(s > rtol * max(s[0], 1.0)))
    return u[:, :r], s[:r], vh[:r]


def complete_basis(q: np.ndarray, d: int) -> np.ndarray:
    """Orthonormal basis of the complement of ``range(q)`` in C^d.

    Deterministic: standard basis vectors are projected onto the current
    complement and, at each step, the first one (in index order) whose
    residual is at least half the largest residual is accepted.
    """
    basis = [q[:, i] for i in range(q.shape[1])]
    need = d - len(basis)
    out = []
    eye = np.eye(d, dtype=complex)
    for _ in range(need):
        b = np.array(basis).T if basis else np.zeros((d, 0), dtype=complex)
        res = eye - b @ (b.conj().T @ eye)
        res = res - b @ (b.conj().T @ res)
        norms = np.linalg.norm(res, axis=0)
        idx = int(np.argmax(norms >= 0.5 * norms.max()))
        v = res[:, idx] / norms[idx]
        v = v - b @ (b.conj().T @ v)
        v /= np.linalg.norm(v)
        basis.append(v)
        out.append(v)
    if not out:
        return np.zeros((d, 0), dtype=complex)
    return np.array(out).T


def extend_isometry(iso: IsometryData, tol: float = 1e-9) -> tuple[np.ndarray, int]:
    """Extend ``domain -> image`` to a unitary on C^d.

    Returns ``(U, d)``.  The extension maps the deterministic completion of
    ``span(domain)`` onto that of ``span(image)`` in order.  Since both spans
    have the same dimension, no enlargement of the ambient space is needed.

    Raises
    ------
    InfeasibleError
        If the Gram matrices of domain and image disagree beyond ``tol``
        (relative to the largest Gram entry when that exceeds 1).
    """
    d = iso.dim
    dom, img = iso.domain, iso.image
    if dom.shape[1] == 0:
        return np.eye(d, dtype=complex), d
    gd = dom.conj().T @ dom
    scale = max(1.0, float(np.max(np.abs(gd))))
    mismatch = iso.gram_mismatch()
    if mismatch > tol * scale:
        raise InfeasibleError(f"Gram mismatch {mismatch:.3e} exceeds tolerance {tol * scale:.3e}")
    qd, s, vh = _orthonormal_range(dom, 1e-10)
    # image of the orthonormal basis qd = dom @ vh^* / s
    qi = img @ vh.conj().T / s
    # polar factor restores exact orthonormality lost to roundoff
    if qi.shape[1]:
        u, _, wh = np.linalg.svd(qi, full_matrices=False)
        qi = u @ wh
    cd = complete_basis(qd, d)
    ci = complete_basis(qi, d)
    u_mat = qi @ qd.conj().T + ci @ cd.conj().T
    return u_mat, d
