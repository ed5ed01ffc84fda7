"""Unitary colligations, their transfer functions, and the lurking-isometry
construction of a colligation from a factorization

    I - p(z) p(w)^* = F(z) [I - sigma(z) sigma(w)^*] F(w)^*

sampled on a finite point set.

Tensor ordering convention: when a colligation is evaluated on a matrix
tuple S, the system space comes first, so the lifted blocks are
``kron(A, I_L)`` and the pairing is ``X = sum_j kron(T_j, r S_j)``.  This
matches :func:`ucnorm.polyeval.eval_tuple`, which returns
``sum kron(A_alpha, S^alpha)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CommutativityError, DimensionError, DomainError, InfeasibleError
from .opspace import Base, OperatorSpaceSpec, base_norm, dual_vector_norm
from .polyeval import MatrixPolynomial, eval_points, twozw_polynomial
from .tensor_core import (
    IsometryData,
    as_matrix,
    as_tuple,
    commutator_residual,
    extend_isometry,
    op_norm,
    pair_tuples,
    random_unitary,
)

UNITARY_TOL = 1e-9
CONDITION_RADIUS = 0.999


class ConditioningWarning(UserWarning):
    """Evaluation close to the boundary, where ``I - sigma(z) A`` may be ill conditioned."""


def sigma_at(t: np.ndarray, z) -> np.ndarray:
    """``sigma_T(z) = sum_j z_j T_j``."""
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != t.shape[0]:
        raise DimensionError(f"point of length {z.shape[0]} for a {t.shape[0]}-tuple")
    return np.tensordot(z, t, axes=1)


@dataclass(eq=False)
class Colligation:
    """Block unitary ``U = [[A, B], [C, D]]`` on ``C^k + C^N``.

    ``sigma`` optionally carries the tuple T defining ``sigma(z)`` on the
    internal space; it is used when an evaluation call does not supply one.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    sigma: Optional[np.ndarray] = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.A, self.B, self.C, self.D = (np.asarray(m, dtype=complex) for m in (self.A, self.B, self.C, self.D))
        k, n_out = self.A.shape[0], self.D.shape[0]
        shapes = {"A": (k, k), "B": (k, n_out), "C": (n_out, k), "D": (n_out, n_out)}
        for name, want in shapes.items():
            if getattr(self, name).shape != want:
                raise DimensionError(f"block {name} has shape {getattr(self, name).shape}, expected {want}")
        if self.sigma is not None:
            self.sigma = as_tuple(self.sigma)
            if self.sigma.shape[1] != k:
                raise DimensionError(f"sigma acts on C^{self.sigma.shape[1]}, internal space is C^{k}")
        if self.validate:
            res = self.unitarity_residual()
            if res > UNITARY_TOL:
                raise InfeasibleError(f"colligation is not unitary (residual {res:.2e})")

    @property
    def k(self) -> int:
        return self.A.shape[0]

    @property
    def n_out(self) -> int:
        return self.D.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def unitarity_residual(self) -> float:
        u = self.matrix
        eye = np.eye(u.shape[0])
        return max(op_norm(u.conj().T @ u - eye), op_norm(u @ u.conj().T - eye))

    @classmethod
    def from_unitary(cls, u, k: int, sigma=None) -> "Colligation":
        u = as_matrix(u)
        return cls(u[:k, :k], u[:k, k:], u[k:, :k], u[k:, k:], sigma)


@dataclass(eq=False)
class FactorizationData:
    """Values of ``F``, ``p`` at finitely many points, plus the tuple behind sigma.

    Shapes: ``points (m, n)``, ``f_values (m, N, k)``, ``sigma (n, k, k)``,
    ``p_values (m, N, N)``.  When ``spec`` is given, every point must lie in
    the open unit ball of its dual norm (the domain of the algebra).
    """

    points: np.ndarray
    f_values: np.ndarray
    sigma: np.ndarray
    p_values: np.ndarray
    spec: Optional[OperatorSpaceSpec] = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=complex))
        self.f_values = np.asarray(self.f_values, dtype=complex)
        self.p_values = np.asarray(self.p_values, dtype=complex)
        self.sigma = as_tuple(self.sigma)
        m, n = self.points.shape
        if self.f_values.ndim != 3 or self.p_values.ndim != 3:
            raise DimensionError("f_values and p_values must be stacks of matrices")
        n_out, k = self.f_values.shape[1:]
        if self.sigma.shape != (n, k, k):
            raise DimensionError(f"sigma has shape {self.sigma.shape}, expected {(n, k, k)}")
        if self.f_values.shape[0] != m or self.p_values.shape != (m, n_out, n_out):
            raise DimensionError("numbers of points, F values and p values disagree")
        if self.spec is not None:
            for z in self.points:
                if dual_vector_norm(self.spec, z) >= 1:
                    raise DomainError(f"point {z} is not inside the domain")

    @property
    def n_out(self) -> int:
        return self.f_values.shape[1]

    @property
    def k(self) -> int:
        return self.f_values.shape[2]

    def sigma_values(self) -> np.ndarray:
        return np.einsum("mj,jab->mab", self.points, self.sigma)


@dataclass(frozen=True)
class FactorizationCheck:
    residual: float
    passed: bool


def factorization_residual_matrix(d: FactorizationData) -> np.ndarray:
    """Blocks ``(I - p_i p_j^*) - F_i (I - s_i s_j^*) F_j^*`` as an ``(m, m, N, N)`` array."""
    f = d.f_values
    fs = f @ d.sigma_values()
    eye = np.eye(d.n_out)
    lhs = eye - np.einsum("iab,jcb->ijac", d.p_values, d.p_values.conj())
    rhs = np.einsum("iab,jcb->ijac", f, f.conj()) - np.einsum("iab,jcb->ijac", fs, fs.conj())
    return lhs - rhs


def verify_factorization(d: FactorizationData, tol: float = 1e-10) -> FactorizationCheck:
    diff = factorization_residual_matrix(d)
    if diff.size == 0:
        return FactorizationCheck(0.0, True)
    residual = float(np.max(np.linalg.norm(diff, 2, axis=(2, 3))))
    return FactorizationCheck(residual, residual <= tol)


def lurking_isometry_data(d: FactorizationData) -> IsometryData:
    """Columns ``(s_i^* F_i^* x ; x) -> (F_i^* x ; p_i^* x)`` for standard basis ``x``."""
    sv = d.sigma_values()
    dom, img = [], []
    for f, s, p in zip(d.f_values, sv, d.p_values):
        fh = f.conj().T
        dom.append(np.vstack([s.conj().T @ fh, np.eye(d.n_out)]))
        img.append(np.vstack([fh, p.conj().T]))
    return IsometryData(np.hstack(dom), np.hstack(img))


def build_colligation(d: FactorizationData, tol: float = 1e-9) -> Colligation:
    """Read a unitary colligation off the factorization by the lurking isometry.

    The isometry found maps the first family of vectors to the second; it is
    the adjoint of the colligation, so ``U`` is its conjugate transpose.

    Raises
    ------
    InfeasibleError
        If the two Gram matrices differ by more than ``tol``, i.e. the data is
        not a factorization.
    """
    w, _ = extend_isometry(lurking_isometry_data(d), tol=tol)
    return Colligation.from_unitary(w.conj().T, d.k, sigma=d.sigma)


def _resolve_sigma(c: Colligation, t) -> np.ndarray:
    if t is None:
        if c.sigma is None:
            raise DimensionError("colligation carries no sigma tuple and none was given")
        return c.sigma
    t = as_tuple(t)
    if t.shape[1] != c.k:
        raise DimensionError(f"tuple acts on C^{t.shape[1]}, internal space is C^{c.k}")
    return t


def eval_transfer(c: Colligation, z, t=None) -> np.ndarray:
    """``D + C (I - sigma(z) A)^{-1} sigma(z) B``.

    Raises
    ------
    DomainError
        If ``||sigma(z)|| >= 1``.
    """
    t = _resolve_sigma(c, t)
    s = sigma_at(t, z)
    nrm = op_norm(s)
    if nrm >= 1:
        raise DomainError(f"||sigma(z)|| = {nrm:.6g} is not below 1")
    if nrm > CONDITION_RADIUS:
        warnings.warn(f"||sigma(z)|| = {nrm:.6g} is close to 1", ConditioningWarning, stacklevel=2)
    if c.k == 0:
        return c.D.copy()
    lhs = np.eye(c.k) - s @ c.A
    return c.D + c.C @ np.linalg.solve(lhs, s @ c.B)


def _lift(c: Colligation, size: int):
    if size % max(c.k, 1):
        raise DimensionError(f"X has size {size}, not a multiple of the internal dimension {c.k}")
    ell = size // max(c.k, 1)
    eye = np.eye(ell)
    return ell, np.kron(c.A, eye), np.kron(c.B, eye), np.kron(c.C, eye), np.kron(c.D, eye)


def transfer_at_operator(c: Colligation, x) -> np.ndarray:
    """``Q = D~ + C~ X (I - A~ X)^{-1} B~`` with tildes meaning ``kron(., I_L)``."""
    x = as_matrix(x)
    nrm = op_norm(x)
    if nrm >= 1:
        raise DomainError(f"||X|| = {nrm:.6g} is not below 1")
    _, a, b, cc, dd = _lift(c, x.shape[0])
    return dd + cc @ x @ np.linalg.solve(np.eye(x.shape[0]) - a @ x, b)


def defect_check(c: Colligation, x) -> float:
    """Residual of ``I - Q^*Q = B~^* (I - A~X)^{-*} (I - X^*X) (I - A~X)^{-1} B~``."""
    x = as_matrix(x)
    q = transfer_at_operator(c, x)
    _, a, b, _, _ = _lift(c, x.shape[0])
    eye = np.eye(x.shape[0])
    y = np.linalg.solve(eye - a @ x, b)
    rhs = y.conj().T @ (eye - x.conj().T @ x) @ y
    lhs = np.eye(q.shape[1]) - q.conj().T @ q
    return op_norm(lhs - rhs)


def eval_transfer_on_tuple(c: Colligation, s, r: float, t=None) -> np.ndarray:
    """The transfer function applied to ``r S`` for a commuting tuple ``S``."""
    t = _resolve_sigma(c, t)
    s = as_tuple(s)
    if not 0 < r < 1:
        raise DomainError("the radius r must lie in (0, 1)")
    if s.shape[0] != t.shape[0]:
        raise DimensionError(f"{s.shape[0]}-tuple paired with a {t.shape[0]}-tuple")
    if commutator_residual(s) > 1e-9:
        raise CommutativityError("S does not commute")
    return transfer_at_operator(c, pair_tuples(t, r * s))


def transfer_polynomial(c: Colligation, degree: int, t=None) -> MatrixPolynomial:
    """Taylor expansion of the transfer function up to total ``degree``.

    The coefficient of ``z^alpha`` collects ``C (sigma A)^{m} sigma B`` over all
    words in the ``T_j`` of content ``alpha``.
    """
    t = _resolve_sigma(c, t)
    n = t.shape[0]
    terms = {(0,) * n: c.D}
    eye = np.eye(n, dtype=int)
    words = {tuple(eye[j]): t[j] for j in range(n)}
    for _ in range(degree):
        for alpha, w in words.items():
            terms[alpha] = terms.get(alpha, 0) + c.C @ w @ c.B
        nxt: dict = {}
        for alpha, w in words.items():
            for j in range(n):
                key = tuple(a + e for a, e in zip(alpha, eye[j]))
                nxt[key] = nxt.get(key, 0) + t[j] @ c.A @ w
        words = nxt
    return MatrixPolynomial(n, terms, c.D.shape)


def random_colligation(k: int, n_out: int, rng: np.random.Generator, sigma=None) -> Colligation:
    """Colligation from a Haar-random unitary on ``C^(k + N)``."""
    return Colligation.from_unitary(random_unitary(k + n_out, rng), k, sigma)


def sample_ball(base: Base, m: int, n: int, rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    """``m`` random points of the open ball of radius ``radius`` in the given norm."""
    phases = np.exp(2j * np.pi * rng.random((m, n)))
    if base is Base.LINF:
        return radius * rng.random((m, n)) ** 0.5 * phases
    if base is Base.L2:
        g = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
    else:
        g = rng.dirichlet(np.ones(n), size=m) * phases
    return radius * rng.random((m, 1)) ** (1 / (2 * n)) * g


# ---------------------------------------------------------------------------
# factorization data from polynomial recipes


def factorization_from_recipes(
    f: MatrixPolynomial,
    p: MatrixPolynomial,
    sigma,
    points,
    spec: Optional[OperatorSpaceSpec] = None,
) -> FactorizationData:
    """Sample polynomial ``F`` (N x k) and ``p`` (N x N) at the points."""
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    return FactorizationData(points, eval_points(f, points), sigma, eval_points(p, points), spec)


def twozw_sigma() -> np.ndarray:
    """The 6 x 6 linear pencil factoring ``2 z1 z2`` on the ball, as a 2-tuple."""
    t = np.zeros((2, 6, 6), dtype=complex)
    for off in (0, 3):
        t[0, off, off + 1] = t[0, off + 2, off] = 1
        t[1, off, off + 2] = t[1, off + 1, off] = 1
    return t


def twozw_f() -> MatrixPolynomial:
    """``F(z) = (1, 0, 0, 0, z1, z2)``."""
    def row(*entries):
        return np.array([entries], dtype=complex)

    return MatrixPolynomial(
        2,
        {
            (0, 0): row(1, 0, 0, 0, 0, 0),
            (1, 0): row(0, 0, 0, 0, 1, 0),
            (0, 1): row(0, 0, 0, 0, 0, 1),
        },
        (1, 6),
    )


def twozw_data(points) -> FactorizationData:
    return factorization_from_recipes(twozw_f(), twozw_polynomial(), twozw_sigma(), points)


def sigma_norm_candidates(z) -> dict:
    """``||sigma(z)||`` for the 6 x 6 pencil next to the two closed forms it is compared with."""
    z = np.asarray(z, dtype=complex)
    return {
        "measured": op_norm(sigma_at(twozw_sigma(), z)),
        "sum_of_squares": float(np.sum(np.abs(z) ** 2)),
        "euclidean": base_norm(Base.L2, z),
    }


def max_transfer_norm(c: Colligation, points, t=None) -> float:
    return max((op_norm(eval_transfer(c, z, t)) for z in points), default=0.0)


def check_against_polynomial(c: Colligation, p: MatrixPolynomial, points, t=None) -> float:
    """Largest ``||f(z) - p(z)||`` over the points."""
    vals = eval_points(p, points)
    return max((op_norm(eval_transfer(c, z, t) - v) for z, v in zip(points, vals)), default=0.0)


__all__ = [
    "Colligation",
    "ConditioningWarning",
    "FactorizationCheck",
    "FactorizationData",
    "build_colligation",
    "check_against_polynomial",
    "defect_check",
    "eval_transfer",
    "eval_transfer_on_tuple",
    "factorization_from_recipes",
    "random_colligation",
    "sample_ball",
    "sigma_at",
    "sigma_norm_candidates",
    "transfer_at_operator",
    "transfer_polynomial",
    "twozw_data",
    "twozw_f",
    "twozw_sigma",
    "verify_factorization",
]
