"""Finite-set membership in the cone of kernels ``I - p(z_i) p(z_j)^*`` that
factor through a completely contractive pencil.

Two semidefinite descriptions are supported.  For the row and column spaces
the algebra is the Drury-Arveson multiplier algebra and membership is the
positivity of one closed-form kernel.  For ``MAX(l1)`` (the polydisk) one
needs an Agler decomposition

    P_ij = sum_k Gamma_k,ij (1 - z_i^k conj(z_j^k)),   Gamma_k >= 0,

which is searched for by projection methods.

``spec`` always names the space whose universal algebra contains ``p``:
``MAX(l1)`` gives the polydisk, ``ROW``/``COLUMN`` the ball.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapacityError, DimensionError, DomainError, DuplicateNodeError, UnsupportedError
from .opspace import Base, Kind, OperatorSpaceSpec, dual_vector_norm
from .polyeval import MatrixPolynomial, eval_points
from .realization import FactorizationData
from .tensor_core import hermitian_part

DUPLICATE_TOL = 1e-12


class ConeStatus(enum.Enum):
    FEASIBLE = "FEASIBLE"
    UNDECIDED = "UNDECIDED"


@dataclass(eq=False)
class ConeProblem:
    """Nodes ``points (m, n)`` with values ``p_values (m, N, N)``.

    The target ``P`` is the ``mN x mN`` block matrix ``I - p_i p_j^*``.
    """

    spec: OperatorSpaceSpec
    points: np.ndarray
    p_values: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=complex))
        pv = np.asarray(self.p_values, dtype=complex)
        if pv.ndim == 1:
            pv = pv.reshape(-1, 1, 1)
        self.p_values = pv
        m, n = self.points.shape
        if n != self.spec.n:
            raise DimensionError(f"points have {n} coordinates, space has n = {self.spec.n}")
        if pv.ndim != 3 or pv.shape[0] != m or pv.shape[1] != pv.shape[2]:
            raise DimensionError(f"p_values of shape {pv.shape} do not match {m} points")
        for z in self.points:
            if dual_vector_norm(self.spec, z) >= 1:
                raise DomainError(f"node {z} is not strictly inside the domain")
        gaps = np.max(np.abs(self.points[:, None, :] - self.points[None, :, :]), axis=2)
        gaps[np.diag_indices(m)] = np.inf
        if np.any(gaps <= DUPLICATE_TOL):
            raise DuplicateNodeError("two nodes coincide")

    @classmethod
    def from_polynomial(cls, spec: OperatorSpaceSpec, points, p: MatrixPolynomial) -> "ConeProblem":
        return cls(spec, points, eval_points(p, points))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n_out(self) -> int:
        return self.p_values.shape[1]

    @property
    def target(self) -> np.ndarray:
        m, nn = self.m, self.n_out
        pp = np.einsum("iab,jcb->iajc", self.p_values, self.p_values.conj()).reshape(m * nn, m * nn)
        return np.kron(np.ones((m, m)), np.eye(nn)) - pp

    def expand(self, node_matrix: np.ndarray) -> np.ndarray:
        """Lift an ``m x m`` node matrix to ``mN x mN`` by constant N x N blocks."""
        return np.kron(node_matrix, np.ones((self.n_out, self.n_out)))


@dataclass(eq=False)
class ConeCertificate:
    status: ConeStatus
    kernels: list
    residual: float
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)
    min_eigenvalue: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.status is ConeStatus.FEASIBLE


def _blockwise_norm(diff: np.ndarray, m: int, nn: int) -> float:
    blocks = diff.reshape(m, nn, m, nn).transpose(0, 2, 1, 3)
    return float(np.max(np.linalg.norm(blocks, 2, axis=(2, 3)), initial=0.0))


def da_kernel(points: np.ndarray) -> np.ndarray:
    """``1 / (1 - <z_i, conj(z_j)>)``."""
    return 1.0 / (1.0 - points @ points.conj().T)


def row_cone_check(prob: ConeProblem, tol: float = 1e-9) -> ConeCertificate:
    """Closed-form test on the ball: ``Gamma = P / (1 - <z_i, conj(z_j)>)`` must be PSD.

    The verdict is FEASIBLE when the smallest eigenvalue is at least
    ``-tol``; otherwise UNDECIDED, which for this closed form means the data
    is not interpolable in the unit ball of the algebra.
    """
    if prob.spec.kind not in (Kind.ROW, Kind.COLUMN) and prob.spec.n != 1:
        raise UnsupportedError(f"row_cone_check needs a row or column space, got {prob.spec.label}")
    gamma = hermitian_part(prob.target * prob.expand(da_kernel(prob.points)))
    lam = float(np.linalg.eigvalsh(gamma)[0])
    status = ConeStatus.FEASIBLE if lam >= -tol else ConeStatus.UNDECIDED
    return ConeCertificate(status, [gamma], max(0.0, -lam), 0, min_eigenvalue=lam)


def _psd_project(g: np.ndarray, shift: float = 0.0) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(g))
    return (v * np.clip(w - shift, 0, None)) @ v.conj().T


def agler_weights(prob: ConeProblem) -> np.ndarray:
    """``W_k = 1 - z_i^k conj(z_j^k)`` expanded to ``(n, mN, mN)``."""
    z = prob.points
    return np.stack([prob.expand(1 - np.outer(z[:, k], z[:, k].conj())) for k in range(z.shape[1])])


METHODS = ("douglas-rachford", "alternating", "dykstra")


def agler_feasibility(
    prob: ConeProblem,
    max_iter: int = 10_000,
    tol: float = 1e-6,
    method: str = "douglas-rachford",
    trace_weight: float = 0.0,
) -> ConeCertificate:
    """Search for an Agler decomposition of the target on the polydisk.

    Works with two projections: onto the affine set of kernel tuples
    reproducing ``P`` (the constraint is entrywise, so this is a closed-form
    rescaling) and onto the product of PSD cones.  ``method`` chooses how
    they are combined:

    ``douglas-rachford``
        Averaged alternating reflections.  The history records the fixed
        point residual ``||x_{k+1} - x_k||``, which is nonincreasing.  A
        positive ``trace_weight`` replaces the PSD projection by the proximal
        map of ``trace_weight * sum_k tr(Gamma_k)`` on the cone, so the
        iteration converges to a minimum trace decomposition.  Those tend to
        be low rank, which matters when the realization should extend the
        data beyond the nodes.
    ``alternating``
        Plain alternating projections.  The history records the gap between
        the affine and the PSD iterate, which is nonincreasing.  Slow when
        every decomposition is rank deficient.
    ``dykstra``
        Alternating projections with Dykstra's correction.  No monotone
        quantity is recorded beyond the gap.

    The returned kernels are a PSD iterate, so they are PSD exactly;
    ``residual`` is the blockwise norm of their affine mismatch and the
    status is FEASIBLE when it is at most ``tol``.  Infeasibility is never
    certified.
    """
    if not (prob.spec.kind is Kind.MAX and prob.spec.base is Base.L1) and prob.spec.n != 1:
        raise UnsupportedError(f"agler_feasibility needs MAX(l1), got {prob.spec.label}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if trace_weight < 0 or (trace_weight and method != "douglas-rachford"):
        raise ValueError("trace_weight must be nonnegative and needs douglas-rachford")
    if np.any(np.abs(prob.points) >= 1):
        raise DomainError("nodes must lie in the open polydisk")
    w = agler_weights(prob)
    wc = w.conj()
    denom = np.sum(np.abs(w) ** 2, axis=0)
    target = prob.target
    m, nn = prob.m, prob.n_out

    def affine(g):
        r = np.sum(w * g, axis=0) - target
        return g - wc * (r / denom)

    def cone(g, shift=0.0):
        return np.stack([_psd_project(gk, shift) for gk in g])

    def mismatch(g):
        return _blockwise_norm(np.sum(w * g, axis=0) - target, m, nn)

    x = np.zeros_like(w)
    p_corr = np.zeros_like(w)
    q_corr = np.zeros_like(w)
    history = []
    it = 0
    c = cone(x)
    for it in range(1, max_iter + 1):
        if method == "douglas-rachford":
            c = cone(x, trace_weight)
            step = affine(2 * c - x) - c
            x = x + step
            history.append(float(np.linalg.norm(step)))
        elif method == "alternating":
            a = affine(x)
            c = cone(a)
            history.append(float(np.linalg.norm(a - c)))
            x = c
        else:
            a = affine(x + p_corr)
            p_corr = x + p_corr - a
            c = cone(a + q_corr)
            q_corr = a + q_corr - c
            history.append(float(np.linalg.norm(a - c)))
            x = c
        if it % 10 == 0 and mismatch(c) <= tol:
            break
    residual = mismatch(c)
    status = ConeStatus.FEASIBLE if residual <= tol else ConeStatus.UNDECIDED
    return ConeCertificate(status, list(c), residual, it, history)


def _gram(g: np.ndarray, tol: float) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(g))
    keep = w > tol * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    return v[:, keep] * np.sqrt(w[keep])


def cone_to_factorization(
    cert: ConeCertificate,
    prob: ConeProblem,
    rank_cap: int = 512,
    tol: float = 1e-13,
) -> FactorizationData:
    """Turn a certificate into factorization data for ``build_colligation``.

    A single kernel ``Gamma = G G^*`` (ball) uses the internal space
    ``C^r (x) C^n`` with ``T_j = I_r (x) e_1 e_j^T`` and ``F_i = G_i (x) e_1^T``,
    so that ``sigma(z) sigma(w)^* = <z, conj(w)> I_r (x) e_1 e_1^T``.  This
    tuple is both a row and a column contraction.

    Kernels ``Gamma_k = G_k G_k^*`` (polydisk) use the direct sum of the
    ranges, ``F_i = [G_1,i ... G_n,i]`` and ``T_k`` the projection onto the
    k-th summand.

    Raises
    ------
    CapacityError
        If the internal dimension would exceed ``rank_cap``.
    """
    if not cert.feasible:
        raise UnsupportedError("only FEASIBLE certificates can be converted")
    m, nn, n = prob.m, prob.n_out, prob.spec.n
    factors = [_gram(k, tol) for k in cert.kernels]
    if prob.spec.kind in (Kind.ROW, Kind.COLUMN):
        g = factors[0]
        r = max(g.shape[1], 1)
        if r * n > rank_cap:
            raise CapacityError(f"internal dimension {r * n} exceeds cap {rank_cap}")
        g = g if g.shape[1] else np.zeros((m * nn, 1))
        e1 = np.zeros((1, n))
        e1[0, 0] = 1
        f_values = np.stack([np.kron(g[i * nn:(i + 1) * nn], e1) for i in range(m)])
        sigma = np.zeros((n, r * n, r * n), dtype=complex)
        for j in range(n):
            unit = np.zeros((n, n))
            unit[0, j] = 1
            sigma[j] = np.kron(np.eye(r), unit)
    else:
        if len(factors) != n:
            raise DimensionError(f"{len(factors)} kernels for n = {n}")
        ranks = [gk.shape[1] for gk in factors]
        k = sum(ranks)
        if k > rank_cap:
            raise CapacityError(f"internal dimension {k} exceeds cap {rank_cap}")
        if k == 0:
            factors = [np.zeros((m * nn, 1))] + [np.zeros((m * nn, 0))] * (n - 1)
            ranks = [1] + [0] * (n - 1)
            k = 1
        big = np.hstack(factors)
        f_values = np.stack([big[i * nn:(i + 1) * nn] for i in range(m)])
        sigma = np.zeros((n, k, k), dtype=complex)
        start = 0
        for j, rj in enumerate(ranks):
            sigma[j, start:start + rj, start:start + rj] = np.eye(rj)
            start += rj
    return FactorizationData(prob.points, f_values, sigma, prob.p_values)


def search_infeasible_nodes(
    p: MatrixPolynomial,
    spec: OperatorSpaceSpec,
    radii=np.linspace(0.70, 0.30, 41),
    grids=(2, 3, 4),
) -> Optional[tuple[ConeProblem, ConeCertificate]]:
    """Look for nodes on small tori ``r (e^{i s}, e^{i t})`` (n = 2) where the
    closed-form ball kernel fails to be PSD; returns the first hit."""
    if spec.n != 2:
        raise UnsupportedError("the torus node search is implemented for n = 2")
    for m in grids:
        angles = 2 * np.pi * np.arange(m) / m
        s, t = np.meshgrid(angles, angles, indexing="ij")
        unit = np.stack([np.exp(1j * s.ravel()), np.exp(1j * t.ravel())], axis=1)
        for r in radii:
            pts = r * unit / np.sqrt(2)
            if np.max(np.linalg.norm(pts, axis=1)) >= 1:
                continue
            prob = ConeProblem.from_polynomial(spec, pts, p)
            cert = row_cone_check(prob)
            if not cert.feasible:
                return prob, cert
    return None


def cone_residual(cert: ConeCertificate, prob: ConeProblem) -> float:
    """Blockwise mismatch between the target and the kernel reconstruction."""
    if len(cert.kernels) == 1 and prob.spec.kind in (Kind.ROW, Kind.COLUMN):
        rebuilt = cert.kernels[0] * prob.expand(1 - prob.points @ prob.points.conj().T)
    else:
        rebuilt = np.sum(agler_weights(prob) * np.stack(cert.kernels), axis=0)
    return _blockwise_norm(rebuilt - prob.target, prob.m, prob.n_out)


__all__ = [
    "ConeCertificate",
    "ConeProblem",
    "ConeStatus",
    "agler_feasibility",
    "agler_weights",
    "cone_residual",
    "cone_to_factorization",
    "da_kernel",
    "row_cone_check",
    "search_infeasible_nodes",
]
