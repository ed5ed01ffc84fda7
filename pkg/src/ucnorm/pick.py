"""Scalar Nevanlinna-Pick interpolation in the unit ball of a universal
commutative algebra, for the disk, the Euclidean ball (row and column
spaces) and the polydisk (``MAX(l1)``).

A feasible problem comes with a witness ``(T, v_i)`` satisfying

    1 - w_i conj(w_j) = v_i [I - sigma_T(z_i) sigma_T(z_j)^*] v_j^*

and an interpolating colligation built from it by the lurking isometry.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .agler_cone import (
    ConeCertificate,
    ConeProblem,
    ConeStatus,
    agler_feasibility,
    cone_to_factorization,
    da_kernel,
)
from .errors import DimensionError, UnsupportedError
from .opspace import Base, Kind, OperatorSpaceSpec
from .realization import Colligation, build_colligation, eval_transfer, sigma_at
from .tensor_core import as_tuple

INFEASIBLE_EIG = 1e-9


class PickStatus(enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    UNDECIDED = "UNDECIDED"

    @property
    def exit_code(self) -> int:
        return {"FEASIBLE": 0, "INFEASIBLE": 2, "UNDECIDED": 3}[self.value]


@dataclass(eq=False)
class PickProblem:
    """Nodes ``(m, n)`` in the domain of ``spec`` with scalar targets ``(m,)``."""

    spec: OperatorSpaceSpec
    nodes: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=complex))
        self.targets = np.asarray(self.targets, dtype=complex).ravel()
        if self.nodes.shape[0] != self.targets.shape[0] or self.targets.size == 0:
            raise DimensionError("need as many targets as nodes, and at least one")
        # node validation (domain, duplicates) is shared with the cone problem
        self.as_cone_problem()

    def as_cone_problem(self) -> ConeProblem:
        return ConeProblem(self.spec, self.nodes, self.targets.reshape(-1, 1, 1))

    @property
    def n(self) -> int:
        return self.nodes.shape[1]


@dataclass(frozen=True)
class PickWitness:
    """Tuple ``T`` (shape ``(n, k, k)``) and row vectors ``v`` (shape ``(m, k)``)."""

    T: np.ndarray
    v: np.ndarray


@dataclass(eq=False)
class PickResult:
    status: PickStatus
    witness: Optional[PickWitness] = None
    interpolant: Optional[Colligation] = None
    pick_matrix: Optional[np.ndarray] = None
    min_eigenvalue: Optional[float] = None
    certificate: Optional[ConeCertificate] = None
    node_error: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.status is PickStatus.FEASIBLE


def pick_matrix(prob: PickProblem) -> np.ndarray:
    """``(1 - w_i conj(w_j)) / (1 - <z_i, conj(z_j)>)``; for n = 1 the classical Pick matrix."""
    w = prob.targets
    return (1 - np.outer(w, w.conj())) * da_kernel(prob.nodes)


def _ball_kind(spec: OperatorSpaceSpec) -> bool:
    return spec.n == 1 or spec.kind in (Kind.ROW, Kind.COLUMN)


def _finish(prob: PickProblem, cert: ConeCertificate, cone: ConeProblem, result: PickResult) -> PickResult:
    data = cone_to_factorization(cert, cone)
    colligation = build_colligation(data, tol=max(1e-9, 10 * cert.residual))
    result.witness = PickWitness(data.sigma, data.f_values[:, 0, :])
    result.interpolant = colligation
    result.node_error = max(
        abs(eval_transfer(colligation, z)[0, 0] - w) for z, w in zip(prob.nodes, prob.targets)
    )
    return result


def pick_solve(
    prob: PickProblem,
    max_iter: int = 10_000,
    tol: float = 1e-6,
    method: str = "douglas-rachford",
) -> PickResult:
    """Decide feasibility and, when feasible, build an interpolant.

    Disk and ball: the Pick matrix is PSD (FEASIBLE) or has an eigenvalue
    below ``-1e-9`` (INFEASIBLE).  Tiny negative eigenvalues above that
    threshold are clipped before factoring.  Polydisk: an Agler decomposition
    is searched for; failure to find one is UNDECIDED.
    """
    spec = prob.spec
    cone = prob.as_cone_problem()
    if _ball_kind(spec):
        pm = pick_matrix(prob)
        herm = 0.5 * (pm + pm.conj().T)
        w, v = np.linalg.eigh(herm)
        lam = float(w[0])
        if lam < -INFEASIBLE_EIG:
            return PickResult(PickStatus.INFEASIBLE, pick_matrix=pm, min_eigenvalue=lam)
        clipped = (v * np.clip(w, 0, None)) @ v.conj().T
        # the ball construction works for n = 1 whatever the label
        ball = spec if spec.kind in (Kind.ROW, Kind.COLUMN) else OperatorSpaceSpec.row(spec.n)
        cone = ConeProblem(ball, prob.nodes, cone.p_values)
        cert = ConeCertificate(ConeStatus.FEASIBLE, [clipped], max(0.0, -lam), 0, min_eigenvalue=lam)
        result = PickResult(PickStatus.FEASIBLE, pick_matrix=pm, min_eigenvalue=lam, certificate=cert)
        return _finish(prob, cert, cone, result)
    if spec.kind is Kind.MAX and spec.base is Base.L1:
        cert = agler_feasibility(cone, max_iter=max_iter, tol=tol, method=method)
        if not cert.feasible:
            return PickResult(PickStatus.UNDECIDED, certificate=cert)
        return _finish(prob, cert, cone, PickResult(PickStatus.FEASIBLE, certificate=cert))
    raise UnsupportedError(f"no Pick solver for {spec.label}")


def np_residual(witness: PickWitness, prob: PickProblem) -> float:
    """``max |(1 - w_i conj(w_j)) - v_i [I - sigma(z_i) sigma(z_j)^*] v_j^*|``."""
    t = as_tuple(witness.T)
    v = np.atleast_2d(np.asarray(witness.v, dtype=complex))
    if v.shape != (prob.nodes.shape[0], t.shape[1]):
        raise DimensionError(f"witness vectors of shape {v.shape} do not match the tuple and nodes")
    vs = np.stack([vi @ sigma_at(t, z) for vi, z in zip(v, prob.nodes)])
    rhs = v @ v.conj().T - vs @ vs.conj().T
    lhs = 1 - np.outer(prob.targets, prob.targets.conj())
    return float(np.max(np.abs(lhs - rhs)))


def np_residual_double_sum(witness: PickWitness, prob: PickProblem) -> float:
    """Same quantity with ``sigma sigma^*`` expanded as ``sum_{k,l} z_i^k conj(z_j^l) T_k T_l^*``."""
    t = as_tuple(witness.T)
    v = np.atleast_2d(np.asarray(witness.v, dtype=complex))
    n, k = t.shape[0], t.shape[1]
    worst = 0.0
    for i, (vi, zi) in enumerate(zip(v, prob.nodes)):
        for j, (vj, zj) in enumerate(zip(v, prob.nodes)):
            inner = np.eye(k, dtype=complex)
            for a in range(n):
                for b in range(n):
                    inner -= zi[a] * np.conj(zj[b]) * t[a] @ t[b].conj().T
            val = vi @ inner @ vj.conj()
            lhs = 1 - prob.targets[i] * np.conj(prob.targets[j])
            worst = max(worst, abs(lhs - val))
    return worst


def pseudo_hyperbolic(a: complex, b: complex) -> float:
    return abs(a - b) / abs(1 - np.conj(a) * b)


def two_point_feasible(nodes, targets) -> bool:
    """Closed-form disk criterion for two nodes: ``|w_i| <= 1`` and
    ``d(w_1, w_2) <= d(z_1, z_2)`` in the pseudo-hyperbolic distance."""
    (z1, z2), (w1, w2) = np.ravel(nodes), np.ravel(targets)
    if max(abs(w1), abs(w2)) > 1:
        return False
    if max(abs(w1), abs(w2)) == 1:
        return w1 == w2
    return pseudo_hyperbolic(w1, w2) <= pseudo_hyperbolic(z1, z2)
