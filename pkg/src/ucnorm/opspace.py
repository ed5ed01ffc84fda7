"""Operator space structures over C^n and complete contractivity of the maps
``sigma_T(z) = sum_j z_j T_j``.

Conventions
-----------
The pairing of C^n with itself is the symmetric one, ``<z, w> = sum z_j w_j``.
A space is MIN or MAX over one of the Banach norms l1, l2, linf, the row
space R_n, the column space C_n, or a concrete space given by generators
``G`` (matrix norms ``||sum A_j (x) G_j||``).  ``CONCRETE_DUAL`` is the dual
of a concrete space; it only appears as the sampling side of the duality
check.

* ``sigma_T`` is cc for R_n  iff  ``I - sum T_j^* T_j >= 0``  (column contraction);
* ``sigma_T`` is cc for C_n  iff  ``I - sum T_j T_j^* >= 0``  (row contraction);
* ``sigma_T`` is cc for MAX(l1) iff every ``T_j`` is a contraction.

Complete contractivity for the other spaces is decided by sampling: a map
is cc for E exactly when ``||sum T_j (x) B_j|| <= 1`` for every tuple B
that is cc for the dual space, and every sampling family below produces
tuples that are cc for their space *exactly*, so a violation is a proof.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _parallel
from .errors import ArityError, DimensionError, UnsupportedError
from .tensor_core import as_tuple, commutator_residual, op_norm, pair_tuples, random_unitary

DEFAULT_TOL = 1e-9


class Kind(str, enum.Enum):
    MIN = "min"
    MAX = "max"
    ROW = "row"
    COLUMN = "column"
    CONCRETE = "concrete"
    CONCRETE_DUAL = "concrete-dual"


class Base(str, enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @property
    def dual(self) -> "Base":
        return {Base.L1: Base.LINF, Base.L2: Base.L2, Base.LINF: Base.L1}[self]


def base_norm(base: Base, z) -> float:
    z = np.abs(np.asarray(z, dtype=complex))
    if base is Base.L1:
        return float(z.sum())
    if base is Base.L2:
        return float(np.sqrt((z**2).sum()))
    return float(z.max(initial=0.0))


@dataclass(frozen=True, eq=False)
class OperatorSpaceSpec:
    kind: Kind
    n: int
    base: Optional[Base] = None
    generators: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.n < 1:
            raise DimensionError("operator space needs n >= 1")
        if kind in (Kind.MIN, Kind.MAX):
            if self.base is None:
                raise ValueError(f"{kind.value} space needs a base norm")
            object.__setattr__(self, "base", Base(self.base))
        elif kind in (Kind.ROW, Kind.COLUMN):
            object.__setattr__(self, "base", Base.L2)
        else:
            if self.generators is None:
                raise ValueError("concrete space needs generators")
            g = as_tuple(self.generators)
            if g.shape[0] != self.n:
                raise ArityError(f"{g.shape[0]} generators for n = {self.n}")
            object.__setattr__(self, "generators", g)

    # constructors -----------------------------------------------------
    @classmethod
    def min(cls, base, n):
        return cls(Kind.MIN, n, Base(base))

    @classmethod
    def max(cls, base, n):
        return cls(Kind.MAX, n, Base(base))

    @classmethod
    def row(cls, n):
        return cls(Kind.ROW, n)

    @classmethod
    def column(cls, n):
        return cls(Kind.COLUMN, n)

    @classmethod
    def concrete(cls, generators):
        g = as_tuple(generators)
        return cls(Kind.CONCRETE, g.shape[0], generators=g)

    @classmethod
    def parse(cls, label: str, n: int) -> "OperatorSpaceSpec":
        """Build from a CLI label such as ``max-l1``, ``min-linf`` or ``row``."""
        label = label.strip().lower()
        if label in ("row", "column"):
            return cls(Kind(label), n)
        kind, _, base = label.partition("-")
        if kind not in ("min", "max") or base not in ("l1", "l2", "linf"):
            raise ValueError(f"unknown operator space label {label!r}")
        return cls(Kind(kind), n, Base(base))

    @property
    def label(self) -> str:
        if self.kind in (Kind.MIN, Kind.MAX):
            return f"{self.kind.value}-{self.base.value}"
        return self.kind.value

    def __eq__(self, other):
        if not isinstance(other, OperatorSpaceSpec):
            return NotImplemented
        if (self.kind, self.n, self.base) != (other.kind, other.n, other.base):
            return False
        if self.generators is None or other.generators is None:
            return self.generators is other.generators
        return self.generators.shape == other.generators.shape and bool(
            np.array_equal(self.generators, other.generators)
        )

    def __hash__(self):
        return hash((self.kind, self.n, self.base))

    def dual(self) -> "OperatorSpaceSpec":
        if self.kind is Kind.MIN:
            return OperatorSpaceSpec(Kind.MAX, self.n, self.base.dual)
        if self.kind is Kind.MAX:
            return OperatorSpaceSpec(Kind.MIN, self.n, self.base.dual)
        if self.kind is Kind.ROW:
            return OperatorSpaceSpec(Kind.COLUMN, self.n)
        if self.kind is Kind.COLUMN:
            return OperatorSpaceSpec(Kind.ROW, self.n)
        if self.kind is Kind.CONCRETE:
            return OperatorSpaceSpec(Kind.CONCRETE_DUAL, self.n, generators=self.generators)
        return OperatorSpaceSpec(Kind.CONCRETE, self.n, generators=self.generators)


def vector_norm(spec: OperatorSpaceSpec, z) -> float:
    """Norm of the Banach space underlying ``spec``."""
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != spec.n:
        raise DimensionError(f"vector of length {z.shape[0]} for n = {spec.n}")
    if spec.kind is Kind.CONCRETE:
        return op_norm(np.tensordot(z, spec.generators, axes=1))
    if spec.kind is Kind.CONCRETE_DUAL:
        raise UnsupportedError("no closed form for the dual of a concrete norm")
    return base_norm(spec.base, z)


def dual_vector_norm(spec: OperatorSpaceSpec, z) -> float:
    """Norm of the dual Banach space under the symmetric pairing.

    A scalar point ``mu`` gives a map ``sigma_mu`` that is cc for ``spec``
    exactly when ``dual_vector_norm(spec, mu) <= 1``; the open unit ball of
    this norm is the domain on which elements of UC(spec) live.
    """
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != spec.n:
        raise DimensionError(f"vector of length {z.shape[0]} for n = {spec.n}")
    if spec.kind in (Kind.CONCRETE, Kind.CONCRETE_DUAL):
        if spec.kind is Kind.CONCRETE_DUAL:
            return op_norm(np.tensordot(z, spec.generators, axes=1))
        raise UnsupportedError("no closed form for the dual of a concrete norm")
    return base_norm(spec.base.dual, z)


class CcStatus(str, enum.Enum):
    VERIFIED = "VERIFIED"
    FALSIFIED = "FALSIFIED"
    UNKNOWN = "UNKNOWN"


@dataclass
class CcVerdict:
    status: CcStatus
    witness: Optional[np.ndarray] = None
    bound: Optional[float] = None
    reason: str = ""

    @property
    def verified(self) -> bool:
        return self.status is CcStatus.VERIFIED


# ---------------------------------------------------------------------------
# closed forms


def joint_spectrum(t, tol: float = 1e-9) -> Optional[np.ndarray]:
    """Joint eigenvalues (rows) of a commuting tuple of normal matrices.

    Returns ``None`` when the tuple is not (numerically) commuting and normal,
    or when a generic combination fails to diagonalize it.
    """
    t = as_tuple(t)
    d = t.shape[1]
    if d == 1:
        return t[:, 0, 0][None, :].copy()
    if commutator_residual(t) > tol:
        return None
    for tj in t:
        if op_norm(tj @ tj.conj().T - tj.conj().T @ tj) > tol:
            return None
    rng = np.random.default_rng(12345)
    c = rng.standard_normal(t.shape[0]) + 1j * rng.standard_normal(t.shape[0])
    from scipy.linalg import schur

    _, u = schur(np.tensordot(c, t, axes=1), output="complex")
    diag = np.einsum("ai,jab,bi->ij", u.conj(), t, u)
    off = np.einsum("ai,jab,bk->jik", u.conj(), t, u)
    off[:, np.arange(d), np.arange(d)] = 0
    if np.max(np.abs(off)) > 10 * tol * max(1.0, np.max(np.abs(t))):
        return None
    return diag


def closed_form_bound(spec: OperatorSpaceSpec, t) -> Optional[float]:
    """Upper bound for the cb norm of ``sigma_t`` on ``spec`` from a closed form.

    Exact for MAX(l1), ROW and COLUMN; a valid upper bound for MAX(l2),
    MAX(linf) and for commuting normal tuples on any non-concrete space;
    ``None`` when no closed form applies.
    """
    t = as_tuple(t)
    if t.shape[0] != spec.n:
        raise ArityError(f"tuple of length {t.shape[0]} for n = {spec.n}")
    col = op_norm(np.einsum("jba,jbc->ac", t.conj(), t)) ** 0.5
    row = op_norm(np.einsum("jab,jcb->ac", t, t.conj())) ** 0.5
    if spec.kind is Kind.ROW:
        return col
    if spec.kind is Kind.COLUMN:
        return row
    bounds = []
    if spec.kind is Kind.MAX:
        norms = [op_norm(tj) for tj in t]
        if spec.base is Base.L1:
            return max(norms)
        if spec.base is Base.L2:
            bounds += [row, col]
        else:
            bounds.append(sum(norms))
    if spec.kind in (Kind.MIN, Kind.MAX):
        mu = joint_spectrum(t)
        if mu is not None:
            bounds.append(max(base_norm(spec.base.dual, m) for m in mu))
        if spec.kind is Kind.MIN and spec.base is Base.L1 and _is_kv(t):
            bounds.append(1.0)
    return min(bounds) if bounds else None


# ---------------------------------------------------------------------------
# sampling families: every draw is cc for its space exactly


def _boundary_point(base: Base, n: int, rng: np.random.Generator) -> np.ndarray:
    phases = np.exp(2j * np.pi * rng.random(n))
    if base is Base.LINF:
        return phases
    if base is Base.L2:
        g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return g / np.linalg.norm(g)
    return rng.dirichlet(np.ones(n)) * phases


def _contraction(d: int, rng: np.random.Generator, unitary: bool) -> np.ndarray:
    if unitary:
        return random_unitary(d, rng)
    rho = rng.random(d) ** (1.0 / 4)
    return random_unitary(d, rng) @ np.diag(rho) @ random_unitary(d, rng)


def sample_cc_tuple(spec: OperatorSpaceSpec, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a ``dim x dim`` tuple whose map is cc for ``spec`` by construction."""
    n = spec.n
    kind = spec.kind
    style = rng.integers(3)
    if kind is Kind.MIN:
        # commuting normal tuple, joint spectrum on the dual unit sphere;
        # such maps factor through C(ball of the dual) so they are cc for MIN
        mu = np.array([_boundary_point(spec.base.dual, n, rng) for _ in range(dim)])
        u = random_unitary(dim, rng)
        return np.einsum("ab,bj,cb->jac", u, mu, u.conj())
    if kind is Kind.MAX and spec.base is Base.L1:
        if style == 0:
            out = np.zeros((n, dim, dim), dtype=complex)
            out[rng.integers(n)] = random_unitary(dim, rng)
            return out
        return np.array([_contraction(dim, rng, unitary=style == 1) for _ in range(n)])
    if kind is Kind.MAX and spec.base is Base.LINF:
        if style == 0:
            c = _boundary_point(Base.L1, n, rng)
            return np.array([c[j] * random_unitary(dim, rng) for j in range(n)])
        # X D_j Y with each row (d_1^k, ..., d_n^k) on the l1 sphere
        rows = np.array([_boundary_point(Base.L1, n, rng) for _ in range(dim)])
        x = _contraction(dim, rng, unitary=True)
        y = _contraction(dim, rng, unitary=True)
        return np.array([x @ np.diag(rows[:, j]) @ y for j in range(n)])
    if kind in (Kind.ROW, Kind.COLUMN) or (kind is Kind.MAX and spec.base is Base.L2):
        v = random_unitary(n * dim, rng)[:, :dim]  # isometry C^dim -> C^(n dim)
        dmat = _contraction(dim, rng, unitary=style != 2)
        blocks = v.reshape(n, dim, dim)
        as_column = kind is Kind.ROW or (kind is Kind.MAX and style == 0)
        if as_column:
            return np.array([b @ dmat for b in blocks])
        return np.array([dmat @ b.conj().T for b in blocks])
    if kind is Kind.CONCRETE:
        g = spec.generators
        m = g.shape[1]
        amp = max(1, math.ceil(dim / m))
        big = np.array([np.kron(gj, np.eye(amp)) for gj in g])
        v = random_unitary(m * amp, rng)[:, :dim]
        return np.einsum("ba,jbc,cd->jad", v.conj(), big, v)
    if kind is Kind.CONCRETE_DUAL:
        b = rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))
        return b / op_norm(pair_tuples(b, spec.generators))
    raise UnsupportedError(f"no sampling family for {spec.label}")


def _draw(spec, s, seed, index, dims):
    rng = np.random.default_rng([seed, index])
    dim = dims[index % len(dims)]
    t = sample_cc_tuple(spec, dim, rng)
    return op_norm(pair_tuples(s, t)), t


def duality_falsifier(
    e: OperatorSpaceSpec,
    s,
    budget: int = 1000,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    dims=(1, 2, 3),
) -> CcVerdict:
    """Search tuples T cc for ``e`` for a pairing ``||sum S_j (x) T_j|| > 1``.

    Such a T proves that ``sigma_S`` is not cc for the dual of ``e``.  Draw
    ``i`` uses the seed ``(seed, i)``, so the reported bound is a running
    maximum that can only grow with ``budget``.
    """
    s = as_tuple(s)
    if s.shape[0] != e.n:
        raise ArityError(f"tuple of length {s.shape[0]} for n = {e.n}")
    best, witness = 0.0, None
    results = _parallel.pmap(lambda i: _draw(e, s, seed, i, tuple(dims)), range(budget))
    for value, t in results:
        if value > best or witness is None:
            best, witness = value, t
        if value > 1 + tol:
            return CcVerdict(CcStatus.FALSIFIED, t, value, "pairing exceeds 1")
    return CcVerdict(CcStatus.UNKNOWN, None, best, "no violation found")


def is_cc(
    spec: OperatorSpaceSpec,
    t,
    tol: float = DEFAULT_TOL,
    effort: int = 1000,
    seed: int = 0,
) -> CcVerdict:
    """Decide whether ``sigma_t`` is completely contractive for ``spec``.

    VERIFIED comes only from a closed form (see :func:`closed_form_bound`);
    FALSIFIED carries a dual-side witness; otherwise UNKNOWN with the best
    pairing norm seen.
    """
    t = as_tuple(t)
    if t.shape[0] != spec.n:
        raise ArityError(f"tuple of length {t.shape[0]} for n = {spec.n}")
    bound = closed_form_bound(spec, t)
    if bound is not None and bound <= 1 + tol:
        return CcVerdict(CcStatus.VERIFIED, None, bound, "closed form")
    exact = spec.kind in (Kind.ROW, Kind.COLUMN) or (spec.kind is Kind.MAX and spec.base is Base.L1)
    if exact:
        witness = _exact_witness(spec, t)
        return CcVerdict(CcStatus.FALSIFIED, witness, op_norm(pair_tuples(t, witness)), "closed form")
    verdict = duality_falsifier(spec.dual(), t, budget=effort, tol=tol, seed=seed)
    return verdict


def _exact_witness(spec: OperatorSpaceSpec, t: np.ndarray) -> np.ndarray:
    """Dual-side tuple realizing the violation of an exact closed form."""
    n = spec.n
    if spec.kind is Kind.MAX:
        # scalar e_j lies in the unit ball of l1, hence is cc for MIN(linf)
        j = int(np.argmax([op_norm(tj) for tj in t]))
        w = np.zeros((n, 1, 1), dtype=complex)
        w[j] = 1.0
        return w
    if spec.kind is Kind.ROW:
        # B_j = e_{j1} (n x n) is cc for C_n; pairing is the column [T_1; ...; T_n]
        w = np.zeros((n, n, n), dtype=complex)
        w[np.arange(n), np.arange(n), 0] = 1.0
        return w
    w = np.zeros((n, n, n), dtype=complex)
    w[np.arange(n), 0, np.arange(n)] = 1.0
    return w


# ---------------------------------------------------------------------------
# Kaijser-Varopoulos tuple


def kv_tuple() -> np.ndarray:
    """The commuting 5 x 5 contractions ``T_j = e_{j+1} e_1^T + e_5 v_j^T``."""
    r = 1.0 / math.sqrt(3.0)
    signs = np.array([[-1, 1, 1], [1, -1, 1], [1, 1, -1]], dtype=float)
    t = np.zeros((3, 5, 5), dtype=complex)
    for j in range(3):
        t[j, j + 1, 0] = 1.0
        t[j, 4, 1:4] = r * signs[j]
    return t


def _is_kv(t: np.ndarray) -> bool:
    return t.shape == (3, 5, 5) and np.max(np.abs(t - kv_tuple())) <= 1e-12


def kv_block_matrix(a) -> np.ndarray:
    """Assemble the 5 x 5 block matrix equal to ``sum_j kron(T_j, A_j)``.

    First block column ``(0, A_1, A_2, A_3, 0)``, last block row
    ``(0, B_1, B_2, B_3, 0)`` with ``B_k`` the signed combinations
    ``(±A_1 ± A_2 ± A_3)/sqrt(3)``.
    """
    a = as_tuple(a)
    if a.shape[0] != 3:
        raise ArityError("the KV block matrix needs a 3-tuple")
    m = a.shape[1]
    r = 1.0 / math.sqrt(3.0)
    b = [r * (-a[0] + a[1] + a[2]), r * (a[0] - a[1] + a[2]), r * (a[0] + a[1] - a[2])]
    out = np.zeros((5 * m, 5 * m), dtype=complex)
    for j in range(3):
        out[(j + 1) * m:(j + 2) * m, :m] = a[j]
        out[4 * m:, (j + 1) * m:(j + 2) * m] = b[j]
    return out


@dataclass
class KVCheck:
    passed: bool
    pairing_norm: float
    column_norm: float
    row_norm: float
    identity_error: float
    hypotheses_hold: bool


def kv_check_details(a, tol: float = 1e-10) -> KVCheck:
    a = as_tuple(a)
    if a.shape[0] != 3:
        raise ArityError("the KV check needs a 3-tuple")
    t = kv_tuple()
    block = kv_block_matrix(a)
    shuffle_err = float(np.max(np.abs(block - pair_tuples(t, a))))
    pairing = op_norm(pair_tuples(a, t))
    m = a.shape[1]
    column = op_norm(block[:, :m])
    row = op_norm(block[4 * m:, :])
    identity_error = max(abs(pairing - max(column, row)), shuffle_err)
    signs_ok = all(
        op_norm(s1 * a[0] + s2 * a[1] + s3 * a[2]) <= 1 + tol
        for s1 in (1, -1)
        for s2 in (1, -1)
        for s3 in (1, -1)
    )
    col_cond = np.eye(m) - np.einsum("jba,jbc->ac", a.conj(), a)
    col_ok = bool(np.linalg.eigvalsh(0.5 * (col_cond + col_cond.conj().T))[0] >= -tol)
    hyp = signs_ok and col_ok
    passed = identity_error <= tol and (not hyp or pairing <= 1 + tol)
    return KVCheck(passed, pairing, column, row, identity_error, hyp)


def kv_structural_check(a, tol: float = 1e-10) -> bool:
    """Check the block-norm identity for ``sum A_j (x) T_j`` on the KV tuple
    and, when the signed combinations and the column condition
    ``I - sum A_j^* A_j >= 0`` hold, that the pairing norm is at most 1."""
    return kv_check_details(a, tol).passed


def linf_contractive_bound(a, grid: int = 64) -> float:
    """Certified upper bound for ``sup_{z in polydisk} ||sum z_j A_j||``.

    The first phase is fixed to 1 (the norm is phase invariant); the
    remaining phases run over a uniform grid of spacing ``h`` and the grid
    maximum is padded by the Lipschitz term ``sum_j ||A_j|| h / 2``.
    """
    a = as_tuple(a)
    n = a.shape[0]
    h = 2 * np.pi / grid
    angles = np.arange(grid) * h
    mesh = np.meshgrid(*([angles] * (n - 1)), indexing="ij")
    phases = np.exp(1j * np.stack([m.ravel() for m in mesh], axis=1)) if n > 1 else np.zeros((1, 0))
    z = np.hstack([np.ones((phases.shape[0], 1)), phases])
    mats = np.tensordot(z, a, axes=1)
    best = float(np.max(np.linalg.norm(mats, 2, axis=(1, 2))))
    lip = sum(op_norm(aj) for aj in a[1:]) * h / 2
    return best + lip
