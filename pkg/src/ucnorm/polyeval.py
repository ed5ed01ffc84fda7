"""Matrix-coefficient polynomials: evaluation at points and on commuting
tuples, sup-norm and UC-norm lower bounds, and a Drury-Arveson multiplier
norm oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional, Union

import numpy as np
from scipy.optimize import minimize

from .errors import ArityError, CommutativityError, DimensionError, UnsupportedError
from .opspace import (
    Base,
    Kind,
    OperatorSpaceSpec,
    base_norm,
    closed_form_bound,
    kv_tuple,
)
from .tensor_core import as_matrix, as_tuple, commutator_residual, op_norm

MultiIndex = tuple


def grlex_key(alpha) -> tuple:
    """Graded lexicographic order: total degree first, then z_1 > z_2 > ..."""
    return (sum(alpha), tuple(-a for a in alpha))


def monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    """All exponents of total degree <= ``degree`` in graded lex order."""
    out = [a for a in product(range(degree + 1), repeat=n) if sum(a) <= degree]
    return sorted(out, key=grlex_key)


@dataclass(eq=False)
class MatrixPolynomial:
    """``p(z) = sum_alpha A_alpha z^alpha`` with equally shaped complex
    coefficients ``A_alpha``.

    Coefficients are normally square (``N x N``); rectangular coefficients are
    allowed so that factor functions such as a row ``F(z)`` can be stored too.
    """

    n: int
    terms: dict = field(default_factory=dict)
    shape: Optional[tuple] = None

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("a polynomial needs n >= 1 variables")
        clean = {}
        shape = tuple(self.shape) if self.shape is not None else None
        for key, coeff in self.terms.items():
            alpha = tuple(int(a) for a in (key if np.ndim(key) else (key,)))
            if len(alpha) != self.n or min(alpha) < 0:
                raise DimensionError(f"bad multi-index {key!r} for n = {self.n}")
            c = as_matrix(coeff)
            if shape is None:
                shape = c.shape
            elif c.shape != shape:
                raise DimensionError(f"coefficient shape {c.shape} differs from {shape}")
            clean[alpha] = clean.get(alpha, 0) + c
        self.terms = {a: clean[a] for a in sorted(clean, key=grlex_key)}
        self.shape = shape if shape is not None else (1, 1)

    # constructors -----------------------------------------------------
    @classmethod
    def scalar(cls, coeffs: dict, n: int) -> "MatrixPolynomial":
        return cls(n, {k: [[v]] for k, v in coeffs.items()}, (1, 1))

    @classmethod
    def constant(cls, c, n: int) -> "MatrixPolynomial":
        c = as_matrix(c)
        return cls(n, {(0,) * n: c}, c.shape)

    @classmethod
    def linear(cls, a) -> "MatrixPolynomial":
        """``sum_j a_j z_j``; the image of a vector under the embedding into UC."""
        a = np.asarray(a, dtype=complex).ravel()
        n = a.shape[0]
        eye = np.eye(n, dtype=int)
        return cls.scalar({tuple(eye[j]): a[j] for j in range(n)}, n)

    # structure ----------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    @property
    def coeff_size(self) -> int:
        if self.shape[0] != self.shape[1]:
            raise DimensionError(f"coefficients are {self.shape}, not square")
        return self.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.shape == (1, 1)

    def scalar_coeffs(self) -> dict:
        if not self.is_scalar:
            raise UnsupportedError("polynomial has matrix coefficients")
        return {a: complex(c[0, 0]) for a, c in self.terms.items()}

    def __mul__(self, other):
        if isinstance(other, MatrixPolynomial):
            if other.n != self.n:
                raise ArityError("polynomials in different numbers of variables")
            out = {}
            for (a, ca), (b, cb) in product(self.terms.items(), other.terms.items()):
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0) + ca @ cb
            return MatrixPolynomial(self.n, out, (self.shape[0], other.shape[1]))
        return MatrixPolynomial(self.n, {a: other * c for a, c in self.terms.items()}, self.shape)

    __rmul__ = __mul__

    def __add__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0) + c
        return MatrixPolynomial(self.n, out, self.shape)

    def __repr__(self):
        return f"MatrixPolynomial(n={self.n}, shape={self.shape}, degree={self.degree}, terms={len(self.terms)})"


def _check_point(p: MatrixPolynomial, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != p.n:
        raise DimensionError(f"point of length {z.shape[0]} for n = {p.n}")
    return z


def eval_point(p: MatrixPolynomial, z) -> np.ndarray:
    z = _check_point(p, z)
    out = np.zeros(p.shape, dtype=complex)
    for alpha, c in p.terms.items():
        out += c * np.prod(z ** np.array(alpha))
    return out


def eval_points(p: MatrixPolynomial, zs) -> np.ndarray:
    """Evaluate at many points; ``zs`` has shape ``(m, n)``, result ``(m, rows, cols)``."""
    zs = np.asarray(zs, dtype=complex).reshape(-1, p.n)
    out = np.zeros((zs.shape[0],) + tuple(p.shape), dtype=complex)
    for alpha, c in p.terms.items():
        mono = np.prod(zs ** np.array(alpha), axis=1)
        out += mono[:, None, None] * c
    return out


def _tuple_power(t: np.ndarray, alpha, cache: dict) -> np.ndarray:
    if alpha in cache:
        return cache[alpha]
    d = t.shape[1]
    out = np.eye(d, dtype=complex)
    for j, k in enumerate(alpha):
        for _ in range(k):
            out = out @ t[j]
    cache[alpha] = out
    return out


def eval_tuple(p: MatrixPolynomial, t, tol: float = 1e-9) -> np.ndarray:
    """``sum_alpha kron(A_alpha, T^alpha)`` for a commuting tuple ``t``."""
    t = as_tuple(t)
    if t.shape[0] != p.n:
        raise ArityError(f"tuple of length {t.shape[0]} for n = {p.n}")
    residual = commutator_residual(t)
    if residual > tol:
        raise CommutativityError(f"tuple does not commute (residual {residual:.2e})")
    d = t.shape[1]
    out = np.zeros((p.shape[0] * d, p.shape[1] * d), dtype=complex)
    cache: dict = {}
    for alpha, c in p.terms.items():
        out += np.kron(c, _tuple_power(t, alpha, cache))
    return out


# ---------------------------------------------------------------------------
# sup norm over a ball


@dataclass(frozen=True)
class SamplingPlan:
    """Points to try.  ``grid`` (per angle) gives a full torus grid for the
    polydisk; otherwise ``points`` boundary samples are drawn in seeded
    blocks, so a larger count always contains a smaller one."""

    points: int = 4096
    grid: Optional[int] = None
    seed: int = 0


_BLOCK = 256


def boundary_points(base: Base, n: int, count: int, seed: int = 0) -> np.ndarray:
    """Samples on the unit sphere of ``base``, prefix-stable in ``count``."""
    blocks = []
    for b in range(math.ceil(count / _BLOCK)):
        rng = np.random.default_rng([seed, b])
        phases = np.exp(2j * np.pi * rng.random((_BLOCK, n)))
        if base is Base.LINF:
            pts = phases
        elif base is Base.L2:
            g = rng.standard_normal((_BLOCK, n)) + 1j * rng.standard_normal((_BLOCK, n))
            pts = g / np.linalg.norm(g, axis=1, keepdims=True)
        else:
            pts = rng.dirichlet(np.ones(n), size=_BLOCK) * phases
        blocks.append(pts)
    if not blocks:
        return np.zeros((0, n), dtype=complex)
    return np.concatenate(blocks)[:count]


def torus_grid(n: int, m: int) -> np.ndarray:
    angles = 2 * np.pi * np.arange(m) / m
    mesh = np.meshgrid(*([angles] * n), indexing="ij")
    return np.exp(1j * np.stack([g.ravel() for g in mesh], axis=1))


def resolve_base(domain: Union[OperatorSpaceSpec, Base, str]) -> Base:
    if isinstance(domain, OperatorSpaceSpec):
        if domain.kind in (Kind.CONCRETE, Kind.CONCRETE_DUAL):
            raise UnsupportedError("sup norm sampling needs an l1, l2 or linf ball")
        return domain.base
    return Base(domain)


def _plan_points(base: Base, n: int, plan: SamplingPlan) -> np.ndarray:
    if plan.grid is not None and base is Base.LINF:
        return torus_grid(n, plan.grid)
    return boundary_points(base, n, plan.points, plan.seed)


def _norms_at(p: MatrixPolynomial, zs: np.ndarray, chunk: int = 65536) -> np.ndarray:
    out = []
    for start in range(0, zs.shape[0], chunk):
        vals = eval_points(p, zs[start:start + chunk])
        if p.is_scalar:
            out.append(np.abs(vals[:, 0, 0]))
        else:
            out.append(np.linalg.norm(vals, 2, axis=(1, 2)))
    return np.concatenate(out) if out else np.zeros(0)


def sup_norm_search(p: MatrixPolynomial, domain, plan: SamplingPlan = SamplingPlan()):
    """Return ``(value, point)`` maximizing ``||p(z)||`` over the sampled boundary."""
    base = resolve_base(domain)
    zs = _plan_points(base, p.n, plan)
    if p.degree == 0 or zs.shape[0] == 0:
        zero = np.zeros(p.n, dtype=complex)
        return op_norm(eval_point(p, zero)), zero
    norms = _norms_at(p, zs)
    i = int(np.argmax(norms))
    return float(norms[i]), zs[i]


def sup_norm_lb(p: MatrixPolynomial, domain, plan: SamplingPlan = SamplingPlan()) -> float:
    """Lower bound for ``sup ||p(z)||`` over the closed unit ball of the
    domain's base norm (the maximum is attained on the boundary)."""
    return sup_norm_search(p, domain, plan)[0]


# ---------------------------------------------------------------------------
# Drury-Arveson data


def da_shift_tuple(n: int, degree: int) -> np.ndarray:
    """Coordinate multipliers of the Drury-Arveson space compressed to the
    polynomials of degree <= ``degree`` (orthonormal monomial basis).

    The subspace is co-invariant, so the compressions commute and form a row
    contraction.
    """
    basis = monomials(n, degree)
    index = {a: i for i, a in enumerate(basis)}
    t = np.zeros((n, len(basis), len(basis)), dtype=complex)
    for a in basis:
        if sum(a) >= degree:
            continue
        for j in range(n):
            b = list(a)
            b[j] += 1
            t[j, index[tuple(b)], index[a]] = math.sqrt((a[j] + 1) / (sum(a) + 1))
    return t


def _da_log_weight(alpha) -> float:
    # log of ||z^alpha||^2 = alpha! / |alpha|!
    return sum(math.lgamma(a + 1) for a in alpha) - math.lgamma(sum(alpha) + 1)


def da_multiplier_lb(p: MatrixPolynomial, degree_cap: int) -> float:
    """Norm of the multiplication operator ``M_p`` compressed to polynomials of
    degree <= ``degree_cap`` in the Drury-Arveson inner product.

    A lower bound for the multiplier norm, nondecreasing in ``degree_cap``.
    """
    if not p.is_scalar:
        raise UnsupportedError("the Drury-Arveson oracle handles scalar polynomials only")
    basis = monomials(p.n, degree_cap)
    index = {a: i for i, a in enumerate(basis)}
    m = np.zeros((len(basis), len(basis)), dtype=complex)
    for beta, c in p.scalar_coeffs().items():
        for alpha in basis:
            target = tuple(x + y for x, y in zip(alpha, beta))
            if target not in index:
                continue
            ratio = math.exp(0.5 * (_da_log_weight(target) - _da_log_weight(alpha)))
            m[index[target], index[alpha]] += c * ratio
    return op_norm(m)


# ---------------------------------------------------------------------------
# UC norm lower bound


@dataclass
class UCBound:
    value: float
    witness: np.ndarray
    family: str
    candidates: int = 0


def _nilpotent_family(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Commuting tuple of polynomials in one random strictly upper triangular matrix."""
    nil = np.triu(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)), 1)
    powers = [np.eye(dim, dtype=complex)]
    for _ in range(dim - 1):
        powers.append(powers[-1] @ nil)
    coeffs = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    coeffs[:, 0] *= rng.random()
    return np.einsum("jk,kab->jab", coeffs, np.array(powers))


def _fit(e: OperatorSpaceSpec, s: np.ndarray, to_boundary: bool) -> Optional[np.ndarray]:
    bound = closed_form_bound(e, s)
    if bound is None:
        return None
    if bound > 1 or (to_boundary and bound > 0):
        s = s / bound
    return s


def _refine_point(p: MatrixPolynomial, dual_base: Base, z0: np.ndarray) -> tuple[float, np.ndarray]:
    n = p.n
    if dual_base is Base.LINF:
        def point(x):
            return np.exp(1j * x)

        x0 = np.angle(z0)
    else:
        def point(x):
            w = x[:n] + 1j * x[n:]
            nrm = base_norm(dual_base, w)
            return w / nrm if nrm > 0 else w

        x0 = np.concatenate([z0.real, z0.imag]) / max(base_norm(dual_base, z0), 1e-300)

    def objective(x):
        val = -op_norm(eval_point(p, point(x)))
        if dual_base is Base.LINF:
            return val
        # the normalization is scale invariant; pin the scale so the simplex can contract
        return val + (base_norm(dual_base, x[:n] + 1j * x[n:]) - 1) ** 2

    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000 * n})
    z = point(res.x)
    return op_norm(eval_point(p, z)), z


def uc_norm_lb(
    p: MatrixPolynomial,
    e: OperatorSpaceSpec,
    budget: int = 200,
    dim_cap: int = 4,
    seed: int = 0,
    plan: Optional[SamplingPlan] = None,
    include_library: bool = True,
    families: Iterable[str] = ("normal", "nilpotent", "library"),
    da_degrees: Iterable[int] = range(1, 7),
    refine: bool = True,
) -> UCBound:
    """Lower bound for ``sup ||p(S)||`` over commuting tuples S whose map is
    cc for ``e`` (verified by a closed form), with the best witness.

    Families: ``normal`` (scalar points of the dual ball, i.e. joint spectra
    of commuting normal tuples, optionally locally refined), ``nilpotent``
    (polynomials in one nilpotent, rescaled onto the closed-form ball) and
    ``library`` (the Kaijser-Varopoulos tuple and truncated Drury-Arveson
    shifts, rescaled only when needed).
    """
    if p.shape[0] != p.shape[1]:
        raise DimensionError("UC norm needs square coefficients")
    if e.n != p.n:
        raise ArityError(f"space has n = {e.n}, polynomial n = {p.n}")
    families = tuple(families)
    n = p.n
    zero = np.zeros((n, 1, 1), dtype=complex)
    best = UCBound(op_norm(eval_tuple(p, zero)), zero, "zero")

    def consider(s, family):
        val = op_norm(eval_tuple(p, s))
        best.candidates += 1
        if val > best.value:
            best.value, best.witness, best.family = val, s, family

    if "normal" in families and e.kind not in (Kind.CONCRETE, Kind.CONCRETE_DUAL):
        dual_base = e.base.dual
        plan = plan or SamplingPlan(points=max(budget, 64), seed=seed)
        zs = _plan_points(dual_base, n, plan)
        if zs.shape[0]:
            norms = _norms_at(p, zs)
            order = np.argsort(-norms, kind="stable")
            best.candidates += zs.shape[0]
            for i in order[:1]:
                if norms[i] > best.value:
                    best.value, best.witness, best.family = float(norms[i]), zs[i].reshape(n, 1, 1), "normal"
            if refine and p.degree > 0:
                for i in order[:3]:
                    val, z = _refine_point(p, dual_base, zs[i])
                    if base_norm(dual_base, z) <= 1 + 1e-12 and val > best.value:
                        best.value, best.witness, best.family = val, z.reshape(n, 1, 1), "normal"

    if "nilpotent" in families:
        for i in range(budget):
            rng = np.random.default_rng([seed, 7, i])
            dim = 2 + i % max(1, dim_cap - 1)
            s = _fit(e, _nilpotent_family(n, dim, rng), to_boundary=True)
            if s is not None:
                consider(s, "nilpotent")

    if include_library and "library" in families:
        library = []
        if n == 3:
            library.append(("kv", kv_tuple()))
        for d in da_degrees:
            library.append((f"da{d}", da_shift_tuple(n, d)))
        for name, s in library:
            s = _fit(e, s, to_boundary=False)
            if s is not None:
                consider(s, name)
    return best


# ---------------------------------------------------------------------------
# bundled polynomials


def kv_polynomial() -> MatrixPolynomial:
    """``z1^2 + z2^2 + z3^2 - 2 z1 z2 - 2 z1 z3 - 2 z2 z3``."""
    return kv_sign_polynomial((1, 1, 1, -1, -1, -1))


_KV_MONOMIALS = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)]


def kv_sign_polynomial(signs) -> MatrixPolynomial:
    """Degree-2 polynomial with squares weighted ``signs[:3]`` and cross terms ``2 * signs[3:]``."""
    weights = [1, 1, 1, 2, 2, 2]
    return MatrixPolynomial.scalar(
        {m: s * w for m, s, w in zip(_KV_MONOMIALS, signs, weights)}, 3
    )


def kv_sign_search(grid: int = 60) -> list[tuple[tuple, float, float]]:
    """For each of the 64 sign patterns: ``(signs, ||p(T_KV)||, torus grid sup)``,
    sorted by the gap between the two, largest first."""
    t = kv_tuple()
    out = []
    for signs in product((1, -1), repeat=6):
        p = kv_sign_polynomial(signs)
        out.append((signs, op_norm(eval_tuple(p, t)), sup_norm_lb(p, Base.LINF, SamplingPlan(grid=grid))))
    out.sort(key=lambda r: r[2] - r[1])
    return out


def twozw_polynomial() -> MatrixPolynomial:
    return MatrixPolynomial.scalar({(1, 1): 2.0}, 2)
