"""Plain-text file formats.

Every file starts with a header line ``ucnorm-<type> v1``.  The body is
made of ``key value`` lines, ``section`` lines that introduce blocks, and
matrix rows.  A complex number is written ``[re, im]`` with both parts
formatted to 17 significant digits, which round-trips binary64 exactly.
Matrix rows hold space-separated complex entries.  Lines starting with
``#`` and blank lines are ignored on input and never written, so
``write(read(text)) == text`` for every canonical file.

Polynomial terms are written ``a_1 ... a_n : e_11 e_12 ...`` (row-major
coefficient entries) in graded lexicographic order.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .agler_cone import ConeCertificate, ConeProblem
from .errors import DimensionError, UCNormError
from .opspace import OperatorSpaceSpec
from .pick import PickProblem
from .polyeval import MatrixPolynomial
from .realization import Colligation, FactorizationData, factorization_from_recipes

VERSION = "v1"
_COMPLEX = re.compile(r"\[\s*([^,\[\]\s]+)\s*,\s*([^,\[\]\s]+)\s*\]")


class ParseError(UCNormError, ValueError):
    """Malformed input; carries the 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# scalars and matrices


def fmt_real(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise DimensionError("non-finite value cannot be written")
    return format(x, ".17g")


def fmt_complex(z: complex) -> str:
    z = complex(z)
    return f"[{fmt_real(z.real)}, {fmt_real(z.imag)}]"


def fmt_row(row) -> str:
    return " ".join(fmt_complex(z) for z in row)


def matrix_lines(a: np.ndarray) -> list[str]:
    return [fmt_row(r) for r in np.atleast_2d(a)]


def parse_complex_list(text: str, line: int) -> list[complex]:
    out = []
    pos = 0
    text = text.strip()
    for m in _COMPLEX.finditer(text):
        if text[pos:m.start()].strip():
            raise ParseError(f"unexpected text {text[pos:m.start()].strip()!r}", line)
        try:
            out.append(complex(float(m.group(1)), float(m.group(2))))
        except ValueError as exc:
            raise ParseError(f"bad number in {m.group(0)!r}", line) from exc
        pos = m.end()
    if text[pos:].strip():
        raise ParseError(f"unexpected text {text[pos:].strip()!r}", line)
    if any(not np.isfinite(z.real) or not np.isfinite(z.imag) for z in out):
        raise ParseError("non-finite entry", line)
    return out


# ---------------------------------------------------------------------------
# reader


class Reader:
    """Line cursor over the significant lines of a file."""

    def __init__(self, text: str, kind: str):
        self.lines = [
            (i + 1, raw.rstrip())
            for i, raw in enumerate(text.splitlines())
            if raw.strip() and not raw.lstrip().startswith("#")
        ]
        self.pos = 0
        if not self.lines:
            raise ParseError("empty file", 1)
        num, head = self.next()
        if head != f"ucnorm-{kind} {VERSION}":
            raise ParseError(f"expected header 'ucnorm-{kind} {VERSION}', got {head!r}", num)

    def peek(self) -> Optional[tuple[int, str]]:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def next(self) -> tuple[int, str]:
        if self.pos >= len(self.lines):
            last = self.lines[-1][0] if self.lines else 0
            raise ParseError("unexpected end of file", last + 1)
        item = self.lines[self.pos]
        self.pos += 1
        return item

    def done(self) -> bool:
        return self.pos >= len(self.lines)

    def expect_end(self):
        if not self.done():
            num, text = self.peek()
            raise ParseError(f"trailing content {text!r}", num)

    def key(self, name: str) -> tuple[int, str]:
        num, text = self.next()
        parts = text.split(None, 1)
        if not parts or parts[0] != name:
            raise ParseError(f"expected '{name} ...', got {text!r}", num)
        return num, parts[1].strip() if len(parts) > 1 else ""

    def int_key(self, name: str, minimum: int = 0) -> int:
        num, val = self.key(name)
        try:
            out = int(val)
        except ValueError as exc:
            raise ParseError(f"'{name}' needs an integer, got {val!r}", num) from exc
        if out < minimum:
            raise ParseError(f"'{name}' must be at least {minimum}", num)
        return out

    def real_key(self, name: str) -> float:
        num, val = self.key(name)
        try:
            return float(val)
        except ValueError as exc:
            raise ParseError(f"'{name}' needs a number, got {val!r}", num) from exc

    def row(self, width: int) -> list[complex]:
        num, text = self.next()
        vals = parse_complex_list(text, num)
        if len(vals) != width:
            raise ParseError(f"expected {width} entries, found {len(vals)}", num)
        return vals

    def matrix(self, rows: int, cols: int) -> np.ndarray:
        return np.array([self.row(cols) for _ in range(rows)], dtype=complex).reshape(rows, cols)

    def section(self, name: str) -> tuple[int, str]:
        num, rest = self.key("section")
        parts = rest.split(None, 1)
        if not parts or parts[0] != name:
            raise ParseError(f"expected 'section {name}', got 'section {rest}'", num)
        return num, parts[1] if len(parts) > 1 else ""


def _space(text: str, n: int, line: int) -> OperatorSpaceSpec:
    try:
        return OperatorSpaceSpec.parse(text, n)
    except (ValueError, UCNormError) as exc:
        raise ParseError(f"bad space {text!r}: {exc}", line) from exc


def render(header: str, lines: list[str]) -> str:
    return "\n".join([f"ucnorm-{header} {VERSION}"] + lines) + "\n"


# ---------------------------------------------------------------------------
# polynomials


def poly_body(p: MatrixPolynomial) -> list[str]:
    out = [f"n {p.n}", f"shape {p.shape[0]} {p.shape[1]}", f"terms {len(p.terms)}"]
    for alpha, c in p.terms.items():
        out.append(" ".join(str(a) for a in alpha) + " : " + fmt_row(np.ravel(c)))
    return out


def read_poly_body(r: Reader) -> MatrixPolynomial:
    n = r.int_key("n", 1)
    num, shape = r.key("shape")
    try:
        rows, cols = (int(x) for x in shape.split())
    except ValueError as exc:
        raise ParseError(f"'shape' needs two integers, got {shape!r}", num) from exc
    count = r.int_key("terms")
    terms = {}
    for _ in range(count):
        num, text = r.next()
        if ":" not in text:
            raise ParseError("term line needs 'exponents : entries'", num)
        left, right = text.split(":", 1)
        try:
            alpha = tuple(int(a) for a in left.split())
        except ValueError as exc:
            raise ParseError(f"bad exponents {left.strip()!r}", num) from exc
        if len(alpha) != n or min(alpha, default=0) < 0:
            raise ParseError(f"need {n} nonnegative exponents", num)
        if alpha in terms:
            raise ParseError(f"repeated term {alpha}", num)
        vals = parse_complex_list(right, num)
        if len(vals) != rows * cols:
            raise ParseError(f"expected {rows * cols} entries, found {len(vals)}", num)
        terms[alpha] = np.array(vals).reshape(rows, cols)
    return MatrixPolynomial(n, terms, (rows, cols))


def write_poly(p: MatrixPolynomial) -> str:
    return render("poly", poly_body(p))


def read_poly(text: str) -> MatrixPolynomial:
    r = Reader(text, "poly")
    p = read_poly_body(r)
    r.expect_end()
    return p


# ---------------------------------------------------------------------------
# tuples


def tuple_body(t: np.ndarray) -> list[str]:
    out = [f"n {t.shape[0]}", f"dim {t.shape[1]}"]
    for j, m in enumerate(t):
        out.append(f"T {j + 1}")
        out.extend(matrix_lines(m))
    return out


def read_tuple_body(r: Reader) -> np.ndarray:
    n = r.int_key("n", 1)
    d = r.int_key("dim", 1)
    mats = []
    for j in range(n):
        num, idx = r.key("T")
        if idx != str(j + 1):
            raise ParseError(f"expected 'T {j + 1}'", num)
        mats.append(r.matrix(d, d))
    return np.array(mats)


def write_tuple(t: np.ndarray) -> str:
    return render("tuple", tuple_body(np.asarray(t, dtype=complex)))


def read_tuple(text: str) -> np.ndarray:
    r = Reader(text, "tuple")
    t = read_tuple_body(r)
    r.expect_end()
    return t


# ---------------------------------------------------------------------------
# factorization data


@dataclass(eq=False)
class FactFile:
    """A factorization file: ``sigma`` plus either polynomial recipes for
    ``F`` and ``p`` or their explicit values at the points."""

    points: np.ndarray
    sigma: np.ndarray
    f_poly: Optional[MatrixPolynomial] = None
    p_poly: Optional[MatrixPolynomial] = None
    f_values: Optional[np.ndarray] = None
    p_values: Optional[np.ndarray] = None

    def data(self) -> FactorizationData:
        if self.f_poly is not None:
            return factorization_from_recipes(self.f_poly, self.p_poly, self.sigma, self.points)
        return FactorizationData(self.points, self.f_values, self.sigma, self.p_values)


def write_fact(f: FactFile) -> str:
    pts = np.atleast_2d(f.points)
    lines = ["section sigma"] + tuple_body(f.sigma)
    if f.f_poly is not None:
        lines += ["section F poly"] + poly_body(f.f_poly)
        lines += ["section p poly"] + poly_body(f.p_poly)
    else:
        nn, k = f.f_values.shape[1:]
        lines += [f"section F values {nn} {k}"]
        for fv in f.f_values:
            lines += matrix_lines(fv)
        lines += [f"section p values {nn}"]
        for pv in f.p_values:
            lines += matrix_lines(pv)
    lines += [f"section points {pts.shape[0]}"] + matrix_lines(pts)
    return render("fact", lines)


def _ints(text: str, count: int, line: int) -> list[int]:
    try:
        out = [int(x) for x in text.split()]
    except ValueError as exc:
        raise ParseError(f"expected {count} integers, got {text!r}", line) from exc
    if len(out) != count or min(out, default=1) < 1:
        raise ParseError(f"expected {count} positive integers, got {text!r}", line)
    return out


def read_fact(text: str) -> FactFile:
    r = Reader(text, "fact")
    r.section("sigma")
    sigma = read_tuple_body(r)
    num, mode = r.section("F")
    if mode == "poly":
        f_poly = read_poly_body(r)
        r.section("p")
        p_poly = read_poly_body(r)
        f_values = p_values = None
    elif mode.startswith("values"):
        nn, k = _ints(mode[len("values"):], 2, num)
        f_poly = p_poly = None
        f_rows = []
        while True:
            nxt = r.peek()
            if nxt is None or nxt[1].startswith("section"):
                break
            f_rows.append(r.row(k))
        if len(f_rows) % nn:
            raise ParseError(f"F values: {len(f_rows)} rows is not a multiple of {nn}", num)
        f_values = np.array(f_rows).reshape(-1, nn, k)
        num, mode = r.section("p")
        if _ints(mode[len("values"):], 1, num) != [nn] or not mode.startswith("values"):
            raise ParseError(f"expected 'section p values {nn}'", num)
        p_values = np.array([r.row(nn) for _ in range(f_values.shape[0] * nn)]).reshape(-1, nn, nn)
    else:
        raise ParseError("expected 'section F poly' or 'section F values N k'", num)
    num, count = r.section("points")
    (m,) = _ints(count, 1, num)
    points = r.matrix(m, sigma.shape[0])
    r.expect_end()
    if f_values is not None and f_values.shape[0] != m:
        raise DimensionError(f"{f_values.shape[0]} F values for {m} points")
    return FactFile(points, sigma, f_poly, p_poly, f_values, p_values)


# ---------------------------------------------------------------------------
# colligations


def colligation_body(c: Colligation) -> list[str]:
    out = [f"k {c.k}", f"N {c.n_out}"]
    for name in "ABCD":
        block = getattr(c, name)
        out.append(f"block {name}")
        out.extend(matrix_lines(block) if block.size else [])
    if c.sigma is not None:
        out.append("section sigma")
        out.extend(tuple_body(c.sigma))
    return out


def write_colligation(c: Colligation) -> str:
    return render("colligation", colligation_body(c))


def read_colligation_body(r: Reader) -> Colligation:
    k = r.int_key("k")
    nn = r.int_key("N", 1)
    shapes = {"A": (k, k), "B": (k, nn), "C": (nn, k), "D": (nn, nn)}
    blocks = {}
    for name, (rows, cols) in shapes.items():
        num, got = r.key("block")
        if got != name:
            raise ParseError(f"expected 'block {name}'", num)
        blocks[name] = r.matrix(rows, cols) if rows * cols else np.zeros((rows, cols), complex)
    sigma = None
    nxt = r.peek()
    if nxt is not None and nxt[1].startswith("section sigma"):
        r.section("sigma")
        sigma = read_tuple_body(r)
    return Colligation(blocks["A"], blocks["B"], blocks["C"], blocks["D"], sigma)


def read_colligation(text: str) -> Colligation:
    r = Reader(text, "colligation")
    c = read_colligation_body(r)
    r.expect_end()
    return c


# ---------------------------------------------------------------------------
# interpolation and cone problems


def write_pick(prob: PickProblem) -> str:
    lines = [f"space {prob.spec.label}", f"n {prob.n}", f"nodes {prob.nodes.shape[0]}"]
    for z, w in zip(prob.nodes, prob.targets):
        lines.append(f"{fmt_row(z)} : {fmt_complex(w)}")
    return render("pick", lines)


def _node_lines(r: Reader, m: int, n: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, values = [], []
    for _ in range(m):
        num, text = r.next()
        if ":" not in text:
            raise ParseError("node line needs 'coordinates : value'", num)
        left, right = text.split(":", 1)
        z = parse_complex_list(left, num)
        w = parse_complex_list(right, num)
        if len(z) != n or len(w) != width:
            raise ParseError(f"expected {n} coordinates and {width} value entries", num)
        nodes.append(z)
        values.append(w)
    return np.array(nodes, dtype=complex).reshape(m, n), np.array(values, dtype=complex)


def read_pick(text: str) -> PickProblem:
    r = Reader(text, "pick")
    num, label = r.key("space")
    n = r.int_key("n", 1)
    spec = _space(label, n, num)
    m = r.int_key("nodes", 1)
    nodes, values = _node_lines(r, m, n, 1)
    r.expect_end()
    return PickProblem(spec, nodes, values[:, 0])


def write_cone(prob: ConeProblem) -> str:
    nn = prob.n_out
    lines = [f"space {prob.spec.label}", f"n {prob.spec.n}", f"N {nn}", f"nodes {prob.m}"]
    for z, pv in zip(prob.points, prob.p_values):
        lines.append(f"{fmt_row(z)} : {fmt_row(np.ravel(pv))}")
    return render("cone", lines)


def read_cone(text: str) -> ConeProblem:
    r = Reader(text, "cone")
    num, label = r.key("space")
    n = r.int_key("n", 1)
    spec = _space(label, n, num)
    nn = r.int_key("N", 1)
    m = r.int_key("nodes", 1)
    nodes, values = _node_lines(r, m, n, nn * nn)
    r.expect_end()
    return ConeProblem(spec, nodes, values.reshape(m, nn, nn))


def certificate_lines(cert: ConeCertificate) -> list[str]:
    lines = [
        f"status {cert.status.value}",
        f"residual {fmt_real(cert.residual)}",
        f"iterations {cert.iterations}",
        f"kernels {len(cert.kernels)}",
    ]
    for j, g in enumerate(cert.kernels):
        lines.append(f"kernel {j + 1} {g.shape[0]}")
        lines.extend(matrix_lines(g))
    return lines


def write_certificate(cert: ConeCertificate) -> str:
    return render("cone-certificate", certificate_lines(cert))


# ---------------------------------------------------------------------------
# files


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the same directory and ``os.replace``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ucnorm-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

