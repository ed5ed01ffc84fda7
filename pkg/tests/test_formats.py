import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucnorm.agler_cone import ConeProblem, row_cone_check
from ucnorm.cli import bundled, twozw_fact
from ucnorm.errors import DimensionError
from ucnorm.formats import (
    FactFile,
    ParseError,
    fmt_complex,
    parse_complex_list,
    read_colligation,
    read_cone,
    read_fact,
    read_pick,
    read_poly,
    read_tuple,
    write_certificate,
    write_colligation,
    write_cone,
    write_fact,
    write_pick,
    write_poly,
    write_tuple,
)
from ucnorm.opspace import Base, OperatorSpaceSpec, kv_tuple
from ucnorm.pick import PickProblem
from ucnorm.polyeval import MatrixPolynomial, kv_polynomial, twozw_polynomial
from ucnorm.realization import random_colligation, sample_ball

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestScalars:
    @settings(max_examples=200, deadline=None)
    @given(finite, finite)
    def test_complex_round_trip_is_exact(self, re, im):
        z = complex(re, im)
        (back,) = parse_complex_list(fmt_complex(z), 1)
        assert back == z and str(back.real) == str(z.real)

    def test_bad_scalar_reports_line(self):
        with pytest.raises(ParseError) as info:
            parse_complex_list("[1, x]", 7)
        assert info.value.line == 7 and "line 7" in str(info.value)


class TestRoundTrip:
    def test_poly(self):
        for p in (kv_polynomial(), twozw_polynomial(), MatrixPolynomial(2, {(0, 1): [[1, 2j], [0, -0.5]]})):
            text = write_poly(p)
            assert write_poly(read_poly(text)) == text

    def test_poly_canonical_order_on_write(self):
        a = MatrixPolynomial.scalar({(0, 2): 1, (1, 0): 3}, 2)
        b = MatrixPolynomial.scalar({(1, 0): 3, (0, 2): 1}, 2)
        assert write_poly(a) == write_poly(b)

    def test_tuple(self):
        text = write_tuple(kv_tuple())
        assert np.array_equal(read_tuple(text), kv_tuple())
        assert write_tuple(read_tuple(text)) == text

    def test_fact_poly_and_values(self):
        fact = twozw_fact()
        text = write_fact(fact)
        assert write_fact(read_fact(text)) == text
        d = fact.data()
        values = FactFile(d.points, d.sigma, f_values=d.f_values, p_values=d.p_values)
        vtext = write_fact(values)
        assert write_fact(read_fact(vtext)) == vtext

    def test_colligation(self):
        c = random_colligation(3, 2, np.random.default_rng(0), sigma=np.zeros((2, 3, 3)))
        text = write_colligation(c)
        back = read_colligation(text)
        assert np.array_equal(back.matrix, c.matrix)
        assert write_colligation(back) == text

    def test_pick_and_cone(self):
        rng = np.random.default_rng(1)
        z = sample_ball(Base.L2, 3, 2, rng, 0.9)
        pick = PickProblem(OperatorSpaceSpec.row(2), z, 0.5 * z[:, 0])
        assert write_pick(read_pick(write_pick(pick))) == write_pick(pick)
        cone = ConeProblem(OperatorSpaceSpec.max("l1", 2), z, z[:, :1].reshape(3, 1, 1))
        assert write_cone(read_cone(write_cone(cone))) == write_cone(cone)

    def test_certificate_is_deterministic(self):
        z = sample_ball(Base.L2, 3, 2, np.random.default_rng(2), 0.9)
        prob = ConeProblem(OperatorSpaceSpec.row(2), z, np.zeros((3, 1, 1)))
        assert write_certificate(row_cone_check(prob)) == write_certificate(row_cone_check(prob))

    @pytest.mark.parametrize("name", ["kv.poly", "kv.tuple", "twozw.fact", "twozw.poly", "zero.fact"])
    def test_bundled_files(self, name):
        text = bundled(name)
        reader, writer = {
            "poly": (read_poly, write_poly),
            "tuple": (read_tuple, write_tuple),
            "fact": (read_fact, write_fact),
        }[name.split(".")[1]]
        assert writer(reader(text)) == text


class TestParseErrors:
    def test_wrong_header(self):
        with pytest.raises(ParseError) as info:
            read_poly("ucnorm-tuple v1\n")
        assert info.value.line == 1

    def test_comments_and_blank_lines_ignored(self):
        text = write_poly(twozw_polynomial())
        lines = text.splitlines()
        noisy = "\n".join([lines[0], "# comment", ""] + lines[1:]) + "\n"
        assert write_poly(read_poly(noisy)) == text

    def test_bad_entry_line_number(self):
        lines = write_tuple(kv_tuple()).splitlines()
        lines[5] = "[1, 0] [oops]"
        with pytest.raises(ParseError) as info:
            read_tuple("\n".join(lines) + "\n")
        assert info.value.line == 6

    def test_truncated_file(self):
        text = write_tuple(kv_tuple())
        with pytest.raises(ParseError):
            read_tuple(text[: len(text) // 2])

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            read_poly(write_poly(twozw_polynomial()) + "extra\n")

    def test_fact_value_count_mismatch(self):
        lines = bundled("zero.fact").splitlines()
        # claim four points while F and p hold three values
        idx = lines.index("section points 3")
        lines[idx] = "section points 4"
        lines.append("[0.2, 0] [0, 0]")
        with pytest.raises(DimensionError):
            read_fact("\n".join(lines) + "\n")
