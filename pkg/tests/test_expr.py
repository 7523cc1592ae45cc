"""Tests for the expression language.

High-precision reference values come from an mpmath backend at 200 bits;
the finite-difference property cross-checks the symbolic derivative.
"""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghlab import expr as ex
from ghlab.errors import (
    DomainViolation,
    ExpressionSyntaxError,
    UnknownIdentifier,
)


class MPBackend:
    """200-bit reference backend."""

    def __init__(self, prec=200):
        self.ctx = mpmath.mp.clone()
        self.ctx.prec = prec
        self.pi = self.ctx.pi

    def sin(self, x):
        return self.ctx.sin(x)

    def cos(self, x):
        return self.ctx.cos(x)

    def exp(self, x):
        return self.ctx.exp(x)

    def from_fraction(self, f: Fraction):
        return self.ctx.mpf(f.numerator) / f.denominator

    def from_number(self, x):
        iv = x.enclosure(250)
        return self.ctx.mpf(iv.mid.numerator) / iv.mid.denominator


CORPUS = [
    "sin(t1)*cos(t2)",
    "t1^2/2 + pi",
    "exp(sin(t1)) - cos(t2)^3",
    "1/2 * t1 + 3.25*t2",
    "sin(t1*t2) / (2 + cos(t1))",
    "exp(-t1^2) * sin(pi*t2)",
    "(t1 - t2)^3 / (1 + t1^2)",
    "-t1 + -(t2*t1)",
]


class TestParse:
    def test_product_node(self):
        e = ex.parse("sin(t1)*cos(t2)")
        assert isinstance(e, ex.BinOp) and e.op == "*"
        assert e == ex.BinOp("*", ex.Call("sin", ex.Var("t1")),
                             ex.Call("cos", ex.Var("t2")))

    def test_pi_and_power(self):
        e = ex.parse("t1^2/2 + pi")
        v = ex.evaluate(e, {"t1": 2.0})
        assert v == pytest.approx(2 + math.pi, abs=1e-15)

    def test_unknown_identifier_with_declared_vars(self):
        with pytest.raises(UnknownIdentifier):
            ex.parse("sin(t3)", variables=("t1", "t2"))

    def test_syntax_error_offset(self):
        with pytest.raises(ExpressionSyntaxError) as err:
            ex.parse("sin(t1) + ")
        assert err.value.offset == 10
        with pytest.raises(ExpressionSyntaxError) as err:
            ex.parse("t1 $ t2")
        assert err.value.offset == 3

    def test_empty_rejected(self):
        with pytest.raises(ExpressionSyntaxError):
            ex.parse("   ")

    def test_integer_exponent_only(self):
        with pytest.raises(ExpressionSyntaxError):
            ex.parse("t1^2.5")
        with pytest.raises(ExpressionSyntaxError):
            ex.parse("t1^t2")
        assert ex.parse("t1^-2") == ex.Pow(ex.Var("t1"), -2)

    def test_grammar_negation_binds_inside_power(self):
        # factor := atom ('^' int)?, atom := ... | '-' atom
        e = ex.parse("-t1^2")
        assert e == ex.Pow(ex.Neg(ex.Var("t1")), 2)

    @pytest.mark.parametrize("text", CORPUS)
    def test_print_parse_roundtrip(self, text):
        e = ex.parse(text)
        again = ex.parse(ex.to_str(e))
        assert ex.normalize(again) == ex.normalize(e)

    @given(st.recursive(
        st.one_of(
            st.builds(ex.Num, st.fractions(min_value=0, max_value=9)),
            st.just(ex.Pi()),
            st.sampled_from([ex.Var("t1"), ex.Var("t2")]),
        ),
        lambda sub: st.one_of(
            st.builds(ex.Neg, sub),
            st.builds(ex.BinOp, st.sampled_from("+-*/"), sub, sub),
            st.builds(ex.Pow, sub, st.integers(0, 3)),
            st.builds(ex.Call, st.sampled_from(ex.FUNCTIONS), sub),
        ),
        max_leaves=12,
    ))
    @settings(max_examples=120)
    def test_roundtrip_random_trees(self, tree):
        try:
            normalized = ex.normalize(tree)
        except DomainViolation:
            return  # constant division by zero in the random tree
        printed = ex.to_str(normalized)
        assert ex.normalize(ex.parse(printed)) == normalized


class TestDifferentiate:
    def test_product(self):
        e = ex.parse("sin(t1)*cos(t2)")
        d = ex.differentiate(e, "t1")
        assert d == ex.parse("cos(t1)*cos(t2)")

    def test_other_variable(self):
        assert ex.differentiate(ex.parse("t1^2/2"), "t2") == ex.ZERO

    def test_chain_rule(self):
        d = ex.differentiate(ex.parse("exp(sin(t1))"), "t1")
        ref = ex.parse("cos(t1)*exp(sin(t1))")
        x = 0.731
        assert ex.evaluate(d, {"t1": x}) == pytest.approx(
            ex.evaluate(ref, {"t1": x}), rel=1e-14)

    @pytest.mark.parametrize("text", CORPUS)
    @pytest.mark.parametrize("var", ["t1", "t2"])
    def test_finite_difference(self, text, var):
        e = ex.parse(text)
        d = ex.differentiate(e, var)
        rng = np.random.default_rng(42)
        h = 1e-6
        for _ in range(5):
            pt = {"t1": rng.uniform(-1.5, 1.5), "t2": rng.uniform(-1.5, 1.5)}
            up = dict(pt)
            dn = dict(pt)
            up[var] += h
            dn[var] -= h
            fd = (ex.evaluate(e, up) - ex.evaluate(e, dn)) / (2 * h)
            sym = ex.evaluate(d, pt)
            assert abs(fd - sym) <= 1e-5 * (1 + abs(sym))


class TestEvaluate:
    def test_pi(self):
        assert ex.evaluate(ex.parse("pi"), {}) == 3.141592653589793

    def test_sin_at_half_pi(self):
        assert ex.evaluate(ex.parse("sin(t1)"), {"t1": math.pi / 2}) == 1.0

    def test_simplified_difference_is_exact_zero(self):
        e = ex.normalize(ex.parse("exp(t1)-exp(t1)"))
        assert e == ex.ZERO
        assert ex.evaluate(e, {"t1": 0.3}) == 0.0
        mp = MPBackend()
        assert ex.evaluate(e, {"t1": mp.ctx.mpf("0.3")}, backend=mp) == 0

    @pytest.mark.parametrize("text", CORPUS)
    def test_against_200bit_reference(self, text):
        e = ex.parse(text)
        mp = MPBackend()
        rng = np.random.default_rng(7)
        for _ in range(4):
            t1, t2 = rng.uniform(-2, 2, size=2)
            double = ex.evaluate(e, {"t1": t1, "t2": t2})
            ref = ex.evaluate(
                e, {"t1": mp.ctx.mpf(t1), "t2": mp.ctx.mpf(t2)}, backend=mp)
            assert abs(double - float(ref)) <= 1e-12 * (1 + abs(float(ref)))

    def test_vectorized(self):
        e = ex.parse("sin(t1)*t2")
        t1 = np.linspace(0, 1, 8)
        t2 = np.linspace(1, 2, 8)
        out = ex.evaluate(e, {"t1": t1, "t2": t2})
        assert out.shape == (8,)
        assert out[3] == pytest.approx(math.sin(t1[3]) * t2[3])

    def test_domain_violation(self):
        e = ex.parse("1/t1")
        with pytest.raises(DomainViolation):
            ex.evaluate(e, {"t1": 0.0})
        with pytest.raises(DomainViolation):
            ex.evaluate(e, {"t1": np.array([1.0, 0.0])})

    def test_const_node(self):
        from ghlab.numbers import golden_ratio

        e = ex.BinOp("*", ex.const(golden_ratio()), ex.Var("t1"))
        assert ex.evaluate(e, {"t1": 2.0}) == pytest.approx(
            (1 + math.sqrt(5)), rel=1e-15)
        # prints as its literal
        assert "sqrt(5)" in ex.to_str(e)


class TestSubstitute:
    def test_path_restriction(self):
        e = ex.parse("sin(t1)*t2")
        path = {"t1": ex.parse("2*pi*s", variables=("s",)), "t2": ex.ZERO}
        restricted = ex.normalize(ex.substitute(e, path))
        assert restricted == ex.ZERO
