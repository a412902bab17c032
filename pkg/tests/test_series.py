"""Tests for multi-index series with certified tails."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.models.errors import ContractionError, PreconditionError, SeriesShapeError
from src.models.series import (
    ap_norm,
    constant,
    dumps,
    evaluate,
    from_terms,
    loads,
    mobius_beta,
    modulate,
    monomial,
    mul,
    power,
    prune,
    zero,
)


def _series(terms, cap=6):
    return from_terms(2, {tuple(k): complex(v) for k, v in terms}, degree_cap=cap)


term_lists = st.lists(
    st.tuples(
        st.tuples(st.integers(0, 3), st.integers(0, 3)),
        st.floats(min_value=-2.0, max_value=2.0, allow_nan=False),
    ),
    min_size=1,
    max_size=8,
)


class TestConstruction:
    def test_constant(self):
        """A constant has one term and an exact norm."""
        s = constant(-0.25, 3)
        assert s.size == 1
        assert ap_norm(s).lower == ap_norm(s).upper == 0.25

    def test_no_generators(self):
        """Constants over zero generators, as for a two-layer Q_2 or a one-part R."""
        s = constant(0.5, 0)
        assert s.size == 1
        assert s.exponents.shape == (1, 0)
        assert ap_norm(s).lower == ap_norm(s).upper == 0.5
        beta = mobius_beta(1.0 / 3.0, zero(0))
        assert abs(beta.coefficient(()) - 1.0 / 3.0) < 1e-15

    def test_negative_index(self):
        """Multi-indices must be nonnegative."""
        with pytest.raises(SeriesShapeError):
            from_terms(2, {(1, -1): 1.0})

    def test_repeated_indices_merge(self):
        """Terms on the same multi-index are summed."""
        s = monomial((1, 0), 2.0) + monomial((1, 0), 3.0)
        assert s.size == 1
        assert s.coefficient((1, 0)) == 5.0

    def test_terms_above_cap_move_to_tail(self):
        """A monomial above the cap is stored as tail mass only."""
        s = monomial((3,), 0.7, degree_cap=2)
        assert s.size == 0
        assert abs(s.tail_bound - 0.7) < 1e-15
        assert ap_norm(s).lower == 0.0

    def test_wrong_index_length(self):
        """from_terms checks every multi-index length."""
        with pytest.raises(SeriesShapeError):
            from_terms(2, {(1,): 1.0})

    def test_immutable(self):
        """Series cannot be modified in place."""
        s = constant(1.0, 1)
        with pytest.raises(AttributeError):
            s.tail_bound = 1.0


class TestArithmetic:
    def test_square_of_binomial(self):
        """(1 + q)^2 = 1 + 2q + q^2."""
        s = constant(1.0, 1) + monomial((1,))
        square = mul(s, s)
        assert square.coefficient((0,)) == 1.0
        assert square.coefficient((1,)) == 2.0
        assert square.coefficient((2,)) == 1.0
        assert square.tail_bound == 0.0

    def test_truncated_product_tail(self):
        """With cap 1 the q^2 term of (1 + q)^2 is moved into the tail."""
        s = from_terms(1, {(0,): 1.0, (1,): 1.0}, degree_cap=1)
        square = mul(s, s)
        norm = ap_norm(square)
        assert square.size == 2
        assert norm.lower == 3.0
        assert norm.upper == 4.0

    def test_power_zero(self):
        """s^0 is the constant 1."""
        assert power(monomial((1, 1)), 0).coefficient((0, 0)) == 1.0

    def test_generator_mismatch(self):
        """Series over different generator counts do not combine."""
        with pytest.raises(SeriesShapeError):
            constant(1.0, 1) + constant(1.0, 2)

    @settings(max_examples=60, deadline=None)
    @given(term_lists, term_lists)
    def test_triangle_inequality(self, t1, t2):
        """||s1 + s2|| <= ||s1|| + ||s2||."""
        s1, s2 = _series(t1), _series(t2)
        total = ap_norm(s1 + s2).upper
        assert total <= ap_norm(s1).upper + ap_norm(s2).upper + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(term_lists, term_lists)
    def test_submultiplicative(self, t1, t2):
        """||s1 s2|| <= ||s1|| ||s2||, tail included."""
        s1, s2 = _series(t1), _series(t2)
        product = ap_norm(mul(s1, s2)).upper
        assert product <= ap_norm(s1).upper * ap_norm(s2).upper * (1 + 1e-12) + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(term_lists, term_lists, st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi))
    def test_product_evaluates_to_product(self, t1, t2, u, v):
        """Evaluation is multiplicative up to the tails."""
        s1, s2 = _series(t1, cap=12), _series(t2, cap=12)
        point = [np.exp(1j * u), np.exp(1j * v)]
        left, radius = evaluate(mul(s1, s2), point)
        a, _ = evaluate(s1, point)
        b, _ = evaluate(s2, point)
        assert abs(left - a * b) <= radius + 1e-9


class TestPruneAndModulate:
    def test_prune_moves_mass(self):
        """Small coefficients go to the tail and can overlap stored indices."""
        s = from_terms(1, {(0,): 1.0, (1,): 1e-9})
        pruned = prune(s, 1e-6)
        assert pruned.size == 1
        assert abs(pruned.tail_bound - 1e-9) < 1e-24
        assert pruned.overlap_bound == pruned.tail_bound

    def test_modulate_shifts_exponent(self):
        """Multiplying by q_1 raises the second exponent."""
        s = modulate(monomial((1, 0), 2.0), 1)
        assert s.coefficient((1, 1)) == 2.0

    def test_modulate_past_cap(self):
        """Modulation can push terms into the tail."""
        s = modulate(monomial((2,), 0.5, degree_cap=2), 0)
        assert s.size == 0
        assert s.tail_bound == 0.5

    def test_modulate_bad_index(self):
        """The generator index must exist."""
        with pytest.raises(SeriesShapeError):
            modulate(constant(1.0, 2), 2)


class TestMobiusBeta:
    def test_on_zero(self):
        """beta(d)(0) = d."""
        s = mobius_beta(0.3, zero(1))
        assert abs(s.coefficient((0,)) - 0.3) < 1e-15
        assert s.size == 1

    def test_on_generator(self):
        """beta(d)(q) = d + (1 - d^2) q - d (1 - d^2) q^2 + ..."""
        d = 0.5
        s = mobius_beta(d, monomial((1,)))
        assert abs(s.coefficient((0,)) - d) < 1e-15
        assert abs(s.coefficient((1,)) - (1 - d * d)) < 1e-15
        assert abs(s.coefficient((2,)) + d * (1 - d * d)) < 1e-15

    def test_norm_on_generator(self):
        """||beta(d)(q)|| = 1 + 2|d| lies in the certified bracket."""
        d = 0.5
        norm = ap_norm(mobius_beta(d, monomial((1,))))
        assert norm.contains(1.0 + 2.0 * d, slack=1e-12)
        assert norm.width < 1e-6

    def test_contraction_failure(self):
        """|d| ||s|| >= 1 raises with rho and step."""
        with pytest.raises(ContractionError) as info:
            mobius_beta(0.9, constant(1.2, 1), step=4)
        assert info.value.step == 4
        assert info.value.rho > 1.0

    def test_parameter_range(self):
        """|d| must be below 1."""
        with pytest.raises(PreconditionError):
            mobius_beta(1.0, zero(1))

    def test_constant_input(self):
        """With a constant term the expansion runs to the geometric tolerance."""
        s = mobius_beta(0.4, constant(0.5, 0))
        value, radius = evaluate(s, [])
        assert abs(value - (0.5 + 0.4) / (1 + 0.4 * 0.5)) <= radius + 1e-15


class TestEvaluate:
    def test_binomial_at_minus_one(self):
        """1 + q vanishes at q = -1."""
        s = constant(1.0, 1) + monomial((1,))
        value, radius = evaluate(s, [-1.0])
        assert abs(value) < 1e-15
        assert radius == 0.0

    def test_point_length(self):
        """The point must have one entry per generator."""
        with pytest.raises(SeriesShapeError):
            evaluate(constant(1.0, 2), [1.0])


class TestDumps:
    def test_round_trip(self):
        """loads(dumps(s)) restores terms and tails exactly."""
        s = prune(mobius_beta(0.3, monomial((1, 0), 0.7, degree_cap=8)), 1e-4)
        back = loads(dumps(s))
        assert back.terms == s.terms
        assert back.tail_bound == s.tail_bound
        assert back.overlap_bound == s.overlap_bound
        assert back.degree_cap == s.degree_cap

    def test_malformed_header(self):
        """A bad header is a SeriesShapeError."""
        with pytest.raises(SeriesShapeError):
            loads("generators two cap 3\n")

    def test_wrong_field_count(self):
        """Each term line needs m exponents and two floats."""
        with pytest.raises(SeriesShapeError):
            loads("generators 2 cap 3 tail 0.0 overlap 0.0\n1 0 1.0\n")

