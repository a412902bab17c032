"""Tests for partition series, transfer matrices, f_r tables and heavy partitions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.models.errors import PreconditionError, SearchBudgetError
from src.models.partitions import (
    Partition,
    check_refinement,
    counterexample_min_parts,
    derivative_check,
    dyadic_refinement,
    e_series,
    elementary_bound,
    extension_identity_gap,
    f_lower_table,
    find_heavy_partition,
    gamma_additivity_gap,
    hyperbolic_check,
    is_refinement,
    partition_bound,
    r_power,
    r_series,
    search_uniform_partition,
    transfer_matrix_norms,
    uniform_partition,
    upper_bounds_respect_tan,
)
from src.models.series import ap_norm


class TestPartition:
    def test_uniform(self):
        """Uniform parts sum to the total."""
        t = uniform_partition(1.0, 4)
        assert t.n_parts == 4
        assert abs(t.total - 1.0) < 1e-15
        assert np.allclose(t.partial_sums, [0.25, 0.5, 0.75])

    def test_positive_parts(self):
        """Parts must be positive."""
        with pytest.raises(PreconditionError):
            Partition((0.5, 0.0))

    def test_refinement(self):
        """Halving every part refines; a 3-part split does not refine a 4-part one."""
        t = uniform_partition(1.0, 2)
        assert is_refinement(t, dyadic_refinement(t))
        assert is_refinement(t, uniform_partition(1.0, 4))
        assert not is_refinement(uniform_partition(1.0, 3), uniform_partition(1.0, 4))
        assert not is_refinement(t, uniform_partition(1.1, 4))


class TestRSeries:
    def test_one_part(self):
        """R((t)) = tanh t."""
        s = r_series(Partition((0.7,)))
        assert abs(s.coefficient(()) - math.tanh(0.7)) < 1e-15

    def test_two_equal_parts(self):
        """||R((x/2, x/2))|| = 2 tanh(x/2)."""
        x = math.pi / 4
        norm = ap_norm(r_series(uniform_partition(x, 2)))
        assert norm.contains(2.0 * math.tanh(x / 2), slack=1e-12)

    def test_e_series_signs(self):
        """E with |d| and with mixed signs have equal norms for two coefficients."""
        plain = ap_norm(e_series([1 / 3, 1 / 3]))
        mixed = ap_norm(e_series([-1 / 3, 1 / 3]))
        assert abs(plain.lower - 2 / 3) < 1e-12
        assert abs(mixed.lower - plain.lower) < 1e-12

    def test_power_range(self):
        """r is limited to 1..4."""
        with pytest.raises(PreconditionError):
            r_power(uniform_partition(0.5, 2), 5)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(min_value=0.02, max_value=0.5), min_size=1, max_size=3))
    def test_below_tan(self, parts):
        """||R(t)|| <= tan(x) whenever x < pi/2."""
        t = Partition(tuple(parts))
        norm = ap_norm(r_series(t, degree_cap=20))
        assert norm.lower <= math.tan(t.total) + 1e-9


class TestTransferMatrices:
    def test_single_factor(self):
        """One factor [[q, d], [d q, 1]] has norms 1, d, d, 1."""
        norms = transfer_matrix_norms([0.5])
        assert (norms.norm_a, norms.norm_b, norms.norm_c, norms.norm_d) == (1.0, 0.5, 0.5, 1.0)
        assert norms.identities_hold

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=0.95), min_size=1, max_size=8))
    def test_identities(self, d):
        """||a|| = ||d|| = (P+p)/2 and ||b|| = ||c|| = (P-p)/2."""
        assert transfer_matrix_norms(d).identities_hold

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(min_value=0.01, max_value=1.5), min_size=1, max_size=8))
    def test_hyperbolic_bounds(self, parts):
        """After d = tanh t the norms stay strictly below cosh x and sinh x."""
        assert hyperbolic_check(Partition(tuple(parts)))["passed"]

    def test_out_of_range(self):
        """d must lie in [0, 1)."""
        with pytest.raises(PreconditionError):
            transfer_matrix_norms([0.2, 1.0])


class TestIdentities:
    def test_refinement_monotone(self):
        """||R(t)|| <= ||R(s)|| for s refining t, with the substitution identity."""
        report = check_refinement(uniform_partition(0.8, 2), uniform_partition(0.8, 4), degree_cap=20)
        assert report["passed"]
        assert report["norm_t"].lower <= report["norm_s"].upper

    def test_refinement_precondition(self):
        """A non-refinement is refused."""
        with pytest.raises(PreconditionError):
            check_refinement(uniform_partition(0.8, 3), uniform_partition(0.8, 4))

    def test_gamma_additivity(self):
        """gamma(a) gamma(b) = gamma(a + b)."""
        assert gamma_additivity_gap(0.3, 0.4) < 1e-14
        assert gamma_additivity_gap(0.2, 0.9, value=0.5) < 1e-14

    def test_extension_identity(self):
        """Two half parts joined through q = -1 cancel."""
        t = uniform_partition(0.6, 2)
        assert extension_identity_gap(t, [np.exp(0.7j)], 0.4, degree_cap=16) < 1e-9


class TestFTable:
    def test_columns_and_values(self):
        """Rows n = 1, 2 are tanh x and 2 tanh(x/2); uppers stay below tan x."""
        x = math.pi / 4
        table = f_lower_table(x, 1, 4, degree_cap=20)
        assert list(table.columns) == [
            "x", "r", "n", "lower", "upper", "target_tan_r_x", "f_lower", "elementary_bound", "method",
        ]
        assert abs(table.loc[0, "lower"] - math.tanh(x)) < 1e-12
        assert abs(table.loc[1, "lower"] - 2 * math.tanh(x / 2)) < 1e-9
        assert (table["f_lower"].diff().dropna() >= 0).all()
        assert upper_bounds_respect_tan(table)
        assert (table["method"] == "exact").all()

    def test_recursion_rows(self):
        """Beyond three generators the recursion gives finite uppers below tan x."""
        table = f_lower_table(0.5, 1, 6, degree_cap=12, power_levels=32)
        rows = table[table["method"] == "recursion"]
        assert list(rows["n"]) == [5, 6]
        assert np.isfinite(rows["upper"]).all()
        assert (rows["upper"] <= math.tan(0.5) + 1e-6).all()
        assert (rows["lower"] <= rows["upper"]).all()
        assert upper_bounds_respect_tan(table)

    def test_squared(self):
        """r = 2 compares against tan^2 x."""
        table = f_lower_table(0.5, 2, 2, degree_cap=20)
        assert abs(table.loc[0, "lower"] - math.tanh(0.5) ** 2) < 1e-12
        assert abs(table.loc[0, "target_tan_r_x"] - math.tan(0.5) ** 2) < 1e-15

    def test_x_outside(self):
        """x >= pi/2 is refused."""
        with pytest.raises(PreconditionError):
            f_lower_table(2.0)

    def test_elementary_bound(self):
        """sinh x / (2 - cosh x) below log(2 + sqrt 3), infinite beyond."""
        assert elementary_bound(0.0) == 0.0
        assert elementary_bound(0.5) > math.tan(0.5)
        assert math.isinf(elementary_bound(1.5))

    def test_derivative_check(self):
        """The report has one row per grid point."""
        table = derivative_check([0.5, 0.7], n=2, degree_cap=20)
        assert list(table["x"]) == [0.5, 0.7]
        assert np.allclose(table["exact"], 1 / np.cos([0.5, 0.7]) ** 2)


class TestHeavyPartition:
    def test_search_bisects(self):
        """tanh 1 < 0.9 <= 2 tanh(1/2): two parts are the fewest."""
        result = search_uniform_partition(1.0, 0.9, degree_cap=20, n_start=1)
        assert result["n_parts"] == 2
        assert result["lower_bound"] >= 0.9
        assert set(result["history"]["n"]) == {1, 2}

    def test_search_budget(self):
        """tan 0.5 < 1 can never be reached."""
        with pytest.raises(SearchBudgetError) as info:
            search_uniform_partition(0.5, 1.0, degree_cap=20, n_max=4)
        assert info.value.best_bound < math.tan(0.5)
        assert info.value.best_partition is not None

    def test_alpha_below_half_pi(self):
        """Below pi/2 every norm stays under tan(alpha)."""
        with pytest.raises(PreconditionError):
            find_heavy_partition(1.0, 2.0)

    def test_min_parts(self):
        """pi/2 needs five parts below (log 2)/2."""
        assert counterexample_min_parts(math.pi / 2) == 5

    def test_bound_methods(self):
        """Exact brackets up to three generators, the recursion beyond."""
        assert partition_bound(uniform_partition(1.0, 4), degree_cap=12)["method"] == "exact"
        assert partition_bound(uniform_partition(1.0, 5), degree_cap=12, power_levels=16)["method"] == "recursion"

    def test_heavy_at_half_pi(self):
        """At pi/2 a uniform partition with certified norm 2 exists."""
        result = find_heavy_partition(math.pi / 2, 2.0, degree_cap=12, n_max=1024, power_levels=32)
        assert result["lower_bound"] >= 2.0
        assert result["method"] == "recursion"
        assert result["n_parts"] > 4
