"""Tests for the Q recursion, the interface system and its closed forms."""

import math

import numpy as np
import pytest

from src.models.errors import PreconditionError, SourceError
from src.models.medium import build_medium, random_medium
from src.models.partitions import e_series
from src.models.resolvent import (
    SourceSpec,
    assemble_system,
    back_substitute,
    c2n_case_formula,
    c2n_closed_form,
    determinant_product,
    locate_source,
    oracle_coefficients,
    oracle_sweep,
    q_sequence,
    q_values,
    rhs_blocks,
    spectral_system,
    transmission_factors,
    verify_tan_bound,
)
from src.models.series import ap_norm, evaluate

FOUR_LAYERS = build_medium([1.0, 0.6, 1.7, 0.9], [0.0, 1.3, 2.1])


class TestSourceSpec:
    def test_box_mass_and_moment(self):
        """A box of height 2 on [1, 3] has mass 4; its zero-rate moment too."""
        source = SourceSpec.box(1.0, 3.0, 2.0)
        assert source.mass == 4.0
        assert source.exp_moment(0, 0.0) == 4.0

    def test_dirac_moment(self):
        """int delta_y e^{r (y - x)} = e^{r (y - x)}."""
        source = SourceSpec.dirac(0.5)
        assert abs(source.exp_moment(2.0, 0.0) - math.exp(1.0)) < 1e-14

    def test_sampled_matches_box(self):
        """Trapezoid data of a constant reproduces the box moment."""
        grid = np.linspace(1.0, 3.0, 2001)
        sampled = SourceSpec.sampled(grid, np.full_like(grid, 2.0))
        box = SourceSpec.box(1.0, 3.0, 2.0)
        assert abs(sampled.exp_moment(-0.3, 2.0) - box.exp_moment(-0.3, 2.0)) < 1e-6

    def test_bad_kind(self):
        """Unknown kinds are refused."""
        with pytest.raises(SourceError):
            SourceSpec("gaussian")

    def test_locate(self):
        """Layers are reported 1-based."""
        assert locate_source(FOUR_LAYERS, SourceSpec.dirac(-1.0)) == 1
        assert locate_source(FOUR_LAYERS, SourceSpec.box(0.2, 1.0)) == 2
        assert locate_source(FOUR_LAYERS, SourceSpec.dirac(5.0)) == 4

    def test_support_across_interface(self):
        """A support crossing or touching an interface is a SourceError."""
        with pytest.raises(SourceError):
            locate_source(FOUR_LAYERS, SourceSpec.box(-0.5, 0.5))
        with pytest.raises(SourceError):
            locate_source(FOUR_LAYERS, SourceSpec.dirac(1.3))


class TestQSequence:
    def test_two_layers(self):
        """a = [1, 1/9]: Q_2 = 1/2 and tan bound tan(arctanh 1/2) = 0.61215."""
        report = verify_tan_bound(build_medium([1.0, 1.0 / 9.0], [0.0]).profile)
        assert abs(report["lower"] - 0.5) < 1e-15
        assert abs(report["upper"] - 0.5) < 1e-15
        assert abs(report["bound"] - math.tan(math.atanh(0.5))) < 1e-12
        assert report["passed"]

    def test_three_layers_norm(self):
        """d = (-1/3, 1/3) gives ||Q_3|| = 2/3, equal to ||E(|d|)||."""
        medium = build_medium([1.0, 0.25, 1.0], [0.0, 2.0])
        sequence = q_sequence(medium.profile)
        assert len(sequence) == 2
        assert abs(ap_norm(sequence[-1]).lower - 2 / 3) < 1e-12
        assert abs(ap_norm(e_series([1 / 3, 1 / 3])).lower - 2 / 3) < 1e-12

    def test_single_layer(self):
        """No interfaces, no Q."""
        assert q_sequence(build_medium([1.0], []).profile) == []

    def test_bound_regime(self):
        """sum arctanh|d_k| >= pi/2 is outside the tan bound."""
        profile = build_medium([1.0, 0.01, 1.0], [0.0, 1.0]).profile
        with pytest.raises(PreconditionError):
            verify_tan_bound(profile)

    def test_unit_modulus_values(self):
        """|Q_k(q)| <= ||Q_k||_AP at random points of the unit torus."""
        sequence = q_sequence(FOUR_LAYERS.profile, degree_cap=30)
        rng = np.random.default_rng(11)
        for series in sequence:
            upper = ap_norm(series).upper
            for _ in range(20):
                point = np.exp(2j * math.pi * rng.random(series.generator_count))
                value, _ = evaluate(series, point)
                assert abs(value) <= upper + 1e-12

    def test_series_matches_scalar_recursion(self):
        """Summing Q_n at q = e^{-w lambda} reproduces the scalar Q_n(w)."""
        omega = 0.8j
        sequence = q_sequence(FOUR_LAYERS.profile, degree_cap=30)
        point = np.exp(-omega * np.array(FOUR_LAYERS.profile.generators))
        value, radius = evaluate(sequence[-1], point)
        b, x = FOUR_LAYERS.slowness, FOUR_LAYERS.interfaces
        scalar = q_values(FOUR_LAYERS, omega)[-1] * np.exp(-2 * omega * b[-1] * x[-1])
        assert abs(value - scalar) <= radius + 1e-12


class TestOracle:
    @pytest.mark.parametrize("position", [-1.0, 0.7, 1.8, 4.0])
    def test_closed_forms_match_dense_solve(self, position):
        """c_2n and det D_n agree with the LU solve for every source layer."""
        source = SourceSpec.dirac(position)
        for xi in (0.3, 2.5, 11.0):
            omega = 1j * xi
            solution = oracle_coefficients(assemble_system(FOUR_LAYERS, omega, source))
            closed = c2n_case_formula(FOUR_LAYERS, omega, source)
            det = determinant_product(FOUR_LAYERS, omega)
            assert abs(closed - solution.c2n) <= 1e-9 * abs(solution.c2n)
            assert abs(det - solution.determinant) <= 1e-10 * abs(solution.determinant)
            assert not solution.flagged

    def test_back_substitution(self):
        """Layers right of the source follow from c_2n alone."""
        source = SourceSpec.dirac(0.7)
        omega = 1.7j
        solution = oracle_coefficients(assemble_system(FOUR_LAYERS, omega, source))
        layers = solution.layer_coefficients()
        substituted = back_substitute(FOUR_LAYERS, omega, solution.c2n, source)
        assert set(substituted) == {3}
        scale = max(abs(c) for pair in layers for c in pair)
        assert np.allclose(substituted[3], layers[2], atol=1e-10 * scale)

    def test_homogeneous_medium_has_no_reflection(self):
        """Equal coefficients: c_2n = 0 and the left layers carry the free solution."""
        medium = build_medium([2.0, 2.0, 2.0], [0.0, 1.0])
        y, omega = 1.5, 3j
        solution = oracle_coefficients(spectral_system(medium, 3.0, SourceSpec.dirac(y)))
        b = medium.slowness[0]
        free = b / (2 * omega) * np.exp(-omega * b * y)
        expected = [(free, 0), (free, 0), (0, 0)]
        assert abs(solution.c2n) < 1e-12
        assert np.allclose(solution.layer_coefficients(), expected, atol=1e-12)

    def test_closed_form_series(self):
        """c_2n from the Q_n series matches the dense solve within its radius."""
        medium = build_medium([1.0, 0.7, 1.3], [0.0, 1.1])
        source = SourceSpec.dirac(2.0)
        xi = 1.9
        value, radius = c2n_closed_form(medium, 1j * xi, source, degree_cap=40)
        solution = oracle_coefficients(spectral_system(medium, xi, source))
        assert abs(value - solution.c2n) <= radius + 1e-9 * abs(value)

    def test_closed_form_off_axis(self):
        """Re omega > 0 puts the generators inside the unit disc; the series still matches."""
        medium = build_medium([1.0, 0.7, 1.3], [0.0, 1.1])
        source = SourceSpec.dirac(2.0)
        omega = 0.3 + 1.9j
        value, radius = c2n_closed_form(medium, omega, source, degree_cap=40)
        solution = oracle_coefficients(assemble_system(medium, omega, source))
        assert abs(value - solution.c2n) <= radius + 1e-9 * abs(value)
        assert abs(value - c2n_case_formula(medium, omega, source)) <= radius + 1e-9 * abs(value)

    def test_closed_form_left_half_plane(self):
        """Re omega < 0 is outside the polydisc and refused."""
        with pytest.raises(PreconditionError):
            c2n_closed_form(FOUR_LAYERS, -0.2 + 1.0j, SourceSpec.dirac(4.0))

    def test_closed_form_needs_last_layer(self):
        """The series closed form is for sources in I_n."""
        with pytest.raises(SourceError):
            c2n_closed_form(FOUR_LAYERS, 1.0j, SourceSpec.dirac(-1.0))

    def test_block_bidiagonal(self):
        """Block row j couples only the layer-j and layer-(j+1) columns."""
        system = assemble_system(FOUR_LAYERS, 1.3j, SourceSpec.dirac(0.7))
        expected = {1: {0, 1, 2}, 2: {1, 2, 3, 4}, 3: {3, 4, 5}}
        for j, columns in expected.items():
            block = system.matrix[2 * (j - 1): 2 * j]
            assert set(np.flatnonzero(np.abs(block).max(axis=0))) == columns

    def test_rhs_source_in_last_layer(self):
        """Source in I_n: only t_{n-1} is nonzero and t_{n-1,2} = b_{n-1} t_{n-1,1}."""
        medium = build_medium([1.0, 0.7, 1.3], [0.0, 1.1])
        t = rhs_blocks(medium, 1.7j, SourceSpec.dirac(2.0))
        b = medium.slowness
        assert not t[0].any()
        assert abs(t[1, 0]) > 0.0
        assert abs(t[1, 1] - b[1] * t[1, 0]) <= 1e-14 * abs(t[1, 1])

    def test_rhs_source_in_first_layer(self):
        """Source in I_1: only t_1 is nonzero and t_{1,2} = -b_2 t_{1,1}."""
        medium = build_medium([1.0, 0.7, 1.3], [0.0, 1.1])
        t = rhs_blocks(medium, 1.7j, SourceSpec.dirac(-0.8))
        b = medium.slowness
        assert not t[1].any()
        assert abs(t[0, 0]) > 0.0
        assert abs(t[0, 1] + b[1] * t[0, 0]) <= 1e-14 * abs(t[0, 1])

    def test_transmission_factors(self):
        """(1 - d)/(1 - d Q) = (1 + d beta(-d)(Q))/(1 + d) at every interface."""
        table = transmission_factors(FOUR_LAYERS, 2.2j)
        assert len(table) == 3
        assert (table["gap"] < 1e-12).all()

    def test_zero_frequency(self):
        """omega = 0 is excluded."""
        with pytest.raises(PreconditionError):
            rhs_blocks(FOUR_LAYERS, 0, SourceSpec.dirac(-1.0))

    def test_single_layer_system(self):
        """The interface system needs two layers."""
        with pytest.raises(PreconditionError):
            assemble_system(build_medium([1.0], []), 1j, SourceSpec.dirac(0.0))


class TestOracleSweep:
    def test_small_sweep(self):
        """Two- and three-layer media: one row per frequency and source case."""
        sweep = oracle_sweep(np.random.default_rng(5), n_values=(2, 3), media_per_n=1, frequency_count=3)
        assert len(sweep) == 3 * 2 + 3 * 3
        assert set(sweep["case"]) == {"first", "interior", "last"}
        usable = sweep[~sweep["flagged"]]
        assert (usable["rel_err"] <= 1e-9).all()
        assert (usable["det_rel_err"] <= 1e-10).all()

    def test_deterministic(self):
        """The same seed gives the same sweep."""
        first = oracle_sweep(np.random.default_rng(1), n_values=(3,), media_per_n=1, frequency_count=2)
        second = oracle_sweep(np.random.default_rng(1), n_values=(3,), media_per_n=1, frequency_count=2)
        assert first.equals(second)

    def test_random_media_sources(self):
        """Random media give valid sources in the first and last layers."""
        medium = random_medium(np.random.default_rng(2), 5)
        assert locate_source(medium, SourceSpec.dirac(medium.interfaces[0] - 0.5)) == 1
        assert locate_source(medium, SourceSpec.dirac(medium.interfaces[-1] + 0.5)) == 5
