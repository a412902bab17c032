"""Tests for the Crank-Nicolson Schrodinger solver and its decay ratios."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.models.errors import PreconditionError
from src.models.medium import build_medium
from src.models.schrodinger import (
    default_time_step,
    face_coefficients,
    free_decay_limit,
    gaussian_profile,
    schrodinger_decay_ratio,
    schrodinger_evolve,
    sponge_profile,
)

HOMOGENEOUS = build_medium([1.0], [])
BARRIER = build_medium([1.0, 3.0, 1.0], [-1.0, 1.0])


class TestProfiles:
    def test_gaussian(self):
        """exp(-(x - c)^2 / 4s) peaks at the centre."""
        values = gaussian_profile([0.5, 1.5], center=0.5, s=0.25)
        assert values[0] == 1.0
        assert abs(values[1] - math.exp(-1.0)) < 1e-15

    def test_free_limit(self):
        """(4 pi)^(-1/2) for a = 1, and scaling as a^(-1/2)."""
        assert abs(free_decay_limit(1.0) - 0.28209479177387814) < 1e-15
        assert abs(free_decay_limit(4.0) - free_decay_limit(1.0) / 2) < 1e-15

    def test_face_harmonic_mean(self):
        """The cell across an interface gets the harmonic mean of a."""
        medium = build_medium([1.0, 4.0], [0.0])
        faces = face_coefficients(medium, np.array([-1.0, -0.25, 0.25, 1.0]))
        assert np.allclose(faces, [1.0, 1.6, 4.0], atol=1e-14)

    def test_face_homogeneous(self):
        """Constant a gives constant faces."""
        faces = face_coefficients(build_medium([2.0], []), np.linspace(-1.0, 1.0, 11))
        assert np.allclose(faces, 2.0)

    def test_sponge(self):
        """Zero inside, quadratic ramp to sigma_max at the edge."""
        grid = np.array([0.0, 8.0, 9.0, 10.0])
        sigma = sponge_profile(grid, 10.0, 2.0, 5.0)
        assert np.allclose(sigma, [0.0, 0.0, 1.25, 5.0])
        assert not sponge_profile(grid, 10.0, 0.0, 5.0).any()


class TestGridChecks:
    def test_positive_steps(self):
        """dx and dt must be positive."""
        with pytest.raises(PreconditionError):
            schrodinger_evolve(HOMOGENEOUS, gaussian_profile, 0.1, dx=0.0)

    def test_sponge_width(self):
        """The sponge cannot cover the whole domain."""
        with pytest.raises(PreconditionError):
            schrodinger_evolve(HOMOGENEOUS, gaussian_profile, 0.1, half_width=5.0, sponge_width=5.0)

    def test_interfaces_inside(self):
        """Interfaces must lie in the sponge-free interior."""
        medium = build_medium([1.0, 2.0], [12.0])
        with pytest.raises(PreconditionError):
            schrodinger_evolve(medium, gaussian_profile, 0.1, half_width=20.0, sponge_width=10.0)

    def test_thin_layer(self):
        """Interior layers need enough cells."""
        medium = build_medium([1.0, 2.0, 1.0], [0.0, 0.5])
        with pytest.raises(PreconditionError):
            schrodinger_evolve(medium, gaussian_profile, 0.1, half_width=10.0, sponge_width=0.0)

    def test_initial_shape(self):
        """Nodal data must match the grid."""
        with pytest.raises(PreconditionError):
            schrodinger_evolve(HOMOGENEOUS, np.ones(7), 0.1, half_width=5.0, sponge_width=0.0)

    def test_vanishing_datum(self):
        """A zero datum has no decay ratio."""
        with pytest.raises(PreconditionError):
            schrodinger_evolve(HOMOGENEOUS, np.zeros_like, 0.1, half_width=5.0, sponge_width=0.0)


class TestEvolution:
    def test_norm_conserved_without_sponge(self):
        """Dirichlet walls only: the discrete L2 norm is conserved to roundoff."""
        run = schrodinger_evolve(BARRIER, gaussian_profile, 1.0, dt=0.01, half_width=10.0, sponge_width=0.0)
        assert run.max_balance_defect <= 1e-10
        assert (run.norm_log["absorbed"] == 0.0).all()
        assert len(run.norm_log) == 100

    def test_sponge_balance(self):
        """With the sponge the absorbed mass closes the balance."""
        run = schrodinger_evolve(BARRIER, gaussian_profile, 2.0, half_width=20.0, sponge_width=8.0)
        assert run.max_balance_defect <= 1e-10
        assert run.norm_log["absorbed"].sum() > 0.0
        assert (run.norm_log["norm2"].diff().dropna() <= 1e-14).all()

    def test_snapshots(self):
        """Snapshots every 10 steps plus t = 0; fields stored on request."""
        run = schrodinger_evolve(
            HOMOGENEOUS, gaussian_profile, 0.5, dt=0.01, half_width=5.0, sponge_width=0.0, store_fields=True,
        )
        assert np.allclose(run.times, np.arange(6) * 0.1)
        assert run.snapshots.shape == (6, run.grid.size)

    def test_free_decay(self):
        """Constant a = 1: sqrt(t) ||u||_inf / ||u0||_1 approaches (4 pi)^(-1/2)."""
        run = schrodinger_evolve(HOMOGENEOUS, gaussian_profile, 2.0)
        assert run.sponge_ok
        assert run.inward_flux <= 1e-6
        table = schrodinger_decay_ratio(run)
        late = table[table["t"] >= 1.0]
        assert not late.empty
        assert (abs(late["ratio"] / free_decay_limit(1.0) - 1.0) < 0.02).all()

    def test_free_decay_fast_medium(self):
        """Constant a = 4 approaches (16 pi)^(-1/2) with the default step."""
        run = schrodinger_evolve(build_medium([4.0], []), gaussian_profile, 2.0)
        assert run.dt * 4.0 / run.dx**2 <= 0.5 + 1e-9
        assert run.sponge_ok
        late = schrodinger_decay_ratio(run)
        late = late[late["t"] >= 1.0]
        assert (abs(late["ratio"] / free_decay_limit(4.0) - 1.0) < 0.02).all()

    def test_default_time_step(self):
        """The default step divides t_final and respects dt max(a) / dx^2 <= 0.5."""
        dt = default_time_step(BARRIER, 0.05, 1.0)
        assert dt * 3.0 / 0.05**2 <= 0.5 + 1e-12
        assert abs(1.0 / dt - round(1.0 / dt)) < 1e-9
        with pytest.raises(PreconditionError):
            default_time_step(BARRIER, 0.05, 0.0)

    def test_hard_sponge_trips_monitor(self):
        """A thin, stiff sponge reflects mass back through its inner edge."""
        run = schrodinger_evolve(
            HOMOGENEOUS, gaussian_profile, 3.0, dx=0.05, half_width=6.0, sponge_width=0.5, sigma_max=1e6,
        )
        assert run.inward_flux > 1e-6
        assert not run.sponge_ok
        with pytest.raises(PreconditionError):
            schrodinger_decay_ratio(run)

    def test_outgoing_flux_only(self):
        """A wide soft sponge lets nothing back in."""
        run = schrodinger_evolve(HOMOGENEOUS, gaussian_profile, 1.0, half_width=30.0, sponge_width=15.0)
        assert run.inward_flux <= 1e-6
        assert run.sponge_ok

    def test_reflections_refused(self):
        """A small walled domain trips the boundary monitor."""
        run = schrodinger_evolve(HOMOGENEOUS, gaussian_profile, 3.0, half_width=4.0, sponge_width=0.0)
        assert not run.sponge_ok
        with pytest.raises(PreconditionError):
            schrodinger_decay_ratio(run)
        assert len(schrodinger_decay_ratio(run, allow_sponge_violation=True)) > 0

    @settings(max_examples=8, deadline=None)
    @given(
        st.floats(min_value=0.6, max_value=1.9),
        st.floats(min_value=0.6, max_value=1.9),
        st.floats(min_value=0.6, max_value=1.9),
    )
    def test_conservation_any_layers(self, a1, a2, a3):
        """Unitary steps conserve the norm for any three-layer coefficient."""
        medium = build_medium([a1, a2, a3], [-1.5, 1.5])
        run = schrodinger_evolve(
            medium, gaussian_profile, 0.4, dx=0.1, dt=0.02, half_width=6.0, sponge_width=0.0,
        )
        assert run.max_balance_defect <= 1e-10
