import math

import numpy as np
import pytest

from pmclab.assembly import (ProblemSpec, ScalarField, boundary_flux,
                             ellipticity_margins, flux_scale, jacobian,
                             mesh_feasibility, neumann_feasibility, residual)
from pmclab.errors import InvalidParameterError
from pmclab.geometry import triangulate
from pmclab.solver import radial_disk_oracle

CAP = 0.5 / math.sqrt(1.25)          # c / sqrt(1 + c^2) for c = 0.5


class TestProblemSpec:
    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            ProblemSpec.neumann(-1.0, 0.5)
        with pytest.raises(InvalidParameterError):
            ProblemSpec.neumann(0.5, -0.1)
        with pytest.raises(InvalidParameterError):
            ProblemSpec.robin(0.5, 0.0)
        with pytest.raises(InvalidParameterError):
            ProblemSpec(H=0.5, bc="robin", alpha=1.0, t=1.5)
        with pytest.raises(InvalidParameterError):
            ProblemSpec(H=0.5, bc="robin", alpha=1.0, c=0.3)

    def test_at_t(self):
        s = ProblemSpec.robin(0.5, 1.0)
        assert s.at_t(0.25).t == 0.25
        assert s.at_t(0.25).alpha == 1.0


class TestBoundaryFlux:
    def test_neumann_plugin(self, disk_mesh_02):
        spec = ProblemSpec.neumann(0.6, 0.5)
        field = ScalarField.zeros(disk_mesh_02)
        g = boundary_flux(field, spec)
        assert np.allclose(g, 0.4472135954999579, atol=1e-12)

    def test_robin_plugin(self, disk_mesh_02):
        spec = ProblemSpec.robin(0.6, 1.0)
        field = ScalarField(disk_mesh_02,
                            np.full(disk_mesh_02.n_vertices, -0.5))
        g = boundary_flux(field, spec)
        assert np.allclose(g, 0.4472135954999579, atol=1e-12)

    def test_neumann_t0_degenerates_to_c(self, disk_mesh_02):
        spec = ProblemSpec.neumann(0.6, 0.5, t=0.0)
        field = ScalarField.zeros(disk_mesh_02)
        assert np.allclose(boundary_flux(field, spec), 0.5, atol=1e-15)

    def test_tangential_derivative_lowers_flux(self, disk_mesh_02):
        spec = ProblemSpec.neumann(0.6, 0.5)
        field = ScalarField(disk_mesh_02, disk_mesh_02.vertices[:, 1].copy())
        g = boundary_flux(field, spec)
        assert np.all(g <= 0.4472135954999579 + 1e-15)
        assert g.min() < 0.44


class TestResidual:
    def test_constant_field_neumann_compatible(self, disk_mesh_02):
        m = disk_mesh_02
        # compatible data computed from the discrete measures makes the
        # flux rescale exactly one, so boundary rows carry cap * edge mass
        L_h = m.boundary_lengths.sum()
        area_h = m.cell_areas.sum()
        H = CAP * L_h / area_h
        spec = ProblemSpec.neumann(H, 0.5)
        field = ScalarField(m, np.full(m.n_vertices, 3.7))
        assert flux_scale(field, spec) == pytest.approx(1.0, abs=1e-12)
        r = residual(field, spec)
        interior = ~m.is_boundary_vertex
        # gradient term vanishes: interior entries equal the H load exactly
        load = np.zeros(m.n_vertices)
        for i in range(3):
            np.add.at(load, m.cells[:, i], H * m.cell_areas / 3.0)
        assert np.allclose(r[interior], load[interior], atol=1e-14)
        assert np.all(r[interior] > 0)
        # boundary entries: load minus cap-weighted edge masses
        emass = np.zeros(m.n_vertices)
        np.add.at(emass, m.boundary_edges[:, 0], m.boundary_lengths / 2.0)
        np.add.at(emass, m.boundary_edges[:, 1], m.boundary_lengths / 2.0)
        assert np.allclose(r[~interior], (load - CAP * emass)[~interior],
                           atol=1e-12)

    def test_oracle_residual_converges(self, disk, robin_spec):
        errs = []
        for h in (0.2, 0.1, 0.05):
            m = triangulate(disk, h)
            oracle = radial_disk_oracle(robin_spec)
            f = ScalarField(m, oracle.at_points(m.vertices))
            errs.append(np.abs(residual(f, robin_spec)).max())
        assert errs[0] > errs[1] > errs[2]
        # first-order decay at least
        assert errs[0] / errs[1] >= 1.8
        assert errs[1] / errs[2] >= 1.8

    def test_poisson_quadratic_interior_second_order(self, disk):
        spec0 = ProblemSpec.robin(0.8, 1.0, t=0.0)
        errs = []
        for h in (0.2, 0.1):
            m = triangulate(disk, h)
            v = 0.2 * np.sum(m.vertices ** 2, axis=1) - 0.6
            r = residual(ScalarField(m, v), spec0)
            errs.append(np.abs(r[~m.is_boundary_vertex]).max())
        assert errs[0] / errs[1] >= 3.0

    def test_neumann_gauge_invariance(self, disk_mesh_01, neumann_spec, rng):
        m = disk_mesh_01
        u = ScalarField(m, 0.3 * rng.standard_normal(m.n_vertices))
        r0 = residual(u, neumann_spec)
        r1 = residual(ScalarField(m, u.values + 7.3), neumann_spec)
        assert np.abs(r0 - r1).max() <= 1e-12

    def test_neumann_compatibility_identity(self, disk_mesh_01, neumann_spec,
                                            rng):
        u = ScalarField(disk_mesh_01,
                        0.3 * rng.standard_normal(disk_mesh_01.n_vertices))
        assert abs(residual(u, neumann_spec).sum()) <= 1e-12


class TestJacobian:
    def test_t0_interior_is_poisson_stiffness(self, disk_mesh_02, rng):
        m = disk_mesh_02
        spec0 = ProblemSpec.robin(0.8, 1.0, t=0.0)
        u1 = ScalarField(m, rng.standard_normal(m.n_vertices))
        u2 = ScalarField(m, rng.standard_normal(m.n_vertices))
        J1 = jacobian(u1, spec0).toarray()
        J2 = jacobian(u2, spec0).toarray()
        interior = ~m.is_boundary_vertex
        assert np.allclose(J1[np.ix_(interior, interior)],
                           J2[np.ix_(interior, interior)], atol=1e-13)

    @pytest.mark.parametrize("bc", ["robin", "neumann"])
    def test_matches_finite_differences(self, disk_mesh_02, rng, bc):
        m = disk_mesh_02
        spec = (ProblemSpec.robin(0.8, 1.0) if bc == "robin"
                else ProblemSpec.neumann(0.6, 0.5))
        for _ in range(20):
            u = ScalarField(m, 0.4 * rng.standard_normal(m.n_vertices))
            d = rng.standard_normal(m.n_vertices)
            J = jacobian(u, spec)
            eps = 1e-6
            fd = (residual(ScalarField(m, u.values + eps * d), spec)
                  - residual(ScalarField(m, u.values - eps * d), spec)) \
                / (2 * eps)
            jd = J @ d
            assert np.linalg.norm(fd - jd) <= 1e-5 * np.linalg.norm(jd)

    def test_robin_boundary_block_is_alpha_edge_mass(self, disk_mesh_02):
        m = disk_mesh_02
        alpha = 1.3
        z = ScalarField.zeros(m)
        # at u = 0 the linearized flux is -alpha u for any t, so the
        # boundary contribution is alpha times the consistent edge mass
        for t in (1.0, 0.0):
            sp = ProblemSpec.robin(0.8, alpha, t=t)
            J = jacobian(z, sp)
            Jn = jacobian(z, sp, flux_edges=np.array([], dtype=int))
            diff = (J - Jn).toarray()
            expected = np.zeros_like(diff)
            for (a, b), ell in zip(m.boundary_edges, m.boundary_lengths):
                expected[a, a] += alpha * ell / 3.0
                expected[b, b] += alpha * ell / 3.0
                expected[a, b] += alpha * ell / 6.0
                expected[b, a] += alpha * ell / 6.0
            assert np.allclose(diff, expected, atol=1e-13)
            assert np.all(np.diag(diff)[m.is_boundary_vertex] > 0)

    def test_ellipticity_positive_along_newton_path(self, robin_disk_01,
                                                    robin_spec):
        field, report = robin_disk_01
        lam_par, lam_perp = ellipticity_margins(field, robin_spec)
        assert lam_par > 0 and lam_perp > 0
        assert report.ellipticity_min > 0


class TestFeasibility:
    def test_radial_boundary_case_is_borderline(self, disk):
        spec = ProblemSpec.neumann(0.89443, 0.5)
        rep = neumann_feasibility(disk, spec)
        assert rep.feasible and rep.borderline
        assert abs(rep.margin) < 1e-3

    def test_infeasible(self, disk):
        rep = neumann_feasibility(disk, ProblemSpec.neumann(1.0, 0.5))
        assert not rep.feasible
        assert rep.margin == pytest.approx(CAP * 2 * math.pi - math.pi,
                                           abs=1e-12)

    def test_feasible_margin_value(self, disk):
        rep = neumann_feasibility(disk, ProblemSpec.neumann(0.5, 0.5))
        assert rep.feasible and not rep.borderline
        assert rep.margin == pytest.approx(1.2391295656213939, abs=1e-12)

    def test_rejects_robin(self, disk):
        with pytest.raises(InvalidParameterError):
            neumann_feasibility(disk, ProblemSpec.robin(0.5, 1.0))

    def test_mesh_feasibility_tracks_domain(self, disk, disk_mesh_01):
        spec = ProblemSpec.neumann(0.6, 0.5)
        a = neumann_feasibility(disk, spec)
        b = mesh_feasibility(disk_mesh_01, spec)
        assert b.feasible
        assert b.margin == pytest.approx(a.margin, abs=0.02)
