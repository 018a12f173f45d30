"""Resultant, shear-angle, reaction, and export tests.

Static-equilibrium oracles: on a tip-loaded cantilever the internal force
transmitted across every section must equal the applied tip load, and the
reactions recovered from the multipliers must balance all applied loads.
"""
import numpy as np
import pytest

from cartbeam.assembly import BeamModel, BoundaryCondition, LoadCase, discretize
from cartbeam.benchmarks import make_quarter_arc_model, make_straight_model
from cartbeam.discretization import formulation
from cartbeam.geometry import Helix, LineSegment
from cartbeam.postprocess import (
    applied_load_totals,
    export,
    reaction_force_totals,
    reactions,
    resultants,
    resultants_curvature_form,
    sample_points,
    shear_angle,
    strain_energy,
)
from cartbeam.section import Material, circle_section
from cartbeam.solver import SolutionFields, solve_model

MAT = Material(E=1e6, nu=0.3)


def solved_cantilever(form="timoshenko_h3p2", n=4, P=1.0):
    model = make_straight_model(0.1, L=10.0, P=P)
    return solve_model(model, formulation(form), n)


class TestResultants:
    def test_zero_solution_zero_resultants(self):
        model = make_straight_model(0.1, P=0.0)
        sol = solve_model(model, formulation("timoshenko_p2p1"), 3)
        res = resultants(sol, np.linspace(0, 10, 5))
        for q in "NSMT":
            assert np.allclose(getattr(res, q), 0.0, atol=1e-12)

    def test_constant_shear_state(self):
        # transmitted section force equals the applied tip load everywhere
        sol = solved_cantilever()
        s = sample_points(sol, "quadrature")
        res = resultants(sol, s)
        assert np.allclose(res.S, np.array([0.0, -1.0, 0.0]), atol=1e-8)
        assert np.allclose(res.N, 0.0, atol=1e-8)
        # |S| at the support equals the applied load magnitude
        assert np.linalg.norm(resultants(sol, 0.0).S[0]) == pytest.approx(1.0, abs=1e-8)

    def test_projection_invariants(self):
        helix = Helix([0, 0, 0], 1.0, 0.2, [1, 0, 0], [0, 1, 0], 0.0, 3 * np.pi)
        model = BeamModel(curve=helix, material=MAT, section=circle_section(0.12),
                          bc_start=BoundaryCondition.clamped(),
                          bc_end=BoundaryCondition.free(),
                          loads=LoadCase(force_end=[0.2, 0.1, -0.4],
                                         moment_end=[0.05, 0.0, 0.02]))
        sol = solve_model(model, formulation("timoshenko_h3p2"), 16, "reduced")
        s = sample_points(sol, "quadrature")
        res = resultants(sol, s)
        scale = max(np.abs(v).max() for v in (res.N, res.S, res.M, res.T))
        for i, si in enumerate(s):
            t = model.curve.frame(float(si)).t
            assert np.linalg.norm(np.cross(res.N[i], t)) <= 1e-10 * scale
            assert np.linalg.norm(np.cross(res.T[i], t)) <= 1e-10 * scale
            assert abs(res.S[i] @ t) <= 1e-10 * scale
            assert abs(res.M[i] @ t) <= 1e-10 * scale

    def test_pure_twist_shaft(self):
        T = 0.3
        model = BeamModel(curve=LineSegment([0, 0, 0], [10, 0, 0]), material=MAT,
                          section=circle_section(0.2),
                          bc_start=BoundaryCondition.clamped(),
                          bc_end=BoundaryCondition.free(),
                          loads=LoadCase(moment_end=[T, 0.0, 0.0]))
        for name in ("timoshenko_p2p1", "timoshenko_h3p2", "euler_bernoulli_h3"):
            sol = solve_model(model, formulation(name), 4)
            s = np.linspace(0.5, 9.5, 7)
            res = resultants(sol, s)
            assert np.allclose(res.T, np.array([T, 0.0, 0.0]), atol=1e-10)
            assert np.allclose(res.M, 0.0, atol=1e-10)


class TestCurvatureForms:
    def test_agreement_on_solved_arc(self):
        sol = solve_model(make_quarter_arc_model(0.1), formulation("timoshenko_p2p1"),
                          8, "reduced")
        s = np.linspace(0.05, sol.mesh.length - 0.05, 10)
        plain = resultants(sol, s)
        sep = resultants_curvature_form(sol, s)
        scale = max(np.abs(getattr(plain, q)).max() for q in "NSMT")
        for q in "NSMT":
            assert np.abs(getattr(plain, q) - getattr(sep, q)).max() <= 1e-10 * scale

    def test_forms_identical_on_straight(self):
        sol = solved_cantilever("timoshenko_p2p1", n=6)
        s = np.linspace(0, 10, 9)
        plain = resultants(sol, s)
        sep = resultants_curvature_form(sol, s)
        for q in "NSMT":
            assert np.allclose(getattr(plain, q), getattr(sep, q), atol=1e-12)

    def test_agreement_on_nonplanar_spline_and_off_plane_arc(self):
        from cartbeam.geometry import CircularArc, HermiteSpline

        y = np.linspace(0.0, 4.0, 7)
        pts = np.column_stack([0.5 * np.sin(np.pi * y / 2), y, 0.15 * y**2])
        spline = HermiteSpline(pts, [0.7, 0.6, 0.0], [0.5, 0.7, 0.4])
        arc_yz = CircularArc([0.5, 0, 0], 2.0, [0, 1, 0], [0, 0, 1], 0.3, 1.8)
        loads = LoadCase(force_end=[0.1, -0.2, 0.3], moment_end=[0.02, 0.0, -0.05])
        cases = [(spline, "timoshenko_h3p2"), (spline, "euler_bernoulli_h3"),
                 (arc_yz, "timoshenko_p2p1")]
        for curve, name in cases:
            model = BeamModel(curve=curve, material=MAT, section=circle_section(0.1),
                              bc_start=BoundaryCondition.clamped(),
                              bc_end=BoundaryCondition.free(), loads=loads)
            sol = solve_model(model, formulation(name), 16, "reduced")
            s = sample_points(sol, "quadrature")
            plain = resultants(sol, s)
            sep = resultants_curvature_form(sol, s)
            scale = max(np.abs(getattr(plain, q)).max() for q in "NSMT")
            for q in "NSMT":
                assert np.abs(getattr(plain, q) - getattr(sep, q)).max() <= 1e-10 * scale
            resid = applied_load_totals(sol) + reaction_force_totals(sol)
            fscale = max(np.linalg.norm(applied_load_totals(sol)), 1e-30)
            assert np.linalg.norm(resid) <= 1e-8 * fscale

    def test_manufactured_tangential_field_on_arc(self):
        # u(s) = s t(s): unit tangential stretch, N = E|A| t from both forms
        R = 1.0
        model = make_quarter_arc_model(0.1, R=R, P=0.0)
        system = discretize(model, formulation("timoshenko_h3p2"), 6, "reduced")
        curve = model.curve
        u = lambda s: s * curve.frame(s).t
        du = lambda s: curve.frame(s).t + s * curve.frame(s).kappa
        sol = SolutionFields.from_functions(system, u=u, du=du,
                                            theta=lambda s: np.zeros(3),
                                            dtheta=lambda s: np.zeros(3))
        EA = MAT.E * model.section.area
        for s in system.mesh.nodes:  # interpolation is exact at the nodes
            si = float(s)
            t = curve.frame(si).t
            for res in (resultants(sol, si), resultants_curvature_form(sol, si)):
                assert np.allclose(res.N[0], EA * t, rtol=1e-10)


class TestShearAngle:
    def test_euler_bernoulli_returns_exact_zero(self):
        sol = solved_cantilever("euler_bernoulli_h3")
        gamma = shear_angle(sol, np.linspace(0, 10, 5))
        assert np.all(gamma == 0.0)

    def test_constant_shear_angle_on_cantilever(self):
        sol = solved_cantilever("timoshenko_h3p2")
        s = np.linspace(0.5, 9.5, 9)
        gamma = shear_angle(sol, s)
        GA = MAT.G * sol.model.section.area
        res = resultants(sol, s)
        for i, si in enumerate(s):
            t = sol.model.curve.frame(float(si)).t
            # Q gamma = t x S / (G|A|), constant along the constant-shear beam
            assert np.allclose(gamma[i], np.cross(t, res.S[i]) / GA, atol=1e-8)
            assert np.allclose(gamma[i], gamma[0], atol=1e-8)
            # consistency: G|A| (Q gamma) x t reproduces the shear force
            assert np.allclose(GA * np.cross(gamma[i], t), res.S[i], atol=1e-10)

    def test_shear_to_rotation_ratio_scales_with_thickness_squared(self):
        ratios = []
        ts = [0.1, 0.05, 0.02, 0.01]
        for t in ts:
            model = make_straight_model(t)
            sol = solve_model(model, formulation("timoshenko_h3p2"), 4)
            s = np.linspace(0.5, 9.5, 9)
            gamma = shear_angle(sol, s)
            theta_max = max(np.linalg.norm(sol.evaluate(float(si)).theta) for si in s)
            ratios.append(np.abs(gamma).max() / theta_max)
        slope = np.polyfit(np.log(ts), np.log(ratios), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.2)


class TestReactionsAndEnergy:
    def test_reactions_balance_tip_load(self):
        sol = solved_cantilever()
        r = reactions(sol)
        assert np.allclose(r["start"]["force"], [0.0, 1.0, 0.0], atol=1e-8)
        assert np.allclose(r["start"]["moment"], [0.0, 0.0, 10.0], atol=1e-7)
        assert np.allclose(r["end"]["force"], 0.0, atol=1e-12)

    def test_global_force_balance_on_curved_models(self):
        arc = make_quarter_arc_model(0.1)
        helix = BeamModel(curve=Helix([0, 0, 0], 1.0, 0.2, [1, 0, 0], [0, 1, 0],
                                      0.0, 3 * np.pi),
                          material=MAT, section=circle_section(0.12),
                          bc_start=BoundaryCondition.clamped(),
                          bc_end=BoundaryCondition.free(),
                          loads=LoadCase(force_end=[0.2, 0.1, -0.4],
                                         body=[0.0, 0.0, -0.05]))
        for model, name in ((arc, "timoshenko_p2p1"), (helix, "timoshenko_h3p2")):
            sol = solve_model(model, formulation(name), 12, "reduced")
            resid = applied_load_totals(sol) + reaction_force_totals(sol)
            scale = max(np.linalg.norm(applied_load_totals(sol)), 1e-30)
            assert np.linalg.norm(resid) <= 1e-8 * scale

    def test_energy_identity(self):
        sol = solve_model(make_quarter_arc_model(0.1), formulation("timoshenko_h3p2"),
                          10, "reduced")
        a_uu = float(sol.x @ (sol.system.K @ sol.x))
        l_u = float(sol.system.rhs @ sol.x)
        assert a_uu == pytest.approx(l_u, rel=1e-10)
        assert strain_energy(sol) == pytest.approx(0.5 * l_u, rel=1e-10)


class TestExport:
    def test_headers_and_row_counts(self, tmp_path):
        sol = solved_cantilever()
        paths = export(sol, str(tmp_path), n_samples=23)
        center = open(paths["centerline"]).read().splitlines()
        res = open(paths["resultants"]).read().splitlines()
        assert center[0] == "s,x,y,z,ux,uy,uz,thx,thy,thz"
        assert res[0] == "s,Nx,Ny,Nz,Sx,Sy,Sz,Mx,My,Mz,Tx,Ty,Tz"
        assert len(center) == 24
        assert len(res) == 24
        assert open(paths["centerline"], "rb").read().endswith(b"\n")

    def test_zero_solution_roundtrip(self, tmp_path):
        model = make_straight_model(0.1, P=0.0)
        sol = solve_model(model, formulation("timoshenko_p2p1"), 3)
        paths = export(sol, str(tmp_path), n_samples=5)
        data = np.genfromtxt(paths["centerline"], delimiter=",", skip_header=1)
        assert np.allclose(data[:, 4:], 0.0, atol=1e-12)

    def test_roundtrip_is_bit_exact(self, tmp_path):
        sol = solved_cantilever()
        paths = export(sol, str(tmp_path), n_samples=11)
        s = np.linspace(0.0, 10.0, 11)
        res = resultants(sol, s)
        rows = open(paths["resultants"]).read().splitlines()[1:]
        for i, row in enumerate(rows):
            vals = [float(v) for v in row.split(",")]
            assert vals[0] == s[i]
            assert vals[1:4] == list(res.N[i])
            assert vals[4:7] == list(res.S[i])

    def test_repeat_export_byte_identical(self, tmp_path):
        sol = solved_cantilever()
        p1 = export(sol, str(tmp_path / "a"), n_samples=7)
        p2 = export(sol, str(tmp_path / "b"), n_samples=7)
        for key in p1:
            assert open(p1[key], "rb").read() == open(p2[key], "rb").read()
