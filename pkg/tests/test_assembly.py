"""Assembly tests: strain measures, element matrices against hand-integrated
and independently coded references, load vectors, and constraint rows."""
import numpy as np
import pytest

from cartbeam.assembly import (
    BCRow,
    BeamModel,
    BoundaryCondition,
    ConstraintConflictError,
    LoadCase,
    PointConstraint,
    apply_essential_bcs,
    assemble_load,
    assemble_stiffness,
    discretize,
    kinematic_measures,
)
from cartbeam.discretization import DofMap, Mesh1D, formulation, gauss_rule, shape_eval
from cartbeam.geometry import CircularArc, Helix, LineSegment, eval_frame
from cartbeam.section import Material, circle_section, unit_depth_rect_section


MAT = Material(E=1e6, nu=0.3)


def straight_model(L=10.0, section=None, loads=None, bc_end=None):
    return BeamModel(
        curve=LineSegment([0, 0, 0], [L, 0, 0]),
        material=MAT,
        section=section or unit_depth_rect_section(0.1),
        bc_start=BoundaryCondition.clamped(),
        bc_end=bc_end or BoundaryCondition.free(),
        loads=loads or LoadCase(),
    )


def helix_model():
    return BeamModel(
        curve=Helix([0, 0, 0], 1.0, 0.2, [1, 0, 0], [0, 1, 0], 0.0, 3 * np.pi),
        material=MAT,
        section=circle_section(0.15),
        bc_start=BoundaryCondition.clamped(),
        bc_end=BoundaryCondition.free(),
        loads=LoadCase(force_end=[0.1, -0.2, 0.3]),
    )


class TestKinematicMeasures:
    def test_constant_twist_on_straight_beam(self):
        fr = eval_frame(LineSegment([0, 0, 0], [1, 0, 0]), 0.5)
        c = 0.37
        meas = kinematic_measures(fr, du=np.zeros(3), theta=c * fr.t, dtheta=np.zeros(3))
        for v in (meas.stretch, meas.shear, meas.bend, meas.twist):
            assert np.allclose(v, 0.0, atol=1e-14)

    @pytest.mark.parametrize("curve", [
        LineSegment([0, 0, 0], [2, 1, 0]),
        CircularArc([0, 0, 0], 2.0, [1, 0, 0], [0, 1, 0], 0.0, np.pi),
        Helix([0, 0, 0], 1.0, 0.5, [1, 0, 0], [0, 1, 0], 0.0, 4 * np.pi),
    ])
    def test_rigid_rotation_gives_zero_measures(self, curve):
        rng = np.random.default_rng(3)
        omega = rng.normal(size=3)
        for s in np.linspace(0, curve.length, 7):
            fr = eval_frame(curve, s)
            # u = omega x r(s)  =>  u' = omega x t;  theta = omega (constant)
            meas = kinematic_measures(fr, du=np.cross(omega, fr.t), theta=omega,
                                      dtheta=np.zeros(3))
            scale = np.linalg.norm(omega)
            for v in (meas.stretch, meas.shear, meas.bend, meas.twist):
                assert np.linalg.norm(v) <= 1e-10 * scale

    def test_unit_tangential_displacement_on_arc(self):
        # u = t(s): the normal-plane part of u' equals the curvature vector
        R = 2.0
        arc = CircularArc([0, 0, 0], R, [1, 0, 0], [0, 1, 0], 0.0, np.pi)
        fr = eval_frame(arc, 1.1)
        meas = kinematic_measures(fr, du=fr.kappa, theta=np.zeros(3), dtheta=np.zeros(3))
        assert np.allclose(meas.shear, fr.kappa, atol=1e-12)
        assert np.linalg.norm(meas.shear) == pytest.approx(1.0 / R, abs=1e-12)

    def test_strain_tensor_contraction_identities(self):
        # P- and Q-projected strain parts are mutually orthogonal under
        # contraction, and the vector measures carry the full contractions
        rng = np.random.default_rng(11)
        for _ in range(10):
            t = rng.normal(size=3)
            t /= np.linalg.norm(t)
            P = np.outer(t, t)
            Q = np.eye(3) - P
            eps = {}
            for key in ("u", "v"):
                du = rng.normal(size=3)
                grad = np.outer(t, du)  # midline fields vary only along t
                e = 0.5 * (grad + grad.T)
                eps[key] = (P @ e @ P, Q @ e @ P + P @ e @ Q, du)
            ePu, eSu, du = eps["u"]
            ePv, eSv, dv = eps["v"]
            assert abs(np.tensordot(ePu, eSv)) <= 1e-12
            assert abs(np.tensordot(eSu, ePv)) <= 1e-12
            assert np.tensordot(ePu, ePv) == pytest.approx(
                float((ePu @ t) @ (ePv @ t)), abs=1e-12)
            assert np.tensordot(eSu, eSv) == pytest.approx(
                2.0 * float((eSu @ t) @ (eSv @ t)), abs=1e-12)
            # and the measure vectors are exactly those tensor rows
            assert np.allclose(ePu @ t, (t @ du) * t, atol=1e-12)
            assert np.allclose(2.0 * (eSu @ t), Q @ du, atol=1e-12)


class TestStiffness:
    def test_quadratic_bar_stretch_block(self):
        # hand-integrated quadratic bar matrix (EA/h) [[7/3,-8/3,1/3],...]
        L = 2.0
        model = straight_model(L=L)
        mesh = Mesh1D.uniform(L, 1)
        form = formulation("timoshenko_p2p1")
        system = assemble_stiffness(model, mesh, form, terms=("stretch",))
        dm = system.dofmap
        ux = dm.fields["u"].node_dofs[:, 0]
        K = system.K.toarray()[np.ix_(ux, ux)]
        EA_h = MAT.E * model.section.area / L
        expected = EA_h * np.array([[7, -8, 1], [-8, 16, -8], [1, -8, 7]]) / 3.0
        assert np.allclose(K, expected, rtol=1e-12)

    def test_symmetry_on_curved_model(self):
        for policy in ("full", "reduced"):
            system = discretize(helix_model(), formulation("timoshenko_h3p2"), 6, policy)
            dev = abs(system.K - system.K.T).max()
            assert dev <= 1e-12 * abs(system.K).max()

    def test_positive_semidefinite(self):
        system = assemble_stiffness(helix_model(), Mesh1D.uniform(helix_model().curve.length, 4),
                                    formulation("timoshenko_p2p1"))
        vals = np.linalg.eigvalsh(system.K.toarray())
        assert vals[0] >= -1e-10 * vals[-1]

    def test_rigid_modes_in_null_space_straight(self):
        from cartbeam.solver import rigid_modes
        model = BeamModel(curve=LineSegment([0, 0, 0], [5, 0, 0]), material=MAT,
                          section=circle_section(0.2),
                          bc_start=BoundaryCondition.free(), bc_end=BoundaryCondition.free())
        for name in ("timoshenko_p2p1", "timoshenko_h3p2", "euler_bernoulli_h3"):
            system = assemble_stiffness(model, Mesh1D.uniform(5.0, 3), formulation(name))
            Z = rigid_modes(system)
            knorm = abs(system.K).max()
            for a in range(6):
                z = Z[:, a]
                assert np.linalg.norm(system.K @ z) <= 1e-9 * knorm * np.linalg.norm(z)

    def test_rigid_modes_in_null_space_curved(self):
        # on curved geometry the nodal interpolants of rigid rotations carry
        # O(h^p) interpolation strain, so the 1e-9 bound needs a fine mesh
        from cartbeam.solver import rigid_modes
        arc = CircularArc([0, 0, 0], 1.0, [1, 0, 0], [0, 1, 0], -np.pi / 2, 0.0)
        model = BeamModel(curve=arc, material=MAT, section=circle_section(0.1),
                          bc_start=BoundaryCondition.free(), bc_end=BoundaryCondition.free())
        for name, n in (("timoshenko_p2p1", 64), ("timoshenko_h3p2", 32)):
            system = assemble_stiffness(model, Mesh1D.uniform(arc.length, n),
                                        formulation(name))
            Z = rigid_modes(system)
            knorm = abs(system.K).max()
            for a in range(6):
                z = Z[:, a]
                assert np.linalg.norm(system.K @ z) <= 1e-9 * knorm * np.linalg.norm(z)

    def test_timoshenko_matches_textbook_element(self):
        # independent oracle: classical irreducible plane Timoshenko element,
        # quadratic deflection w, linear rotation theta:
        #   EI int theta' eta' + GA int (w' - theta)(v' - eta)
        L, n_el = 2.4, 3
        sec = unit_depth_rect_section(0.2)
        model = straight_model(L=L, section=sec)
        mesh = Mesh1D.uniform(L, n_el)
        system = assemble_stiffness(model, mesh, formulation("timoshenko_p2p1"))
        dm = system.dofmap
        uy = dm.fields["u"].node_dofs[:, 1]
        thz = dm.fields["theta"].node_dofs[:, 2]
        idx = np.concatenate([uy, thz])
        K_ours = system.K.toarray()[np.ix_(idx, idx)]

        EI = MAT.E * sec.inertia_iso
        GA = MAT.G * sec.area
        n_w = 2 * n_el + 1
        n_t = n_el + 1
        K_ref = np.zeros((n_w + n_t, n_w + n_t))
        rule = gauss_rule(3)
        h = L / n_el
        for e in range(n_el):
            wdofs = [2 * e, 2 * e + 1, 2 * e + 2]
            tdofs = [n_w + e, n_w + e + 1]
            for xi, wq in zip(rule.points, rule.weights):
                Nw = shape_eval("P2", h, xi, nderiv=1)
                Nt = shape_eval("P1", h, xi, nderiv=1)
                B = np.zeros(5)
                B[:3] = Nw[1]
                B[3:] = -Nt[0]
                edofs = wdofs + tdofs
                K_ref[np.ix_(edofs, edofs)] += wq * h * GA * np.outer(B, B)
                Bb = np.zeros(5)
                Bb[3:] = Nt[1]
                K_ref[np.ix_(edofs, edofs)] += wq * h * EI * np.outer(Bb, Bb)
        assert np.allclose(K_ours, K_ref, atol=1e-10 * abs(K_ref).max())

    def test_stretch_shear_energy_matches_tensor_contraction(self):
        # assembled stretch+shear energy == quadrature of the full-tensor
        # contraction E ePu:ePu + 2G eSu:eSu for a midline-only field
        model = helix_model()
        mesh = Mesh1D.uniform(model.curve.length, 3)
        form = formulation("timoshenko_p2p1")
        system = assemble_stiffness(model, mesh, form, terms=("stretch", "shear"))
        dm = system.dofmap
        rng = np.random.default_rng(5)
        x = np.zeros(dm.ndof)
        uinfo = dm.fields["u"]
        x[: uinfo.n_dofs] = rng.normal(size=uinfo.n_dofs)

        energy_K = float(x @ (system.K @ x))
        rule = gauss_rule(3)
        E, G, A = MAT.E, MAT.G, model.section.area
        energy_q = 0.0
        for e in range(mesh.n_elements):
            s0, h = mesh.element(e)
            dofs_u = dm.element_dofs("u", e)
            coeff = x[dofs_u].reshape(-1, 3)
            for xi, wq in zip(rule.points, rule.weights):
                sh = shape_eval("P2", h, xi, nderiv=1)
                du = sh[1] @ coeff
                fr = model.curve.frame(s0 + xi * h)
                grad = np.outer(fr.t, du)
                eps = 0.5 * (grad + grad.T)
                P = np.outer(fr.t, fr.t)
                Q = np.eye(3) - P
                ePu = P @ eps @ P
                eSu = Q @ eps @ P + P @ eps @ Q
                energy_q += wq * h * A * (E * np.tensordot(ePu, ePu)
                                          + 2 * G * np.tensordot(eSu, eSu))
        assert energy_K == pytest.approx(energy_q, rel=1e-12)

    def test_reduced_equals_full_on_straight_p2p1(self):
        model = straight_model()
        mesh = Mesh1D.uniform(10.0, 4)
        form = formulation("timoshenko_p2p1")
        K_full = assemble_stiffness(model, mesh, form, "full").K
        K_red = assemble_stiffness(model, mesh, form, "reduced").K
        assert abs(K_full - K_red).max() <= 1e-12 * abs(K_full).max()


class TestLoads:
    def test_zero_loads_give_zero_rhs(self):
        model = straight_model()
        rhs = assemble_load(model, Mesh1D.uniform(10.0, 4), formulation("timoshenko_p2p1"))
        assert np.allclose(rhs, 0.0)

    def test_tip_point_load_is_nodal(self):
        P = np.array([0.3, -1.0, 0.7])
        model = straight_model(loads=LoadCase(force_end=P))
        mesh = Mesh1D.uniform(10.0, 4)
        form = formulation("timoshenko_p2p1")
        rhs = assemble_load(model, mesh, form)
        dm = DofMap(mesh, form)
        tip_dofs = dm.fields["u"].node_dofs[-1, :]
        assert np.allclose(rhs[tip_dofs], P)
        mask = np.ones(len(rhs), bool)
        mask[tip_dofs] = False
        assert np.allclose(rhs[mask], 0.0)

    def test_uniform_body_force_consistent_vector(self):
        # one quadratic element: h |A| f (1/6, 2/3, 1/6) per component
        h = 2.0
        f = np.array([0.0, -3.0, 1.0])
        model = BeamModel(curve=LineSegment([0, 0, 0], [h, 0, 0]), material=MAT,
                          section=unit_depth_rect_section(0.1),
                          bc_start=BoundaryCondition.clamped(),
                          bc_end=BoundaryCondition.free(),
                          loads=LoadCase(body=f))
        mesh = Mesh1D.uniform(h, 1)
        form = formulation("timoshenko_p2p1")
        rhs = assemble_load(model, mesh, form)
        dm = DofMap(mesh, form)
        A = model.section.area
        for comp in range(3):
            dofs = dm.fields["u"].node_dofs[:, comp]
            expected = h * A * f[comp] * np.array([1 / 6, 2 / 3, 1 / 6])
            assert np.allclose(rhs[dofs], expected, atol=1e-14)

    def test_natural_value_projection_warns(self):
        bc_end = BoundaryCondition(
            stretching=BCRow("natural", 0.0),
            shearing=BCRow("natural", np.array([1.0, 1.0, 0.0])),  # x-part is tangential
            bending=BCRow("natural", np.zeros(3)),
            twisting=BCRow("natural", 0.0),
        )
        model = straight_model(bc_end=bc_end)
        with pytest.warns(UserWarning, match="tangential"):
            assemble_load(model, Mesh1D.uniform(10.0, 2), formulation("timoshenko_p2p1"))

    def test_natural_end_values_match_point_loads_at_free_end(self):
        # prescribing N/S/M/T resultants at s=L equals applying the same
        # force and moment vectors as concentrated loads
        F = np.array([0.5, -1.0, 0.25])
        M = np.array([0.2, 0.15, -0.4])
        t = np.array([1.0, 0.0, 0.0])
        bc_end = BoundaryCondition(
            stretching=BCRow("natural", float(F @ t)),
            shearing=BCRow("natural", F - float(F @ t) * t),
            bending=BCRow("natural", M - float(M @ t) * t),
            twisting=BCRow("natural", float(M @ t)),
        )
        mesh = Mesh1D.uniform(10.0, 3)
        for name in ("timoshenko_h3p2", "euler_bernoulli_h3"):
            form = formulation(name)
            rhs_bc = assemble_load(straight_model(bc_end=bc_end), mesh, form)
            rhs_load = assemble_load(
                straight_model(loads=LoadCase(force_end=F, moment_end=M)), mesh, form)
            assert np.allclose(rhs_bc, rhs_load, atol=1e-14)


class TestEssentialBCs:
    def count_rows(self, bc_start, bc_end=None, name="timoshenko_p2p1"):
        model = BeamModel(curve=LineSegment([0, 0, 0], [1, 0, 0]), material=MAT,
                          section=circle_section(0.1), bc_start=bc_start,
                          bc_end=bc_end or BoundaryCondition.free())
        system = assemble_stiffness(model, Mesh1D.uniform(1.0, 2), formulation(name))
        return apply_essential_bcs(system).n_constraints

    def test_clamped_has_six_rows(self):
        assert self.count_rows(BoundaryCondition.clamped()) == 6

    def test_free_has_zero_rows(self):
        assert self.count_rows(BoundaryCondition.free()) == 0

    def test_pinned_has_three_rows(self):
        assert self.count_rows(BoundaryCondition.pinned()) == 3

    def test_clamped_euler_bernoulli_has_six_rows(self):
        assert self.count_rows(BoundaryCondition.clamped(), name="euler_bernoulli_h3") == 6

    def test_conflicting_duplicate_constraint_raises(self):
        model = straight_model()
        model.constraints = [PointConstraint("start", "u", [0.0, 1.0, 0.0], value=0.5)]
        with pytest.raises(ConstraintConflictError):
            discretize(model, formulation("timoshenko_p2p1"), 2)

    def test_consistent_duplicate_constraint_pruned(self):
        model = straight_model()
        model.constraints = [PointConstraint("start", "u", [0.0, 1.0, 0.0], value=0.0)]
        with pytest.warns(UserWarning, match="redundant"):
            system = discretize(model, formulation("timoshenko_p2p1"), 2)
        assert system.n_constraints == 6

    def test_point_constraint_field_checked(self):
        model = straight_model()
        model.constraints = [PointConstraint("end", "theta_t", [1.0, 0, 0])]
        with pytest.raises(ValueError):
            discretize(model, formulation("timoshenko_p2p1"), 2)
