"""Stiffness and load assembly for curved beams in global Cartesian DOFs.

The bilinear form is the sum of four term classes evaluated with the local
unit tangent t, P = t (x) t and Q = I - P:

  stretch: E|A| (P u') . (P v')
  shear:   G|A| (Q u' - theta x t) . (Q v' - eta x t)
  bend:    E (I_sigma theta') . eta'
  twist:   G J (P theta') . (P eta')

with ' the arc-length derivative. Under Euler-Bernoulli kinematics the
rotation is derived from the midline, theta = t x u' + t theta_t, the shear
term vanishes identically, and the bend/twist measures pick up explicit
curvature terms:

  bend:  kappa x u' + t x u'' + theta_t kappa
  twist: theta_t' - (t x u') . kappa

Only the tangent (plus kappa for Euler-Bernoulli) is ever queried from the
geometry; no normal directions along the curve are needed, so straight
segments and inflection points require no special handling.

Essential boundary conditions are enforced with Lagrange multipliers since
they are directional (along t or in the normal plane) while the DOFs are
global Cartesian components. The boundary bracket sign convention is +1 at
s = L and -1 at s = 0.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg
import scipy.sparse

from .discretization import DofMap, Formulation, Mesh1D, quadrature, shape_eval
from .geometry import FrameSample, ParamCurve, Vec3, normal_projector, skew
from .section import CrossSection, Material, inertia_factor


class ConstraintConflictError(ValueError):
    """Linearly dependent essential constraints with inconsistent values."""


@dataclass(eq=False)
class Measures:
    """The four strain measures at a point, all plain Cartesian vectors."""

    stretch: Vec3   # P (t.grad) u_mid
    shear: Vec3     # Q (t.grad) u_mid - theta x t
    bend: Vec3      # Q (t.grad) theta (paired with I_sigma later)
    twist: Vec3     # P (t.grad) theta


def kinematic_measures(frame: FrameSample, du: Vec3, theta: Vec3, dtheta: Vec3) -> Measures:
    """Evaluate the strain measures from pointwise field values and d/ds values."""
    t = frame.t
    du_t = float(t @ du)
    dth_t = float(t @ dtheta)
    return Measures(
        stretch=du_t * t,
        shear=(du - du_t * t) - np.cross(theta, t),
        bend=dtheta - dth_t * t,
        twist=dth_t * t,
    )


@dataclass(eq=False)
class BCRow:
    """One row of the end-condition table: natural (force-like value) or
    essential (displacement/rotation-like value)."""

    kind: str               # "natural" | "essential"
    value: float | np.ndarray

    def __post_init__(self):
        if self.kind not in ("natural", "essential"):
            raise ValueError(f"bad condition kind {self.kind!r}")


@dataclass(eq=False)
class BoundaryCondition:
    """Per-end choice of one condition per row: stretching, shearing, bending,
    twisting. Scalar values for stretching/twisting, normal-plane vectors for
    shearing/bending (tangential parts are projected away with a warning)."""

    stretching: BCRow
    shearing: BCRow
    bending: BCRow
    twisting: BCRow

    @classmethod
    def clamped(cls) -> "BoundaryCondition":
        z = np.zeros(3)
        return cls(BCRow("essential", 0.0), BCRow("essential", z.copy()),
                   BCRow("essential", z.copy()), BCRow("essential", 0.0))

    @classmethod
    def free(cls) -> "BoundaryCondition":
        z = np.zeros(3)
        return cls(BCRow("natural", 0.0), BCRow("natural", z.copy()),
                   BCRow("natural", z.copy()), BCRow("natural", 0.0))

    @classmethod
    def pinned(cls) -> "BoundaryCondition":
        z = np.zeros(3)
        return cls(BCRow("essential", 0.0), BCRow("essential", z.copy()),
                   BCRow("natural", z.copy()), BCRow("natural", 0.0))

    def rows(self):
        return (("stretching", self.stretching), ("shearing", self.shearing),
                ("bending", self.bending), ("twisting", self.twisting))


@dataclass(eq=False)
class PointConstraint:
    """Extra essential row d . field(end) = value for a direction d that need
    not be aligned with the local tangent split (e.g. a guided support that
    only permits motion along a fixed axis)."""

    end: str                # "start" | "end"
    field: str              # "u" | "theta" | "theta_t"
    direction: Vec3
    value: float = 0.0


class LoadCase:
    """Body force density (force/length^3, constant over each cross-section)
    plus optional concentrated end forces/moments (applied external loads,
    entering the load functional with + sign at both ends)."""

    def __init__(self, body=None, force_start=None, force_end=None,
                 moment_start=None, moment_end=None):
        self.body = _as_body_function(body)
        self.force_start = None if force_start is None else np.asarray(force_start, float)
        self.force_end = None if force_end is None else np.asarray(force_end, float)
        self.moment_start = None if moment_start is None else np.asarray(moment_start, float)
        self.moment_end = None if moment_end is None else np.asarray(moment_end, float)


def _as_body_function(body):
    if body is None:
        return None
    if callable(body):
        return body
    arr = np.asarray(body, dtype=float)
    if arr.shape == (3,):
        return lambda s: arr
    raise ValueError("body force must be a 3-vector or a callable of s")


def body_table(s_values, f_values):
    """Body force from a per-s table, linearly interpolated per component."""
    s_values = np.asarray(s_values, float)
    f_values = np.asarray(f_values, float)
    if f_values.shape != (len(s_values), 3):
        raise ValueError("body table needs one 3-vector per s sample")
    return lambda s: np.array([np.interp(s, s_values, f_values[:, k]) for k in range(3)])


@dataclass(eq=False)
class BeamModel:
    """A complete problem statement: geometry, material, section, end
    conditions, loads, and optional extra point constraints."""

    curve: ParamCurve
    material: Material
    section: CrossSection
    bc_start: BoundaryCondition
    bc_end: BoundaryCondition
    loads: LoadCase = dc_field(default_factory=LoadCase)
    constraints: list[PointConstraint] = dc_field(default_factory=list)

    def bc(self, end: str) -> BoundaryCondition:
        return self.bc_start if end == "start" else self.bc_end


@dataclass(eq=False)
class RowInfo:
    """Metadata for one multiplier row, enough to map multipliers back to
    reaction forces/moments at the ends."""

    end: str
    label: str
    category: str           # "force" | "moment"
    reaction_dir: Vec3


@dataclass(eq=False)
class LinearSystem:
    K: scipy.sparse.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    mesh: Mesh1D
    form: Formulation
    model: BeamModel
    B: scipy.sparse.csr_matrix | None = None
    g: np.ndarray | None = None
    rows_info: list[RowInfo] = dc_field(default_factory=list)

    @property
    def n_constraints(self) -> int:
        return 0 if self.B is None else self.B.shape[0]


_TERMS = ("stretch", "shear", "bend", "twist")


def _element_factors(term: str, form: Formulation, fr: FrameSample, mat: Material,
                     sec: CrossSection, shu: np.ndarray, sha: np.ndarray,
                     nu: int, na: int) -> np.ndarray:
    """Factor G (rows x n_local) of one term's integrand: contribution w G^T G."""
    t = fr.t
    n = nu + na
    if term == "stretch":
        G = np.zeros((1, n))
        G[0, :nu] = np.outer(shu[1], t).ravel()
        return np.sqrt(mat.E * sec.area) * G
    if term == "shear":
        G = np.zeros((3, n))
        G[:, :nu] = np.kron(shu[1], normal_projector(t))
        G[:, nu:] = np.kron(sha[0], skew(t))
        return np.sqrt(mat.G * sec.area) * G
    if term == "bend":
        CI = inertia_factor(sec, t)
        if form.euler_bernoulli:
            G = np.zeros((CI.shape[0], n))
            G[:, :nu] = np.kron(shu[1], CI @ skew(fr.kappa)) + np.kron(shu[2], CI @ skew(t))
            G[:, nu:] = np.outer(CI @ fr.kappa, sha[0])
        else:
            G = np.zeros((CI.shape[0], n))
            G[:, nu:] = np.kron(sha[1], CI)
        return np.sqrt(mat.E) * G
    if term == "twist":
        G = np.zeros((1, n))
        if form.euler_bernoulli:
            G[0, :nu] = np.outer(shu[1], np.cross(t, fr.kappa)).ravel()
            G[0, nu:] = sha[1]
        else:
            G[0, nu:] = np.outer(sha[1], t).ravel()
        return np.sqrt(mat.G * sec.polar) * G
    raise ValueError(f"unknown term {term!r}")


def assemble_stiffness(model: BeamModel, mesh: Mesh1D, form: Formulation,
                       policy: str = "full", terms: tuple[str, ...] = _TERMS) -> LinearSystem:
    """Assemble K = K_stretch + K_shear + K_bend + K_twist (shear omitted for
    Euler-Bernoulli). Under the reduced policy only stretch and shear use the
    2-point rule; bend and twist always keep the full rule."""
    dm = DofMap(mesh, form)
    rules = quadrature(form, policy)
    active = [tm for tm in terms if not (tm == "shear" and form.euler_bernoulli)]
    nderiv_u = 2 if form.euler_bernoulli else 1
    curve = model.curve

    rows, cols, vals = [], [], []
    for e in range(mesh.n_elements):
        s0, h = mesh.element(e)
        dofs_u = dm.element_dofs("u", e)
        dofs_a = dm.element_dofs(form.angle_field, e)
        nu, na = len(dofs_u), len(dofs_a)
        edofs = np.concatenate([dofs_u, dofs_a])
        ke = np.zeros((nu + na, nu + na))

        by_rule: dict[int, list[str]] = {}
        for tm in active:
            by_rule.setdefault(id(getattr(rules, tm)), []).append(tm)
        for rule_id, tms in by_rule.items():
            rule = getattr(rules, tms[0])
            spts, w = rule.on_element(s0, h)
            for q in range(len(w)):
                fr = curve.frame(spts[q])
                xi = float(rule.points[q])
                shu = shape_eval(form.midline, h, xi, nderiv=nderiv_u)
                sha = shape_eval(form.angle, h, xi, nderiv=1)
                for tm in tms:
                    G = _element_factors(tm, form, fr, model.material, model.section,
                                         shu, sha, nu, na)
                    ke += w[q] * (G.T @ G)

        rows.append(np.repeat(edofs, len(edofs)))
        cols.append(np.tile(edofs, len(edofs)))
        vals.append(ke.ravel())

    K = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dm.ndof, dm.ndof),
    ).tocsr()
    return LinearSystem(K=K, rhs=np.zeros(dm.ndof), dofmap=dm, mesh=mesh,
                        form=form, model=model)


def _project_normal(value: Vec3, t: Vec3, what: str) -> Vec3:
    value = np.asarray(value, dtype=float)
    tangential = float(t @ value)
    if abs(tangential) > 1e-12 * max(np.linalg.norm(value), 1e-30):
        warnings.warn(f"{what} has a tangential component {tangential:.3e}; projecting "
                      "onto the normal plane")
        value = value - tangential * t
    return value


def _add_end_row(rhs: np.ndarray, dm: DofMap, field: str, end: str,
                 direction, scale: float = 1.0, deriv: int = 0):
    idx, coeff = dm.end_functional(field, end, np.asarray(direction, float), deriv=deriv)
    rhs[idx] += scale * coeff


def assemble_load(model: BeamModel, mesh: Mesh1D, form: Formulation) -> np.ndarray:
    """Load vector: |A| integral of f . v_mid (full quadrature) plus end terms.

    Natural boundary values (prescribed resultants) enter through the end
    bracket with sign +1 at s = L and -1 at s = 0; concentrated applied end
    forces/moments from the load case enter with + sign at both ends.
    """
    dm = DofMap(mesh, form)
    curve = model.curve
    rhs = np.zeros(dm.ndof)

    if model.loads.body is not None:
        rule = quadrature(form, "full").bend
        area = model.section.area
        for e in range(mesh.n_elements):
            s0, h = mesh.element(e)
            dofs_u = dm.element_dofs("u", e)
            spts, w = rule.on_element(s0, h)
            for q in range(len(w)):
                f = np.asarray(model.loads.body(spts[q]), dtype=float)
                shu = shape_eval(form.midline, h, float(rule.points[q]), nderiv=0)
                rhs[dofs_u] += w[q] * area * np.outer(shu[0], f).ravel()

    for end, sgn in (("start", -1.0), ("end", +1.0)):
        fr = curve.frame(0.0 if end == "start" else curve.length)
        t = fr.t
        bc = model.bc(end)

        if bc.stretching.kind == "natural":
            nbar = float(bc.stretching.value)
            if nbar != 0.0:
                _add_end_row(rhs, dm, "u", end, nbar * t, scale=sgn)
        if bc.shearing.kind == "natural":
            sbar = _project_normal(bc.shearing.value, t, f"natural shear value at {end}")
            if np.any(sbar):
                _add_end_row(rhs, dm, "u", end, sbar, scale=sgn)
        if bc.bending.kind == "natural":
            mbar = _project_normal(bc.bending.value, t, f"natural moment value at {end}")
            if np.any(mbar):
                if form.euler_bernoulli:
                    _add_end_row(rhs, dm, "u", end, np.cross(mbar, t), scale=sgn, deriv=1)
                else:
                    _add_end_row(rhs, dm, "theta", end, mbar, scale=sgn)
        if bc.twisting.kind == "natural":
            tbar = float(bc.twisting.value)
            if tbar != 0.0:
                if form.euler_bernoulli:
                    _add_end_row(rhs, dm, "theta_t", end, [tbar], scale=sgn)
                else:
                    _add_end_row(rhs, dm, "theta", end, tbar * t, scale=sgn)

        force = model.loads.force_start if end == "start" else model.loads.force_end
        moment = model.loads.moment_start if end == "start" else model.loads.moment_end
        if force is not None and np.any(force):
            _add_end_row(rhs, dm, "u", end, force)
        if moment is not None and np.any(moment):
            mperp = moment - float(t @ moment) * t
            mtang = float(t @ moment)
            if form.euler_bernoulli:
                if np.any(mperp):
                    _add_end_row(rhs, dm, "u", end, np.cross(mperp, t), deriv=1)
                if mtang != 0.0:
                    _add_end_row(rhs, dm, "theta_t", end, [mtang])
            else:
                _add_end_row(rhs, dm, "theta", end, moment)

    return rhs


def _collect_constraint_rows(system: LinearSystem):
    dm, form, model = system.dofmap, system.form, system.model
    curve = model.curve
    entries = []          # (row_index, dof_indices, coeffs)
    values = []
    infos: list[RowInfo] = []

    def add(field, end, direction, value, info: RowInfo, deriv=0):
        idx, coeff = dm.end_functional(field, end, np.asarray(direction, float), deriv=deriv)
        entries.append((len(values), idx, coeff))
        values.append(float(value))
        infos.append(info)

    from .geometry import orthonormal_completion

    for end in ("start", "end"):
        fr = curve.frame(0.0 if end == "start" else curve.length)
        t = fr.t
        n1, n2 = orthonormal_completion(t)
        bc = model.bc(end)

        if bc.stretching.kind == "essential":
            add("u", end, t, float(bc.stretching.value),
                RowInfo(end, "stretching", "force", t))
        if bc.shearing.kind == "essential":
            ubar = _project_normal(bc.shearing.value, t, f"essential shear value at {end}")
            for d in (n1, n2):
                add("u", end, d, float(d @ ubar), RowInfo(end, "shearing", "force", d))
        if bc.bending.kind == "essential":
            thbar = _project_normal(bc.bending.value, t, f"essential bending value at {end}")
            if form.euler_bernoulli:
                # rotation Q theta = t x u'; prescribing it fixes Q u' = thbar x t
                target = np.cross(thbar, t)
                for d in (n1, n2):
                    add("u", end, d, float(d @ target),
                        RowInfo(end, "bending", "moment", np.cross(t, d)), deriv=1)
            else:
                for d in (n1, n2):
                    add("theta", end, d, float(d @ thbar),
                        RowInfo(end, "bending", "moment", d))
        if bc.twisting.kind == "essential":
            if form.euler_bernoulli:
                add("theta_t", end, [1.0], float(bc.twisting.value),
                    RowInfo(end, "twisting", "moment", t))
            else:
                add("theta", end, t, float(bc.twisting.value),
                    RowInfo(end, "twisting", "moment", t))

    for pc in model.constraints:
        d = np.asarray(pc.direction, float)
        if pc.field == "u":
            add("u", pc.end, d, pc.value, RowInfo(pc.end, "point", "force", d))
        elif pc.field == "theta" and not form.euler_bernoulli:
            add("theta", pc.end, d, pc.value, RowInfo(pc.end, "point", "moment", d))
        elif pc.field == "theta_t" and form.euler_bernoulli:
            add("theta_t", pc.end, [float(d[0]) if d.ndim else float(d)], pc.value,
                RowInfo(pc.end, "point", "moment", None))
        else:
            raise ValueError(f"point constraint field {pc.field!r} not available "
                             f"for formulation {form.name}")

    return entries, np.asarray(values), infos


def apply_essential_bcs(system: LinearSystem) -> LinearSystem:
    """Append the essential conditions as Lagrange-multiplier rows.

    Linearly dependent but consistent rows are pruned with a warning;
    inconsistent dependent rows raise ConstraintConflictError.
    """
    entries, values, infos = _collect_constraint_rows(system)
    m = len(values)
    if m == 0:
        system.B = None
        system.g = None
        system.rows_info = []
        return system

    Bd = np.zeros((m, system.dofmap.ndof))
    for r, idx, coeff in entries:
        Bd[r, idx] += coeff

    _, R, piv = scipy.linalg.qr(Bd.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(Bd.shape) * np.finfo(float).eps * (diag[0] if len(diag) else 1.0)
    rank = int(np.sum(diag > max(tol, 1e-12)))
    keep = sorted(piv[:rank])
    if rank < m:
        dropped = [j for j in range(m) if j not in keep]
        Bk = Bd[keep]
        for j in dropped:
            c, *_ = np.linalg.lstsq(Bk.T, Bd[j], rcond=None)
            if abs(c @ values[keep] - values[j]) > 1e-9 * max(1.0, np.abs(values).max()):
                raise ConstraintConflictError(
                    f"constraint '{infos[j].label}' at {infos[j].end} contradicts "
                    "earlier constraints")
        warnings.warn(f"dropping {m - rank} redundant, consistent constraint row(s)")

    system.B = scipy.sparse.csr_matrix(Bd[keep])
    system.g = values[keep]
    system.rows_info = [infos[j] for j in keep]
    return system


def discretize(model: BeamModel, form: Formulation, n_elements: int,
               policy: str = "full") -> LinearSystem:
    """Mesh uniformly on arc length, assemble stiffness + loads, apply BCs."""
    mesh = Mesh1D.uniform(model.curve.length, n_elements)
    system = assemble_stiffness(model, mesh, form, policy)
    system.rhs = assemble_load(model, mesh, form)
    return apply_essential_bcs(system)
