"""Direct solution of the constrained (saddle-point) linear system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .assembly import LinearSystem
from .discretization import shape_eval


class SingularSystemError(RuntimeError):
    """The constrained system is structurally or numerically singular."""

    def __init__(self, message: str, n_rigid_modes: int | None = None):
        super().__init__(message)
        self.n_rigid_modes = n_rigid_modes


@dataclass(eq=False)
class FieldState:
    """Raw interpolated field data at one arc length."""

    s: float
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray | None
    theta: np.ndarray | None        # Timoshenko rotation vector
    dtheta: np.ndarray | None
    theta_t: float | None           # Euler-Bernoulli twist
    dtheta_t: float | None


@dataclass(eq=False)
class SolutionFields:
    """Solved coefficient vector plus multipliers, with field evaluation."""

    system: LinearSystem
    x: np.ndarray
    multipliers: np.ndarray

    @property
    def mesh(self):
        return self.system.mesh

    @property
    def form(self):
        return self.system.form

    @property
    def model(self):
        return self.system.model

    def _field_at(self, name: str, s: float, nderiv: int):
        dm = self.system.dofmap
        info = dm.fields[name]
        e, xi = self.mesh.locate(s)
        _, h = self.mesh.element(e)
        sh = shape_eval(info.kind, h, xi, nderiv=nderiv)
        coeff = self.x[info.elem_dofs[e]].reshape(-1, info.ncomp)
        return [row @ coeff for row in sh]

    def evaluate(self, s: float) -> FieldState:
        form = self.form
        if form.euler_bernoulli:
            u, du, d2u = self._field_at("u", s, 2)
            tt, dtt = self._field_at("theta_t", s, 1)
            return FieldState(s=s, u=u, du=du, d2u=d2u, theta=None, dtheta=None,
                              theta_t=float(tt[0]), dtheta_t=float(dtt[0]))
        u, du = self._field_at("u", s, 1)
        th, dth = self._field_at(form.angle_field, s, 1)
        return FieldState(s=s, u=u, du=du, d2u=None, theta=th, dtheta=dth,
                          theta_t=None, dtheta_t=None)

    @classmethod
    def from_functions(cls, system: LinearSystem, u=None, du=None,
                       theta=None, dtheta=None, theta_t=None) -> "SolutionFields":
        """Interpolate given field functions onto the discrete space (useful
        for manufactured-field checks). du/dtheta supply Hermite slope DOFs."""
        dm = system.dofmap
        x = np.zeros(dm.ndof)
        fns = {"u": (u, du), "theta": (theta, dtheta), "theta_t": (theta_t, None)}
        for name, info in dm.fields.items():
            fn, dfn = fns[name]
            if fn is None:
                continue
            for i, s in enumerate(info.node_s):
                val = np.atleast_1d(np.asarray(fn(s), dtype=float))
                x[info.node_dofs[i][:info.ncomp]] = val
                if info.kind == "H3":
                    if dfn is None:
                        raise ValueError(f"{name}: H3 interpolation needs the slope function")
                    x[info.node_dofs[i][info.ncomp:]] = np.atleast_1d(np.asarray(dfn(s), float))
        return cls(system=system, x=x, multipliers=np.zeros(system.n_constraints))


def rigid_modes(system: LinearSystem) -> np.ndarray:
    """Discrete representations of the six rigid-body modes, columns of (ndof, 6).

    Translations: u = e_a, theta = 0. Rotations about the origin: u = e_a x r(s),
    theta = e_a (twist component e_a . t for Euler-Bernoulli).
    """
    dm = system.dofmap
    curve = system.model.curve
    Z = np.zeros((dm.ndof, 6))
    eye = np.eye(3)

    frames = {}

    def frame(s):
        if s not in frames:
            frames[s] = curve.frame(s)
        return frames[s]

    uinfo = dm.fields["u"]
    for i, s in enumerate(uinfo.node_s):
        fr = frame(float(s))
        vdofs = uinfo.node_dofs[i][:3]
        for a in range(3):
            Z[vdofs, a] = eye[a]
            Z[vdofs, 3 + a] = np.cross(eye[a], fr.x)
        if uinfo.kind == "H3":
            ddofs = uinfo.node_dofs[i][3:]
            for a in range(3):
                Z[ddofs, 3 + a] = np.cross(eye[a], fr.t)

    ainfo = dm.fields[system.form.angle_field]
    for i, s in enumerate(ainfo.node_s):
        fr = frame(float(s))
        vdofs = ainfo.node_dofs[i][:ainfo.ncomp]
        for a in range(3):
            if system.form.euler_bernoulli:
                Z[vdofs, 3 + a] = float(eye[a] @ fr.t)
            else:
                Z[vdofs, 3 + a] = eye[a]
    return Z


def _free_rigid_mode_count(system: LinearSystem) -> int:
    Z = rigid_modes(system)
    if system.n_constraints == 0:
        return 6
    BZ = np.asarray((system.B @ Z))
    sv = np.linalg.svd(BZ, compute_uv=False)
    tol = max(BZ.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > max(tol, 1e-10)))
    return 6 - rank


def solve(system: LinearSystem) -> SolutionFields:
    """Factor the saddle-point system [[K, B^T], [B, 0]] and verify residuals.

    Deterministic sparse LU; raises SingularSystemError when unconstrained
    rigid modes remain or the factorization/residual checks fail.
    """
    n = system.K.shape[0]
    m = system.n_constraints
    free = _free_rigid_mode_count(system)
    if free > 0:
        raise SingularSystemError(
            f"system is singular: {free} unconstrained rigid-body mode(s)",
            n_rigid_modes=free)

    if m > 0:
        A = scipy.sparse.bmat([[system.K, system.B.T], [system.B, None]], format="csr")
        rhs = np.concatenate([system.rhs, system.g])
    else:
        A = system.K.tocsr()
        rhs = system.rhs

    # symmetric equilibration: most of the thin-beam ill-conditioning is plain
    # row/column scaling (stretch vs bend stiffness, Hermite slope DOFs)
    row_max = np.maximum(np.abs(A).max(axis=1).toarray().ravel(), 1e-300)
    d = 1.0 / np.sqrt(row_max)
    D = scipy.sparse.diags(d)
    As = (D @ A @ D).tocsc()

    solve_scaled = None
    try:
        lu = scipy.sparse.linalg.splu(As)
        solve_scaled = lambda b: d * lu.solve(d * b)
    except RuntimeError as exc:
        # thin beams push the condition number toward 1/eps and the sparse
        # elimination order can hit an exact zero pivot; retry densely (the
        # systems are small) and let the residual checks arbitrate
        if As.shape[0] > 20000:
            raise SingularSystemError(f"factorization failed: {exc}",
                                      n_rigid_modes=0) from exc
        try:
            dense = scipy.linalg.lu_factor(As.toarray())
            solve_scaled = lambda b: d * scipy.linalg.lu_solve(dense, d * b)
        except (scipy.linalg.LinAlgError, ValueError) as exc2:
            raise SingularSystemError(f"factorization failed: {exc2}",
                                      n_rigid_modes=0) from exc2

    sol = solve_scaled(rhs)
    for _ in range(2):  # iterative refinement on the unscaled system
        sol = sol + solve_scaled(rhs - A @ sol)
    if not np.all(np.isfinite(sol)):
        raise SingularSystemError("factorization produced non-finite values", n_rigid_modes=0)

    x, lam = sol[:n], sol[n:]
    knorm = float(np.abs(system.K).sum(axis=1).max())
    r1 = system.K @ x - system.rhs
    if m > 0:
        r1 = r1 + system.B.T @ lam
    bound = 1e-10 * (np.linalg.norm(system.rhs) + knorm * np.linalg.norm(x) + 1e-300)
    if np.linalg.norm(r1) > max(bound, 1e-300):
        raise SingularSystemError(
            f"equilibrium residual {np.linalg.norm(r1):.3e} exceeds {bound:.3e}; "
            "system is numerically singular")
    if m > 0:
        bnorm = float(np.abs(system.B).sum(axis=1).max())
        r2 = np.linalg.norm(system.B @ x - system.g)
        if r2 > 1e-10 * max(1.0, np.linalg.norm(system.g), bnorm * np.linalg.norm(x)):
            raise SingularSystemError(f"constraint residual {r2:.3e} too large")

    return SolutionFields(system=system, x=x, multipliers=lam)


def solve_model(model, form, n_elements: int, policy: str = "full") -> SolutionFields:
    from .assembly import discretize
    return solve(discretize(model, form, n_elements, policy))
