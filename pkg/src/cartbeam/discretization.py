"""Meshes on arc length, shape functions, DOF maps, and quadrature rules.

All interpolation is polynomial in the arc length, so directional
derivatives along the beam are plain d/ds of the element polynomials and
the element Jacobian is the element length. Cubic Hermite (H3) elements
carry value and arc-length-derivative degrees of freedom, which makes their
element matrices independent of the underlying curve parametrization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UnsupportedOrderError(ValueError):
    """A derivative order beyond what the basis supports was requested."""


class FormulationError(ValueError):
    """Incompatible space combination (e.g. Euler-Bernoulli without H3 midline)."""


@dataclass(eq=False)
class Mesh1D:
    """Nodes 0 = s_0 < ... < s_N = L on arc length; elements are node pairs."""

    nodes: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes.ndim != 1 or len(self.nodes) < 2:
            raise ValueError("mesh needs at least two nodes")
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("mesh nodes must be strictly increasing")
        if abs(self.nodes[0]) > 1e-12 * max(self.nodes[-1], 1.0):
            raise ValueError("mesh must start at s = 0")

    @classmethod
    def uniform(cls, length: float, n_elements: int) -> "Mesh1D":
        if n_elements < 1:
            raise ValueError("need at least one element")
        return cls(np.linspace(0.0, length, n_elements + 1))

    @property
    def length(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_elements(self) -> int:
        return len(self.nodes) - 1

    def element(self, e: int) -> tuple[float, float]:
        """(start arc length, element length) of element e."""
        return float(self.nodes[e]), float(self.nodes[e + 1] - self.nodes[e])

    def locate(self, s: float) -> tuple[int, float]:
        """Element index and local coordinate xi in [0, 1] containing s."""
        e = int(np.clip(np.searchsorted(self.nodes, s, side="right") - 1, 0, self.n_elements - 1))
        s0, h = self.element(e)
        return e, (s - s0) / h


_N_BASIS = {"P1": 2, "P2": 3, "H3": 4}
_MAX_DERIV = {"P1": 1, "P2": 1, "H3": 2}


def shape_eval(kind: str, h: float, xi: float, nderiv: int = 1) -> np.ndarray:
    """Basis values and arc-length derivatives at local coordinate xi in [0, 1].

    Returns an array of shape (nderiv + 1, n_basis); row k holds d^k/ds^k.
    H3 rows follow the DOF order (value_left, slope_left, value_right,
    slope_right) with slopes taken with respect to arc length.
    """
    if kind not in _N_BASIS:
        raise ValueError(f"unknown basis kind {kind!r}")
    if nderiv > _MAX_DERIV[kind]:
        raise UnsupportedOrderError(f"{kind} basis supports d^{_MAX_DERIV[kind]}/ds at most")
    out = np.empty((nderiv + 1, _N_BASIS[kind]))
    if kind == "P1":
        out[0] = [1.0 - xi, xi]
        if nderiv >= 1:
            out[1] = np.array([-1.0, 1.0]) / h
    elif kind == "P2":
        out[0] = [(1 - xi) * (1 - 2 * xi), 4 * xi * (1 - xi), xi * (2 * xi - 1)]
        if nderiv >= 1:
            out[1] = np.array([4 * xi - 3, 4 - 8 * xi, 4 * xi - 1]) / h
    else:
        out[0] = [1 - 3 * xi**2 + 2 * xi**3, h * (xi - 2 * xi**2 + xi**3),
                  3 * xi**2 - 2 * xi**3, h * (xi**3 - xi**2)]
        if nderiv >= 1:
            out[1] = np.array([-6 * xi + 6 * xi**2, h * (1 - 4 * xi + 3 * xi**2),
                               6 * xi - 6 * xi**2, h * (3 * xi**2 - 2 * xi)]) / h
        if nderiv >= 2:
            out[2] = np.array([-6 + 12 * xi, h * (-4 + 6 * xi),
                               6 - 12 * xi, h * (6 * xi - 2)]) / h**2
    return out


@dataclass(frozen=True)
class Formulation:
    """Element formulation: midline space, angle space, and kinematics flavor."""

    name: str
    midline: str
    angle: str
    angle_ncomp: int
    euler_bernoulli: bool
    full_points: int

    def __post_init__(self):
        if self.euler_bernoulli and self.midline != "H3":
            raise FormulationError("Euler-Bernoulli kinematics needs the H3 midline space")

    @property
    def angle_field(self) -> str:
        return "theta_t" if self.euler_bernoulli else "theta"


FORMULATIONS = {
    "timoshenko_p2p1": Formulation("timoshenko_p2p1", "P2", "P1", 3, False, 3),
    "timoshenko_h3p2": Formulation("timoshenko_h3p2", "H3", "P2", 3, False, 4),
    "euler_bernoulli_h3": Formulation("euler_bernoulli_h3", "H3", "P2", 1, True, 4),
}


def formulation(name: str) -> Formulation:
    try:
        return FORMULATIONS[name]
    except KeyError:
        raise ValueError(f"unknown formulation {name!r}; "
                         f"choose one of {sorted(FORMULATIONS)}") from None


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre points and weights on the reference element [0, 1]."""

    points: np.ndarray
    weights: np.ndarray
    role: str

    def on_element(self, s0: float, h: float) -> tuple[np.ndarray, np.ndarray]:
        return s0 + self.points * h, self.weights * h


def gauss_rule(n: int, role: str = "full") -> QuadratureRule:
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(points=0.5 * (x + 1.0), weights=0.5 * w, role=role)


@dataclass(frozen=True)
class TermRules:
    """Quadrature rule per bilinear-form term class."""

    stretch: QuadratureRule
    shear: QuadratureRule
    bend: QuadratureRule
    twist: QuadratureRule


def quadrature(form: Formulation, policy: str = "full") -> TermRules:
    """Term-class rules: `reduced` drops only stretch and shear to 2-point Gauss."""
    if policy not in ("full", "reduced"):
        raise ValueError(f"unknown quadrature policy {policy!r}")
    full = gauss_rule(form.full_points, "full")
    if policy == "reduced":
        red = gauss_rule(2, "reduced")
        return TermRules(stretch=red, shear=red, bend=full, twist=full)
    return TermRules(stretch=full, shear=full, bend=full, twist=full)


@dataclass(eq=False)
class FieldInfo:
    kind: str
    ncomp: int
    node_s: np.ndarray          # arc-length position of each DOF node
    node_dofs: np.ndarray       # (n_nodes, dofs_per_node) global indices
    elem_dofs: np.ndarray       # (n_elements, n_basis * ncomp) global indices
    n_dofs: int


class DofMap:
    """Global DOF numbering for the fields of a formulation on a mesh.

    Midline DOFs come first, angle DOFs after, each block in mesh order.
    Element-local DOF order is basis-major: for scalar basis function b and
    component a the local index is b * ncomp + a, matching `shape_eval` rows.
    """

    def __init__(self, mesh: Mesh1D, form: Formulation):
        self.mesh = mesh
        self.form = form
        self.fields: dict[str, FieldInfo] = {}
        offset = 0
        offset = self._add_field("u", form.midline, 3, offset)
        offset = self._add_field(form.angle_field, form.angle, form.angle_ncomp, offset)
        self.ndof = offset

    def _add_field(self, name: str, kind: str, ncomp: int, offset: int) -> int:
        mesh = self.mesh
        n_el = mesh.n_elements
        if kind in ("P1", "H3"):
            node_s = mesh.nodes.copy()
        else:  # P2: vertices and element midpoints
            node_s = np.sort(np.concatenate([mesh.nodes, 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])]))
        per_node = 2 * ncomp if kind == "H3" else ncomp
        n_nodes = len(node_s)
        node_dofs = offset + np.arange(n_nodes * per_node).reshape(n_nodes, per_node)
        elem_dofs = np.empty((n_el, _N_BASIS[kind] * ncomp), dtype=int)
        for e in range(n_el):
            if kind == "P1":
                nodes = [e, e + 1]
                blocks = [node_dofs[n] for n in nodes]
            elif kind == "P2":
                nodes = [2 * e, 2 * e + 1, 2 * e + 2]
                blocks = [node_dofs[n] for n in nodes]
            else:  # H3: (value_left, slope_left, value_right, slope_right)
                blocks = [node_dofs[e, :ncomp], node_dofs[e, ncomp:],
                          node_dofs[e + 1, :ncomp], node_dofs[e + 1, ncomp:]]
            elem_dofs[e] = np.concatenate(blocks)
        self.fields[name] = FieldInfo(kind=kind, ncomp=ncomp, node_s=node_s,
                                      node_dofs=node_dofs, elem_dofs=elem_dofs,
                                      n_dofs=n_nodes * per_node)
        return offset + n_nodes * per_node

    def element_dofs(self, name: str, e: int) -> np.ndarray:
        return self.fields[name].elem_dofs[e]

    def end_element(self, end: str) -> tuple[int, float]:
        """(element index, local xi) of a beam end ('start' or 'end')."""
        if end == "start":
            return 0, 0.0
        if end == "end":
            return self.mesh.n_elements - 1, 1.0
        raise ValueError(f"unknown end {end!r}")

    def end_functional(self, name: str, end: str, direction: np.ndarray,
                       deriv: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Row (dof indices, coefficients) of the functional d . field^(deriv)(end)."""
        info = self.fields[name]
        e, xi = self.end_element(end)
        _, h = self.mesh.element(e)
        sh = shape_eval(info.kind, h, xi, nderiv=deriv)[deriv]
        direction = np.atleast_1d(np.asarray(direction, dtype=float))
        coeffs = np.outer(sh, direction).ravel()
        keep = coeffs != 0.0
        return self.elem_dofs_of(name, e)[keep], coeffs[keep]

    def elem_dofs_of(self, name: str, e: int) -> np.ndarray:
        return self.fields[name].elem_dofs[e]
