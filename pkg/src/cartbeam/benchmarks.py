"""Analytical references, convergence/locking studies, and demo problems.

Two classical cantilever solutions serve as references: a straight beam of
unit depth under a transverse tip load, and a plane quarter-circle arc under
a radial tip load. Both are elasticity solutions that assume a parabolic
end-stress distribution the beam model cannot represent, so measured errors
eventually plateau; order fitting therefore only uses pre-plateau
refinements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import BCRow, BeamModel, BoundaryCondition, LoadCase, PointConstraint
from .discretization import formulation
from .geometry import CircularArc, Helix, HermiteSpline, LineSegment
from .postprocess import tip_displacement
from .section import Material, circle_section, unit_depth_family
from .solver import SolutionFields, solve_model


def analytic_straight_tip(P: float, E: float, nu: float, t: float, L: float) -> float:
    """Tip deflection u_y of a straight unit-depth cantilever under a tip load
    of magnitude P acting in -y:  u_y = -(P / 6EI) ((4 + 5 nu) t^2 L / 4 + 2 L^3),
    I = t^3 / 12."""
    if E <= 0 or t <= 0 or L <= 0:
        raise ValueError("E, t, L must be positive")
    I = t**3 / 12.0
    return -(P / (6.0 * E * I)) * ((4.0 + 5.0 * nu) * t**2 * L / 4.0 + 2.0 * L**3)


def analytic_quarter_arc_tip(P: float, E: float, a: float, b: float) -> float:
    """Tip deflection u_x of a plane quarter-circle unit-depth cantilever
    (inner radius a, outer radius b) under a radial tip load of magnitude P
    acting in -x:  u_x = -P pi (a^2 + b^2) / (E [(a^2 - b^2) + (a^2 + b^2) ln(b/a)])."""
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    num = P * math.pi * (a**2 + b**2)
    den = E * ((a**2 - b**2) + (a**2 + b**2) * math.log(b / a))
    return -num / den


DEFAULT_MATERIAL = Material(E=1e6, nu=0.3)


def make_straight_model(t: float, L: float = 10.0, P: float = 1.0,
                        material: Material = DEFAULT_MATERIAL) -> BeamModel:
    """Straight unit-depth cantilever along x, clamped at s=0, tip load -P e_y."""
    return BeamModel(
        curve=LineSegment([0.0, 0.0, 0.0], [L, 0.0, 0.0]),
        material=material,
        section=unit_depth_family().scale(t),
        bc_start=BoundaryCondition.clamped(),
        bc_end=BoundaryCondition.free(),
        loads=LoadCase(force_end=[0.0, -P, 0.0]),
    )


def make_quarter_arc_model(t: float, R: float = 1.0, P: float = 1.0,
                           material: Material = DEFAULT_MATERIAL) -> BeamModel:
    """Plane quarter-circle unit-depth cantilever of centerline radius R,
    clamped at (0, -R), free at (R, 0), radial tip load -P e_x."""
    return BeamModel(
        curve=CircularArc([0.0, 0.0, 0.0], R, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                          -np.pi / 2.0, 0.0),
        material=material,
        section=unit_depth_family().scale(t),
        bc_start=BoundaryCondition.clamped(),
        bc_end=BoundaryCondition.free(),
        loads=LoadCase(force_end=[-P, 0.0, 0.0]),
    )


_BENCHMARKS = {
    "straight": {"qoi": ("uy", 1)},
    "quarter_arc": {"qoi": ("ux", 0)},
}


@dataclass(eq=False)
class StudySpec:
    """One benchmark swept over formulations, quadrature policies, mesh sizes,
    and thicknesses."""

    benchmark: str
    formulations: list[str]
    quadrature: list[str]
    elements: list[int]
    thickness: list[float]
    material: Material = DEFAULT_MATERIAL
    load: float = 1.0
    length: float = 10.0
    radius: float = 1.0

    def __post_init__(self):
        if self.benchmark not in _BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}")
        if len(self.elements) == 0:
            raise ValueError("element list must not be empty")
        if any(n < 1 for n in self.elements):
            raise ValueError("element counts must be positive")
        if len(self.elements) > 1 and not all(np.diff(self.elements) > 0):
            raise ValueError("element counts must be strictly increasing")
        for name in self.formulations:
            formulation(name)
        for q in self.quadrature:
            if q not in ("full", "reduced"):
                raise ValueError(f"unknown quadrature policy {q!r}")

    @property
    def supports_order_fit(self) -> bool:
        return len(self.elements) >= 3

    @property
    def qoi_name(self) -> str:
        return _BENCHMARKS[self.benchmark]["qoi"][0]

    @property
    def qoi_index(self) -> int:
        return _BENCHMARKS[self.benchmark]["qoi"][1]

    def model(self, t: float) -> BeamModel:
        if self.benchmark == "straight":
            return make_straight_model(t, L=self.length, P=self.load, material=self.material)
        return make_quarter_arc_model(t, R=self.radius, P=self.load, material=self.material)

    def reference(self, t: float) -> float:
        if self.benchmark == "straight":
            return analytic_straight_tip(self.load, self.material.E, self.material.nu,
                                         t, self.length)
        return analytic_quarter_arc_tip(self.load, self.material.E,
                                        self.radius - t / 2.0, self.radius + t / 2.0)

    @classmethod
    def from_dict(cls, doc: dict) -> "StudySpec":
        mat = doc.get("material", {})
        material = Material(E=float(mat.get("E", 1e6)), G=mat.get("G"),
                            nu=mat.get("nu", 0.3 if "G" not in mat else None))
        return cls(
            benchmark=doc["benchmark"],
            formulations=list(doc.get("formulations", ["timoshenko_p2p1"])),
            quadrature=list(doc.get("quadrature", ["full"])),
            elements=[int(n) for n in doc["elements"]],
            thickness=[float(t) for t in doc.get("thickness", [0.1])],
            material=material,
            load=float(doc.get("load", 1.0)),
            length=float(doc.get("length", 10.0)),
            radius=float(doc.get("radius", 1.0)),
        )


def observed_orders(elements, errors) -> list[float]:
    """Observed order per refinement pair, log(e_i / e_{i+1}) / log(n_{i+1} / n_i)."""
    out = []
    for i in range(len(errors) - 1):
        if errors[i] <= 0 or errors[i + 1] <= 0:
            out.append(float("nan"))
        else:
            out.append(math.log(errors[i] / errors[i + 1])
                       / math.log(elements[i + 1] / elements[i]))
    return out


def plateau_pair_index(errors, drop: float = 0.2) -> int | None:
    """Index of the first refinement pair where the error fails to shrink by
    at least `drop` (20 percent); None when every refinement keeps converging."""
    for i in range(len(errors) - 1):
        if errors[i] <= 0 or errors[i + 1] > (1.0 - drop) * errors[i]:
            return i
    return None


def fitted_order(elements, errors) -> float | None:
    """Median of the observed pre-plateau pair orders (None if no usable pair)."""
    orders = observed_orders(elements, errors)
    cut = plateau_pair_index(errors)
    usable = orders if cut is None else orders[:cut]
    usable = [p for p in usable if np.isfinite(p)]
    if not usable:
        return None
    return float(np.median(usable))


@dataclass(eq=False)
class CellResult:
    benchmark: str
    formulation: str
    policy: str
    t: float
    elements: list[int]
    qoi: list[float]
    reference: float
    errors: list[float]
    rel_errors: list[float]
    pair_orders: list[float]
    plateau_pair: int | None
    order: float | None
    failures: dict[int, str] = field(default_factory=dict)


@dataclass(eq=False)
class ConvergenceReport:
    study: StudySpec
    cells: dict[tuple, CellResult] = field(default_factory=dict)

    def cell(self, formulation: str, policy: str, t: float) -> CellResult:
        return self.cells[(self.study.benchmark, formulation, policy, t)]

    def rows(self):
        """Flat rows (benchmark, formulation, quadrature, t, n_elem, qoi, error,
        rel_error, order) for CSV emission; order is blank for the coarsest mesh
        and whenever fewer than three meshes were run."""
        with_order = self.study.supports_order_fit
        for key, cell in sorted(self.cells.items(), key=lambda kv: repr(kv[0])):
            for i, n in enumerate(cell.elements):
                order = ""
                if with_order and i > 0 and np.isfinite(cell.pair_orders[i - 1]):
                    order = cell.pair_orders[i - 1]
                yield (cell.benchmark, cell.formulation, cell.policy, cell.t, n,
                       cell.qoi[i], cell.errors[i], cell.rel_errors[i], order)


def run_convergence(study: StudySpec) -> ConvergenceReport:
    """Solve every (formulation, policy, thickness, mesh) cell, compare the tip
    deflection with the analytic reference, and fit pre-plateau orders."""
    report = ConvergenceReport(study=study)
    for name in study.formulations:
        form = formulation(name)
        for policy in study.quadrature:
            for t in study.thickness:
                model = study.model(t)
                ref = study.reference(t)
                qois, errs, rels, failures = [], [], [], {}
                used_elements = []
                for n in study.elements:
                    try:
                        sol = solve_model(model, form, n, policy)
                        q = float(tip_displacement(sol)[study.qoi_index])
                    except Exception as exc:  # noqa: BLE001 - study keeps going per cell
                        failures[n] = f"{type(exc).__name__}: {exc}"
                        continue
                    used_elements.append(n)
                    qois.append(q)
                    errs.append(abs(q - ref))
                    rels.append(abs(q - ref) / abs(ref))
                orders = observed_orders(used_elements, errs)
                key = (study.benchmark, name, policy, t)
                report.cells[key] = CellResult(
                    benchmark=study.benchmark, formulation=name, policy=policy, t=t,
                    elements=used_elements, qoi=qois, reference=ref, errors=errs,
                    rel_errors=rels, pair_orders=orders,
                    plateau_pair=plateau_pair_index(errs),
                    order=fitted_order(used_elements, errs) if study.supports_order_fit else None,
                    failures=failures,
                )
    return report


@dataclass(eq=False)
class LockingReport:
    study: StudySpec
    rel_errors: dict[tuple, float] = field(default_factory=dict)

    def rel_error(self, formulation: str, policy: str, t: float, n: int) -> float:
        return self.rel_errors[(formulation, policy, t, n)]

    def full_over_reduced(self, formulation: str, t: float, n: int) -> float:
        return (self.rel_error(formulation, "full", t, n)
                / self.rel_error(formulation, "reduced", t, n))

    def thickness_ratio(self, formulation: str, policy: str, t_big: float,
                        t_small: float, n: int) -> float:
        return (self.rel_error(formulation, policy, t_small, n)
                / self.rel_error(formulation, policy, t_big, n))


def run_locking_study(study: StudySpec) -> LockingReport:
    """Relative tip errors over (formulation, policy, thickness, mesh), used to
    compare quadrature policies on curved geometry and thicknesses on straight."""
    report = LockingReport(study=study)
    for name in study.formulations:
        form = formulation(name)
        for policy in study.quadrature:
            for t in study.thickness:
                model = study.model(t)
                ref = study.reference(t)
                for n in study.elements:
                    sol = solve_model(model, form, n, policy)
                    q = float(tip_displacement(sol)[study.qoi_index])
                    report.rel_errors[(name, policy, t, n)] = abs(q - ref) / abs(ref)
    return report


def _s_curve(amplitude: float = 0.6, height: float = 4.0, n_knots: int = 9) -> HermiteSpline:
    """Plane S-shaped midline x = A sin(2 pi y / H) for y in [0, H]; curvature
    changes sign at mid-height and vanishes at both ends and the inflection."""
    y = np.linspace(0.0, height, n_knots)
    pts = np.column_stack([amplitude * np.sin(2.0 * np.pi * y / height), y,
                           np.zeros(n_knots)])
    dy = y[1] - y[0]
    slope0 = amplitude * (2.0 * np.pi / height) * np.cos(0.0)
    t0 = np.array([slope0 * dy, dy, 0.0])
    t1 = np.array([slope0 * dy, dy, 0.0])
    return HermiteSpline(pts, t0, t1)


@dataclass(eq=False)
class DemoCase:
    name: str
    model: BeamModel
    formulation: str
    n_elements: int
    policy: str
    description: str


def demo_configs(material: Material = DEFAULT_MATERIAL) -> list[DemoCase]:
    """Curvature-coupling demonstration problems.

    * s_curve_end_torque: twisting moment at the free end of a plane S-beam
      clamped at the top; curvature couples twist into bending, so the
      midline picks up a nonzero out-of-plane (normal-plane) displacement.
    * s_curve_transverse_load: in-plane transverse point load on the same
      S-beam; for a plane curve the in-plane problem decouples exactly from
      twist, so theta_t stays identically zero (a pure bending problem).
    * helix_spring_axial: helical spring pinned and torsionally held at one
      end, guided at the other end so it can move only along the helix axis,
      compressed by an axial point load.
    * straight_end_torque: control case, a straight shaft under end torque
      twists without any midline displacement.
    """
    demos = []

    s_curve = _s_curve()
    sec = circle_section(0.12)
    t_start = s_curve.frame(0.0).t

    demos.append(DemoCase(
        name="s_curve_end_torque",
        model=BeamModel(curve=_s_curve(), material=material, section=sec,
                        bc_start=BoundaryCondition.free(),
                        bc_end=BoundaryCondition.clamped(),
                        loads=LoadCase(moment_start=0.1 * t_start)),
        formulation="timoshenko_h3p2", n_elements=24, policy="reduced",
        description="plane S-beam, twisting moment at the free end",
    ))

    inplane = np.cross(np.array([0.0, 0.0, 1.0]), t_start)
    inplane = inplane / np.linalg.norm(inplane)
    demos.append(DemoCase(
        name="s_curve_transverse_load",
        model=BeamModel(curve=_s_curve(), material=material, section=sec,
                        bc_start=BoundaryCondition.free(),
                        bc_end=BoundaryCondition.clamped(),
                        loads=LoadCase(force_start=0.5 * inplane)),
        formulation="timoshenko_h3p2", n_elements=24, policy="reduced",
        description="plane S-beam, in-plane transverse point load at the free end",
    ))

    helix = Helix([0.0, 0.0, 0.0], 1.0, 0.15, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                  0.0, 6.0 * np.pi)
    pinned_twist_held = BoundaryCondition(
        stretching=BCRow("essential", 0.0),
        shearing=BCRow("essential", np.zeros(3)),
        bending=BCRow("natural", np.zeros(3)),
        twisting=BCRow("essential", 0.0),
    )
    demos.append(DemoCase(
        name="helix_spring_axial",
        model=BeamModel(curve=helix, material=material, section=circle_section(0.1),
                        bc_start=pinned_twist_held,
                        bc_end=BoundaryCondition.free(),
                        loads=LoadCase(force_end=[0.0, 0.0, -0.1]),
                        constraints=[
                            PointConstraint("end", "u", [1.0, 0.0, 0.0]),
                            PointConstraint("end", "u", [0.0, 1.0, 0.0]),
                        ]),
        formulation="timoshenko_h3p2", n_elements=48, policy="reduced",
        description="helical spring pushed along its axis, guided end",
    ))

    demos.append(DemoCase(
        name="straight_end_torque",
        model=BeamModel(curve=LineSegment([0.0, 0.0, 0.0], [4.0, 0.0, 0.0]),
                        material=material, section=sec,
                        bc_start=BoundaryCondition.clamped(),
                        bc_end=BoundaryCondition.free(),
                        loads=LoadCase(moment_end=[0.1, 0.0, 0.0])),
        formulation="timoshenko_h3p2", n_elements=8, policy="full",
        description="straight shaft under end torque (pure twist control case)",
    ))
    return demos


def solve_demo(demo: DemoCase) -> SolutionFields:
    return solve_model(demo.model, formulation(demo.formulation),
                       demo.n_elements, demo.policy)
