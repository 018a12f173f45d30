"""Material and cross-section properties.

A cross-section enters the beam equations only through its area |A|, the
tensor of area moments of inertia I_sigma (built pointwise from the local
tangent), and the polar inertia J_sigma = integral of zeta . zeta over the
section. Isotropic sections (circles, and the unit-depth rectangle used by
the planar benchmarks) need no orientation data; rectangles carry a
reference director that fixes how the principal moments sit in the normal
plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Vec3, normal_projector, unit


class DirectorDegeneracyError(ValueError):
    """Section director is (numerically) parallel to the tangent."""


@dataclass(frozen=True)
class Material:
    """Linear elastic material; construct from (E, nu) or (E, G).

    No shear correction factor is applied anywhere: the shear and torsion
    stiffnesses use G|A| and G J_sigma as they stand.
    """

    E: float
    G: float = None  # type: ignore[assignment]
    nu: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.E is None or self.E <= 0:
            raise ValueError("elastic modulus E must be positive")
        if self.G is None:
            if self.nu is None:
                raise ValueError("provide either G or nu")
            object.__setattr__(self, "G", self.E / (2.0 * (1.0 + self.nu)))
        if self.G <= 0:
            raise ValueError("shear modulus G must be positive")


@dataclass(frozen=True)
class CrossSection:
    """Section properties: area, polar inertia, and bending inertia data.

    Exactly one of `inertia_iso` (isotropic: I_sigma = I Q) or
    `inertia_principal = (I1, I2)` (oriented; requires `director`) is set.
    For an oriented rectangle the director points along the side of extent h,
    so I1 = w h^3 / 12 resists bending about the axis perpendicular to both
    the tangent and the director.
    """

    area: float
    polar: float
    inertia_iso: float | None = None
    inertia_principal: tuple[float, float] | None = None
    director: Vec3 | None = None

    def __post_init__(self):
        if self.area <= 0 or self.polar <= 0:
            raise ValueError("area and polar inertia must be positive")
        if (self.inertia_iso is None) == (self.inertia_principal is None):
            raise ValueError("set exactly one of inertia_iso / inertia_principal")
        if self.inertia_iso is not None and self.inertia_iso <= 0:
            raise ValueError("inertia must be positive")
        if self.inertia_principal is not None:
            i1, i2 = self.inertia_principal
            if i1 <= 0 or i2 <= 0:
                raise ValueError("principal inertias must be positive")
            if self.director is None:
                raise ValueError("oriented section requires a director")
            object.__setattr__(self, "director", unit(np.asarray(self.director, float)))

    @property
    def is_isotropic(self) -> bool:
        return self.inertia_iso is not None


def rect_section(w: float, h: float, director) -> CrossSection:
    """Rectangle w x h: I1 = w h^3/12, I2 = w^3 h/12, J = (w h^3 + w^3 h)/12."""
    if w <= 0 or h <= 0:
        raise ValueError("rectangle sides must be positive")
    return CrossSection(
        area=w * h,
        polar=(w * h**3 + w**3 * h) / 12.0,
        inertia_principal=(w * h**3 / 12.0, w**3 * h / 12.0),
        director=np.asarray(director, float),
    )


def circle_section(d: float) -> CrossSection:
    """Solid circle of diameter d: A = pi d^2/4, I = pi d^4/64, J = pi d^4/32."""
    if d <= 0:
        raise ValueError("circle diameter must be positive")
    return CrossSection(area=np.pi * d**2 / 4.0, polar=np.pi * d**4 / 32.0,
                        inertia_iso=np.pi * d**4 / 64.0)


def unit_depth_rect_section(t: float) -> CrossSection:
    """Unit-depth rectangle of thickness t, modeled as isotropic.

    A = t and I = t^3/12 match the plane benchmark formulas; the polar value
    is 2I so the isotropic inertia-tensor trace identity holds. Twist never
    activates in the planar problems this shape exists for.
    """
    if t <= 0:
        raise ValueError("thickness must be positive")
    i = t**3 / 12.0
    return CrossSection(area=t, polar=2.0 * i, inertia_iso=i)


def section_from_shape(shape: dict) -> CrossSection:
    """Build a section from its wire-format description (see the cli module)."""
    name = shape.get("shape")
    if name == "rect":
        director = shape.get("director")
        if director is None:
            raise ValueError("rect section requires a director")
        return rect_section(float(shape["w"]), float(shape["h"]), director)
    if name == "circle":
        return circle_section(float(shape["d"]))
    if name == "unit_depth_rect":
        return unit_depth_rect_section(float(shape["t"]))
    raise ValueError(f"unknown section shape {name!r}")


def inertia_tensor(section: CrossSection, t: Vec3) -> np.ndarray:
    """Area-moment tensor I_sigma at a point with unit tangent t.

    Isotropic: I_sigma = I (I3 - t (x) t). Oriented: the constant director is
    projected onto the normal plane, n1 = normalized projection, n2 = t x n1,
    and I_sigma = I1 n2 (x) n2 + I2 n1 (x) n1. Always I_sigma t = 0.
    """
    t = np.asarray(t, dtype=float)
    if section.inertia_iso is not None:
        return section.inertia_iso * normal_projector(t)
    d = section.director
    dp = d - (d @ t) * t
    ndp = np.linalg.norm(dp)
    if ndp < 1e-6:
        raise DirectorDegeneracyError("section director is parallel to the tangent")
    n1 = dp / ndp
    n2 = np.cross(t, n1)
    i1, i2 = section.inertia_principal
    return i1 * np.outer(n2, n2) + i2 * np.outer(n1, n1)


def inertia_factor(section: CrossSection, t: Vec3) -> np.ndarray:
    """Matrix C with C.T @ C = I_sigma(t); used for exactly symmetric assembly."""
    t = np.asarray(t, dtype=float)
    if section.inertia_iso is not None:
        return np.sqrt(section.inertia_iso) * normal_projector(t)
    d = section.director
    dp = d - (d @ t) * t
    ndp = np.linalg.norm(dp)
    if ndp < 1e-6:
        raise DirectorDegeneracyError("section director is parallel to the tangent")
    n1 = dp / ndp
    n2 = np.cross(t, n1)
    i1, i2 = section.inertia_principal
    return np.vstack([np.sqrt(i1) * n2, np.sqrt(i2) * n1])


@dataclass(frozen=True)
class ThicknessFamily:
    """One-parameter family of geometrically similar sections.

    The reference section corresponds to t = 1; area scales with
    t**area_exponent and all inertias with t**inertia_exponent. The default
    exponents (2, 4) describe sections whose full diameter scales with t; the
    unit-depth family (1, 3) scales only the in-plane thickness.
    """

    reference: CrossSection
    area_exponent: int = 2
    inertia_exponent: int = 4

    def scale(self, t: float) -> CrossSection:
        if t <= 0:
            raise ValueError("thickness parameter must be positive")
        ref = self.reference
        fa = t**self.area_exponent
        fi = t**self.inertia_exponent
        principal = None
        if ref.inertia_principal is not None:
            principal = (ref.inertia_principal[0] * fi, ref.inertia_principal[1] * fi)
        return CrossSection(
            area=ref.area * fa,
            polar=ref.polar * fi,
            inertia_iso=None if ref.inertia_iso is None else ref.inertia_iso * fi,
            inertia_principal=principal,
            director=ref.director,
        )


def unit_depth_family() -> ThicknessFamily:
    return ThicknessFamily(unit_depth_rect_section(1.0), area_exponent=1, inertia_exponent=3)
