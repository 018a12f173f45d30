"""Beam midline geometry in global Cartesian coordinates.

Curves are described by a regular parametrization r(xi) and queried by arc
length s. The solve path only ever needs position, unit tangent t, and the
curvature vector kappa = dt/ds. The full moving frame (principal normal,
binormal, torsion) is provided so tests can cross-check against classical
differential geometry; it is undefined wherever kappa vanishes and nothing
in the solver depends on it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

Vec3 = np.ndarray


class DegenerateCurveError(ValueError):
    """The parametrization has (numerically) vanishing speed somewhere."""


class ZeroCurvatureError(ValueError):
    """Frenet data requested where |kappa| is below the straightness threshold."""


class AmbiguousProjectionError(ValueError):
    """Closest-point projection has several minimizers (outside the injectivity tube)."""


_SPEED_FLOOR = 1e-14


def unit(v: Vec3) -> Vec3:
    n = np.linalg.norm(v)
    if n < _SPEED_FLOOR:
        raise ValueError("cannot normalize a (near-)zero vector")
    return v / n


def skew(v: Vec3) -> np.ndarray:
    """Matrix S with S @ w = v x w."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def tangent_projector(t: Vec3) -> np.ndarray:
    """P = t (x) t, projection onto the tangent line."""
    return np.outer(t, t)


def normal_projector(t: Vec3) -> np.ndarray:
    """Q = I - t (x) t, projection onto the cross-section plane."""
    return np.eye(3) - np.outer(t, t)


def orthonormal_completion(t: Vec3) -> tuple[Vec3, Vec3]:
    """Deterministic pair (n1, n2) with {t, n1, n2} orthonormal.

    The pair is an arbitrary basis of the normal plane used to express planar
    constraints; no result may depend on the particular choice.
    """
    k = int(np.argmin(np.abs(t)))
    n1 = unit(np.cross(np.eye(3)[k], t))
    n2 = np.cross(t, n1)
    return n1, n2


@dataclass(eq=False)
class FrameSample:
    """Pointwise geometry sample: arc length, position, tangent, curvature vector."""

    s: float
    x: Vec3
    t: Vec3
    kappa: Vec3


@dataclass(eq=False)
class FrenetFrame:
    t: Vec3
    n: Vec3
    b: Vec3
    kappa: float
    tau: float


@dataclass(eq=False)
class ClosestPointResult:
    p: Vec3
    zeta: Vec3
    s: float


class ParamCurve:
    """Base class for regular parametric midlines r(xi), xi in [xi0, xi1]."""

    kind: str = "abstract"
    xi0: float
    xi1: float

    def point(self, xi: float) -> Vec3:
        raise NotImplementedError

    def d1(self, xi: float) -> Vec3:
        raise NotImplementedError

    def d2(self, xi: float) -> Vec3:
        raise NotImplementedError

    def d3(self, xi: float) -> Vec3:
        raise NotImplementedError

    @property
    def constant_speed(self) -> float | None:
        """|dr/dxi| when it is constant along the curve, else None."""
        return None

    def speed(self, xi: float) -> float:
        return float(np.linalg.norm(self.d1(xi)))

    def arclength(self, n_samples: int = 257) -> "ArcLengthMap":
        cached = getattr(self, "_arclength_map", None)
        if cached is None:
            cached = ArcLengthMap(self, n_samples)
            self._arclength_map = cached
        return cached

    @property
    def length(self) -> float:
        return self.arclength().length

    def frame(self, s: float) -> FrameSample:
        return eval_frame(self, s)

    def frenet(self, s: float, kappa_min: float | None = None) -> FrenetFrame:
        return frenet(self, s, kappa_min)

    def closest_point(self, x: Vec3) -> ClosestPointResult:
        return closest_point(self, x)


@dataclass(eq=False)
class LineSegment(ParamCurve):
    p0: Vec3
    p1: Vec3
    kind: str = field(default="line", init=False)

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        self.p1 = np.asarray(self.p1, dtype=float)
        self.xi0, self.xi1 = 0.0, 1.0
        if np.linalg.norm(self.p1 - self.p0) < _SPEED_FLOOR:
            raise DegenerateCurveError("line segment endpoints coincide")

    def point(self, xi):
        return self.p0 + xi * (self.p1 - self.p0)

    def d1(self, xi):
        return self.p1 - self.p0

    def d2(self, xi):
        return np.zeros(3)

    def d3(self, xi):
        return np.zeros(3)

    @property
    def constant_speed(self):
        return float(np.linalg.norm(self.p1 - self.p0))


def _checked_plane_basis(e1, e2) -> tuple[Vec3, Vec3]:
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    if abs(np.linalg.norm(e1) - 1.0) > 1e-6 or abs(np.linalg.norm(e2) - 1.0) > 1e-6:
        raise ValueError("plane basis vectors must be unit length")
    if abs(float(e1 @ e2)) > 1e-6:
        raise ValueError("plane basis vectors must be orthogonal")
    e1 = unit(e1)
    e2 = unit(e2 - (e2 @ e1) * e1)
    return e1, e2


@dataclass(eq=False)
class CircularArc(ParamCurve):
    """Arc r(phi) = center + R (cos(phi) e1 + sin(phi) e2), phi in [angle0, angle1]."""

    center: Vec3
    radius: float
    e1: Vec3
    e2: Vec3
    angle0: float
    angle1: float
    kind: str = field(default="arc", init=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("arc radius must be positive")
        if not self.angle1 > self.angle0:
            raise ValueError("arc angle range must be increasing")
        self.e1, self.e2 = _checked_plane_basis(self.e1, self.e2)
        self.xi0, self.xi1 = float(self.angle0), float(self.angle1)

    def point(self, xi):
        return self.center + self.radius * (np.cos(xi) * self.e1 + np.sin(xi) * self.e2)

    def d1(self, xi):
        return self.radius * (-np.sin(xi) * self.e1 + np.cos(xi) * self.e2)

    def d2(self, xi):
        return -self.radius * (np.cos(xi) * self.e1 + np.sin(xi) * self.e2)

    def d3(self, xi):
        return self.radius * (np.sin(xi) * self.e1 - np.cos(xi) * self.e2)

    @property
    def constant_speed(self):
        return float(self.radius)


@dataclass(eq=False)
class Helix(ParamCurve):
    """Helix r(xi) = center + a (cos(xi) e1 + sin(xi) e2) + b xi e3, e3 = e1 x e2."""

    center: Vec3
    radius: float
    pitch: float
    e1: Vec3
    e2: Vec3
    angle0: float
    angle1: float
    kind: str = field(default="helix", init=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("helix radius must be positive")
        if not self.angle1 > self.angle0:
            raise ValueError("helix angle range must be increasing")
        self.e1, self.e2 = _checked_plane_basis(self.e1, self.e2)
        self.e3 = np.cross(self.e1, self.e2)
        self.xi0, self.xi1 = float(self.angle0), float(self.angle1)

    def point(self, xi):
        a, b = self.radius, self.pitch
        return self.center + a * np.cos(xi) * self.e1 + a * np.sin(xi) * self.e2 + b * xi * self.e3

    def d1(self, xi):
        a, b = self.radius, self.pitch
        return -a * np.sin(xi) * self.e1 + a * np.cos(xi) * self.e2 + b * self.e3

    def d2(self, xi):
        a = self.radius
        return -a * np.cos(xi) * self.e1 - a * np.sin(xi) * self.e2

    def d3(self, xi):
        a = self.radius
        return a * np.sin(xi) * self.e1 - a * np.cos(xi) * self.e2

    @property
    def constant_speed(self):
        return float(np.hypot(self.radius, self.pitch))


def _catmull_rom_tangents(points: np.ndarray, t_start: Vec3, t_end: Vec3) -> np.ndarray:
    n = len(points)
    m = np.zeros_like(points)
    m[0] = t_start
    m[-1] = t_end
    for i in range(1, n - 1):
        m[i] = 0.5 * (points[i + 1] - points[i - 1])
    return m


@dataclass(eq=False)
class HermiteSpline(ParamCurve):
    """C1 cubic Hermite interpolant of knot points; xi in [0, n_pieces].

    Knot tangents are taken with respect to the knot index: the two end
    tangents are user data, interior tangents are central differences of the
    knots, so value and first derivative match at every knot by construction.
    """

    points: np.ndarray
    t_start: Vec3
    t_end: Vec3
    kind: str = field(default="hermite_spline", init=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3 or len(self.points) < 2:
            raise ValueError("spline needs at least two 3d knot points")
        self.tangents = _catmull_rom_tangents(
            self.points, np.asarray(self.t_start, float), np.asarray(self.t_end, float)
        )
        self.xi0, self.xi1 = 0.0, float(len(self.points) - 1)
        speeds = [self.speed(xi) for xi in np.linspace(self.xi0, self.xi1, 16 * len(self.points))]
        if min(speeds) < _SPEED_FLOOR:
            raise DegenerateCurveError("spline parametrization has vanishing speed")

    def _piece(self, xi: float) -> tuple[int, float]:
        i = int(np.clip(np.floor(xi), 0, len(self.points) - 2))
        return i, xi - i

    def point(self, xi):
        i, u = self._piece(xi)
        h00 = 1 - 3 * u**2 + 2 * u**3
        h10 = u - 2 * u**2 + u**3
        h01 = 3 * u**2 - 2 * u**3
        h11 = u**3 - u**2
        return (h00 * self.points[i] + h10 * self.tangents[i]
                + h01 * self.points[i + 1] + h11 * self.tangents[i + 1])

    def d1(self, xi):
        i, u = self._piece(xi)
        h00 = -6 * u + 6 * u**2
        h10 = 1 - 4 * u + 3 * u**2
        h01 = 6 * u - 6 * u**2
        h11 = 3 * u**2 - 2 * u
        return (h00 * self.points[i] + h10 * self.tangents[i]
                + h01 * self.points[i + 1] + h11 * self.tangents[i + 1])

    def d2(self, xi):
        i, u = self._piece(xi)
        h00 = -6 + 12 * u
        h10 = -4 + 6 * u
        h01 = 6 - 12 * u
        h11 = 6 * u - 2
        return (h00 * self.points[i] + h10 * self.tangents[i]
                + h01 * self.points[i + 1] + h11 * self.tangents[i + 1])

    def d3(self, xi):
        i, _ = self._piece(xi)
        return (12 * self.points[i] + 6 * self.tangents[i]
                - 12 * self.points[i + 1] + 6 * self.tangents[i + 1])


_GL10_X, _GL10_W = np.polynomial.legendre.leggauss(10)


def _gauss_speed_integral(curve: ParamCurve, a: float, b: float) -> float:
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * sum(w * curve.speed(mid + half * x) for x, w in zip(_GL10_X, _GL10_W))


class ArcLengthMap:
    """Monotone bijection between the curve parameter xi and arc length s.

    Constant-speed kinds (line, arc, helix) use the closed-form map; splines
    accumulate per-interval Gauss-Legendre quadrature of |dr/dxi| over a fine
    grid and invert with safeguarded Newton iteration.
    """

    def __init__(self, curve: ParamCurve, n_samples: int = 257):
        if n_samples < 2:
            raise ValueError("need at least two arc-length samples")
        self.curve = curve
        xi0, xi1 = curve.xi0, curve.xi1
        n_grid = max(n_samples, 2)
        grid = np.linspace(xi0, xi1, n_grid)
        speeds = np.array([curve.speed(x) for x in grid])
        if speeds.min() < _SPEED_FLOOR:
            raise DegenerateCurveError(
                f"curve speed {speeds.min():.3e} below {_SPEED_FLOOR} at a sample point"
            )
        self._const = curve.constant_speed
        if self._const is not None:
            cum = (grid - xi0) * self._const
        else:
            seg = np.array([
                _gauss_speed_integral(curve, grid[i], grid[i + 1]) for i in range(n_grid - 1)
            ])
            cum = np.concatenate([[0.0], np.cumsum(seg)])
        self._grid = grid
        self._cum = cum
        self.length = float(cum[-1])
        self.table = np.column_stack([grid, cum])

    def s_of_xi(self, xi: float) -> float:
        xi = float(xi)
        if self._const is not None:
            return (xi - self.curve.xi0) * self._const
        i = int(np.clip(np.searchsorted(self._grid, xi, side="right") - 1, 0, len(self._grid) - 2))
        return float(self._cum[i] + _gauss_speed_integral(self.curve, self._grid[i], xi))

    def xi_of_s(self, s: float) -> float:
        s = float(s)
        if self._const is not None:
            return self.curve.xi0 + s / self._const
        lo_i = int(np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, len(self._grid) - 2))
        lo, hi = self._grid[lo_i], self._grid[lo_i + 1]
        xi = lo + (hi - lo) * 0.5
        tol = 1e-13 * max(self.length, 1.0)
        for _ in range(60):
            err = self.s_of_xi(xi) - s
            if abs(err) <= tol:
                break
            if err > 0:
                hi = xi
            else:
                lo = xi
            step = xi - err / self.curve.speed(xi)
            xi = step if lo < step < hi else 0.5 * (lo + hi)
        return float(xi)


def arc_length_table(curve: ParamCurve, n_samples: int = 257) -> ArcLengthMap:
    """Build the monotone xi <-> s map (table of (xi, s) pairs, total length)."""
    return ArcLengthMap(curve, n_samples)


def _check_s(curve: ParamCurve, s: float) -> float:
    L = curve.length
    tol = 1e-9 * max(L, 1.0)
    if s < -tol or s > L + tol:
        raise ValueError(f"arc length {s} outside [0, {L}]")
    return float(np.clip(s, 0.0, L))


def eval_frame(curve: ParamCurve, s: float) -> FrameSample:
    """Position, unit tangent, and curvature vector at arc length s.

    kappa = dt/ds follows from the chain rule on the raw parametrization:
    kappa = (r'' |r'|^2 - r' (r' . r'')) / |r'|^4.
    """
    s = _check_s(curve, s)
    xi = curve.arclength().xi_of_s(s)
    r1 = curve.d1(xi)
    r2 = curve.d2(xi)
    sp2 = float(r1 @ r1)
    if sp2 < _SPEED_FLOOR**2:
        raise DegenerateCurveError("vanishing speed at evaluation point")
    t = r1 / np.sqrt(sp2)
    kappa = (r2 * sp2 - r1 * float(r1 @ r2)) / sp2**2
    return FrameSample(s=s, x=curve.point(xi), t=t, kappa=kappa)


def frenet(curve: ParamCurve, s: float, kappa_min: float | None = None) -> FrenetFrame:
    """Full Frenet frame with torsion; raises where the curve is straight."""
    fr = eval_frame(curve, s)
    if kappa_min is None:
        kappa_min = 1e-10 / max(curve.length, _SPEED_FLOOR)
    k = float(np.linalg.norm(fr.kappa))
    if k <= kappa_min:
        raise ZeroCurvatureError(
            f"|kappa| = {k:.3e} <= {kappa_min:.3e}; normal direction undefined"
        )
    n = fr.kappa / k
    b = np.cross(fr.t, n)
    xi = curve.arclength().xi_of_s(s)
    r1, r2, r3 = curve.d1(xi), curve.d2(xi), curve.d3(xi)
    c = np.cross(r1, r2)
    tau = float(c @ r3) / float(c @ c)
    return FrenetFrame(t=fr.t, n=n, b=b, kappa=k, tau=tau)


def _polish_stationarity(curve: ParamCurve, x: Vec3, xi: float) -> float:
    a, b = curve.xi0, curve.xi1
    for _ in range(40):
        r = curve.point(xi)
        r1 = curve.d1(xi)
        g = float((x - r) @ r1)
        dist = float(np.linalg.norm(x - r))
        if abs(g) <= 1e-14 * max(dist * np.linalg.norm(r1), 1e-30):
            break
        gp = -float(r1 @ r1) + float((x - r) @ curve.d2(xi))
        if gp == 0.0:
            break
        step = xi - g / gp
        if not a <= step <= b:
            break
        if abs(step - xi) < 1e-16 * max(abs(xi), 1.0):
            xi = step
            break
        xi = step
    return xi


def closest_point(curve: ParamCurve, x: Vec3, n_scan: int = 512) -> ClosestPointResult:
    """Project x onto the curve; valid inside the injectivity tube of the midline.

    Dense parameter scan, bounded local minimization of the squared distance,
    then Newton polish of the stationarity condition (x - p) . r' = 0.
    """
    x = np.asarray(x, dtype=float)
    a, b = curve.xi0, curve.xi1
    grid = np.linspace(a, b, n_scan)
    d2 = np.array([float((x - curve.point(xi)) @ (x - curve.point(xi))) for xi in grid])
    cand = [i for i in range(n_scan)
            if (i == 0 or d2[i] <= d2[i - 1]) and (i == n_scan - 1 or d2[i] <= d2[i + 1])]

    minima: list[tuple[float, float]] = []
    for i in cand:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, n_scan - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda xi: float((x - curve.point(xi)) @ (x - curve.point(xi))),
                bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-13 * max(b - a, 1.0)},
            )
            xi_star = float(res.x)
        else:
            xi_star = grid[i]
        if a + 1e-12 * (b - a) < xi_star < b - 1e-12 * (b - a):
            xi_star = _polish_stationarity(curve, x, xi_star)
        dist = float(np.linalg.norm(x - curve.point(xi_star)))
        for xi_prev, _ in minima:
            if abs(xi_prev - xi_star) <= 1e-7 * (b - a):
                break
        else:
            minima.append((xi_star, dist))

    minima.sort(key=lambda m: m[1])
    xi_best, d_best = minima[0]
    scale = max(d_best, 1e-12 * max(np.linalg.norm(x), 1.0))
    rivals = [m for m in minima[1:] if m[1] - d_best <= 1e-8 * scale]
    if rivals:
        raise AmbiguousProjectionError(
            f"{1 + len(rivals)} closest-point candidates within tolerance; "
            "point lies outside the injectivity tube"
        )
    p = curve.point(xi_best)
    return ClosestPointResult(p=p, zeta=x - p, s=curve.arclength().s_of_xi(xi_best))


def curve_from_dict(doc: dict) -> ParamCurve:
    """Build a curve from its wire-format description (see the cli module)."""
    kind = doc.get("kind")
    if kind == "line":
        return LineSegment(np.asarray(doc["p0"], float), np.asarray(doc["p1"], float))
    if kind == "arc":
        e1, e2 = doc["basis"]
        th0, th1 = doc["angle"]
        return CircularArc(np.asarray(doc["center"], float), float(doc["radius"]),
                           np.asarray(e1, float), np.asarray(e2, float), float(th0), float(th1))
    if kind == "helix":
        e1, e2 = doc.get("basis", [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        th0, th1 = doc["angle"]
        return Helix(np.asarray(doc.get("center", [0.0, 0.0, 0.0]), float),
                     float(doc["radius"]), float(doc["pitch"]),
                     np.asarray(e1, float), np.asarray(e2, float), float(th0), float(th1))
    if kind == "hermite_spline":
        t0, t1 = doc["end_tangents"]
        return HermiteSpline(np.asarray(doc["points"], float),
                             np.asarray(t0, float), np.asarray(t1, float))
    raise ValueError(f"unknown curve kind {kind!r}")
