"""Planar sample shapes and their rasterisation onto a uniform cell grid.

Shapes are described analytically (disk, axis-aligned rectangle, convex
polygon); a :class:`DomainMask` marks the grid cells whose centres lie strictly
inside the shape.  Perimeter and diameter always come from the analytic shape,
never from the staircase raster.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    pass


class Shape:
    kind: str = ""

    def area(self) -> float:
        raise NotImplementedError

    def perimeter(self) -> float:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def bounds(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def distance_inside(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Distance to the boundary for inside points, negative outside."""
        raise NotImplementedError

    def eroded(self, r: float) -> Shape | None:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Disk(Shape):
    radius: float
    center: tuple[float, float] = (0.0, 0.0)
    kind = "disk"

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")

    def area(self):
        return math.pi * self.radius**2

    def perimeter(self):
        return 2 * math.pi * self.radius

    def diameter(self):
        return 2 * self.radius

    def bounds(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def distance_inside(self, x, y):
        cx, cy = self.center
        return self.radius - np.hypot(x - cx, y - cy)

    def eroded(self, r):
        if r >= self.radius:
            return None
        return Disk(self.radius - r, self.center)

    def descriptor(self):
        return {"kind": "disk", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class Rectangle(Shape):
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]``."""

    x0: float
    y0: float
    x1: float
    y1: float
    kind = "rectangle"

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError("rectangle extents must be positive")

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    def area(self):
        return self.width * self.height

    def perimeter(self):
        return 2 * (self.width + self.height)

    def diameter(self):
        return math.hypot(self.width, self.height)

    def bounds(self):
        return (self.x0, self.y0, self.x1, self.y1)

    def distance_inside(self, x, y):
        return np.minimum(
            np.minimum(x - self.x0, self.x1 - x), np.minimum(y - self.y0, self.y1 - y)
        )

    def eroded(self, r):
        if 2 * r >= min(self.width, self.height):
            return None
        return Rectangle(self.x0 + r, self.y0 + r, self.x1 - r, self.y1 - r)

    def descriptor(self):
        return {"kind": "rectangle", "extents": [self.x0, self.y0, self.x1, self.y1]}


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class ConvexPolygon(Shape):
    """Convex polygon; vertices are stored counter-clockwise."""

    vertices: tuple[tuple[float, float], ...]
    kind = "convex_polygon"

    def __post_init__(self):
        v = [tuple(map(float, p)) for p in self.vertices]
        if len(v) < 3:
            raise GeometryError("polygon needs at least three vertices")
        signs = {np.sign(_cross(v[i - 2], v[i - 1], v[i])) for i in range(len(v))}
        signs.discard(0.0)
        if len(signs) != 1:
            raise GeometryError("polygon is not convex")
        if signs == {-1.0}:
            v = v[::-1]
        object.__setattr__(self, "vertices", tuple(v))
        if self.area() <= 0:
            raise GeometryError("degenerate polygon")

    def _edges(self):
        v = np.asarray(self.vertices)
        return v, np.roll(v, -1, axis=0)

    def area(self):
        a, b = self._edges()
        return 0.5 * float(np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))

    def perimeter(self):
        a, b = self._edges()
        return float(np.sum(np.hypot(*(b - a).T)))

    def diameter(self):
        # the diameter of a convex polygon is attained between two vertices
        v = np.asarray(self.vertices)
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def bounds(self):
        v = np.asarray(self.vertices)
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def _normals(self):
        a, b = self._edges()
        e = b - a
        length = np.hypot(e[:, 0], e[:, 1])
        # inward normal of a counter-clockwise polygon
        n = np.stack([-e[:, 1], e[:, 0]], axis=1) / length[:, None]
        return a, n

    def distance_inside(self, x, y):
        a, n = self._normals()
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = np.full(np.broadcast(x, y).shape, np.inf)
        for p, nn in zip(a, n):
            d = np.minimum(d, (x - p[0]) * nn[0] + (y - p[1]) * nn[1])
        return d

    def eroded(self, r):
        # inner parallel body: clip by every edge half-plane shifted inwards
        a, n = self._normals()
        poly = [tuple(p) for p in self.vertices]
        for p, nn in zip(a, n):
            c = p[0] * nn[0] + p[1] * nn[1] + r

            def side(q):
                return q[0] * nn[0] + q[1] * nn[1] - c

            out = []
            for i in range(len(poly)):
                cur, prev = poly[i], poly[i - 1]
                sc, sp = side(cur), side(prev)
                if sc >= 0:
                    if sp < 0:
                        s = sp / (sp - sc)
                        out.append((prev[0] + s * (cur[0] - prev[0]), prev[1] + s * (cur[1] - prev[1])))
                    out.append(cur)
                elif sp >= 0:
                    s = sp / (sp - sc)
                    out.append((prev[0] + s * (cur[0] - prev[0]), prev[1] + s * (cur[1] - prev[1])))
            poly = out
            if len(poly) < 3:
                return None
        # drop coincident vertices produced by clipping
        clean = []
        for q in poly:
            if not clean or math.dist(q, clean[-1]) > 1e-14:
                clean.append(q)
        if len(clean) > 1 and math.dist(clean[0], clean[-1]) <= 1e-14:
            clean.pop()
        if len(clean) < 3:
            return None
        try:
            return ConvexPolygon(tuple(clean))
        except GeometryError:
            return None

    def descriptor(self):
        return {"kind": "convex_polygon", "vertices": [list(p) for p in self.vertices]}


def shape_from_descriptor(desc: dict) -> Shape:
    kind = desc["kind"]
    if kind == "disk":
        return Disk(float(desc["radius"]), tuple(desc.get("center", (0.0, 0.0))))
    if kind == "rectangle":
        return Rectangle(*map(float, desc["extents"]))
    if kind == "convex_polygon":
        return ConvexPolygon(tuple(tuple(p) for p in desc["vertices"]))
    raise GeometryError(f"unknown shape kind {kind!r}")


@dataclass(frozen=True, eq=False)
class DomainMask:
    """Cell-centred raster of a convex shape.

    ``inside[j, i]`` refers to the cell centred at ``(xs[i], ys[j])``.  The grid
    always carries at least one empty cell layer around the shape so that
    every inside cell has four grid neighbours.
    """

    shape: Shape
    h: float
    origin: tuple[float, float]
    nx: int
    ny: int
    inside: np.ndarray = field(repr=False)
    region: str = "interior"

    def __post_init__(self):
        if not self.h > 0:
            raise GeometryError("grid spacing must be positive")
        self.inside.setflags(write=False)

    @classmethod
    def from_shape(cls, shape: Shape, h: float, origin=None, nx=None, ny=None) -> DomainMask:
        if origin is None:
            x0, y0, x1, y1 = shape.bounds()
            nx = int(math.ceil((x1 - x0) / h - 1e-9)) + 2
            ny = int(math.ceil((y1 - y0) / h - 1e-9)) + 2
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            origin = (cx - 0.5 * nx * h, cy - 0.5 * ny * h)
        xs = origin[0] + (np.arange(nx) + 0.5) * h
        ys = origin[1] + (np.arange(ny) + 0.5) * h
        X, Y = np.meshgrid(xs, ys)
        inside = shape.distance_inside(X, Y) > 0
        return cls(shape, float(h), (float(origin[0]), float(origin[1])), nx, ny, inside)

    @classmethod
    def disk(cls, radius, h, center=(0.0, 0.0)):
        return cls.from_shape(Disk(radius, tuple(center)), h)

    @classmethod
    def rectangle(cls, width, height, h, corner=(0.0, 0.0)):
        x0, y0 = corner
        shape = Rectangle(x0, y0, x0 + width, y0 + height)
        nx = int(round(width / h)) + 2
        ny = int(round(height / h)) + 2
        return cls.from_shape(shape, h, origin=(x0 - h, y0 - h), nx=nx, ny=ny)

    @classmethod
    def polygon(cls, vertices, h):
        return cls.from_shape(ConvexPolygon(tuple(map(tuple, vertices))), h)

    # -- grid coordinates -------------------------------------------------
    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.h

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.h

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys)

    @property
    def count(self) -> int:
        return int(self.inside.sum())

    def distance_to_boundary(self) -> np.ndarray:
        X, Y = self.centers()
        return self.shape.distance_inside(X, Y)

    def with_inside(self, inside: np.ndarray, shape: Shape | None = None, region=None) -> DomainMask:
        return DomainMask(
            shape if shape is not None else self.shape,
            self.h,
            self.origin,
            self.nx,
            self.ny,
            np.array(inside, dtype=bool),
            region if region is not None else self.region,
        )

    def descriptor(self) -> dict:
        return {
            "shape": self.shape.descriptor(),
            "h": self.h,
            "origin": list(self.origin),
            "nx": self.nx,
            "ny": self.ny,
            "region": self.region,
        }

    # -- measures ---------------------------------------------------------
    def area(self) -> float:
        n = self.count
        if n == 0:
            raise GeometryError("degenerate domain: mask has no inside cells")
        return self.h**2 * n

    def perimeter(self) -> float:
        self._require_interior()
        return self.shape.perimeter()

    def diameter(self) -> float:
        self._require_interior()
        return self.shape.diameter()

    def _require_interior(self):
        if self.region != "interior":
            raise GeometryError(f"analytic measures undefined for a {self.region} mask")

    def is_convex(self) -> bool:
        return self.region == "interior"


def area(mask: DomainMask) -> float:
    return mask.area()


def perimeter(mask: DomainMask) -> float:
    return mask.perimeter()


def diameter(mask: DomainMask) -> float:
    return mask.diameter()


def erode(mask: DomainMask, r: float) -> DomainMask:
    """Cells of ``mask`` at distance >= r from the complement of the shape."""
    if r < 0:
        raise GeometryError("erosion radius must be non-negative")
    if r == 0:
        return mask
    inside = mask.inside & (mask.distance_to_boundary() >= r)
    inner = mask.shape.eroded(r)
    if inner is None:
        return mask.with_inside(np.zeros_like(inside), region="empty")
    return mask.with_inside(inside, shape=inner)


def boundary_collar(mask: DomainMask, delta: float) -> DomainMask:
    """Cells inside the shape whose centre lies within ``delta`` of the boundary."""
    if delta < 0:
        raise GeometryError("collar width must be non-negative")
    inside = mask.inside & (mask.distance_to_boundary() < delta)
    return mask.with_inside(inside, region="collar")
