"""Polygonal periodic RVE partitions and their amplitude-vector incidence.

Each subdomain average strain is ``e_i = e_M + (1/|Omega_i|) sum_f sym(a_f (x) n_if)``
where the sum runs over the facets of ``Omega_i``, ``n_if`` is the outward
normal of ``Omega_i`` scaled by the facet length and ``a_f`` is the mean
periodic fluctuation displacement on the facet.  A facet shared by two
subdomains enters both with opposite normals, which is what makes the
volume average of the subdomain strains equal ``e_M`` for any amplitudes.

Facet amplitudes are expressed through a smaller set of independent
amplitude vectors: each incidence stores an amplitude index (or ``None``
for a facet whose mean fluctuation is fixed at zero) and a sign.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import tensor as tn
from ..errors import GeometryError


@dataclass(frozen=True)
class Incidence:
    """One side of a facet as seen from one subdomain."""

    subdomain: int
    normal: tuple
    amplitude: int | None
    sign: int = 1


@dataclass(frozen=True)
class RveGeometry:
    """Subdomain volumes, material ids and facet incidences.

    Parameters
    ----------
    volumes : sequence of float
        Subdomain volumes (areas in 2D).
    materials : sequence of int
        Material id per subdomain.
    incidences : sequence of Incidence
    n_amplitudes : int
        Number of independent amplitude vectors.
    dim : int
        Number of displacement components per amplitude vector.
    labels : sequence of str, optional
    polygons, period : optional
        Subdomain shapes and cell size; only used to build reference meshes.
    """

    volumes: tuple
    materials: tuple
    incidences: tuple
    n_amplitudes: int
    dim: int = 2
    labels: tuple = ()
    polygons: tuple | None = None
    period: tuple | None = None
    _operator: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vols = tuple(float(v) for v in self.volumes)
        if any(v <= 0 for v in vols):
            raise GeometryError("subdomain volumes must be positive")
        if len(self.materials) != len(vols):
            raise GeometryError("one material id per subdomain is required")
        object.__setattr__(self, "volumes", vols)
        object.__setattr__(self, "materials", tuple(int(m) for m in self.materials))
        object.__setattr__(self, "incidences", tuple(self.incidences))
        labels = tuple(self.labels) if self.labels else tuple(str(i + 1) for i in range(len(vols)))
        object.__setattr__(self, "labels", labels)
        if self.polygons is not None:
            object.__setattr__(self, "polygons", tuple(tuple(map(tuple, poly)) for poly in self.polygons))
            object.__setattr__(self, "period", tuple(float(x) for x in self.period))
        for inc in self.incidences:
            if not 0 <= inc.subdomain < len(vols):
                raise GeometryError(f"incidence refers to unknown subdomain {inc.subdomain}")
            if inc.amplitude is not None and not 0 <= inc.amplitude < self.n_amplitudes:
                raise GeometryError(f"incidence refers to unknown amplitude {inc.amplitude}")
            if len(inc.normal) != self.dim:
                raise GeometryError("facet normal dimension does not match the geometry")
            if inc.sign not in (-1, 1):
                raise GeometryError("incidence sign must be +1 or -1")
        object.__setattr__(self, "_operator", self._build_operator())

    @property
    def n_subdomains(self):
        return len(self.volumes)

    @property
    def fractions(self):
        v = np.array(self.volumes)
        return v / v.sum()

    @property
    def n_unknowns(self):
        return self.dim * self.n_amplitudes

    @property
    def strain_operator(self):
        """``B`` of shape ``(N_sd, 6, dim * N_a)`` with ``e_i = e_M + B_i a``."""
        return self._operator

    def _build_operator(self):
        B = np.zeros((self.n_subdomains, 6, self.n_unknowns))
        for inc in self.incidences:
            if inc.amplitude is None:
                continue
            for c in range(self.dim):
                unit = np.zeros(self.dim)
                unit[c] = 1.0
                col = self.dim * inc.amplitude + c
                B[inc.subdomain, :, col] += inc.sign * tn.sym_outer(unit, inc.normal) / self.volumes[inc.subdomain]
        return B

    def closure_defect(self, amplitudes):
        """``sum_i |Omega_i| (e_i - e_M)`` for the given amplitudes."""
        de = self.strain_operator @ np.ravel(amplitudes)
        return np.einsum("i,ik->k", np.array(self.volumes), de)

    def to_dict(self):
        out = {
            "dim": self.dim,
            "n_amplitudes": self.n_amplitudes,
            "subdomains": [
                {"volume": v, "material": m, "label": lab}
                for v, m, lab in zip(self.volumes, self.materials, self.labels)
            ],
            "facets": [
                {"subdomain": f.subdomain, "normal": list(f.normal), "amplitude": f.amplitude, "sign": f.sign}
                for f in self.incidences
            ],
        }
        if self.polygons is not None:
            out["polygons"] = [[list(v) for v in poly] for poly in self.polygons]
            out["period"] = list(self.period)
        return out

    @classmethod
    def from_dict(cls, data):
        try:
            subs = data["subdomains"]
            incs = [
                Incidence(int(f["subdomain"]), tuple(float(x) for x in f["normal"]), f["amplitude"], int(f.get("sign", 1)))
                for f in data["facets"]
            ]
            return cls(
                tuple(s["volume"] for s in subs),
                tuple(s["material"] for s in subs),
                tuple(incs),
                int(data["n_amplitudes"]),
                int(data.get("dim", 2)),
                tuple(s.get("label", str(i + 1)) for i, s in enumerate(subs)),
                data.get("polygons"),
                data.get("period"),
            )
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"malformed geometry description: {exc}") from exc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_materials(self, materials):
        return RveGeometry(
            self.volumes, tuple(materials), self.incidences, self.n_amplitudes, self.dim, self.labels, self.polygons, self.period
        )

    def locate(self, points):
        """Index of the subdomain containing each point (convex polygons only)."""
        if self.polygons is None:
            raise GeometryError("geometry has no polygon description")
        pts = np.mod(np.atleast_2d(np.asarray(points, dtype=float)), self.period)
        out = np.full(len(pts), -1)
        for k, poly in enumerate(self.polygons):
            v = np.asarray(poly, dtype=float)
            if _polygon_area(v) < 0:
                v = v[::-1]
            inside = np.ones(len(pts), dtype=bool)
            for a, b in zip(v, np.roll(v, -1, axis=0)):
                d = b - a
                inside &= d[0] * (pts[:, 1] - a[1]) - d[1] * (pts[:, 0] - a[0]) >= -1e-12
            out[(out < 0) & inside] = k
        if np.any(out < 0):
            raise GeometryError("some points are not covered by any subdomain")
        return out


def subdomain_strains(geometry, e_M, amplitudes):
    """Average strain of every subdomain as a ``(N_sd, 6)`` array."""
    a = np.ravel(np.asarray(amplitudes, dtype=float))
    if a.size != geometry.n_unknowns:
        raise GeometryError(f"expected {geometry.n_amplitudes} amplitude vectors of dimension {geometry.dim}")
    return np.asarray(e_M, dtype=float)[None, :] + geometry.strain_operator @ a


def _grid_polygons(cells):
    polys = [None] * 9
    for col in range(3):
        for row in range(3):
            polys[cells[col][row]] = [(col, row), (col + 1, row), (col + 1, row + 1), (col, row + 1)]
    return polys


def _grid_geometry(cells, vertical, horizontal, n_amplitudes, materials, labels=None):
    """3x3 unit-cell grid on the torus.

    ``cells[col][row]`` gives the subdomain index of each cell.
    ``vertical[row][k]`` is the amplitude entry of the facet on the line
    ``x = k`` in that row and ``horizontal[col][k]`` the one on ``y = k``.
    Entries are ``(index, sign)`` with a 1-based index, or ``None``.
    """
    n = 3
    incs = []

    def entry(e):
        return (None, 1) if e is None else (e[0] - 1, e[1])

    for row in range(n):
        for k in range(n):
            amp, sign = entry(vertical[row][k])
            left, right = cells[(k - 1) % n][row], cells[k][row]
            incs.append(Incidence(left, (1.0, 0.0), amp, sign))
            incs.append(Incidence(right, (-1.0, 0.0), amp, sign))
    for col in range(n):
        for k in range(n):
            amp, sign = entry(horizontal[col][k])
            below, above = cells[col][(k - 1) % n], cells[col][k]
            incs.append(Incidence(below, (0.0, 1.0), amp, sign))
            incs.append(Incidence(above, (0.0, -1.0), amp, sign))
    return RveGeometry(
        (1.0,) * 9, materials, tuple(incs), n_amplitudes, 2, labels or (), _grid_polygons(cells), (3.0, 3.0)
    )


def fig1_symmetric():
    """Nine unit cells with a centre inclusion and point-symmetric amplitudes.

    Subdomain order: centre, right, left, top, bottom, top-right,
    bottom-left, top-left, bottom-right.  Cells related by the point
    symmetry carry the same label, as they share the same average strain.
    Material 0 in the centre, material 1 elsewhere.
    """
    C, R, L, T, B, TR, BL, TL, BR = range(9)
    cells = [[BL, L, TL], [B, C, T], [BR, R, TR]]
    P, M = 1, -1
    vertical = [
        [(7, M), (6, M), (5, M)],
        [None, (1, M), (1, P)],
        [(7, P), (5, P), (6, P)],
    ]
    horizontal = [
        [(8, M), (4, M), (3, M)],
        [None, (2, M), (2, P)],
        [(8, P), (3, P), (4, P)],
    ]
    labels = ("1", "2", "2", "3", "3", "4", "4", "5", "5")
    return _grid_geometry(cells, vertical, horizontal, 8, (0, 1, 1, 1, 1, 1, 1, 1, 1), labels)


def fig4_nonsymmetric():
    """Nine unit cells with 18 independent facet amplitudes.

    Subdomains are numbered 1..9 with 1 in the centre, 2 above it, 3, 6, 8
    in the left column (bottom to top), 4 below the centre and 5, 7, 9 in the
    right column.  Material 0 in subdomain 1, material 1 in subdomain 2 and
    material 2 elsewhere.
    """
    cells = [[2, 5, 7], [3, 0, 1], [4, 6, 8]]
    vertical = [[(3 * r + k + 1, 1) for k in range(3)] for r in range(3)]
    horizontal = [[(10 + 3 * c + k, 1) for k in range(3)] for c in range(3)]
    materials = (0, 1, 2, 2, 2, 2, 2, 2, 2)
    return _grid_geometry(cells, vertical, horizontal, 18, materials)


def _polygon_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def from_polygons(polygons, materials, period, labels=None, atol=1e-9):
    """Build a geometry from polygons tiling a periodic rectangle.

    Every polygon edge must coincide, up to a period shift, with exactly one
    reversed edge of another polygon; each such pair becomes a facet with
    its own amplitude vector.  Polygons may be given in either orientation.

    Raises
    ------
    GeometryError
        If an edge has no partner or the areas do not fill the period cell.
    """
    period = np.asarray(period, dtype=float)
    polys = []
    for poly in polygons:
        pts = np.asarray(poly, dtype=float)
        if _polygon_area(pts) < 0:
            pts = pts[::-1]
        polys.append(pts)
    areas = [_polygon_area(p) for p in polys]
    if abs(sum(areas) - np.prod(period)) > atol * np.prod(period):
        raise GeometryError("polygons do not tile the periodic cell")

    def wrap(p):
        q = np.mod(p, period)
        q[np.isclose(q, period, atol=atol)] = 0.0
        q[np.isclose(q, 0.0, atol=atol)] = 0.0
        return q

    edges = []
    for i, pts in enumerate(polys):
        for k in range(len(pts)):
            p, q = pts[k], pts[(k + 1) % len(pts)]
            d = q - p
            edges.append((i, p, q, np.array([d[1], -d[0]])))

    used = [False] * len(edges)
    incs = []
    n_amp = 0
    for e1, (i, p, q, nrm) in enumerate(edges):
        if used[e1]:
            continue
        partner = None
        for e2 in range(e1 + 1, len(edges)):
            if used[e2]:
                continue
            j, p2, q2, _ = edges[e2]
            d1 = wrap(p - q2)
            d2 = wrap(q - p2)
            same = np.allclose(d1, 0.0, atol=atol) and np.allclose(d2, 0.0, atol=atol)
            if same and np.allclose(wrap(p2 - q), 0.0, atol=atol) and np.allclose((p - q) - (q2 - p2), 0.0, atol=atol):
                partner = e2
                break
        if partner is None:
            raise GeometryError(f"edge {p}->{q} of polygon {i} has no periodic partner")
        used[e1] = used[partner] = True
        j = edges[partner][0]
        incs.append(Incidence(i, tuple(nrm), n_amp, 1))
        incs.append(Incidence(j, tuple(-nrm), n_amp, 1))
        n_amp += 1
    return RveGeometry(tuple(areas), tuple(materials), tuple(incs), n_amp, 2, labels or (), polys, tuple(period))


def fig4_polygons():
    """Nonsymmetric nine-cell layout as polygons, subdomain order as in :func:`fig4_nonsymmetric`."""
    order = [(1, 1), (1, 2), (0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (2, 2)]
    return [[(c, r), (c + 1, r), (c + 1, r + 1), (c, r + 1)] for c, r in order]


def octagon_polygons():
    """Nine polygons tiling ``[0, 3]^2`` around a regular octagon.

    The octagon is the centre unit square with its corners cut by
    ``c = 1/(2 + sqrt(2))``.  The cells below and above it are trapezoids
    reaching the cell corners; the cells beside it are rectangles; the four
    corner cells close the gaps.  Order: octagon, top, bottom, left, right,
    bottom-left, bottom-right, top-left, top-right.
    """
    c = 1.0 / (2.0 + np.sqrt(2.0))
    lo, hi = 1.0 + c, 2.0 - c
    octagon = [(lo, 1), (hi, 1), (2, lo), (2, hi), (hi, 2), (lo, 2), (1, hi), (1, lo)]
    bottom = [(0, 0), (3, 0), (hi, 1), (lo, 1)]
    top = [(lo, 2), (hi, 2), (3, 3), (0, 3)]
    left = [(0, lo), (1, lo), (1, hi), (0, hi)]
    right = [(2, lo), (3, lo), (3, hi), (2, hi)]
    bl = [(0, 0), (lo, 1), (1, lo), (0, lo)]
    br = [(hi, 1), (3, 0), (3, lo), (2, lo)]
    tl = [(0, hi), (1, hi), (lo, 2), (0, 3)]
    tr = [(2, hi), (3, hi), (3, 3), (hi, 2)]
    return [octagon, top, bottom, left, right, bl, br, tl, tr]


def fig12_octagonal():
    """Octagonal centre inclusion with 20 amplitude vectors.

    Material 0 in the octagon, material 1 in the cell above it and
    material 2 elsewhere.
    """
    labels = ("octagon", "top", "bottom", "left", "right", "bottom-left", "bottom-right", "top-left", "top-right")
    return from_polygons(octagon_polygons(), (0, 1, 2, 2, 2, 2, 2, 2, 2), (3.0, 3.0), labels)


CONSTRUCTORS = {
    "fig1": fig1_symmetric,
    "fig4": fig4_nonsymmetric,
    "fig12": fig12_octagonal,
}
