"""Geodesic simplices in the closed hyperbolic ball: signed volumes,
dihedral angles, codimension-2 face measures, horoball-truncated edge
lengths, and one-parameter families."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import zeta

from .cubature import build_rule, integrate_simplex
from .lorentz import (
    Kind,
    LorentzVector,
    distance,
    minkowski_matrix,
)

__all__ = [
    "GeodesicSimplex",
    "HoroballAssignment",
    "SimplexFamily",
    "SimplexError",
    "DegenerateSimplexError",
    "InfiniteFaceMeasureError",
    "OverlappingHoroballsError",
    "signed_volume",
    "numeric_volume",
    "volume_evaluator",
    "lobachevsky",
    "ideal_tet_volume",
    "dihedral_angle",
    "face_measure",
    "default_horoballs",
    "truncated_edge_length",
    "REGULAR_IDEAL_VOLUME",
    "DEGENERACY_THRESHOLD",
]

DEGENERACY_THRESHOLD = 1e-12

# volume of the regular ideal 3-simplex, 3*L(pi/3); 2D analogue is pi
REGULAR_IDEAL_VOLUME = {2: np.pi, 3: 1.0149416064096535}


class SimplexError(ValueError):
    pass


class DegenerateSimplexError(SimplexError):
    pass


class InfiniteFaceMeasureError(SimplexError):
    """n=3 edges with an ideal endpoint have infinite length; use
    truncated_edge_length with a horoball assignment instead."""


class OverlappingHoroballsError(SimplexError):
    pass


@dataclass(frozen=True)
class GeodesicSimplex:
    """Ordered tuple of n+1 material or ideal points spanning a geodesic
    simplex in the closed ball of H^n."""

    vertices: tuple[LorentzVector, ...]

    def __init__(self, vertices: Sequence[LorentzVector]):
        vs = tuple(vertices)
        if len(vs) < 3:
            raise SimplexError("need n+1 >= 3 vertices")
        n = vs[0].n
        if len(vs) != n + 1:
            raise SimplexError(f"{len(vs)} vertices but ambient dimension {n}")
        for v in vs:
            if v.kind is Kind.RAW:
                raise SimplexError("raw vectors cannot be simplex vertices")
            if v.n != n:
                raise SimplexError("vertices of mixed ambient dimension")
        object.__setattr__(self, "vertices", vs)

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    @property
    def kinds(self) -> tuple[Kind, ...]:
        return tuple(v.kind for v in self.vertices)

    def vertex_matrix(self) -> np.ndarray:
        """Rows are x_0 = 1 representatives (Klein-homogeneous)."""
        return np.array([v.coords / v.coords[0] for v in self.vertices])

    def klein(self) -> np.ndarray:
        return self.vertex_matrix()[:, 1:]

    def orientation_det(self) -> float:
        return float(np.linalg.det(self.vertex_matrix()))

    def _degeneracy_scale(self) -> float:
        """The determinant of the Klein-homogeneous vertex matrix scales
        like diameter^n; degeneracy must be judged relative to that."""
        K = self.klein()
        return float(np.max(np.linalg.norm(K - K.mean(axis=0), axis=1)))

    def is_degenerate(self, threshold: float = DEGENERACY_THRESHOLD) -> bool:
        scale = max(self._degeneracy_scale(), 1e-30)
        return abs(self.orientation_det()) < threshold * scale ** self.dim

    def ideal_mask(self) -> tuple[bool, ...]:
        return tuple(v.kind is Kind.IDEAL for v in self.vertices)

    def subsimplex(self, indices: Sequence[int]) -> tuple[LorentzVector, ...]:
        return tuple(self.vertices[i] for i in indices)


_ZETA_EVEN = zeta(2 * np.arange(1, 41, dtype=float))
_LOB_COEFF = _ZETA_EVEN / (np.arange(1, 41) * (2 * np.arange(1, 41) + 1))


def lobachevsky(theta):
    """The Lobachevsky function L(theta) = -int_0^theta log|2 sin u| du.

    Odd and pi-periodic.  Evaluated by range reduction to [-pi/2, pi/2]
    and the expansion L(t) = t - t log|2t| + sum zeta(2k)/(k(2k+1)) *
    t^{2k+1} / pi^{2k}; with |t/pi| <= 1/2 the terms decay at least as
    4^{-k}, so 40 terms leave a tail below 1e-13.
    """
    t = np.asarray(theta, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t).copy()
    t -= np.pi * np.round(t / np.pi)
    out = np.zeros_like(t)
    nz = np.abs(t) > 1e-300
    tn = t[nz]
    ratio = (tn / np.pi) ** 2
    acc = np.zeros_like(tn)
    # Horner in ratio for sum c_k ratio^k
    for c in _LOB_COEFF[::-1]:
        acc = acc * ratio + c
    out[nz] = tn - tn * np.log(np.abs(2.0 * tn)) + tn * ratio * acc
    return float(out[0]) if scalar else out


def ideal_tet_volume(alpha: float, beta: float, gamma: float) -> float:
    """Volume of the ideal tetrahedron with dihedral angles alpha, beta,
    gamma at the three edges of any vertex, alpha+beta+gamma = pi."""
    s = alpha + beta + gamma
    if abs(s - np.pi) > 1e-9:
        raise SimplexError(f"dihedral angles sum to {s}, expected pi")
    if min(alpha, beta, gamma) < -1e-12:
        raise SimplexError("negative dihedral angle")
    return float(lobachevsky(alpha) + lobachevsky(beta) + lobachevsky(gamma))


def _face_normal(simplex: GeodesicSimplex, omit: int) -> np.ndarray:
    """Outward spacelike unit Minkowski normal of the hyperplane spanned
    by all vertices except `omit` (the omitted vertex sits on the
    negative side)."""
    M = simplex.vertex_matrix()
    rows = np.delete(M, omit, axis=0)
    J = minkowski_matrix(simplex.dim)
    _, s, vt = np.linalg.svd(rows @ J)
    if s[-1] > 1e-8 * s[0] and len(s) == rows.shape[1]:
        raise DegenerateSimplexError("face hyperplane is not well defined")
    m = vt[-1]
    q = float(m @ J @ m)
    if q <= 0:
        raise DegenerateSimplexError("face normal is not spacelike")
    m = m / np.sqrt(q)
    if float(m @ J @ M[omit]) > 0:
        m = -m
    return m


def dihedral_angle(simplex: GeodesicSimplex, face: tuple[int, int]) -> float:
    """Interior dihedral angle at the codimension-2 face spanned by the
    vertices other than the pair `face` = (i, j) of omitted indices.

    Computed as arccos(-<m_i, m_j>) from the outward spacelike unit
    normals of the two bounding hyperplanes.  Zero at an ideal vertex of
    a 2-simplex (tangent sides)."""
    i, j = face
    if i == j:
        raise SimplexError("face must omit two distinct vertices")
    if simplex.is_degenerate():
        raise DegenerateSimplexError("dihedral angle of a degenerate simplex")
    J = minkowski_matrix(simplex.dim)
    mi = _face_normal(simplex, i)
    mj = _face_normal(simplex, j)
    # cos(theta) = -<mi, mj>; the atan2 form stays fully accurate at both
    # endpoints, where arccos would lose half the digits
    q_plus = max(float((mi + mj) @ J @ (mi + mj)), 0.0)   # 2 (1 - cos)
    q_minus = max(float((mi - mj) @ J @ (mi - mj)), 0.0)  # 2 (1 + cos)
    return float(2.0 * np.arctan2(np.sqrt(q_plus), np.sqrt(q_minus)))


def _vertex_angles(simplex: GeodesicSimplex) -> np.ndarray:
    """Interior angles of a 2-simplex (zero at ideal vertices)."""
    n1 = len(simplex.vertices)
    angles = np.zeros(n1)
    for k in range(n1):
        if simplex.vertices[k].kind is Kind.IDEAL:
            continue
        others = [i for i in range(n1) if i != k]
        angles[k] = dihedral_angle(simplex, (others[0], others[1]))
    return angles


def _all_ideal_tet_angles(simplex: GeodesicSimplex) -> tuple[float, float, float]:
    """Dihedral angles at the three edges through vertex 0 of an
    all-ideal 3-simplex (they sum to pi)."""
    a = dihedral_angle(simplex, (2, 3))
    b = dihedral_angle(simplex, (1, 3))
    c = dihedral_angle(simplex, (1, 2))
    return a, b, c


def numeric_volume(simplex: GeodesicSimplex, tol: float = 1e-9) -> float:
    """Unsigned volume by Klein-model cubature with corner isolation at
    ideal vertices; the returned value carries an internal error
    estimate <= tol (IntegrationError otherwise)."""
    if simplex.is_degenerate():
        raise DegenerateSimplexError("numeric_volume of a degenerate simplex")
    val, _ = integrate_simplex(simplex.klein(), simplex.ideal_mask(), tol)
    return val


def signed_volume(simplex: GeodesicSimplex, tol: float = 1e-9) -> float:
    """Signed hyperbolic volume; sign is the orientation of the vertex
    tuple (odd permutations flip it), degenerate simplices give 0.

    Closed forms are used for n=2 (angle defect) and all-ideal n=3
    (Lobachevsky); everything else integrates numerically at tol.
    """
    if simplex.is_degenerate():
        return 0.0
    det = simplex.orientation_det()
    sign = 1.0 if det > 0 else -1.0
    n = simplex.dim
    if n == 2:
        return sign * float(np.pi - _vertex_angles(simplex).sum())
    if n == 3 and all(simplex.ideal_mask()):
        a, b, c = _all_ideal_tet_angles(simplex)
        return sign * float(lobachevsky(a) + lobachevsky(b) + lobachevsky(c))
    return sign * numeric_volume(simplex, tol)


def volume_evaluator(simplex: GeodesicSimplex, tol: float = 1e-9) -> Callable[[GeodesicSimplex], float]:
    """Signed-volume evaluator frozen on the shape of `simplex`.

    For closed-form dimensions this is just signed_volume; otherwise the
    cubature rule (cells and degree) is fixed here and re-applied, so the
    result varies analytically along a vertex path.  Used for finite
    differencing of volumes along families.
    """
    n = simplex.dim
    if n == 2 or (n == 3 and all(simplex.ideal_mask())):
        return lambda s: signed_volume(s, tol)
    rule = build_rule(simplex.klein(), simplex.ideal_mask(), tol)
    mask = simplex.ideal_mask()

    def evaluate(s: GeodesicSimplex) -> float:
        if s.ideal_mask() != mask:
            raise SimplexError("simplex type changed under a frozen volume rule")
        if s.is_degenerate():
            return 0.0
        det = s.orientation_det()
        return (1.0 if det > 0 else -1.0) * rule.evaluate(s.klein())

    return evaluate


def _span_basis(vertices: Sequence[LorentzVector]) -> np.ndarray:
    """Minkowski-orthonormal basis (columns; first timelike) of the
    linear span of the given points, which must be a hyperbolic
    subspace."""
    V = np.array([v.coords / v.coords[0] for v in vertices]).T
    q, s, _ = np.linalg.svd(V, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    B = q[:, :rank]
    J = minkowski_matrix(V.shape[0] - 1)
    G = B.T @ J @ B
    w, U = np.linalg.eigh(G)
    if w[0] >= -1e-10 or w[1] <= 1e-12:
        raise SimplexError("span is not a hyperbolic subspace")
    cols = [B @ U[:, 0] / np.sqrt(-w[0])]
    for k in range(1, rank):
        cols.append(B @ U[:, k] / np.sqrt(w[k]))
    T = np.column_stack(cols)
    # orient the timelike axis towards the face
    if float(T[:, 0] @ J @ V[:, 0]) > 0:
        T[:, 0] = -T[:, 0]
    return T


def face_measure(simplex: GeodesicSimplex, face: tuple[int, int], tol: float = 1e-9) -> float:
    """(n-2)-dimensional volume of the codimension-2 face obtained by
    omitting the vertex pair `face`.

    n=2 returns 0 (points).  n=3 returns the edge length and refuses
    ideal endpoints (infinite).  For n >= 4 the face is re-expressed in
    an intrinsic hyperbolic coordinate system and measured there; ideal
    faces have finite measure.
    """
    n = simplex.dim
    i, j = face
    keep = [k for k in range(n + 1) if k not in (i, j)]
    verts = simplex.subsimplex(keep)
    if n == 2:
        return 0.0
    if n == 3:
        x, y = verts
        if x.kind is Kind.IDEAL or y.kind is Kind.IDEAL:
            raise InfiniteFaceMeasureError(
                "n=3 edge with an ideal endpoint has infinite length; "
                "use truncated_edge_length")
        return distance(x, y)
    T = _span_basis(verts)
    J = minkowski_matrix(n)
    Jsub = minkowski_matrix(T.shape[1] - 1)
    coords = []
    for v in verts:
        c = Jsub @ (T.T @ J @ v.coords)
        if v.kind is Kind.MATERIAL:
            coords.append(LorentzVector.material(c))
        else:
            coords.append(LorentzVector.ideal(c))
    sub = GeodesicSimplex(coords)
    return abs(signed_volume(sub, tol))


@dataclass(frozen=True)
class HoroballAssignment:
    """Horoballs at ideal vertices, one scale s > 0 per vertex index.

    The vertex's stored lightlike representative ell defines the horoball
    {x material : <x, s*ell> >= -1}; increasing s shrinks the ball.
    """

    scales: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for k, s in self.scales.items():
            if s <= 0:
                raise SimplexError(f"horoball scale for vertex {k} must be positive, got {s}")

    def scale(self, index: int) -> float:
        return float(self.scales.get(index, 1.0))


def default_horoballs(simplex: GeodesicSimplex, margin: float = np.e**2) -> HoroballAssignment:
    """A valid horoball assignment for every ideal vertex of a 3-simplex:
    each scale is chosen (deterministically, per vertex) large enough that
    the horoballs clear all other vertices and each other by `margin`."""
    J = minkowski_matrix(simplex.dim)
    scales = {}
    for i, v in enumerate(simplex.vertices):
        if v.kind is not Kind.IDEAL:
            continue
        need = 1.0
        for j, w in enumerate(simplex.vertices):
            if j == i:
                continue
            prod = -float(v.coords @ J @ w.coords)
            if prod <= 0:
                raise DegenerateSimplexError("coincident ideal vertices on an edge")
            if w.kind is Kind.MATERIAL:
                need = max(need, 1.0 / prod)
            else:
                need = max(need, np.sqrt(2.0 / prod))
        scales[i] = margin * need
    return HoroballAssignment(scales)


def truncated_edge_length(simplex: GeodesicSimplex, edge: tuple[int, int],
                          horoballs: HoroballAssignment) -> float:
    """Length of the edge after cutting off the horoballs assigned to its
    ideal endpoints.

    Material-material edges ignore the assignment.  The horoballs must
    leave a positive segment (disjoint from each other and from the far
    endpoint); otherwise OverlappingHoroballsError.
    """
    if simplex.dim != 3:
        raise SimplexError("truncated edge lengths are a 3-dimensional operation")
    i, j = edge
    x, y = simplex.vertices[i], simplex.vertices[j]
    J = minkowski_matrix(simplex.dim)

    def rep(v: LorentzVector, idx: int) -> np.ndarray:
        return horoballs.scale(idx) * v.coords

    if x.kind is Kind.MATERIAL and y.kind is Kind.MATERIAL:
        return distance(x, y)
    if x.kind is Kind.IDEAL and y.kind is Kind.IDEAL:
        prod = -float(rep(x, i) @ J @ rep(y, j)) / 2.0
        if prod <= 1.0:
            raise OverlappingHoroballsError(
                "horoballs at the two ideal endpoints overlap or touch")
        return float(np.log(prod))
    if x.kind is Kind.MATERIAL:
        x, y = y, x
        i, j = j, i
    # x ideal, y material: signed distance from y to the horosphere
    val = -float(y.coords @ J @ rep(x, i))
    if val <= 1.0:
        raise OverlappingHoroballsError("horoball contains the material endpoint")
    return float(np.log(val))


class SimplexFamily:
    """A one-parameter family t in [0,1] -> GeodesicSimplex whose vertex
    kinds are constant in t (checked on every evaluation)."""

    def __init__(self, fn: Callable[[float], GeodesicSimplex],
                 kinds: Optional[tuple[Kind, ...]] = None):
        self._fn = fn
        self.kinds = kinds if kinds is not None else fn(0.0).kinds

    def __call__(self, t: float) -> GeodesicSimplex:
        s = self._fn(float(t))
        if s.kinds != self.kinds:
            bad = next(k for k, (a, b) in enumerate(zip(s.kinds, self.kinds)) if a != b)
            raise SimplexError(
                f"vertex slot {bad} changed kind at t={t} "
                f"({self.kinds[bad].value} -> {s.kinds[bad].value})")
        return s

    @staticmethod
    def from_keyframes(times: Sequence[float],
                       keyframes: Sequence[GeodesicSimplex]) -> "SimplexFamily":
        """C^1 family through keyframe simplices: cubic spline on raw
        coordinates, re-normalized to the hyperboloid / light cone per
        slot."""
        from scipy.interpolate import CubicSpline

        times = np.asarray(times, dtype=float)
        kinds = keyframes[0].kinds
        for s in keyframes:
            if s.kinds != kinds:
                raise SimplexError("keyframes are not all of the same type")
        data = np.array([s.vertex_matrix() for s in keyframes])
        spline = CubicSpline(times, data, axis=0)

        def fn(t: float) -> GeodesicSimplex:
            M = spline(t)
            verts = []
            for row, kind in zip(M, kinds):
                if kind is Kind.MATERIAL:
                    verts.append(LorentzVector.material(row))
                else:
                    # interpolation cuts chords inside the sphere; project
                    # back to the cone by rescaling the time coordinate
                    space = np.asarray(row[1:], dtype=float)
                    verts.append(LorentzVector(
                        np.concatenate(([np.linalg.norm(space)], space)),
                        Kind.IDEAL))
            return GeodesicSimplex(verts)

        return SimplexFamily(fn, kinds)
