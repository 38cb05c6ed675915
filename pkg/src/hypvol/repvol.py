"""Representations into SO(n,1): relator checking, peripheral
classification, equivariant developing assignments, volumes of
representations and Toledo numbers, deformation paths with constancy
scans, and the two-tetrahedron gluing-equation solver."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.linalg import expm, logm

from .lorentz import (
    EmptyFixedSetError,
    Isometry,
    Kind,
    LorentzError,
    LorentzVector,
    classify_isometry,
    common_fixed_set,
    from_klein,
    lift_moebius,
    minkowski_gram_schmidt,
    minkowski_matrix,
    so_algebra_residual,
)
from .simplex import GeodesicSimplex, signed_volume
from .triangulation import (
    LabeledTriangulation,
    TriangulationError,
    check_cycle,
    peripheral_words,
)

__all__ = [
    "Representation",
    "RepvolError",
    "RelatorResidualError",
    "PeripheralClassificationError",
    "DegenerateDevelopingError",
    "PeripheralKind",
    "PeripheralClassification",
    "DevelopingAssignment",
    "DeformationPath",
    "PathScanReport",
    "GluingSolution",
    "check_representation",
    "evaluate_word",
    "classify_peripheral",
    "build_developing_assignment",
    "representation_volume",
    "toledo_number",
    "milnor_wood_margin",
    "generate_path",
    "scan_path",
    "solve_gluing_equations",
]

RELATOR_TOL = 1e-8
PATH_RELATOR_TOL = 1e-7


class RepvolError(ValueError):
    pass


class RelatorResidualError(RepvolError):
    def __init__(self, message, worst_relator, residual):
        super().__init__(message)
        self.worst_relator = worst_relator
        self.residual = residual


class PeripheralClassificationError(RepvolError):
    """The peripheral image has no detectable fixed point in the closed
    ball (class Neither): numerically broken input."""


class DegenerateDevelopingError(RepvolError):
    pass


def _coerce_image(M) -> Isometry:
    if isinstance(M, Isometry):
        return M
    A = np.asarray(M)
    if A.shape == (2, 2):
        return lift_moebius(A)
    return Isometry.from_matrix(np.asarray(A, dtype=float))


@dataclass(frozen=True)
class Representation:
    """Generator-indexed images in SO(n,1) with the worst relator
    residual recorded; construct through check_representation."""

    presentation: object
    images: Mapping[str, Isometry]
    relator_residual: float

    @property
    def n(self) -> int:
        return next(iter(self.images.values())).n


def evaluate_word(rep: Representation, word) -> Isometry:
    """Image of a word; long products are re-projected onto the
    form-preserving manifold when drift accumulates."""
    tokens = rep.presentation.parse(word) if isinstance(word, str) else word
    n = rep.n
    out = Isometry.identity(n)
    for g, e in tokens:
        img = rep.images[g]
        out = out @ (img if e > 0 else img.inverse())
    return out


def check_representation(presentation, images, tol: float = RELATOR_TOL) -> Representation:
    """Validate generator images against the relators; accepts iff the
    worst relator residual (max-abs of rho(r) - I) is at most tol.

    2x2 matrices are auto-lifted (complex ones act on H^3, real on H^2).
    """
    imgs = {}
    for g in presentation.generators:
        if g not in images:
            raise RepvolError(f"no image for generator {g!r}")
        imgs[g] = _coerce_image(images[g])
    dims = {im.n for im in imgs.values()}
    if len(dims) != 1:
        raise RepvolError(f"generator images of mixed dimension: {dims}")
    rep = Representation(presentation, imgs, 0.0)
    worst, worst_r = 0.0, None
    n = rep.n
    for r in presentation.relators:
        resid = float(np.max(np.abs(evaluate_word(rep, r).matrix - np.eye(n + 1))))
        if resid > worst:
            worst, worst_r = resid, r
    if worst > tol:
        raise RelatorResidualError(
            f"relator {worst_r!r} has residual {worst:.3e} > {tol}", worst_r, worst)
    return Representation(presentation, imgs, worst)


class PeripheralKind(enum.Enum):
    COMPACT_FIX = "compact"
    PARABOLIC_FIX = "parabolic"
    BOTH = "both"


@dataclass(frozen=True)
class PeripheralClassification:
    cusp_id: str
    kind: PeripheralKind
    interior: Optional[LorentzVector]
    ideal: tuple[LorentzVector, ...]
    sphere: bool = False

    def fixed_point(self, preference: str = "prefer_ideal") -> LorentzVector:
        """The developing target for the cusp's cone point, breaking a
        Both tie by the stated preference."""
        if self.kind is PeripheralKind.COMPACT_FIX:
            return self.interior
        if self.kind is PeripheralKind.PARABOLIC_FIX:
            return self.ideal[0]
        if preference == "prefer_interior" or not self.ideal:
            return self.interior
        return self.ideal[0]


def classify_peripheral(rho: Representation, tri: LabeledTriangulation,
                        cusp_id: str, tol: float = 1e-8) -> PeripheralClassification:
    """Classify the image of a cusp's peripheral subgroup by its common
    fixed locus: a material fixed point means a maximal compact subgroup
    contains the image, an ideal one means a minimal parabolic does;
    both can hold at once.  No fixed point at tolerance is an error.
    """
    words = peripheral_words(tri, cusp_id)
    gens = [evaluate_word(rho, w) for w in words]
    try:
        fs = common_fixed_set(gens, tol)
    except EmptyFixedSetError as exc:
        raise PeripheralClassificationError(
            f"peripheral image of cusp {cusp_id!r} fixes nothing in the "
            f"closed ball at tol {tol}") from exc
    has_interior = fs.interior is not None
    has_ideal = bool(fs.ideal) or fs.sphere
    if has_interior and has_ideal:
        kind = PeripheralKind.BOTH
    elif has_interior:
        kind = PeripheralKind.COMPACT_FIX
    else:
        kind = PeripheralKind.PARABOLIC_FIX
    return PeripheralClassification(cusp_id, kind, fs.interior, fs.ideal, fs.sphere)


@dataclass(frozen=True)
class DevelopingAssignment:
    """Values of the equivariant map on orbit vertices: slot (v, w)
    develops to rho(w) applied to points[v]."""

    points: Mapping[str, LorentzVector]
    seed: int
    classifications: Mapping[str, PeripheralClassification]

    def develop(self, rho: Representation, vid: str, word) -> LorentzVector:
        return evaluate_word(rho, word).apply(self.points[vid])


def _develop_closure(rho: Representation, assignment: DevelopingAssignment):
    """(vid, word) -> coords closure for the relaxed cycle checker, with
    the word action attached."""

    def dev(vid, word):
        return assignment.develop(rho, vid, word).coords

    def act(word, pt):
        return evaluate_word(rho, word).matrix @ np.asarray(pt, dtype=float)

    dev.act = act
    return dev


def _developed_simplices(rho: Representation, tri: LabeledTriangulation,
                         assignment: DevelopingAssignment):
    out = []
    for s in tri.simplices:
        verts = [assignment.develop(rho, v, w) for v, w in s.slots]
        out.append((GeodesicSimplex(verts), s.sign))
    return out


def build_developing_assignment(rho: Representation, tri: LabeledTriangulation,
                                seed: int = 0,
                                boundary_preference: str = "prefer_ideal",
                                min_det: float = 1e-8,
                                max_retries: int = 200,
                                max_restarts: int = 20) -> DevelopingAssignment:
    """Choose developing values: cusp cone points go to fixed points of
    the peripheral images, material orbit vertices are sampled in the
    unit-radius ball around the origin (uniform in Klein coordinates)
    and rejection-resampled until every developed simplex is
    nondegenerate."""
    if boundary_preference not in ("prefer_ideal", "prefer_interior"):
        raise RepvolError(f"unknown boundary preference {boundary_preference!r}")
    classes = {}
    for c in tri.cusps:
        classes[c.id] = classify_peripheral(rho, tri, c.id)
    n = rho.n
    fixed = {}
    material_ids = []
    for v in tri.orbit_vertices:
        if v.kind == "ideal":
            fixed[v.id] = classes[v.cusp].fixed_point(boundary_preference)
        else:
            material_ids.append(v.id)

    rng = np.random.default_rng(seed)
    klein_radius = np.tanh(1.0)

    def sample_point():
        while True:
            k = rng.uniform(-klein_radius, klein_radius, size=n)
            if np.linalg.norm(k) < klein_radius:
                return from_klein(k)

    material_set = set(material_ids)
    for restart in range(max_restarts):
        points = dict(fixed)
        for vid in material_ids:
            points[vid] = sample_point()
        assignment = DevelopingAssignment(points, seed, classes)
        for attempt in range(max_retries):
            degenerate = False
            bad_vertices = set()
            for s in tri.simplices:
                dev = GeodesicSimplex(
                    [assignment.develop(rho, v, w) for v, w in s.slots])
                if abs(dev.orientation_det()) < min_det:
                    degenerate = True
                    bad_vertices.update(
                        v for v, _ in s.slots if v in material_set)
            if not degenerate:
                return assignment
            if not bad_vertices:
                break  # nothing to resample: the degeneracy is intrinsic
            points = dict(points)
            for vid in bad_vertices:
                points[vid] = sample_point()
            assignment = DevelopingAssignment(points, seed, classes)
        if not material_ids:
            break
    raise DegenerateDevelopingError(
        "could not reach a nondegenerate developing assignment within the "
        "retry budget; the representation may collapse every simplex "
        "(its volume is then 0 in tolerant mode)")


def _validate_cycle(rho: Representation, tri: LabeledTriangulation,
                    assignment: DevelopingAssignment):
    if tri.pairings is not None:
        report = check_cycle(tri, develop=_develop_closure(rho, assignment))
    else:
        report = check_cycle(tri)
    if not report.is_cycle:
        raise TriangulationError(
            f"triangulation is not a cycle: {len(report.unmatched)} unmatched faces")


def representation_volume(rho: Representation, tri: LabeledTriangulation,
                          assignment: DevelopingAssignment,
                          tol: float = 1e-9,
                          validate_cycle: bool = True) -> float:
    """Sum of signed volumes of the developed simplices weighted by
    their cycle signs; degenerate developed simplices contribute zero.

    The value does not depend on the seed or fixed-point choices of the
    assignment (tested, not assumed).
    """
    if validate_cycle:
        _validate_cycle(rho, tri, assignment)
    total = 0.0
    for dev, sign in _developed_simplices(rho, tri, assignment):
        total += sign * signed_volume(dev, tol)
    return total


def _tangent_angle(simplex: GeodesicSimplex, at: int) -> float:
    """Interior angle of a 2-simplex at a material vertex, from the
    Riemannian angle between the initial tangents of the two sides."""
    x = simplex.vertices[at]
    if x.kind is Kind.IDEAL:
        return 0.0
    others = [v for k, v in enumerate(simplex.vertices) if k != at]
    J = minkowski_matrix(simplex.dim)
    tangents = []
    for u in others:
        t = u.coords + float(x.coords @ J @ u.coords) * x.coords
        norm = float(t @ J @ t)
        if norm <= 0:
            raise RepvolError("degenerate side in angle computation")
        tangents.append(t / np.sqrt(norm))
    c = float(tangents[0] @ J @ tangents[1])
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def toledo_number(rho: Representation, tri: LabeledTriangulation,
                  assignment: DevelopingAssignment,
                  validate_cycle: bool = True) -> float:
    """The 2-dimensional volume of a representation, computed through
    the angle-sum area formula (pi minus the interior angles, measured
    between side tangents) rather than through signed_volume; both
    formulas give one number."""
    if tri.dim != 2:
        raise RepvolError("Toledo numbers are 2-dimensional")
    if validate_cycle:
        _validate_cycle(rho, tri, assignment)
    total = 0.0
    for dev, sign in _developed_simplices(rho, tri, assignment):
        det = dev.orientation_det()
        if abs(det) < 1e-12:
            continue
        eps = 1.0 if det > 0 else -1.0
        angle_sum = sum(_tangent_angle(dev, k) for k in range(3))
        total += sign * eps * (np.pi - angle_sum)
    return total


def milnor_wood_margin(vol: float, reference_vol: float) -> float:
    """reference_vol - |vol|; nonnegative (up to tolerance) for genuine
    representations, near zero exactly for maximal ones."""
    if reference_vol <= 0:
        raise RepvolError("reference volume must be positive")
    return float(reference_vol - abs(vol))


@dataclass
class DeformationPath:
    """C^1 family t in [0,1] -> Representation."""

    kind: str
    base: Representation
    _eval: Callable[[float], Representation]
    meta: dict = field(default_factory=dict)

    def evaluate(self, t: float) -> Representation:
        return self._eval(float(t))


def _conjugation_path(base: Representation, direction: np.ndarray) -> DeformationPath:
    X = np.asarray(direction, dtype=float)
    n = base.n
    if X.shape != (n + 1, n + 1):
        raise RepvolError(f"direction must be {(n+1, n+1)}, got {X.shape}")
    if so_algebra_residual(X) > 1e-10:
        raise RepvolError("direction is not in so(n,1): X^T J + J X != 0")

    def ev(t: float) -> Representation:
        g = Isometry.from_matrix(expm(t * X))
        gi = g.inverse()
        images = {k: g @ im @ gi for k, im in base.images.items()}
        return check_representation(base.presentation, images, tol=PATH_RELATOR_TOL)

    return DeformationPath("conjugation", base, ev, {"direction": X})


class TwistEllipticBoundaryError(RepvolError):
    pass


def _twist2d_path(base: Representation, generator: str,
                  direction, boundary_words: Sequence[str]) -> DeformationPath:
    if base.n != 2:
        raise RepvolError("twist paths live on H^2 representations")
    if generator not in base.images:
        raise RepvolError(f"unknown generator {generator!r}")
    if isinstance(direction, str):
        Y = np.real(logm(evaluate_word(base, direction).matrix))
    else:
        Y = np.asarray(direction, dtype=float)
    if so_algebra_residual(Y) > 1e-8:
        raise RepvolError("twist direction is not in so(2,1)")

    def ev(t: float) -> Representation:
        g = Isometry.from_matrix(expm(t * Y))
        images = dict(base.images)
        images[generator] = images[generator] @ g
        rep = check_representation(base.presentation, images, tol=PATH_RELATOR_TOL)
        for w in boundary_words:
            iso = evaluate_word(rep, w)
            try:
                cls = classify_isometry(iso)
            except LorentzError:
                continue  # boundary element on a classification boundary: not elliptic
            from .lorentz import IsometryClass
            if cls.kind is IsometryClass.ELLIPTIC:
                raise TwistEllipticBoundaryError(
                    f"boundary word {w!r} became elliptic at t={t}")
        return rep

    return DeformationPath("twist2d", base, ev,
                           {"generator": generator, "boundary_words": tuple(boundary_words)})


def _keyframes_path(presentation, times: Sequence[float],
                    keyframes: Sequence[Mapping[str, np.ndarray]]) -> DeformationPath:
    from scipy.interpolate import CubicSpline

    times = np.asarray(times, dtype=float)
    gens = list(keyframes[0])
    reps = [check_representation(presentation, imgs) for imgs in keyframes]
    data = {g: np.array([r.images[g].matrix for r in reps]) for g in gens}
    splines = {g: CubicSpline(times, data[g], axis=0) for g in gens}

    def ev(t: float) -> Representation:
        images = {g: Isometry(minkowski_gram_schmidt(splines[g](t))) for g in gens}
        return check_representation(presentation, images, tol=PATH_RELATOR_TOL)

    return DeformationPath("keyframes", reps[0], ev, {"times": times})


def generate_path(kind: str, params: Mapping) -> DeformationPath:
    """Build a deformation path.

    kinds: "conjugation" (base, direction: so(n,1) matrix),
    "twist2d" (base, generator, direction: so(2,1) matrix or a word whose
    image's logarithm is used, boundary_words guarded non-elliptic),
    "keyframes" (presentation, times, keyframes), and "dehn3d"
    (triangulation with gluing data, filling (p, q), samples) which pulls
    shapes along a filling-coefficient segment from the complete
    structure and reconstitutes the holonomy per sample.
    """
    if kind == "conjugation":
        return _conjugation_path(params["base"], params["direction"])
    if kind == "twist2d":
        return _twist2d_path(params["base"], params["generator"],
                             params["direction"], params.get("boundary_words", ()))
    if kind == "keyframes":
        return _keyframes_path(params["presentation"], params["times"],
                               params["keyframes"])
    if kind == "dehn3d":
        return _dehn3d_path(params["triangulation"], params["filling"],
                            params.get("steps", 24))
    raise RepvolError(f"unknown path kind {kind!r}")


@dataclass(frozen=True)
class PathScanReport:
    samples: tuple  # (t, volume, {cusp: PeripheralKind})
    verdict: str    # "Constant" | "NonConstant"
    max_deviation: float
    milnor_wood_margin_min: Optional[float]
    tolerance: float


def scan_path(path: DeformationPath, tri: LabeledTriangulation, n_samples: int,
              tol: Optional[float] = None, reference_vol: Optional[float] = None,
              seed: int = 0, boundary_preference: Optional[str] = None) -> PathScanReport:
    """Evaluate Vol(rho_t) at uniform samples (one shared seed for the
    developing assignments), record the per-cusp classification at every
    sample, and report the constancy verdict at a scale-aware tolerance
    (default 1e-6 * (1 + |Vol(rho_0)|)).

    When a cusp classifies as Both at some sample, its developing target
    is broken by boundary_preference; the default prefers the ideal
    fixed point on paths built to stay boundary-parabolic (twist and
    Dehn continuation) and the interior one otherwise.  The volume does
    not depend on the choice; the per-sample classifications let a
    caller spot crossings.
    """
    if n_samples < 3:
        raise RepvolError("need at least 3 samples")
    if boundary_preference is None:
        boundary_preference = ("prefer_ideal" if path.kind in ("twist2d", "dehn3d")
                               else "prefer_interior")
    ts = np.linspace(0.0, 1.0, n_samples)
    samples = []
    vols = []
    margin_min = None
    for t in ts:
        rep = path.evaluate(t)
        assignment = build_developing_assignment(
            rep, tri, seed=seed, boundary_preference=boundary_preference)
        vol = representation_volume(rep, tri, assignment)
        classes = {c: assignment.classifications[c].kind.value
                   for c in assignment.classifications}
        samples.append((float(t), vol, classes))
        vols.append(vol)
        if reference_vol is not None:
            m = milnor_wood_margin(vol, reference_vol)
            margin_min = m if margin_min is None else min(margin_min, m)
    vols = np.asarray(vols)
    if tol is None:
        tol = 1e-6 * (1.0 + abs(vols[0]))
    dev = float(np.max(np.abs(vols - vols[0])))
    verdict = "Constant" if dev <= tol else "NonConstant"
    return PathScanReport(tuple(samples), verdict, dev, margin_min, tol)


# --- gluing equations (two-ideal-tetrahedron fixtures) -----------------

@dataclass(frozen=True)
class GluingSolution:
    shapes: tuple[complex, ...]
    representation: Representation
    residual: float
    log_holonomies: tuple[complex, complex]  # (meridian, longitude)


class GluingError(RepvolError):
    pass


def _mobius_three_point(src, dst) -> np.ndarray:
    """SL(2,C) matrix sending the three source points (None = infinity)
    to the three targets."""

    def to_quad(p):
        # projective coordinates
        return (1.0 + 0j, 0.0 + 0j) if p is None else (complex(p), 1.0 + 0j)

    def std_map(z):
        # sends z1,z2,z3 -> 0, 1, infinity
        (a1, b1), (a2, b2), (a3, b3) = [to_quad(p) for p in z]
        m = np.array([
            [(a2 * b3 - a3 * b2) * b1, -(a2 * b3 - a3 * b2) * a1],
            [(a2 * b1 - a1 * b2) * b3, -(a2 * b1 - a1 * b2) * a3],
        ], dtype=complex)
        return m

    m1 = std_map(src)
    m2 = std_map(dst)
    out = np.linalg.inv(m2) @ m1
    det = out[0, 0] * out[1, 1] - out[0, 1] * out[1, 0]
    return out / np.sqrt(det)


def _mobius_apply(m, z):
    if z is None:
        return None if abs(m[1, 0]) < 1e-14 else m[0, 0] / m[1, 0]
    den = m[1, 0] * z + m[1, 1]
    if abs(den) < 1e-14:
        return None
    return (m[0, 0] * z + m[0, 1]) / den


def _fig8_generators(z1: complex, z2: complex):
    """SL(2,C) images of the two generators reconstructed from the
    developed cells (infinity, 0, 1, z1) and (infinity, 0, 1, 1/z2)
    through the fixture's face pairings; both shape parameters live in
    the upper half plane and the apex positions are holomorphic in
    them."""
    u = z1
    v = 1.0 / z2
    m2 = _mobius_three_point([None, 1.0 + 0j, u], [v, 0j, None])
    m3 = _mobius_three_point([None, 0j, u], [v, 0j, 1.0 + 0j])
    b = np.linalg.inv(m3)
    a = np.linalg.inv(m2) @ m3
    return a, b


FIG8_MERIDIAN_WORD = "a"
FIG8_LONGITUDE_WORD = "b a B A A B a b"


def _fig8_log_holonomies(z1, z2, prev=None):
    """Logarithmic meridian/longitude holonomies, branch-tracked against
    `prev`.

    In the reconstruction normalization both peripheral images fix
    infinity, so their matrices are upper triangular and the diagonal
    entry is the eigenvalue itself; u = log(a_11^2) and v = log(l_11^2)
    are analytic along the deformation curve and vanish at the complete
    structure (squaring removes the PSL sign of the lift)."""
    a, b = _fig8_generators(z1, z2)
    amat = {'a': a, 'b': b, 'A': np.linalg.inv(a), 'B': np.linalg.inv(b)}

    def word_mat(word):
        m = np.eye(2, dtype=complex)
        for tok in word.split():
            m = m @ amat[tok]
        return m

    mer = word_mat(FIG8_MERIDIAN_WORD)
    lon = word_mat(FIG8_LONGITUDE_WORD)
    u_log = np.log(mer[0, 0] ** 2)
    v_log = np.log(lon[0, 0] ** 2)
    if prev is not None:
        pu, pv = prev
        u_log += 2j * np.pi * np.round((pu - u_log).imag / (2 * np.pi))
        v_log += 2j * np.pi * np.round((pv - v_log).imag / (2 * np.pi))
    return u_log, v_log


def _fig8_edge_residual(z1, z2):
    """Logarithmic edge equation of the first edge class of the shipped
    two-cell complex, derived from its face pairings: the first cell
    contributes parameters at its edges (inf 0), (inf 1), (1 u) and the
    reversed second cell at (inf 0), (inf 1), (v 0), for a total of
    2 log z1 - log(1-z1) - log z2 + 2 log(z2 - 1) = 2 pi i
    on the branch through the complete structure (both shapes in the
    upper half plane).  The second edge class is complementary."""
    return (2.0 * np.log(z1) - np.log(1.0 - z1)
            - np.log(z2) + 2.0 * np.log(z2 - 1.0)) - 2j * np.pi


def solve_gluing_equations(tri: LabeledTriangulation, filling,
                           init_shapes: Sequence[complex],
                           tol: float = 1e-11, max_iter: int = 60,
                           prev_logs=None) -> GluingSolution:
    """Newton-solve the fixture's gluing equations.

    filling is "complete" or a pair (p, q).  Filled structures satisfy
    p*u + q*v = 2 pi i on the logarithmic meridian/longitude holonomies;
    the complete structure (where u has a branch point) is cut instead by
    the meridian eigenvalue equalling 1.  Shapes must start in the upper
    half plane and are rejected if Newton leaves it.

    Returns shape parameters (upper-half-plane for both cells), the
    reconstructed representation, and the final residual.
    """
    if tri.gluing is None or tri.gluing.get("recipe") != "two_tet_once_cusped":
        raise GluingError("triangulation carries no supported gluing data")
    z1, z2 = [complex(z) for z in init_shapes]
    if z1.imag <= 0 or z2.imag <= 0:
        raise GluingError("initial shapes must lie in the upper half plane")
    x = np.array([z1, z2], dtype=complex)

    if isinstance(filling, str):
        if filling.lower() != "complete":
            raise GluingError(f"unknown filling spec {filling!r}")
        coeffs = None
    else:
        p, q = filling
        coeffs = (float(p), float(q))

    logs = prev_logs

    def residual_vec(xv):
        e1 = _fig8_edge_residual(xv[0], xv[1])
        if coeffs is None:
            # The meridian image is upper triangular in the developing
            # normalization, so its (0,0) entry is its eigenvalue;
            # eigenvalue 1 cuts the complete structure transversally.
            a, _ = _fig8_generators(xv[0], xv[1])
            c = a[0, 0] - 1.0
            return np.array([e1, c], dtype=complex), None
        hu, hv = _fig8_log_holonomies(xv[0], xv[1], prev=logs)
        c = coeffs[0] * hu + coeffs[1] * hv - 2j * np.pi
        return np.array([e1, c], dtype=complex), (hu, hv)

    h = 1e-7

    def newton(x, stop_tol):
        nonlocal logs
        res, cur = residual_vec(x)
        for _ in range(max_iter):
            if np.max(np.abs(res)) <= stop_tol:
                return x, res, cur
            Jm = np.zeros((2, 2), dtype=complex)
            for k in range(2):
                dx = np.zeros(2, dtype=complex)
                dx[k] = h
                rp, _ = residual_vec(x + dx)
                rm, _ = residual_vec(x - dx)
                Jm[:, k] = (rp - rm) / (2 * h)
            try:
                step = np.linalg.solve(Jm, -res)
            except np.linalg.LinAlgError as exc:
                raise GluingError("singular Newton system") from exc
            damp = 1.0
            for _ in range(30):
                xn = x + damp * step
                if xn[0].imag > 0 and xn[1].imag > 0:
                    rn, cur_n = residual_vec(xn)
                    if np.max(np.abs(rn)) < np.max(np.abs(res)) or damp < 1e-3:
                        x, res, cur = xn, rn, cur_n
                        if cur is not None:
                            logs = cur
                        break
                damp *= 0.5
            else:
                raise GluingError(
                    f"Newton stalled with shapes leaving the upper half plane at {x}")
        return x, res, cur

    x, res, cur_logs = newton(x, tol)
    if np.max(np.abs(res)) > tol:
        raise GluingError(
            f"Newton did not reach tol {tol}: residual {np.max(np.abs(res)):.3e}")
    a, b = _fig8_generators(x[0], x[1])
    rep = check_representation(tri.presentation, {"a": a, "b": b})
    if cur_logs is None:
        cur_logs = (0.0 + 0j, 0.0 + 0j)
    return GluingSolution((x[0], x[1]), rep,
                          float(np.max(np.abs(res))), cur_logs)


def _dehn3d_path(tri: LabeledTriangulation, filling, steps: int) -> DeformationPath:
    """Continuation from the complete structure toward the (p, q) Dehn
    filling: at parameter t the cusp equation is p*u + q*v = t * 2 pi i."""
    p, q = filling
    omega = complex(np.cos(np.pi / 3), np.sin(np.pi / 3))
    base_sol = solve_gluing_equations(tri, "complete", (omega, omega))
    cache = {0.0: (base_sol, base_sol.log_holonomies)}

    def solve_at(t: float) -> GluingSolution:
        known = sorted(k for k in cache if k <= t + 1e-12)
        t0 = known[-1]
        sol, logs = cache[t0]
        if abs(t0 - t) < 1e-12:
            return sol
        # walk from t0 to t in small increments, tracking branches
        s = t0
        while s < t - 1e-12:
            s = min(t, s + 1.0 / steps)
            sol = _solve_filled_fraction(tri, (p, q), s, sol, logs)
            logs = sol.log_holonomies
            cache[s] = (sol, logs)
        return sol

    def ev(t: float) -> Representation:
        return solve_at(float(t)).representation

    path = DeformationPath("dehn3d", base_sol.representation, ev,
                           {"filling": (p, q), "solver": solve_at})
    return path


def _solve_filled_fraction(tri, filling, frac, prev_sol, prev_logs) -> GluingSolution:
    p, q = filling
    x = np.array(prev_sol.shapes, dtype=complex)
    logs = prev_logs

    def residual_vec(xv):
        e1 = _fig8_edge_residual(xv[0], xv[1])
        hu, hv = _fig8_log_holonomies(xv[0], xv[1], prev=logs)
        c = p * hu + q * hv - frac * 2j * np.pi
        return np.array([e1, c], dtype=complex), (hu, hv)

    h = 1e-7
    res, cur_logs = residual_vec(x)
    for it in range(60):
        if np.max(np.abs(res)) <= 1e-11:
            break
        Jm = np.zeros((2, 2), dtype=complex)
        for k in range(2):
            dx = np.zeros(2, dtype=complex)
            dx[k] = h
            rp, _ = residual_vec(x + dx)
            rm, _ = residual_vec(x - dx)
            Jm[:, k] = (rp - rm) / (2 * h)
        step = np.linalg.solve(Jm, -res)
        damp = 1.0
        while damp > 1e-4:
            xn = x + damp * step
            if xn[0].imag > 0 and xn[1].imag > 0:
                rn, logs_n = residual_vec(xn)
                if np.max(np.abs(rn)) < np.max(np.abs(res)):
                    x, res = xn, rn
                    logs = logs_n
                    cur_logs = logs_n
                    break
            damp *= 0.5
        else:
            raise GluingError(f"continuation stalled at fraction {frac}, shapes {x}")
    if np.max(np.abs(res)) > 1e-11:
        raise GluingError(f"continuation did not converge at fraction {frac}")
    a, b = _fig8_generators(x[0], x[1])
    rep = check_representation(tri.presentation, {"a": a, "b": b})
    return GluingSolution((x[0], x[1]), rep, float(np.max(np.abs(res))), cur_logs)
