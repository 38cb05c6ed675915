"""Minkowski-space linear algebra for the hyperboloid model of H^n.

Points of hyperbolic n-space are unit timelike vectors on the upper sheet
of the hyperboloid <x,x> = -1 in R^{n,1}; points of the sphere at infinity
are future-pointing lightlike rays, stored through a representative with
x_0 > 0.  Orientation-preserving isometries are SO(n,1)^+ matrices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Kind",
    "LorentzVector",
    "Isometry",
    "IsometryClass",
    "IsometryClassification",
    "FixedSet",
    "LorentzError",
    "AmbiguousClassificationError",
    "EmptyFixedSetError",
    "minkowski_inner",
    "minkowski_matrix",
    "distance",
    "model_convert",
    "from_klein",
    "classify_isometry",
    "common_fixed_set",
    "lift_moebius",
    "minkowski_gram_schmidt",
    "so_algebra_residual",
]

FORM_TOL = 1e-10
MATERIAL_TOL = 1e-12
IDEAL_EQ_TOL = 1e-9


class LorentzError(ValueError):
    """Base error for invalid Minkowski-space inputs."""


class AmbiguousClassificationError(LorentzError):
    """Raised when an isometry sits on a classification boundary at the
    requested tolerance.  ``candidates`` holds the competing classes."""

    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = tuple(candidates)


class EmptyFixedSetError(LorentzError):
    """Raised when a generating set has no common fixed point in the
    closed ball at the requested tolerance."""


class Kind(enum.Enum):
    MATERIAL = "material"
    IDEAL = "ideal"
    RAW = "raw"


def minkowski_matrix(n: int) -> np.ndarray:
    """diag(-1, 1, ..., 1) for R^{n,1}."""
    J = np.eye(n + 1)
    J[0, 0] = -1.0
    return J


def _inner(u: np.ndarray, v: np.ndarray) -> float:
    return float(-u[0] * v[0] + u[1:] @ v[1:])


@dataclass(frozen=True)
class LorentzVector:
    """A vector of R^{n,1} tagged as a hyperbolic point, an ideal point,
    or a raw vector.

    Material vectors satisfy <x,x> = -1 with x_0 > 0.  Ideal vectors are
    future-pointing lightlike representatives, defined up to positive
    scaling.  Raw vectors carry no constraint.
    """

    coords: np.ndarray
    kind: Kind

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.shape[0] < 3:
            raise LorentzError(f"need at least 3 coordinates (n >= 2), got shape {c.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        q = _inner(c, c)
        if self.kind is Kind.MATERIAL:
            if abs(q + 1.0) > 1e-9 or c[0] <= 0:
                raise LorentzError(f"not a material point: <x,x>={q}, x0={c[0]}")
        elif self.kind is Kind.IDEAL:
            scale = float(c @ c)
            if scale == 0.0 or abs(q) > 1e-9 * scale or c[0] <= 0:
                raise LorentzError(f"not an ideal point: <x,x>={q}, x0={c[0]}")

    @property
    def n(self) -> int:
        return self.coords.shape[0] - 1

    @property
    def x0(self) -> float:
        return float(self.coords[0])

    @staticmethod
    def material(coords: Sequence[float]) -> "LorentzVector":
        """Material point from hyperboloid coordinates, renormalized to
        kill floating-point drift in <x,x>."""
        c = np.asarray(coords, dtype=float)
        q = _inner(c, c)
        if q >= 0 or c[0] <= 0:
            raise LorentzError(f"not timelike future-pointing: <x,x>={q}")
        return LorentzVector(c / np.sqrt(-q), Kind.MATERIAL)

    @staticmethod
    def ideal(coords: Sequence[float]) -> "LorentzVector":
        """Ideal point from an approximately lightlike representative,
        projected exactly onto the light cone by renormalizing the space
        part.  The input only needs to be near the cone (sanity guard at
        0.1% relative); interpolation or long isometry products may have
        drifted it."""
        c = np.asarray(coords, dtype=float)
        if c[0] <= 0:
            raise LorentzError("ideal representative must have x0 > 0")
        s = np.linalg.norm(c[1:])
        if s == 0:
            raise LorentzError("zero space part cannot be lightlike")
        q = _inner(c, c)
        if abs(q) > 1e-3 * float(c @ c):
            raise LorentzError(f"representative too far from the light cone: <x,x>={q}")
        out = np.concatenate(([s], c[1:]))
        return LorentzVector(out, Kind.IDEAL)

    @staticmethod
    def raw(coords: Sequence[float]) -> "LorentzVector":
        return LorentzVector(np.asarray(coords, dtype=float), Kind.RAW)

    @staticmethod
    def basis_point(n: int) -> "LorentzVector":
        """The point e_0, the center of the ball model."""
        c = np.zeros(n + 1)
        c[0] = 1.0
        return LorentzVector(c, Kind.MATERIAL)

    def unit(self) -> "LorentzVector":
        """x_0 = 1 representative (projective normalization)."""
        return LorentzVector(self.coords / self.coords[0], self.kind) if self.kind is Kind.IDEAL \
            else self

    def scaled(self, factor: float) -> "LorentzVector":
        """Positive rescaling of an ideal representative."""
        if self.kind is not Kind.IDEAL:
            raise LorentzError("only ideal representatives rescale")
        if factor <= 0:
            raise LorentzError("scale factor must be positive")
        return LorentzVector(self.coords * factor, Kind.IDEAL)

    def same_point(self, other: "LorentzVector", tol: float = IDEAL_EQ_TOL) -> bool:
        """Equality as points of the closed ball (ideal reps compared at
        x_0 = 1)."""
        if self.kind is not other.kind:
            return False
        a, b = self.coords, other.coords
        if self.kind is Kind.IDEAL:
            a, b = a / a[0], b / b[0]
        return bool(np.max(np.abs(a - b)) <= tol)


def minkowski_inner(u: LorentzVector, v: LorentzVector) -> float:
    """The bilinear form -u_0 v_0 + sum u_i v_i."""
    if u.coords.shape != v.coords.shape:
        raise LorentzError(f"dimension mismatch: {u.coords.shape} vs {v.coords.shape}")
    return _inner(u.coords, v.coords)


def distance(x: LorentzVector, y: LorentzVector) -> float:
    """Hyperbolic distance between material points, cosh d = -<x,y>."""
    if x.kind is not Kind.MATERIAL or y.kind is not Kind.MATERIAL:
        raise LorentzError("distance requires material points")
    c = -minkowski_inner(x, y)
    return float(np.arccosh(max(c, 1.0)))


def model_convert(x: LorentzVector, target: str):
    """Convert between the hyperboloid and Klein models.

    target="klein": material or ideal vector -> length-n array (inside or
    on the unit sphere).  target="hyperboloid": length-n Klein array ->
    LorentzVector (material strictly inside, ideal on the sphere).
    """
    t = target.lower()
    if t == "klein":
        if not isinstance(x, LorentzVector) or x.kind is Kind.RAW:
            raise LorentzError("klein conversion needs a material or ideal vector")
        return x.coords[1:] / x.coords[0]
    if t == "hyperboloid":
        k = np.asarray(x, dtype=float)
        return from_klein(k)
    raise LorentzError(f"unknown target model {target!r}")


def from_klein(k: np.ndarray, boundary_tol: float = 1e-12) -> LorentzVector:
    """Lift a Klein-model point to the hyperboloid (or the light cone if
    it lies on the unit sphere within boundary_tol)."""
    k = np.asarray(k, dtype=float)
    r2 = float(k @ k)
    if r2 > 1.0 + boundary_tol:
        raise LorentzError(f"Klein point outside the closed ball: |k|^2={r2}")
    if r2 >= 1.0 - boundary_tol:
        return LorentzVector.ideal(np.concatenate(([1.0], k / np.sqrt(r2))))
    return LorentzVector(np.concatenate(([1.0], k)) / np.sqrt(1.0 - r2), Kind.MATERIAL)


def minkowski_gram_schmidt(A: np.ndarray) -> np.ndarray:
    """Project a near-SO(n,1) matrix back onto the form-preserving
    manifold by Gram-Schmidt in the Minkowski metric (column 0 timelike,
    the rest spacelike)."""
    A = np.array(A, dtype=float)
    m = A.shape[0]
    J = minkowski_matrix(m - 1)
    cols = []
    signs = []
    for i in range(m):
        v = A[:, i].copy()
        for u, s in zip(cols, signs):
            v -= (s * (u @ J @ v)) * u
        q = float(v @ J @ v)
        if i == 0:
            if q >= 0:
                raise LorentzError("column 0 not timelike; cannot reproject")
            v = v / np.sqrt(-q)
            signs.append(-1.0)
        else:
            if q <= 0:
                raise LorentzError("spacelike column collapsed; cannot reproject")
            v = v / np.sqrt(q)
            signs.append(1.0)
        cols.append(v)
    return np.column_stack(cols)


@dataclass(frozen=True)
class Isometry:
    """An element of SO(n,1)^+: A^T J A = J, det A = +1, A_00 > 0."""

    matrix: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 3:
            raise LorentzError(f"isometry matrix must be square of size >= 3, got {A.shape}")
        J = minkowski_matrix(A.shape[0] - 1)
        # the residual of an exact isometry rounded to floats scales with
        # |A|^2, so the tolerance is relative to that
        scale = max(1.0, float(np.max(np.abs(A))) ** 2)
        resid = np.max(np.abs(A.T @ J @ A - J))
        if resid > FORM_TOL * scale:
            raise LorentzError(
                f"form residual {resid:.3e} exceeds {FORM_TOL} * {scale:.2e}")
        d = np.linalg.det(A)
        if abs(d - 1.0) > FORM_TOL * scale:
            raise LorentzError(f"determinant {d} != +1")
        if A[0, 0] <= 0:
            raise LorentzError("A_00 <= 0: does not preserve the upper sheet")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1

    @staticmethod
    def identity(n: int) -> "Isometry":
        return Isometry(np.eye(n + 1))

    @staticmethod
    def from_matrix(A: np.ndarray, reproject: bool = True) -> "Isometry":
        """Wrap a matrix, reprojecting to the form-preserving manifold
        first when the residual is above drift level but still small."""
        A = np.asarray(A, dtype=float)
        J = minkowski_matrix(A.shape[0] - 1)
        scale = max(1.0, float(np.max(np.abs(A))) ** 2)
        resid = np.max(np.abs(A.T @ J @ A - J))
        if reproject and 0.5 * FORM_TOL * scale < resid < 1e-4 * scale:
            A = minkowski_gram_schmidt(A)
        return Isometry(A)

    def inverse(self) -> "Isometry":
        J = minkowski_matrix(self.n)
        return Isometry(J @ self.matrix.T @ J)

    def compose(self, other: "Isometry") -> "Isometry":
        """self o other, reprojected onto the form-preserving manifold
        when accumulated drift approaches the validation tolerance."""
        P = self.matrix @ other.matrix
        J = minkowski_matrix(self.n)
        scale = max(1.0, float(np.max(np.abs(P))) ** 2)
        if np.max(np.abs(P.T @ J @ P - J)) > 0.5 * FORM_TOL * scale:
            P = minkowski_gram_schmidt(P)
        return Isometry(P)

    def __matmul__(self, other):
        if isinstance(other, Isometry):
            return self.compose(other)
        return NotImplemented

    def apply(self, x: LorentzVector) -> LorentzVector:
        y = self.matrix @ x.coords
        # strong contractions shrink lightlike vectors by 1/lambda while
        # rounding noise stays relative to |A||x|; re-project onto the
        # cone / hyperboloid instead of validating the raw product
        if x.kind is Kind.IDEAL:
            return LorentzVector.ideal(y)
        if x.kind is Kind.MATERIAL:
            return LorentzVector.material(y)
        return LorentzVector(y, Kind.RAW)


class IsometryClass(enum.Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    LOXODROMIC = "loxodromic"


@dataclass(frozen=True)
class IsometryClassification:
    kind: IsometryClass
    interior_fixed: Optional[LorentzVector]
    ideal_fixed: tuple[LorentzVector, ...]
    fixes_sphere: bool = False


@dataclass(frozen=True)
class FixedSet:
    interior: Optional[LorentzVector]
    ideal: tuple[LorentzVector, ...]
    sphere: bool = False


def _fixed_subspace(mats: Sequence[np.ndarray], tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the common eigenvalue-1 space of
    the given matrices, via SVD of the stacked (A_i - I)."""
    m = mats[0].shape[0]
    stacked = np.vstack([A - np.eye(m) for A in mats])
    _, s, vt = np.linalg.svd(stacked)
    smax = s[0] if len(s) else 0.0
    cutoff = tol * max(smax, 1.0)
    rank = int(np.sum(s > cutoff))
    return vt[rank:].T  # (m, k)


def _ball_points_from_subspace(B: np.ndarray, tol: float):
    """Split a fixed linear subspace into its hyperbolic content.

    Returns (interior, ideal_rays, sphere) where interior is a material
    vector or None, ideal_rays is a list of lightlike representatives
    (only enumerated when isolated), and sphere flags a fixed set that
    contains the whole sphere at infinity.
    """
    m, k = B.shape
    if k == 0:
        return None, [], False
    J = minkowski_matrix(m - 1)
    G = B.T @ J @ B
    w, U = np.linalg.eigh(G)
    interior = None
    rays: list[np.ndarray] = []
    if w[0] < -tol:
        v = B @ U[:, 0]
        if v[0] < 0:
            v = -v
        interior = v / np.sqrt(-_inner(v, v))
        if k == m:
            return interior, [], True
        if k == 2 and w[1] > tol:
            t = B @ U[:, 0] / np.sqrt(-w[0])
            s = B @ U[:, 1] / np.sqrt(w[1])
            for ray in (t + s, t - s):
                if ray[0] < 0:
                    ray = -ray
                rays.append(ray)
        # k >= 3 with a timelike direction fixes a whole subsphere of
        # ideal points; those are not enumerated.
    elif abs(w[0]) <= tol:
        ray = B @ U[:, 0]
        if abs(ray[0]) > tol * np.linalg.norm(ray):
            if ray[0] < 0:
                ray = -ray
            rays.append(ray)
    return interior, rays, False


def _residual(A: np.ndarray, x: np.ndarray) -> float:
    """Relative eigen-residual of x as a fixed ray of A."""
    y = A @ x
    lam = float(y @ x) / float(x @ x)
    if lam <= 0:
        return np.inf
    return float(np.linalg.norm(y - lam * x) / np.linalg.norm(y))


def _loxodromic_rays(A: np.ndarray, tol: float) -> list[np.ndarray]:
    eigvals, eigvecs = np.linalg.eig(A)
    order = np.argsort(np.abs(eigvals))
    rays = []
    for idx in (order[-1], order[0]):
        lam = eigvals[idx]
        if abs(lam.imag) > 1e-6 * abs(lam) or lam.real <= 0:
            raise AmbiguousClassificationError(
                "extremal eigenvalue is not real positive",
                [IsometryClass.LOXODROMIC, IsometryClass.ELLIPTIC])
        v = eigvecs[:, idx]
        phase = v[np.argmax(np.abs(v))]
        v = np.real(v * np.conj(phase) / abs(phase))
        nv = np.linalg.norm(v)
        if nv == 0 or abs(_inner(v, v)) > 1e-6 * nv**2:
            raise AmbiguousClassificationError(
                "extremal eigenvector is not lightlike at tolerance",
                [IsometryClass.LOXODROMIC, IsometryClass.ELLIPTIC])
        if v[0] < 0:
            v = -v
        rays.append(v)
    return rays


def classify_isometry(iso: Isometry, tol: float = 1e-8) -> IsometryClassification:
    """Classify by fixed sets in the closed ball.

    Elliptic elements have a material fixed point (an eigenvalue-1
    timelike eigenvector), parabolic elements a single ideal fixed ray,
    loxodromic elements an expanding/contracting pair of ideal rays.

    The decision runs off a singular value analysis of A - I (stable
    even for the defective Jordan structure of parabolics, where plain
    eigenvalues scatter like eps^(1/3)); the spectral radius is only a
    cross-check.  A conflict between the two views means the element is
    numerically on the parabolic boundary and raises
    AmbiguousClassificationError with both candidates.
    """
    A = iso.matrix
    m = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - np.eye(m))) <= tol * scale:
        return IsometryClassification(
            IsometryClass.IDENTITY, LorentzVector.basis_point(m - 1), (), fixes_sphere=True)
    lam_max = float(np.max(np.abs(np.linalg.eigvals(A))))
    # Below `guard` the spectral radius of a true parabolic is
    # indistinguishable from 1 (defective eigenvalues scatter like
    # eps^(1/3)); above `decisive` the expanding eigenvector is crisp and
    # the eigenvalue-1 analysis may itself be swamped by the matrix norm.
    guard = max(100.0 * tol, 1e-5) * scale
    decisive = 1e-3
    if lam_max > 1.0 + max(decisive, guard):
        lox = _loxodromic_rays(A, tol)
        return IsometryClassification(
            IsometryClass.LOXODROMIC, None,
            tuple(LorentzVector.ideal(r) for r in lox))
    B = _fixed_subspace([A], tol)
    interior, rays, sphere = _ball_points_from_subspace(B, tol)
    if interior is not None:
        if lam_max > 1.0 + guard:
            raise AmbiguousClassificationError(
                f"timelike fixed vector found but spectral radius {lam_max} > 1",
                [IsometryClass.ELLIPTIC, IsometryClass.LOXODROMIC])
        return IsometryClassification(
            IsometryClass.ELLIPTIC,
            LorentzVector(interior, Kind.MATERIAL),
            tuple(LorentzVector.ideal(r) for r in rays),
            fixes_sphere=sphere)
    if rays:
        if lam_max > 1.0 + guard:
            raise AmbiguousClassificationError(
                f"lightlike fixed ray found but spectral radius {lam_max} > 1; "
                "near the parabolic/loxodromic boundary",
                [IsometryClass.PARABOLIC, IsometryClass.LOXODROMIC])
        return IsometryClassification(
            IsometryClass.PARABOLIC, None, (LorentzVector.ideal(rays[0]),))
    if lam_max <= 1.0 + guard:
        raise AmbiguousClassificationError(
            "no eigenvalue-1 fixed point in the closed ball and no clear "
            "expansion; numerically on a classification boundary",
            [IsometryClass.PARABOLIC, IsometryClass.LOXODROMIC])
    lox = _loxodromic_rays(A, tol)
    return IsometryClassification(
        IsometryClass.LOXODROMIC, None, tuple(LorentzVector.ideal(r) for r in lox))


def common_fixed_set(gens: Sequence[Isometry], tol: float = 1e-8) -> FixedSet:
    """Common fixed locus of a family of isometries in the closed ball.

    The interior part and eigenvalue-1 ideal rays come from a singular
    value analysis of the stacked (A_i - I).  Ideal rays fixed with
    eigenvalue != 1 (shared loxodromic endpoints) are recovered from
    per-generator candidates and verified against every generator.
    """
    if not gens:
        raise LorentzError("need at least one generator")
    mats = [g.matrix for g in gens]
    m = mats[0].shape[0]
    if any(M.shape[0] != m for M in mats):
        raise LorentzError("generators of mixed dimension")
    B = _fixed_subspace(mats, tol)
    interior, rays, sphere = _ball_points_from_subspace(B, tol)

    candidates = list(rays)
    nontrivial = [M for M in mats if np.max(np.abs(M - np.eye(m))) > tol]
    if not nontrivial:
        sphere = True
        interior = LorentzVector.basis_point(m - 1).coords
    else:
        for M in nontrivial:
            try:
                cls = classify_isometry(Isometry(M), tol)
            except AmbiguousClassificationError:
                continue
            for p in cls.ideal_fixed:
                candidates.append(p.coords)
        verified = []
        for c in candidates:
            c = c / c[0]
            if any(_residual(M, c) > tol for M in mats):
                continue
            if not any(np.max(np.abs(c - v)) <= IDEAL_EQ_TOL for v in verified):
                verified.append(c)
        candidates = verified

    ideal = tuple(LorentzVector.ideal(c) for c in candidates)
    interior_pt = None
    if interior is not None:
        interior_pt = LorentzVector(np.asarray(interior), Kind.MATERIAL)
    if interior_pt is None and not ideal and not sphere:
        raise EmptyFixedSetError(
            "no common fixed point in the closed ball at tolerance "
            f"{tol} (not an amenable-like configuration)")
    return FixedSet(interior_pt, ideal, sphere)


def _sl2_action_matrix(m: np.ndarray, hermitian: bool) -> np.ndarray:
    """SO-matrix of X -> m X m^* on Hermitian (n=3) or m X m^T on
    symmetric (n=2) 2x2 matrices."""
    if hermitian:
        def pack(x):
            return np.array([[x[0] + x[3], x[1] + 1j * x[2]],
                             [x[1] - 1j * x[2], x[0] - x[3]]], dtype=complex)

        def unpack(X):
            return np.array([(X[0, 0] + X[1, 1]).real / 2.0,
                             X[0, 1].real, X[0, 1].imag,
                             (X[0, 0] - X[1, 1]).real / 2.0])
        dim = 4
        adj = m.conj().T
    else:
        def pack(x):
            return np.array([[x[0] + x[2], x[1]],
                             [x[1], x[0] - x[2]]], dtype=float)

        def unpack(X):
            return np.array([(X[0, 0] + X[1, 1]) / 2.0, X[0, 1],
                             (X[0, 0] - X[1, 1]) / 2.0])
        dim = 3
        adj = m.T
    A = np.zeros((dim, dim))
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        A[:, i] = unpack(m @ pack(e) @ adj)
    return A


def lift_moebius(m: np.ndarray, dim: Optional[int] = None) -> Isometry:
    """Lift a determinant-1 2x2 matrix to SO(n,1)^+.

    Complex matrices act on H^3 through Hermitian 2x2 matrices, real
    ones on H^2 through symmetric 2x2 matrices.  lift(-m) = lift(m).
    """
    m = np.asarray(m)
    if m.shape != (2, 2):
        raise LorentzError(f"expected a 2x2 matrix, got {m.shape}")
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det - 1.0) > 1e-10:
        raise LorentzError(f"determinant {det} is not 1")
    if dim is None:
        dim = 3 if np.iscomplexobj(m) else 2
    if dim == 3:
        A = _sl2_action_matrix(np.asarray(m, dtype=complex), hermitian=True)
    elif dim == 2:
        if np.iscomplexobj(m) and np.max(np.abs(m.imag)) > 1e-12:
            raise LorentzError("H^2 lift needs a real matrix")
        A = _sl2_action_matrix(np.asarray(m, dtype=float).real, hermitian=False)
    else:
        raise LorentzError(f"lift target must be dimension 2 or 3, got {dim}")
    return Isometry.from_matrix(A)


def so_algebra_residual(X: np.ndarray) -> float:
    """Deviation of X from so(n,1): max |X^T J + J X| (zero on the Lie
    algebra, i.e. JX antisymmetric)."""
    X = np.asarray(X, dtype=float)
    J = minkowski_matrix(X.shape[0] - 1)
    return float(np.max(np.abs(X.T @ J + J @ X)))
