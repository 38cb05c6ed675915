import numpy as np
import pytest
from scipy.linalg import expm

from hypvol.lorentz import (
    AmbiguousClassificationError,
    EmptyFixedSetError,
    Isometry,
    IsometryClass,
    LorentzError,
    LorentzVector,
    classify_isometry,
    common_fixed_set,
    distance,
    from_klein,
    lift_moebius,
    minkowski_gram_schmidt,
    minkowski_inner,
    minkowski_matrix,
    model_convert,
    so_algebra_residual,
)


def random_so_element(rng, n, scale=0.5):
    X = rng.normal(size=(n + 1, n + 1)) * scale
    J = minkowski_matrix(n)
    X = 0.5 * (X - J @ X.T @ J)  # antisymmetrize JX
    return Isometry.from_matrix(expm(X))


def rotation(theta, n=2):
    A = np.eye(n + 1)
    A[1, 1] = A[2, 2] = np.cos(theta)
    A[1, 2] = -np.sin(theta)
    A[2, 1] = np.sin(theta)
    return Isometry(A)


def test_inner_form_values():
    e0 = LorentzVector.basis_point(2)
    assert minkowski_inner(e0, e0) == -1.0
    e1 = LorentzVector.raw([0, 1, 0])
    assert minkowski_inner(e1, e1) == 1.0
    v = LorentzVector.raw([np.sqrt(2), 1, 0])
    assert abs(minkowski_inner(v, v) + 1.0) < 1e-12


def test_inner_dimension_mismatch():
    u = LorentzVector.raw([1, 0, 0])
    v = LorentzVector.raw([1, 0, 0, 0])
    with pytest.raises(LorentzError):
        minkowski_inner(u, v)


def test_distance_basics():
    e0 = LorentzVector.basis_point(2)
    assert distance(e0, e0) == 0.0
    y = LorentzVector.material([np.cosh(1), np.sinh(1), 0])
    assert abs(distance(e0, y) - 1.0) < 1e-12
    with pytest.raises(LorentzError):
        distance(e0, LorentzVector.ideal([1, 1, 0]))


def test_distance_isometry_invariance_and_triangle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        g = random_so_element(rng, 3)
        pts = [from_klein(rng.uniform(-0.4, 0.4, size=3)) for _ in range(3)]
        x, y, z = pts
        assert abs(distance(g.apply(x), g.apply(y)) - distance(x, y)) < 1e-10
        assert distance(x, z) <= distance(x, y) + distance(y, z) + 1e-9


def test_model_convert_round_trip():
    rng = np.random.default_rng(5)
    e0 = LorentzVector.basis_point(3)
    assert np.allclose(model_convert(e0, "klein"), 0.0)
    ideal = LorentzVector.ideal([1, 1, 0, 0])
    k = model_convert(ideal, "klein")
    assert abs(np.linalg.norm(k) - 1.0) < 1e-12
    for _ in range(20):
        x = from_klein(rng.uniform(-0.5, 0.5, size=3))
        back = model_convert(model_convert(x, "klein"), "hyperboloid")
        assert np.max(np.abs(back.coords - x.coords)) < 1e-12
    with pytest.raises(LorentzError):
        model_convert(LorentzVector.raw([1, 2, 0, 0]), "klein")


def test_isometry_validation_rejects_bad_matrices():
    A = np.eye(4)
    A[0, 1] = 1e-3
    with pytest.raises(LorentzError):
        Isometry(A)
    B = np.eye(4)
    B[0, 0] = -1
    B[1, 1] = -1
    with pytest.raises(LorentzError):
        Isometry(B)


def test_form_preservation_random_products():
    rng = np.random.default_rng(11)
    J = minkowski_matrix(3)
    g = Isometry.identity(3)
    for _ in range(40):
        g = g @ random_so_element(rng, 3)
    assert np.max(np.abs(g.matrix.T @ J @ g.matrix - J)) < 1e-9
    u = LorentzVector.raw(rng.normal(size=4))
    v = LorentzVector.raw(rng.normal(size=4))
    gu, gv = g.apply(u), g.apply(v)
    assert abs(minkowski_inner(gu, gv) - minkowski_inner(u, v)) < 1e-9


def test_classify_identity_and_rotation():
    c = classify_isometry(Isometry.identity(3))
    assert c.kind is IsometryClass.IDENTITY and c.fixes_sphere
    c = classify_isometry(rotation(np.pi / 2))
    assert c.kind is IsometryClass.ELLIPTIC
    assert np.allclose(c.interior_fixed.coords, [1, 0, 0])


def test_classify_parabolic_lift():
    iso = lift_moebius(np.array([[1, 1], [0, 1]], dtype=complex))
    c = classify_isometry(iso)
    assert c.kind is IsometryClass.PARABOLIC
    assert len(c.ideal_fixed) == 1
    fp = c.ideal_fixed[0].unit().coords
    assert np.allclose(fp, [1, 0, 0, 1], atol=1e-9)


def test_classify_parabolic_lift_h2():
    # the real 2x2 shear lifts to a 3x3 parabolic
    iso = lift_moebius(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert iso.n == 2
    c = classify_isometry(iso)
    assert c.kind is IsometryClass.PARABOLIC
    assert len(c.ideal_fixed) == 1


def test_classify_strong_loxodromic_large_norm():
    iso = lift_moebius(np.array([[2000.0, 0], [0, 5e-4]], dtype=complex))
    c = classify_isometry(iso)
    assert c.kind is IsometryClass.LOXODROMIC
    assert len(c.ideal_fixed) == 2


def test_classify_loxodromic_lift():
    iso = lift_moebius(np.array([[2, 0], [0, 0.5]], dtype=complex))
    c = classify_isometry(iso)
    assert c.kind is IsometryClass.LOXODROMIC
    assert len(c.ideal_fixed) == 2


def test_classify_conjugation_covariance():
    rng = np.random.default_rng(7)
    iso = lift_moebius(np.array([[1, 1], [0, 1]], dtype=complex))
    for _ in range(10):
        g = random_so_element(rng, 3)
        conj = g @ iso @ g.inverse()
        c = classify_isometry(conj)
        assert c.kind is IsometryClass.PARABOLIC
        want = g.apply(classify_isometry(iso).ideal_fixed[0])
        assert c.ideal_fixed[0].same_point(want, tol=1e-6)


def test_classify_ambiguous_near_parabolic():
    # loxodromic with tiny translation length sits in the guard zone
    eps = 1e-7
    m = np.array([[np.exp(eps / 2), 0], [0, np.exp(-eps / 2)]], dtype=complex)
    with pytest.raises(AmbiguousClassificationError) as err:
        classify_isometry(lift_moebius(m))
    assert len(err.value.candidates) == 2


def test_common_fixed_set_identity_and_rotations():
    fs = common_fixed_set([Isometry.identity(2)])
    assert fs.sphere and np.allclose(fs.interior.coords, [1, 0, 0])
    fs = common_fixed_set([rotation(np.pi / 3), rotation(np.pi / 5)])
    assert np.allclose(fs.interior.coords, [1, 0, 0])
    assert fs.ideal == () and not fs.sphere


def test_common_fixed_set_shared_parabolic_point():
    p1 = lift_moebius(np.array([[1, 1], [0, 1]], dtype=complex))
    p2 = lift_moebius(np.array([[1, 1j], [0, 1]], dtype=complex))
    fs = common_fixed_set([p1, p2])
    assert fs.interior is None and len(fs.ideal) == 1
    assert np.allclose(fs.ideal[0].unit().coords, [1, 0, 0, 1], atol=1e-9)


def test_common_fixed_set_loxodromic_axis():
    g1 = lift_moebius(np.array([[2, 0], [0, 0.5]], dtype=complex))
    g2 = lift_moebius(np.array([[3, 0], [0, 1 / 3]], dtype=complex))
    fs = common_fixed_set([g1, g2])
    assert fs.interior is None and len(fs.ideal) == 2


def test_common_fixed_set_empty():
    g1 = lift_moebius(np.array([[2, 0], [0, 0.5]], dtype=complex))
    # parabolic fixing 1, sharing nothing with the axis {0, infinity}
    g2 = lift_moebius(np.array([[2, -1], [1, 0]], dtype=complex))
    with pytest.raises(EmptyFixedSetError):
        common_fixed_set([g1, g2])


def test_common_fixed_set_singleton_matches_classification():
    rng = np.random.default_rng(13)
    for m in ([[2, 0], [0, 0.5]], [[1, 1], [0, 1]]):
        iso = lift_moebius(np.array(m, dtype=complex))
        cls = classify_isometry(iso)
        fs = common_fixed_set([iso])
        assert (fs.interior is None) == (cls.interior_fixed is None)
        assert len(fs.ideal) == len(cls.ideal_fixed)
        for p in cls.ideal_fixed:
            assert any(p.same_point(q, tol=1e-7) for q in fs.ideal)


def test_lift_homomorphism_and_involution():
    rng = np.random.default_rng(17)
    for _ in range(15):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m = m / np.sqrt(np.linalg.det(m))
        nmat = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        nmat = nmat / np.sqrt(np.linalg.det(nmat))
        lhs = lift_moebius(m @ nmat).matrix
        rhs = (lift_moebius(m) @ lift_moebius(nmat)).matrix
        assert np.max(np.abs(lhs - rhs)) < 1e-9
        assert np.max(np.abs(lift_moebius(-m).matrix - lift_moebius(m).matrix)) < 1e-12
        inv = lift_moebius(np.linalg.inv(m))
        prod = (lift_moebius(m) @ inv).matrix
        assert np.max(np.abs(prod - np.eye(4))) < 1e-10


def test_lift_trace_relation():
    # tr(lift m) = |tr m|^2 on H^3; (tr m)^2 - 1 on H^2
    rng = np.random.default_rng(19)
    for _ in range(10):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m = m / np.sqrt(np.linalg.det(m))
        assert abs(np.trace(lift_moebius(m).matrix) - abs(np.trace(m)) ** 2) < 1e-9
        r = rng.normal(size=(2, 2))
        d = np.linalg.det(r)
        if d <= 0:
            continue
        r = r / np.sqrt(d)
        assert abs(np.trace(lift_moebius(r).matrix) - (np.trace(r) ** 2 - 1)) < 1e-9


def test_lift_rejects_bad_determinant():
    with pytest.raises(LorentzError):
        lift_moebius(np.array([[2, 0], [0, 1]], dtype=complex))


def test_gram_schmidt_reprojects():
    rng = np.random.default_rng(23)
    g = random_so_element(rng, 3)
    noisy = g.matrix + rng.normal(size=(4, 4)) * 1e-7
    fixed = minkowski_gram_schmidt(noisy)
    J = minkowski_matrix(3)
    assert np.max(np.abs(fixed.T @ J @ fixed - J)) < 1e-12
    assert np.max(np.abs(fixed - g.matrix)) < 1e-5


def test_so_algebra_residual():
    rng = np.random.default_rng(29)
    X = rng.normal(size=(4, 4))
    J = minkowski_matrix(3)
    Xp = 0.5 * (X - J @ X.T @ J)
    assert so_algebra_residual(Xp) < 1e-12
    assert so_algebra_residual(np.eye(4)) > 0.1


def test_ideal_scaling_projective_equality():
    p = LorentzVector.ideal([2, 2, 0, 0])
    q = LorentzVector.ideal([5, 5, 0, 0])
    assert p.same_point(q)
    assert not p.same_point(LorentzVector.ideal([1, 0, 1, 0]))
