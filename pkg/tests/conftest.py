import numpy as np
import pytest
from scipy.linalg import expm

from hypvol.lorentz import Isometry, from_klein, minkowski_matrix
from hypvol.simplex import GeodesicSimplex, SimplexFamily


def random_so_element(rng, n, scale=0.5):
    X = rng.normal(size=(n + 1, n + 1)) * scale
    J = minkowski_matrix(n)
    X = 0.5 * (X - J @ X.T @ J)
    return Isometry.from_matrix(expm(X))


def random_so_direction(rng, n, scale=0.5):
    X = rng.normal(size=(n + 1, n + 1)) * scale
    J = minkowski_matrix(n)
    return 0.5 * (X - J @ X.T @ J)


def random_point_tuple(rng, n, count, ideal_prob=0.3, radius=0.95,
                       separation=0.15):
    """Random points of the closed ball in Klein coordinates, kept
    pairwise separated so the integrands stay numerically tame."""
    pts = []
    kleins = []
    while len(pts) < count:
        d = rng.normal(size=n)
        d /= np.linalg.norm(d)
        if rng.uniform() < ideal_prob:
            k = d
        else:
            k = radius * rng.uniform() ** (1.0 / n) * d
        if any(np.linalg.norm(k - k2) < separation for k2 in kleins):
            continue
        kleins.append(k)
        pts.append(from_klein(k))
    return pts


def trig_family(rng, n, n_ideal=0, base_span=0.35, amp=0.08, freqs=(2, 5)):
    """Smooth (trigonometric) vertex paths: material vertices wander in
    a ball, ideal vertices slide on the sphere; healthy third
    derivatives so finite-difference truncation dominates noise."""
    n_mat = n + 1 - n_ideal
    base = rng.uniform(-base_span, base_span, size=(n_mat, n))
    amps = rng.uniform(-amp, amp, size=(n_mat, n, 2))
    freq = rng.integers(freqs[0], freqs[1], size=(n_mat, n, 2))
    phase = rng.uniform(0, 2 * np.pi, size=(n_mat, n, 2))
    sph = rng.normal(size=(n_ideal, n))
    sph /= np.linalg.norm(sph, axis=1, keepdims=True)
    sphd = rng.normal(size=(n_ideal, n)) * 0.3
    sphf = rng.integers(freqs[0], freqs[1], size=n_ideal)

    def fn(t):
        verts = []
        for i in range(n_ideal):
            u = sph[i] + sphd[i] * np.sin(sphf[i] * t + i)
            verts.append(from_klein(u / np.linalg.norm(u)))
        for i in range(n_mat):
            k = base[i] + (amps[i] * np.sin(freq[i] * t + phase[i])).sum(axis=1)
            verts.append(from_klein(k))
        return GeodesicSimplex(verts)

    return SimplexFamily(fn)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
