from __future__ import annotations

import numpy as np
import pytest

from lojalab.linalg import companion, hessenberg_eigenvalues, monic_roots


def _sorted(z):
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((np.round(z.imag, 8), np.round(z.real, 8)))]


def test_known_roots():
    # (z - 1)(z - 2)(z + 3) = z^3 - 7z + 6
    assert np.allclose(_sorted(monic_roots([0.0, -7.0, 6.0])), [-3, 1, 2])
    # z^2 + 1
    assert np.allclose(_sorted(monic_roots([0.0, 1.0])), [-1j, 1j])
    assert np.allclose(monic_roots([0.5]), [-0.5])


def test_companion_layout():
    C = companion([1.0, 2.0, 3.0])
    assert np.array_equal(C, [[-1, -2, -3], [1, 0, 0], [0, 1, 0]])


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_matches_numpy_on_random_hessenberg(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        H = np.triu(rng.normal(size=(n, n)), -1)
        ours = hessenberg_eigenvalues(H)
        ref = np.linalg.eigvals(H)
        # match each reference eigenvalue to a distinct computed one
        left = list(ours)
        for lam in ref:
            j = int(np.argmin([abs(lam - x) for x in left]))
            assert abs(lam - left[j]) <= 1e-8 * max(1.0, abs(lam))
            left.pop(j)


def test_empty_matrix():
    assert hessenberg_eigenvalues(np.zeros((0, 0))).shape == (0,)
