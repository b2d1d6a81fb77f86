import numpy as np
import pytest

from pcphiv.errors import SingularMatrixError
from pcphiv.linalg import companion, eigenvalues, fd_jacobian, invert, spectral_radius


def test_invert_matches_numpy(rng):
    for n in range(1, 11):
        a = rng.normal(size=(n, n)) + n * np.eye(n)
        np.testing.assert_allclose(invert(a), np.linalg.inv(a), rtol=1e-10, atol=1e-12)


def test_invert_needs_pivoting():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(invert(a), a)


@pytest.mark.parametrize("m", [np.zeros((3, 3)), [[1.0, 2.0], [2.0, 4.0]]])
def test_invert_singular(m):
    with pytest.raises(SingularMatrixError):
        invert(m)


def test_invert_rejects_non_square():
    with pytest.raises(ValueError):
        invert(np.ones((2, 3)))


def test_eigenvalues_sorted_and_complete():
    a = np.diag([-3.0, 2.0, 0.5])
    w = eigenvalues(a)
    np.testing.assert_allclose(w.real, [2.0, 0.5, -3.0])
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_allclose(sorted(eigenvalues(rot).imag), [-1.0, 1.0])


def test_spectral_radius():
    assert spectral_radius([[0.0, 4.0], [1.0, 0.0]]) == pytest.approx(2.0)


def test_companion_roots():
    # (x+1)(x+2)(x+3) = x^3 + 6x^2 + 11x + 6
    w = eigenvalues(companion([6.0, 11.0, 6.0]))
    np.testing.assert_allclose(w.real, [-1.0, -2.0, -3.0], atol=1e-10)


def test_fd_jacobian_of_linear_map(rng):
    a = rng.normal(size=(4, 4))
    x = rng.normal(size=4)
    np.testing.assert_allclose(fd_jacobian(lambda y: a @ y, x), a, atol=1e-8)
    np.testing.assert_allclose(fd_jacobian(lambda y: a @ y, x, [0, 2]), a[np.ix_([0, 2], [0, 2])], atol=1e-8)
