import math

import numpy as np
import pytest

from limitshape.lobachevsky import lobachevsky, lobachevsky_quad


#the Chebyshev fast path agrees with adaptive quadrature
@pytest.mark.parametrize("theta", [1e-6, 0.1, 0.5, math.pi / 6, 1.0, math.pi / 3, 1.5, 2.0, 3.0])
def test_fast_path_matches_quadrature(theta: float) -> None:
    assert lobachevsky(theta) == pytest.approx(lobachevsky_quad(theta), abs=1e-10)


#zeros at multiples of pi/2, odd symmetry and period pi
def test_symmetries() -> None:
    assert lobachevsky(0.0) == 0.0
    assert lobachevsky(math.pi / 2) == pytest.approx(0.0, abs=1e-12)
    assert lobachevsky(math.pi) == pytest.approx(0.0, abs=1e-12)
    thetas = np.linspace(0.05, 3.0, 17)
    assert np.allclose(lobachevsky(-thetas), -lobachevsky(thetas), atol=1e-12)
    assert np.allclose(lobachevsky(thetas + math.pi), lobachevsky(thetas), atol=1e-12)


#maximum at pi/6 and the duplication identity L(2t) = 2L(t) + 2L(t + pi/2)
def test_known_values() -> None:
    assert lobachevsky(math.pi / 6) == pytest.approx(0.5074708, abs=1e-7)
    assert lobachevsky(math.pi / 3) == pytest.approx(2.0 / 3.0 * lobachevsky(math.pi / 6), abs=1e-12)
    t = np.linspace(0.1, 1.4, 9)
    assert np.allclose(lobachevsky(2 * t), 2 * lobachevsky(t) + 2 * lobachevsky(t + math.pi / 2), atol=1e-10)


#zeros at integer multiples of pi are exact, for scalars and arrays alike
def test_exact_zeros_at_multiples_of_pi() -> None:
    assert lobachevsky(math.pi) == 0.0
    assert lobachevsky(-2.0 * math.pi) == 0.0
    zeros = lobachevsky(np.array([0.0, math.pi, 2.0 * math.pi, -math.pi]))
    assert np.all(zeros == 0.0)
    assert lobachevsky(1e-300) == pytest.approx(0.0, abs=1e-297)
