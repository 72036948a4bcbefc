import numpy as np
import pytest

from dsbm_ns import DysonParams, VarianceProfile, solve_dyson
from dsbm_ns import kernels


requires_numba = pytest.mark.skipif(
    "numba" not in kernels.available_backends(), reason="numba not installed")


@pytest.fixture
def restore_backend():
    before = kernels.get_backend()
    yield
    kernels.set_backend(before)


class TestBackendSelection:
    def test_numpy_always_available(self):
        assert "numpy" in kernels.available_backends()

    def test_set_backend_rejects_unknown(self):
        with pytest.raises(ValueError):
            kernels.set_backend("cython")

    @requires_numba
    def test_switching(self, restore_backend):
        kernels.set_backend("numpy")
        assert kernels.get_backend() == "numpy"
        kernels.set_backend("numba")
        assert kernels.get_backend() == "numba"


@requires_numba
class TestBackendEquivalence:
    @pytest.mark.parametrize("tau,eta", [
        (0.5, 0.0), (1e-6, 0.0), (1e-10, 0.0), (0.3, 0.7), (1e-4, 1e-3)])
    def test_solutions_match(self, restore_backend, example1, tau, eta):
        kernels.set_backend("numba")
        a = solve_dyson(example1, DysonParams(tau=tau, eta=eta))
        kernels.set_backend("numpy")
        b = solve_dyson(example1, DysonParams(tau=tau, eta=eta))
        assert b.v == pytest.approx(a.v, rel=1e-11)
        assert b.w == pytest.approx(a.w, rel=1e-11)

    def test_fixed_point_kernels_bitwise_close(self, restore_backend):
        s = np.array([[0.0, 1.0], [2.0, 0.0]])
        log_s = kernels.log_matrix(s)
        log_st = kernels.log_matrix(s.T)
        x0 = np.zeros(2)
        y0 = np.zeros(2)
        nb = kernels._NUMBA_KERNELS["fixed_point"](
            log_s, log_st, 0.1, 0.0, x0, y0, 0.5, 0.01, 1e-13, 5000)
        np_ = kernels._NUMPY_KERNELS["fixed_point"](
            log_s, log_st, 0.1, 0.0, x0, y0, 0.5, 0.01, 1e-13, 5000)
        assert nb[4] == np_[4] == kernels.STATUS_OK
        assert np.allclose(nb[0], np_[0], rtol=1e-12, atol=0)
        assert nb[3] == np_[3]  # identical iteration counts

    def test_newton_kernels_agree(self, restore_backend):
        s = np.ascontiguousarray(
            np.array([[0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 1], [1, 0, 0, 0]], dtype=float))
        st = np.ascontiguousarray(s.T)
        x0 = np.full(4, -0.3)
        y0 = np.full(4, -0.1)
        nb = kernels._NUMBA_KERNELS["newton"](s, st, 1e-8, 0.0, x0, y0, 1e-13, 60)
        np_ = kernels._NUMPY_KERNELS["newton"](s, st, 1e-8, 0.0, x0, y0, 1e-13, 60)
        assert nb[4] == np_[4] == kernels.STATUS_OK
        assert np.allclose(nb[0], np_[0], rtol=1e-10, atol=1e-12)


class TestLogMatrix:
    def test_zeros_map_to_minus_inf(self):
        out = kernels.log_matrix(np.array([[0.0, np.e], [1.0, 0.0]]))
        assert out[0, 0] == -np.inf and out[1, 1] == -np.inf
        assert out[0, 1] == pytest.approx(1.0)
        assert out[1, 0] == 0.0
