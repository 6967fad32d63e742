import numpy as np
import pytest

from bloomsim import (
    ApproxCoefficient,
    ConfigError,
    NoiseSpec,
    SolverConfig,
    available_backends,
    resolve_backend,
    simulate,
)

HAVE_EXT = "cython" in available_backends()
needs_ext = pytest.mark.skipif(not HAVE_EXT, reason="compiled stepping kernel not built")


def test_python_backend_always_available():
    assert "python" in available_backends()
    assert resolve_backend("python") == "python"


def test_auto_prefers_compiled():
    want = "cython" if HAVE_EXT else "python"
    assert resolve_backend("auto") == want
    assert resolve_backend(None) == want


def test_unknown_backend_rejected():
    with pytest.raises(ConfigError):
        resolve_backend("fortran")


def test_env_override(monkeypatch):
    monkeypatch.setenv("BLOOMSIM_BACKEND", "python")
    assert resolve_backend(None) == "python"
    monkeypatch.setenv("BLOOMSIM_BACKEND", "bogus")
    with pytest.raises(ConfigError):
        resolve_backend(None)


def _run(backend, small_basis, small_kernel):
    return simulate(small_basis, small_kernel, ApproxCoefficient(lam=1.0, n=4),
                    np.ones(64) + 0.1 * np.cos(np.pi * small_basis.grid.x),
                    NoiseSpec(31), SolverConfig(dt=1e-4, t_end=0.02),
                    backend=backend)


@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=needs_ext)])
def test_each_backend_bitwise_reproducible(backend, small_basis, small_kernel):
    a = _run(backend, small_basis, small_kernel)
    b = _run(backend, small_basis, small_kernel)
    assert a.backend == backend
    assert np.array_equal(a.final_coeffs, b.final_coeffs)
    assert np.array_equal(a.mass, b.mass)
    assert np.array_equal(a.martingale, b.martingale)


@needs_ext
def test_backends_agree_to_rounding(small_basis, small_kernel):
    # the two implementations order their reductions differently, so demand
    # tight agreement, not bit equality
    a = _run("python", small_basis, small_kernel)
    b = _run("cython", small_basis, small_kernel)
    assert np.allclose(a.final_coeffs, b.final_coeffs, rtol=1e-10, atol=1e-13)
    assert np.allclose(a.mass, b.mass, rtol=1e-10)
    assert np.allclose(a.db_norm, b.db_norm, rtol=1e-10)
    assert np.allclose(a.qv_realized, b.qv_realized, rtol=1e-9)
