"""Compiled and numpy kernels must agree exactly on identical uniforms."""

import numpy as np
import pytest

from conftest import random_unit
from qubitsim import _core, _fallback

BACKENDS = _core.available_backends()


@pytest.fixture(scope="module")
def u():
    return np.random.default_rng(123).random((200_003, 4))


@pytest.fixture(scope="module")
def axes():
    g = np.random.default_rng(9)
    return [random_unit(g).as_array() for _ in range(3)]


def _all(name, *args):
    return [getattr(_core.get_backend(b), name)(*args) for b in BACKENDS]


def _same(results):
    first = results[0]
    for other in results[1:]:
        if isinstance(first, tuple):
            assert all(np.array_equal(a, b) for a, b in zip(first, other))
        else:
            assert np.array_equal(first, other)


class TestParity:
    def test_model1(self, u, axes):
        _same(_all("model1_stay_count", np.ascontiguousarray(u[:, :2]), axes[0], axes[1]))

    def test_model2(self, u, axes):
        _same(_all("model2_counts", u, axes[0], axes[1]))

    def test_bob_reduced(self, u, axes):
        _same(_all("bob_reduced_batch", u, axes[0]))

    def test_alice_reduced(self, u, axes):
        r, _ = _fallback.bob_reduced_batch(u, axes[0])
        _same(_all("alice_reduced_batch", u, r, axes[1]))

    def test_full(self, u, axes):
        s0 = np.where(np.random.default_rng(1).random(len(u)) < 0.5, 1, -1).astype(np.int8)
        _same(_all("bob_full_batch", u, s0, axes[0], axes[2]))
        s, r = _fallback.bob_full_batch(u, s0, axes[0], axes[2])
        _same(_all("alice_full_batch", u, s, r, axes[1], axes[2]))

    def test_empty_input(self, axes):
        u = np.empty((0, 4))
        for b in BACKENDS:
            k = _core.get_backend(b)
            assert k.model1_stay_count(np.empty((0, 2)), axes[0], axes[1]) == 0
            assert tuple(k.model2_counts(u, axes[0], axes[1])) == (0, 0)
            assert len(k.bob_reduced_batch(u, axes[0])[0]) == 0


class TestSelection:
    def test_python_always_available(self):
        assert "python" in BACKENDS
        assert _core.get_backend("python") is _fallback

    def test_unknown(self):
        with pytest.raises(ValueError):
            _core.get_backend("fortran")

    def test_kernel_names_present(self):
        for b in BACKENDS:
            k = _core.get_backend(b)
            assert all(callable(getattr(k, name)) for name in _core.KERNEL_NAMES)

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("QUBITSIM_BACKEND", "python")
        assert _core.get_backend() is _fallback
