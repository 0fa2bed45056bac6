import numpy as np
import pytest

from ipinn.autodiff import HAVE_COMPILED

ENGINES = ["python"] + (["compiled"] if HAVE_COMPILED else [])


@pytest.fixture(params=ENGINES)
def engine(request):
    return request.param


def central_diff(f, theta, h=1e-5, idx=None):
    """Central finite-difference gradient of a scalar function of a vector."""
    theta = np.asarray(theta, dtype=np.float64)
    idx = range(theta.size) if idx is None else idx
    out = np.zeros(theta.size)
    for i in idx:
        e = np.zeros_like(theta)
        e[i] = h
        out[i] = (f(theta + e) - f(theta - e)) / (2.0 * h)
    return out


def assert_grad_close(ad, fd, rtol=1e-5, label=""):
    """Per-slot relative comparison with a scale floor that guards slots
    whose gradient is negligible against FD roundoff noise."""
    ad = np.asarray(ad)
    fd = np.asarray(fd)
    scale = np.maximum(np.maximum(np.abs(ad), np.abs(fd)),
                       1e-3 * max(np.abs(fd).max(), 1e-30))
    rel = np.abs(ad - fd) / scale
    worst = int(np.argmax(rel))
    assert rel.max() <= rtol, (
        f"{label} slot {worst}: ad={ad[worst]:.12g} fd={fd[worst]:.12g} "
        f"rel={rel.max():.3e}")
