import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from diol import kernels  # noqa: E402

KERNEL_NAMES = (
    "rms_windows",
    "rolling_mean_std",
    "column_mean_std",
    "assign_points",
    "lloyd",
    "xorshift_next",
    "normal_fill",
    "render_current",
)


@pytest.fixture(params=kernels.available_backends())
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    impl = kernels.load_backend(request.param)
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param
