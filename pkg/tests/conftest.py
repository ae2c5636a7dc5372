import os

import pytest
from hypothesis import settings

from ilwlab import _backend

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def _available():
    names = ["python"]
    try:
        from ilwlab import _kernels  # noqa: F401
    except ImportError:
        pass
    else:
        names.append("cython")
    return names


BACKENDS = _available()


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per kernel backend."""
    prev = _backend.use(request.param)
    yield request.param
    _backend.use(prev)
