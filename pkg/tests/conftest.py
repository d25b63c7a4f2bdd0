import pytest

from spdstats import parallel


@pytest.fixture(autouse=True)
def _reset_thread_state():
    # CLI entry points set the process-wide worker count; tests invoking them
    # in-process must not leak that into later tests
    yield
    parallel.set_num_threads(None)
