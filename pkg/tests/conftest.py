import time

import numpy as np
import pytest

# Captured at collection start; test_zz_suite_runtime checks the full-suite budget.
SESSION_T0 = time.monotonic()


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
