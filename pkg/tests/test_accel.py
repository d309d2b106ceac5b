import os
import subprocess
import sys

import numpy as np
import pytest

from ebres import CoeffPair, CompactCoeff
from ebres.fredholm import log_det


def _probe(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("EBRES_DISABLE_NUMBA", None)
    else:
        env["EBRES_DISABLE_NUMBA"] = env_value
    code = "from ebres._accel import NUMBA_ENABLED; print(NUMBA_ENABLED)"
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                          check=True).stdout.strip()


@pytest.mark.parametrize("value, enabled", [(None, "True"), ("0", "True"), ("1", "False"), ("yes", "False")])
def test_environment_switch(value, enabled):
    assert _probe(value) == enabled


def test_numpy_fallback_end_to_end():
    env = dict(os.environ, EBRES_DISABLE_NUMBA="1")
    code = ("from ebres import CoeffPair, CompactCoeff; from ebres.fredholm import log_det; "
            "p = CoeffPair(CompactCoeff.constant(2.0, 1.0), CompactCoeff.zero(1.0)); "
            "print(repr(log_det(p, 3 + 2j, 64)[0]))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    step = CoeffPair(CompactCoeff.constant(2.0, 1.0), CompactCoeff.zero(1.0))
    ref = log_det(step, 3 + 2j, 64)[0]
    assert abs(np.exp(complex(out.stdout.strip()) - ref) - 1) < 1e-12
