import os
import subprocess
import sys

import pytest

from martinetkit import _kernels
from martinetkit.examples import builtin
from martinetkit.flow import IntegratorOpts, integrate_field
from martinetkit.vfield import VecField


def backend_in_subprocess(env_value):
    env = dict(os.environ)
    env.pop("MARTINETKIT_PURE", None)
    if env_value is not None:
        env["MARTINETKIT_PURE"] = env_value
    out = subprocess.run([sys.executable, "-c", "from martinetkit import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_pure_python_forced_by_environment():
    assert backend_in_subprocess("1") == "python"


def test_default_backend_prefers_extension():
    expected = "compiled" if _kernels.integrate_compiled() is not None else "python"
    assert backend_in_subprocess(None) == expected


def test_resolve():
    assert _kernels.resolve("python") is _kernels.integrate_python
    assert _kernels.resolve(None) is _kernels.integrate
    f = lambda *a: None  # noqa: E731
    assert _kernels.resolve(f) is f
    with pytest.raises(ValueError):
        _kernels.resolve("fortran")


@pytest.mark.skipif(_kernels.integrate_compiled() is None, reason="extension not built")
def test_kernels_bit_identical_on_long_run():
    # long enough that any difference in rounding shows up in the samples
    V = VecField.parse(["y", "-x", "x*y"])
    opts = IntegratorOpts(max_time=200.0, stop_speed=0.0, max_steps=10**6)
    a = integrate_field(V, (1.0, 0.0, 0.0), opts, backend="python")
    b = integrate_field(V, (1.0, 0.0, 0.0), opts, backend="compiled")
    assert a[0] == b[0] and a[1] == b[1] and a[2] == b[2] and a[3] == b[3]
