import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualnorm import _accel, kernels
from dualnorm.norms import NormSpec

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba unavailable or disabled")


@st.composite
def layouts(draw):
    p = draw(st.integers(1, 12))
    n_groups = draw(st.integers(1, 6))
    groups = [sorted(draw(st.sets(st.integers(0, p - 1), min_size=1, max_size=p))) for _ in range(n_groups)]
    covered = {j for g in groups for j in g}
    missing = [j for j in range(p) if j not in covered]
    if missing:
        groups.append(missing)
    return NormSpec.overlap_group_l2(p, groups)


@needs_numba
@given(spec=layouts(), seed=st.integers(0, 2**32 - 1))
def test_backends_agree(spec, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(spec.p)
    U = rng.standard_normal((7, spec.p))
    args = spec._kernel_args
    out = {}
    previous = kernels.get_backend()
    try:
        for name in ("numpy", "numba"):
            kernels.set_backend(name)
            norms = kernels.group_norms(x, *args)
            safe = np.where(norms > 0, norms, np.inf)
            out[name] = (
                norms,
                kernels.group_gradient(x, *args, safe),
                kernels.group_hessian(x, *args, safe),
                kernels.batch_value(U, *args),
            )
    finally:
        kernels.set_backend(previous)
    for a, b in zip(out["numpy"], out["numba"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_set_backend_validates():
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")
    previous = kernels.set_backend("numpy")
    assert kernels.get_backend() == "numpy"
    kernels.set_backend(previous)


def test_batch_value_matches_rows():
    spec = NormSpec.overlap_group_l2(4, [[0, 1], [1, 2, 3]])
    U = np.random.default_rng(3).standard_normal((5, 4))
    rows = [kernels.group_norms(u, *spec._kernel_args).sum() for u in U]
    np.testing.assert_allclose(kernels.batch_value(U, *spec._kernel_args), rows, rtol=1e-14)


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("", "numba" if _accel.HAVE_NUMBA else "numpy")])
def test_env_flag_selects_backend(flag, expected):
    if flag == "" and os.environ.get("DUALNORM_DISABLE_NUMBA"):
        pytest.skip("flag already set in the parent environment")
    env = dict(os.environ, DUALNORM_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from dualnorm import kernels; print(kernels.get_backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected


def test_disabled_flag_refuses_numba():
    code = (
        "from dualnorm import kernels\n"
        "try:\n    kernels.set_backend('numba')\nexcept RuntimeError:\n    print('refused')\n"
    )
    env = dict(os.environ, DUALNORM_DISABLE_NUMBA="true")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "refused"
