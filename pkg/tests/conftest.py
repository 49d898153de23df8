import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dualnorm.norms import NormSpec

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def pinned():
    return json.loads((FIXTURES / "pinned.json").read_text())


def small_specs():
    """One spec per kind, plus a few irregular group layouts."""
    return {
        "l1": NormSpec.l1(4),
        "l2": NormSpec.l2(4),
        "linf": NormSpec.linf(4),
        "group_l2": NormSpec.group_l2(5, [[0, 1], [2, 3, 4]]),
        "group_l2_w": NormSpec.group_l2(3, [[0, 1], [2]], [2.0, 1.0]),
        "overlap": NormSpec.overlap_group_l2(3, [[0, 1], [1, 2]]),
        "overlap_chain": NormSpec.overlap_group_l2(6, [[0, 1, 2], [2, 3], [3, 4, 5], [1, 4]]),
    }


SMOOTH = ("l2", "group_l2", "group_l2_w", "overlap", "overlap_chain")


@pytest.fixture(params=list(small_specs()))
def any_spec(request):
    return small_specs()[request.param]


@pytest.fixture(params=SMOOTH)
def smooth_spec(request):
    return small_specs()[request.param]


def rng_points(spec, n, seed):
    """Random points away from group kinks (every group has norm >= 0.1)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        x = rng.standard_normal(spec.p)
        if spec.structure is not None:
            if min(np.linalg.norm(x[list(g)]) for g in spec.structure.groups) < 0.1:
                continue
        elif np.linalg.norm(x) < 0.1:
            continue
        out.append(x)
    return out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
