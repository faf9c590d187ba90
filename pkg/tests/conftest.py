import sys
import warnings

import pytest
from hypothesis import settings

from parisian_levy import LevyModel, Phase

warnings.filterwarnings("ignore", message="The TBB threading layer")

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

BM = LevyModel.brownian_motion(0.5, 1.0)
CL = LevyModel.cramer_lundberg(1.5, 1.0, [Phase(1.0, 1.0)])
BM_SLOW = LevyModel.brownian_motion(0.2, 1.0)
JD = LevyModel.jump_diffusion(1.0, 0.5, 0.8, [Phase(1.0, 0.6), Phase(3.0, 0.4)])


@pytest.fixture(params=["bm", "cl"])
def model(request):
    return {"bm": BM, "cl": CL}[request.param]


@pytest.fixture(params=["bm", "cl", "jd"])
def any_model(request):
    return {"bm": BM, "cl": CL, "jd": JD}[request.param]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
