"""Shared fixtures.

The default laboratory and its solved limit manifold are expensive enough
(a second or two each) that every module reuses one session-scoped copy.
Tests that mutate nothing may share them freely; anything that needs a
different configuration builds its own lab locally.
"""

import pytest

from imlab.config import build_lab, default_config
from imlab.perturbation_harness import solve_member


@pytest.fixture(scope="session")
def lab():
    return build_lab(default_config())


@pytest.fixture(scope="session")
def limit(lab):
    return solve_member(lab, 0.0)
