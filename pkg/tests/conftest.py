import sys

import numpy as np
import pytest
from hypothesis import settings

from scatret.filterbank import build_morlet_bank
from scatret.synthetic import write_fine_coarse_dataset, write_separable_dataset

settings.register_profile("ci", deadline=None, max_examples=40)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def bank128():
    return build_morlet_bank(128, 128, 3, 4)


@pytest.fixture(scope="session")
def bank64():
    return build_morlet_bank(64, 64, 3, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def separable_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("separable")
    write_separable_dataset(root, classes=3, images_per_class=2, size=128, seed=7)
    return root


@pytest.fixture(scope="session")
def fine_coarse_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("fine_coarse")
    write_fine_coarse_dataset(root, classes=4, images_per_class=2, size=128, seed=0)
    return root


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(module.RESULTS, key=lambda s: s.split("criterion")[1]):
            terminalreporter.write_line(line)
