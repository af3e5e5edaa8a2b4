import sys
from pathlib import Path

import pytest

# flat layout: the modules live next to netenergy.py
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance sweeps")


@pytest.fixture
def verification():
    """Turn on bound verification for one test and restore the previous state."""
    import ifcalc
    previous = ifcalc.verification_enabled()
    ifcalc.set_verification(True)
    yield
    ifcalc.set_verification(previous)
