from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from rcp.entities import ProtocolParams  # noqa: E402


@pytest.fixture
def low_beta_params() -> ProtocolParams:
    """a = 1.5, beta = 0.1 on a unit link; kappa_c sits just above 1."""
    return ProtocolParams(a=1.5, beta=0.1, C=1.0, tau=1.0)
