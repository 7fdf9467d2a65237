from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from qutrit_qrg.tensor_core import Tensor333, assemble_psi0, nurmiev_tensor

FIXTURES = Path(__file__).resolve().parent / "fixtures"
REPO_ROOT = Path(__file__).resolve().parents[1]


def rel_close(got: complex, want: complex, rtol: float, floor: float = 1e-12) -> bool:
    return abs(got - want) <= rtol * max(abs(want), floor)


def random_tensor(rng: np.random.Generator) -> Tensor333:
    return Tensor333(rng.standard_normal((3, 3, 3)) + 1j * rng.standard_normal((3, 3, 3)))


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def psi0_heisenberg() -> Tensor333:
    # block ground state at delta=1, D=0
    return assemble_psi0(-1.5, 2.0)


@pytest.fixture
def ghz_qutrit() -> Tensor333:
    return nurmiev_tensor(1.0, 0.0, 0.0)
