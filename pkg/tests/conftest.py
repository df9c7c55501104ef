import copy

import numpy as np
import pytest

from core.tensor_space import BipartiteSpace
from dynamics.dynamics_sieve import MeasurementModelConfig, build_measurement_model, pointer_sectors
from states.states import computational_sectors, make_pure

SQRT_HALF = np.sqrt(0.5)
RANK2_COEFFICIENTS = [[np.sqrt(0.4), 0.0], [0.0, np.sqrt(0.2)], [0.0, np.sqrt(0.4)]]
BASE_SCENARIO = {
    "name": "tiny",
    "seed": 1,
    "space": {"dim_a": 2, "dim_b": 2},
    "initial_state": {"coefficients": [[SQRT_HALF, 0.0], [0.0, SQRT_HALF]]},
    "apparatus": {"basis": "computational", "sectors": [[0], [1]]},
}


@pytest.fixture
def base_scenario():
    """Documento di scenario minimo e valido (Bell su due qubit)."""
    return copy.deepcopy(BASE_SCENARIO)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def qubit_pair():
    return BipartiteSpace(2, 2)


@pytest.fixture
def bell(qubit_pair):
    """(PureState, DensityOperator) di |Φ+> = (|00> + |11>)/√2."""
    return make_pure(qubit_pair, [[SQRT_HALF, 0.0], [0.0, SQRT_HALF]])


@pytest.fixture
def computational(qubit_pair):
    return computational_sectors(qubit_pair, [[0], [1]], ["a0", "a1"])


@pytest.fixture
def rank2_space():
    return BipartiteSpace(3, 2)


@pytest.fixture
def rank2(rank2_space):
    """Stato puro con due direzioni relative distinte nel settore {0, 1}."""
    return make_pure(rank2_space, RANK2_COEFFICIENTS)


@pytest.fixture
def rank2_apparatus(rank2_space):
    return computational_sectors(rank2_space, [[0, 1], [2]], ["M0", "M1"])


@pytest.fixture(scope="session")
def benchmark_spec():
    return build_measurement_model(MeasurementModelConfig())


@pytest.fixture(scope="session")
def benchmark_sectors(benchmark_spec):
    return pointer_sectors(benchmark_spec, "z"), pointer_sectors(benchmark_spec, "x")
