import numpy as np
import pytest

from core.errors import InvalidStateError, InvariantViolationError, PreconditionError
from core.tensor_space import BipartiteSpace
from reduction.entropy_analysis import (
    decomposition_entropy,
    entropy_chain,
    jaynes_gap,
    linear_entropy,
    mutual_information,
    sample_equivalence_class,
    shannon_entropy,
    verify_max_entropy,
    von_neumann_entropy,
)
from reduction.reduction import equivalent_modified, modified_reduce
from states.states import (
    DensityOperator,
    make_pure,
    random_apparatus,
    random_density_matrix,
    random_density_operator,
    random_unitary,
)

LN2 = np.log(2.0)


def binary_entropy(p):
    return -p * np.log(p) - (1 - p) * np.log(1 - p)


def test_von_neumann_entropy_limits():
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(np.log(4.0))
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert von_neumann_entropy(np.diag([1.0 + 1e-11, -1e-11])) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(InvalidStateError):
        von_neumann_entropy(np.diag([1.1, -0.1]))


def test_linear_and_shannon_entropy():
    assert linear_entropy(np.eye(2) / 2) == pytest.approx(0.5)
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(LN2)
    assert shannon_entropy([1.0, 0.0]) == 0.0


def test_mutual_information(bell, qubit_pair):
    _, rho = bell
    assert mutual_information(rho, qubit_pair) == pytest.approx(2 * LN2)
    _, product = make_pure(qubit_pair, [[0.6, 0.8], [0.0, 0.0]])
    assert mutual_information(product, qubit_pair) == pytest.approx(0.0, abs=1e-12)


def test_entropy_chain_of_bell(bell, computational):
    _, rho = bell
    report = entropy_chain(rho, computational)
    assert report.s_rho == pytest.approx(0.0, abs=1e-12)
    assert report.s_luders == pytest.approx(LN2)
    assert report.s_modified == pytest.approx(LN2)
    assert report.jaynes_gap == pytest.approx(0.0, abs=1e-9)
    assert report.mutual_information_rho == pytest.approx(2 * LN2)
    assert report.mutual_information_modified == pytest.approx(LN2)
    assert report.as_dict()["S_modified"] == report.s_modified


def test_entropy_chain_of_rank2_sector(rank2, rank2_apparatus):
    _, rho = rank2
    report = entropy_chain(rho, rank2_apparatus)
    assert report.s_luders == pytest.approx(binary_entropy(0.6))
    expected_gap = 0.6 * (LN2 + binary_entropy(1 / 3))
    assert report.jaynes_gap == pytest.approx(expected_gap)
    assert jaynes_gap(rho, rank2_apparatus) == pytest.approx(expected_gap)
    assert report.decomposition_residual < 1e-10
    assert [s.dim_a for s in report.sectors] == [2, 1]


def test_decomposition_entropy_matches_von_neumann(rng):
    space = BipartiteSpace(4, 2)
    for _ in range(20):
        apparatus = random_apparatus(space, rng)
        rep = modified_reduce(random_density_operator(space, rng), apparatus)
        assert decomposition_entropy(rep) == pytest.approx(von_neumann_entropy(rep.rho_hat), abs=1e-8)


def test_sample_equivalence_class_members(rank2, rank2_apparatus):
    _, rho = rank2
    rep = modified_reduce(rho, rank2_apparatus)
    samples = sample_equivalence_class(rep, 30, seed=5)
    assert len(samples) == 30
    for sigma in samples:
        assert equivalent_modified(sigma, rho, rank2_apparatus)[0]
    # stessi semi, stessi campioni
    again = sample_equivalence_class(rep, 30, seed=5)
    np.testing.assert_array_equal(samples[7].matrix, again[7].matrix)


def test_sample_equivalence_class_reaches_pure_members(bell, computational):
    _, rho = bell
    rep = modified_reduce(rho, computational)
    purities = [sigma.purity() for sigma in sample_equivalence_class(rep, 60, seed=1)]
    assert max(purities) > 0.6


def test_verify_max_entropy(rank2, rank2_apparatus):
    _, rho = rank2
    rep = modified_reduce(rho, rank2_apparatus)
    report = verify_max_entropy(rep, 50, seed=11)
    assert report.min_gap >= -1e-8
    assert report.max_sample_entropy <= report.s_rho_hat + 1e-8
    assert report.max_equivalence_residual <= 1e-9
    assert report.as_dict()["samples"] == 50
    with pytest.raises(PreconditionError):
        verify_max_entropy(rep, 0, seed=11)


def test_verify_max_entropy_reports_counterexample(rank2, rank2_apparatus):
    _, rho = rank2
    rep = modified_reduce(rho, rank2_apparatus)
    with pytest.raises(InvariantViolationError) as info:
        verify_max_entropy(rep, 5, seed=2, tol=-1.0)
    assert info.value.violations[0].invariant == "max_entropy"
    sigma = np.array(info.value.payload["sigma"])
    assert sigma.shape == (6, 6, 2)


def test_entropy_chain_rejects_broken_state(computational):
    with pytest.raises(InvalidStateError):
        entropy_chain(DensityOperator(np.diag([1.2, -0.2, 0.0, 0.0])), computational)


def test_von_neumann_entropy_is_unitarily_invariant():
    rng = np.random.default_rng(23)
    for k in range(100):
        dim = int(rng.integers(2, 17))
        m = random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1)))
        u = random_unitary(dim, rng)
        rotated = u @ m @ u.conj().T
        assert von_neumann_entropy(DensityOperator(rotated)) == pytest.approx(
            von_neumann_entropy(DensityOperator(m)), abs=1e-10)
