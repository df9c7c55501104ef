import numpy as np
import pytest

from core.errors import DimensionError, InvalidStateError, ProjectorSetError
from core.tensor_space import BipartiteSpace
from states.states import (
    DensityOperator,
    check_projector_set,
    computational_sectors,
    conditional_state,
    conditional_states,
    lift_apparatus_projectors,
    make_pure,
    random_apparatus,
    random_density_operator,
    random_pure_state,
    reassemble_expansion,
    relative_expansion,
    validate_projector_set,
)


def test_make_pure_normalizes_within_window(qubit_pair):
    psi, rho = make_pure(qubit_pair, np.array([[1.0, 0.0], [0.0, 0.0]]) * (1 + 1e-7))
    assert np.linalg.norm(psi.vector) == pytest.approx(1.0, abs=1e-15)
    assert rho.purity() == pytest.approx(1.0)


def test_make_pure_rejects_bad_coefficients(qubit_pair):
    with pytest.raises(InvalidStateError, match="norma"):
        make_pure(qubit_pair, [[1.0, 0.0], [0.0, 0.5]])
    with pytest.raises(InvalidStateError, match="nullo"):
        make_pure(qubit_pair, np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        make_pure(qubit_pair, np.ones((2, 3)) / np.sqrt(6))


def test_density_operator_validation():
    with pytest.raises(InvalidStateError, match="traccia"):
        DensityOperator(np.eye(2))
    with pytest.raises(InvalidStateError, match="positiva"):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError, match="hermitiana"):
        DensityOperator([[0.5, 0.5], [0.0, 0.5]])
    with pytest.raises(DimensionError):
        DensityOperator(np.eye(3) / 3, BipartiteSpace(2, 2))


def test_density_operator_is_read_only():
    rho = DensityOperator(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


def test_relative_expansion_of_bell(bell, qubit_pair):
    psi, _ = bell
    components = relative_expansion(psi)
    assert [c.weight for c in components] == pytest.approx([0.5, 0.5])
    np.testing.assert_allclose(reassemble_expansion(qubit_pair, components), psi.vector)


def test_relative_expansion_keeps_zero_weight_terms():
    psi, _ = make_pure(BipartiteSpace(3, 2), [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    components = relative_expansion(psi)
    assert len(components) == 3
    assert [c.weight for c in components] == pytest.approx([1.0, 0.0, 0.0])


def test_check_projector_set_names_invariants():
    assert [v.invariant for v in check_projector_set([np.diag([1.0, 0.0])])] == ["exhaustiveness"]
    skew = np.array([[0.5, 0.5], [0.5, 0.5]])
    names = {v.invariant for v in check_projector_set([np.diag([1.0, 0.0]), skew])}
    assert {"orthogonality", "exhaustiveness"} <= names
    names = {v.invariant for v in check_projector_set([np.diag([2.0, 0.0]), np.diag([0.0, 1.0])])}
    assert "idempotence" in names


def test_validate_projector_set_raises_structured_report():
    with pytest.raises(ProjectorSetError) as info:
        validate_projector_set([np.diag([1.0, 0.0, 0.0]), np.diag([0.0, 1.0, 0.0])])
    assert [v.invariant for v in info.value.violations] == ["exhaustiveness"]
    projset = validate_projector_set([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], labels=["up", "down"])
    assert projset.labels == ("up", "down")
    assert projset.ranks() == [1, 1]


def test_lift_apparatus_projectors(rank2_apparatus, rank2_space):
    assert rank2_apparatus.dims_a == (2, 1)
    np.testing.assert_allclose(rank2_apparatus.projectors[0], np.kron(np.diag([1.0, 1.0, 0.0]), np.eye(2)))
    np.testing.assert_allclose(rank2_apparatus.sector_state_a(0), np.diag([0.5, 0.5, 0.0]))
    assert check_projector_set(rank2_apparatus.projectors) == []


def test_incomplete_sectors_name_exhaustiveness(qubit_pair):
    with pytest.raises(ProjectorSetError) as info:
        computational_sectors(qubit_pair, [[0]])
    assert info.value.violations[0].invariant == "exhaustiveness"


def test_non_orthonormal_sector_vectors(qubit_pair):
    with pytest.raises(ProjectorSetError) as info:
        lift_apparatus_projectors(qubit_pair, [[[1, 0]], [[1, 1]]])
    assert info.value.violations[0].invariant == "orthonormality"


def test_conditional_states_of_bell(bell, computational):
    _, rho = bell
    c0, c1 = conditional_states(rho, computational)
    assert c0.weight == pytest.approx(0.5)
    np.testing.assert_allclose(c0.state.matrix, np.diag([1.0, 0.0]), atol=1e-12)
    np.testing.assert_allclose(c1.state.matrix, np.diag([0.0, 1.0]), atol=1e-12)


def test_unoccupied_sector_has_no_conditional_state(qubit_pair, computational):
    _, rho = make_pure(qubit_pair, [[1.0, 0.0], [0.0, 0.0]])
    c = conditional_state(rho, computational, 1)
    assert not c.occupied
    assert c.weight == 0.0


def test_random_generators_are_valid(rng):
    space = BipartiteSpace(4, 2)
    rho = random_density_operator(space, rng, rank=3)
    assert np.sum(rho.eigenvalues() > 1e-12) == 3
    psi = random_pure_state(space, rng)
    assert np.linalg.norm(psi.vector) == pytest.approx(1.0)
    apparatus = random_apparatus(space, rng, n_sectors=3)
    assert len(apparatus) == 3
    assert sum(apparatus.dims_a) == 4
    assert check_projector_set(apparatus.projectors) == []
