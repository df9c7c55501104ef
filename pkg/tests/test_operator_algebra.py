import numpy as np
import pytest
from scipy.linalg import block_diag

from algebra.operator_algebra import (
    OperatorAlgebra,
    bicommutant,
    center,
    commutant,
    contains,
    containment_residual,
    full_matrix_basis,
    generated_algebra,
    superselection_operator,
    superselection_sectors,
    verify_duality,
)
from core.errors import DimensionError, SectorExtractionError
from states.states import random_unitary, validate_projector_set


def test_commutant_of_identity_is_everything():
    assert commutant([np.eye(3)]).linear_dimension == 9


def test_commutant_of_full_matrix_algebra_is_scalars():
    algebra = commutant(full_matrix_basis(3))
    assert algebra.linear_dimension == 1
    assert contains(algebra, np.eye(3))[0]


def test_commutant_of_empty_set_needs_dimension():
    assert commutant([], dim=2).linear_dimension == 4
    with pytest.raises(DimensionError):
        commutant([])


def test_dimension_cap():
    with pytest.raises(DimensionError, match="limite"):
        commutant([np.eye(17)])


def test_bicommutant_of_diagonal_generator():
    algebra = bicommutant([np.diag([1.0, 2.0, 2.0])])
    assert algebra.linear_dimension == 2
    assert contains(algebra, np.diag([5.0, -1.0, -1.0]))[0]
    assert not contains(algebra, np.diag([1.0, 2.0, 3.0]))[0]


def test_generated_algebra_block_structure(rank2_apparatus):
    algebra = generated_algebra(rank2_apparatus)
    # settori di dimensione 2·2 e 1·2 su AB
    assert algebra.linear_dimension == 4 ** 2 + 2 ** 2
    assert algebra.check_invariants() == []
    assert algebra.contains_identity
    off_block = np.zeros((6, 6))
    off_block[0, 5] = 1.0
    member, residual = algebra.contains(off_block)
    assert not member
    assert residual == pytest.approx(1.0)


def test_generated_algebra_validates_raw_matrices():
    algebra = generated_algebra([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    assert algebra.linear_dimension == 2


def test_project_onto_algebra(rank2_apparatus):
    algebra = generated_algebra(rank2_apparatus)
    x = np.arange(36, dtype=float).reshape(6, 6)
    projected = algebra.project(x)
    assert contains(algebra, projected)[0]
    dephased = sum(p @ x @ p for p in rank2_apparatus.projectors)
    np.testing.assert_allclose(projected, dephased, atol=1e-10)


def test_center_is_spanned_by_sector_projectors(rank2_apparatus):
    algebra = generated_algebra(rank2_apparatus)
    z = center(algebra)
    assert z.linear_dimension == 2
    for p in rank2_apparatus.projectors:
        assert contains(z, p)[0]


def test_superselection_sectors_recover_apparatus(rank2_apparatus):
    sectors = superselection_sectors(generated_algebra(rank2_apparatus))
    assert len(sectors) == 2
    for recovered, original in zip(sectors.projectors, rank2_apparatus.projectors):
        np.testing.assert_allclose(recovered, original, atol=1e-8)


def test_superselection_sectors_require_identity():
    e00 = np.zeros((2, 2), dtype=complex)
    e00[0, 0] = 1.0
    algebra = OperatorAlgebra(2, e00.reshape(-1, 1))
    assert algebra.check_invariants()[0].invariant == "identity"
    with pytest.raises(SectorExtractionError):
        superselection_sectors(algebra)


def test_check_invariants_detects_missing_products():
    # span{E00, E01 + E10} è chiuso per aggiunto ma non per prodotto
    e00 = np.zeros((2, 2), dtype=complex)
    e00[0, 0] = 1.0
    swap = np.array([[0, 1], [1, 0]], dtype=complex) / np.sqrt(2)
    algebra = OperatorAlgebra(2, np.column_stack([e00.reshape(-1), swap.reshape(-1)]))
    names = {v.invariant for v in algebra.check_invariants()}
    assert "product_closure" in names


def test_superselection_operator_commutes_with_algebra(rank2_apparatus):
    algebra = generated_algebra(rank2_apparatus)
    operator = superselection_operator(rank2_apparatus, [1.0, -2.0])
    assert operator.check_invariants(algebra) == []
    np.testing.assert_allclose(np.diag(operator.matrix).real, [1, 1, 1, 1, -2, -2])
    full = OperatorAlgebra(6, np.eye(36, dtype=complex))
    assert operator.commutator_residual(full) > 1.0
    with pytest.raises(DimensionError):
        superselection_operator(rank2_apparatus, [1.0])


def test_verify_duality_passes_on_block_algebra(rank2_apparatus):
    report = verify_duality(rank2_apparatus)
    assert report.passed
    assert report.dimensions == {"algebra": 20, "commutant": 2, "bicommutant": 20, "center": 2}
    assert report.as_dict()["violations"] == []


def test_containment_residual_of_nested_algebras():
    projset = validate_projector_set([np.diag([1.0, 0.0, 0.0]), np.diag([0.0, 1.0, 1.0])])
    algebra = generated_algebra(projset)
    z = center(algebra)
    assert containment_residual(z, algebra) < 1e-12
    assert containment_residual(algebra, z) > 0.5


def block_generators(rng):
    """Due generatori di M_2 ⊕ (M_3 ⊗ I_2) in una base di Haar su C^8."""
    u = random_unitary(8, rng)
    generators = []
    for _ in range(2):
        b1 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        b2 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        generators.append(u @ block_diag(b1, np.kron(b2, np.eye(2))) @ u.conj().T)
    return generators


def test_triple_commutant_equals_commutant():
    rng = np.random.default_rng(17)
    for k in range(12):
        if k % 3 == 2:
            generators = block_generators(rng)
        else:
            dim = int(rng.integers(2, 9))
            generators = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
                          for _ in range(1 + k % 2)]
        first = commutant(generators)
        third = commutant(bicommutant(first.basis, first.dim).basis, first.dim)
        assert first.linear_dimension == third.linear_dimension
        assert containment_residual(first, third) <= 1e-8
        assert containment_residual(third, first) <= 1e-8
        if k % 3 == 2:
            assert first.linear_dimension == 5


def test_null_space_threshold_follows_generator_scale():
    rng = np.random.default_rng(18)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    for scale in (1e-6, 1.0, 1e6):
        assert commutant([scale * a]).linear_dimension == 4


def test_configured_algebra_cap():
    with pytest.raises(DimensionError, match="16"):
        generated_algebra([np.diag([1.0] * 9 + [0.0] * 8), np.diag([0.0] * 9 + [1.0] * 8)])
    projectors = [np.diag([1.0] * 9 + [0.0] * 8), np.diag([0.0] * 9 + [1.0] * 8)]
    assert generated_algebra(projectors, max_dim=17).linear_dimension == 81 + 64
    assert commutant([np.eye(17)], max_dim=17).linear_dimension == 289
