"""
Motore per *-algebre di dimensione finita.

Le algebre sono rappresentate come sottospazi lineari di M_d(C): ogni
operatore X viene vettorizzato per righe (vec(X) = X.reshape(-1)) e
l'algebra è descritta da una base ortonormale di Hilbert-Schmidt
disposta per colonne in una matrice d² × k ("frame").
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from core.errors import DimensionError, SectorExtractionError, Violation
from core.tensor_space import as_matrix, dagger, frobenius_norm
from states.states import ApparatusProjectorSet, ProjectorSet, validate_projector_set

ALGEBRA_DIMENSION_CAP = 16
NULL_SPACE_TOLERANCE = 1e-9
MEMBERSHIP_TOLERANCE = 1e-9
CLOSURE_TOLERANCE = 1e-9
SECTOR_GROUPING_TOLERANCE = 1e-8
SECTOR_DRAWS = 3
CLOSURE_SAMPLES = 8
PRECONDITION_MIXES = 2


@dataclass(frozen=True, eq=False)
class OperatorAlgebra:
    """
    Algebra di operatori come sottospazio lineare di M_d(C).

    Attributi:
    -----------
    dim (int): Dimensione d dello spazio su cui agiscono gli operatori.
    frame (np.ndarray): Matrice d² × k con colonne ortonormali (vec per righe).
    """
    dim: int
    frame: np.ndarray

    @property
    def linear_dimension(self) -> int:
        return self.frame.shape[1]

    @cached_property
    def basis(self) -> Tuple[np.ndarray, ...]:
        return tuple(self.frame[:, k].reshape(self.dim, self.dim) for k in range(self.linear_dimension))

    @cached_property
    def contains_identity(self) -> bool:
        return contains(self, np.eye(self.dim))[0]

    def contains(self, x) -> Tuple[bool, float]:
        return contains(self, x)

    def project(self, x) -> np.ndarray:
        """Proiezione ortogonale (Hilbert-Schmidt) di X sull'algebra."""
        v = check_dimension(x, self.dim).reshape(-1)
        return (self.frame @ (dagger(self.frame) @ v)).reshape(self.dim, self.dim)

    def check_invariants(self, seed: int = 0) -> List[Violation]:
        """
        Verifica chiusura per aggiunto, chiusura per prodotto e presenza dell'identità.

        La chiusura per prodotto è controllata su coppie di elementi generici
        (combinazioni casuali della base): per bilinearità un fallimento su
        tutta l'algebra si manifesta su una coppia generica.
        """
        violations = []
        adjoint_residual = max((_distance(self.frame, dagger(b).reshape(-1)) for b in self.basis), default=0.0)
        if adjoint_residual > CLOSURE_TOLERANCE:
            violations.append(Violation("adjoint_closure", "X† fuori dallo span", adjoint_residual))
        rng = np.random.default_rng(seed)
        product_residual = 0.0
        for _ in range(CLOSURE_SAMPLES if self.linear_dimension else 0):
            x = self._generic_element(rng)
            y = self._generic_element(rng)
            xy = x @ y
            scale = max(1.0, frobenius_norm(x) * frobenius_norm(y))
            product_residual = max(product_residual, _distance(self.frame, xy.reshape(-1)) / scale)
        if product_residual > CLOSURE_TOLERANCE:
            violations.append(Violation("product_closure", "XY fuori dallo span", product_residual))
        identity_residual = _distance(self.frame, np.eye(self.dim, dtype=complex).reshape(-1))
        if identity_residual > CLOSURE_TOLERANCE * np.sqrt(self.dim):
            violations.append(Violation("identity", "l'identità non appartiene all'algebra", identity_residual))
        return violations

    def _generic_element(self, rng) -> np.ndarray:
        k = self.linear_dimension
        c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        return (self.frame @ (c / np.linalg.norm(c))).reshape(self.dim, self.dim)


@dataclass(frozen=True, eq=False)
class SuperselectionOperator:
    """
    Operatore di superselezione Λ = Σ_i λ_i P_i.

    Attributi:
    -----------
    eigenvalues (np.ndarray): Un autovalore complesso per settore.
    sectors (ProjectorSet): Settori di superselezione.
    """
    eigenvalues: np.ndarray
    sectors: ProjectorSet

    def __post_init__(self):
        values = np.asarray(self.eigenvalues, dtype=complex).reshape(-1)
        if values.shape[0] != len(self.sectors):
            raise DimensionError(f"{values.shape[0]} autovalori per {len(self.sectors)} settori")
        object.__setattr__(self, "eigenvalues", values)

    @property
    def matrix(self) -> np.ndarray:
        return sum(lam * p for lam, p in zip(self.eigenvalues, self.sectors.projectors))

    def commutator_residual(self, algebra: OperatorAlgebra) -> float:
        """Massima norma di Frobenius di [Λ, X] sugli elementi della base dell'algebra."""
        lam = self.matrix
        return max((frobenius_norm(lam @ x - x @ lam) for x in algebra.basis), default=0.0)

    def check_invariants(self, algebra: OperatorAlgebra) -> List[Violation]:
        residual = self.commutator_residual(algebra)
        if residual > CLOSURE_TOLERANCE:
            return [Violation("commutation", "Λ non commuta con l'algebra", residual)]
        return []


@dataclass(frozen=True)
class DualityReport:
    """
    Esito delle verifiche 𝒜 = 𝒜″, 𝒜′ ⊆ 𝒜 e 𝒵 = 𝒜′.

    Attributi:
    -----------
    residuals (dict): Residuo di contenimento per ciascuna verifica.
    dimensions (dict): Dimensioni lineari di 𝒜, 𝒜′, 𝒜″ e 𝒵.
    tolerance (float): Soglia di superamento.
    """
    residuals: Dict[str, float]
    dimensions: Dict[str, int]
    tolerance: float = CLOSURE_TOLERANCE
    violations: Tuple[Violation, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(r <= self.tolerance for r in self.residuals.values())

    def as_dict(self):
        return {
            "passed": self.passed,
            "residuals": dict(self.residuals),
            "dimensions": dict(self.dimensions),
            "tolerance": self.tolerance,
            "violations": [v.as_dict() for v in self.violations],
        }


def check_dimension(x, dim: int) -> np.ndarray:
    m = as_matrix(x, "operatore")
    if m.shape != (dim, dim):
        raise DimensionError(f"operatore di forma {m.shape}, attesa {(dim, dim)}")
    return m


def _operator_dimension(operators: Sequence[np.ndarray], dim: int = None, max_dim: int = ALGEBRA_DIMENSION_CAP) -> int:
    if dim is None:
        if not operators:
            raise DimensionError("impossibile dedurre la dimensione da un insieme vuoto di operatori")
        dim = operators[0].shape[0]
    for k, op in enumerate(operators):
        if op.shape != (dim, dim):
            raise DimensionError(f"generatore {k} di forma {op.shape}, attesa {(dim, dim)}")
    if dim > max_dim:
        raise DimensionError(f"dimensione {dim} oltre il limite {max_dim} per le operazioni di algebra")
    return dim


def _distance(frame: np.ndarray, v: np.ndarray) -> float:
    """Distanza del vettore v dallo span delle colonne ortonormali di frame."""
    if frame.shape[1] == 0:
        return float(np.linalg.norm(v))
    return float(np.linalg.norm(v - frame @ (dagger(frame) @ v)))


def containment_residual(inner: OperatorAlgebra, outer: OperatorAlgebra) -> float:
    """Massima distanza degli elementi della base di `inner` dallo span di `outer`."""
    if inner.linear_dimension == 0:
        return 0.0
    if outer.linear_dimension == 0:
        return 1.0
    projected = outer.frame @ (dagger(outer.frame) @ inner.frame)
    return float(np.max(np.linalg.norm(inner.frame - projected, axis=0)))


def full_matrix_basis(dim: int) -> List[np.ndarray]:
    """Unità matriciali E_jk, base di M_d(C)."""
    basis = []
    for j in range(dim):
        for k in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[j, k] = 1.0
            basis.append(e)
    return basis


def _commutator_images(frame: np.ndarray, a: np.ndarray, dim: int) -> np.ndarray:
    """Colonne vec([X, A]) per ogni colonna X del frame."""
    xs = frame.T.reshape(frame.shape[1], dim, dim)
    return (xs @ a - a @ xs).reshape(frame.shape[1], dim * dim).T


def _stacked_commutator_norm(operators: Sequence[np.ndarray], frame: np.ndarray, dim: int) -> float:
    """
    Valore singolare massimo della mappa impilata X ↦ ([X, A_1], ..., [X, A_n])
    ristretta a span(frame), dall'autovalore massimo della sua matrice di Gram.

    Con vec per righe la mappa X ↦ XA − AX è I ⊗ Aᵀ − A ⊗ I, quindi
    Σ L†L = I ⊗ Σ ĀAᵀ + Σ A†A ⊗ I − Σ (A ⊗ Ā + A† ⊗ Aᵀ).
    """
    if not operators or frame.shape[1] == 0:
        return 0.0
    identity = np.eye(dim, dtype=complex)
    left = sum(a.conj() @ a.T for a in operators)
    right = sum(dagger(a) @ a for a in operators)
    cross = sum(np.kron(a, a.conj()) for a in operators)
    gram = np.kron(identity, left) + np.kron(right, identity) - cross - dagger(cross)
    if frame.shape[1] < dim * dim or not np.allclose(frame, np.eye(dim * dim)):
        gram = dagger(frame) @ gram @ frame
    largest = la.eigvalsh((gram + dagger(gram)) / 2)[-1]
    return float(np.sqrt(max(largest, 0.0)))


def commutant(generators, dim: int = None, initial_frame: np.ndarray = None,
              max_dim: int = ALGEBRA_DIMENSION_CAP) -> OperatorAlgebra:
    """
    Commutante 𝒮′ = {X : XA − AX = 0 per ogni generatore A}.

    Il nucleo comune delle mappe X ↦ XA − AX viene calcolato in modo
    incrementale: si parte da un frame N (l'identità su M_d, oppure il frame
    di un sottospazio a cui restringere il calcolo) e per ogni generatore si
    conserva il nucleo di X ↦ [X, A] ristretto a span(N).

    :param generators: Lista di operatori quadrati di pari dimensione.
    :param dim: Dimensione d, obbligatoria se la lista è vuota.
    :param initial_frame: Frame d² × k di un sottospazio di partenza (opzionale).
    :param max_dim: Limite su d (setting ALGEBRA_DIMENSION_CAP).
    :return: OperatorAlgebra con base ortonormale di Hilbert-Schmidt.
    """
    operators = [as_matrix(g, f"generatore {k}") for k, g in enumerate(generators)]
    dim = _operator_dimension(operators, dim, max_dim)
    frame = np.eye(dim * dim, dtype=complex) if initial_frame is None else np.asarray(initial_frame, dtype=complex)
    if frame.shape[0] != dim * dim:
        raise DimensionError(f"frame iniziale di forma {frame.shape} incompatibile con d={dim}")
    scale = _stacked_commutator_norm(operators, frame, dim)
    threshold = NULL_SPACE_TOLERANCE * scale
    # combinazioni generiche in testa: restringono subito il frame, i generatori singoli restano tutti applicati
    sweep = list(operators)
    if len(operators) > PRECONDITION_MIXES:
        rng = np.random.default_rng(0)
        for _ in range(PRECONDITION_MIXES):
            c = rng.standard_normal(len(operators))
            c = c / np.sum(np.abs(c))
            sweep.insert(0, sum(ck * a for ck, a in zip(c, operators)))
    for a in sweep:
        if frame.shape[1] == 0 or scale == 0.0:
            break
        images = _commutator_images(frame, a, dim)
        _, s, vh = la.svd(images, full_matrices=True)
        rank = int(np.sum(s > threshold))
        frame = frame @ dagger(vh[rank:])
    frame = np.ascontiguousarray(frame)
    frame.setflags(write=False)
    logging.debug(f"Commutante di {len(operators)} generatori su d={dim}: dimensione lineare {frame.shape[1]}")
    return OperatorAlgebra(dim, frame)


def bicommutant(generators, dim: int = None, max_dim: int = ALGEBRA_DIMENSION_CAP) -> OperatorAlgebra:
    """𝒮″ = commutant(commutant(𝒮))."""
    first = commutant(generators, dim, max_dim=max_dim)
    return commutant(first.basis, first.dim, max_dim=max_dim)


def _projector_matrices(projset) -> List[np.ndarray]:
    if isinstance(projset, (ProjectorSet, ApparatusProjectorSet)):
        return list(projset.projectors)
    return list(validate_projector_set(projset).projectors)


def generated_algebra(projset, max_dim: int = ALGEBRA_DIMENSION_CAP) -> OperatorAlgebra:
    """
    Algebra a blocchi ⊕_i L(M_i) generata dal commutante dei proiettori.

    Per ogni settore si prende una base ortonormale V_i di M_i = P_i H; gli
    operatori |v_j><v_k| con v_j, v_k nello stesso settore sono già
    ortonormali nel prodotto di Hilbert-Schmidt, quindi la dimensione
    lineare risulta esattamente Σ_i d_i².

    :param projset: ProjectorSet validato (o ApparatusProjectorSet).
    :return: OperatorAlgebra.
    """
    projectors = _projector_matrices(projset)
    dim = _operator_dimension(projectors, max_dim=max_dim)
    columns = []
    for p in projectors:
        values, vectors = la.eigh((p + dagger(p)) / 2)
        sector = vectors[:, values > 0.5]
        for j in range(sector.shape[1]):
            for k in range(sector.shape[1]):
                columns.append(np.outer(sector[:, j], sector[:, k].conj()).reshape(-1))
    frame = np.column_stack(columns) if columns else np.zeros((dim * dim, 0), dtype=complex)
    frame.setflags(write=False)
    logging.debug(f"Algebra generata da {len(projectors)} proiettori: dimensione lineare {frame.shape[1]}")
    return OperatorAlgebra(dim, frame)


def center(algebra: OperatorAlgebra, max_dim: int = ALGEBRA_DIMENSION_CAP) -> OperatorAlgebra:
    """Centro 𝒵 = 𝒜 ∩ 𝒜′: commutante della base di 𝒜 ristretto allo span di 𝒜."""
    return commutant(algebra.basis, algebra.dim, initial_frame=algebra.frame, max_dim=max_dim)


def contains(algebra: OperatorAlgebra, x) -> Tuple[bool, float]:
    """
    Appartenenza di X allo span dell'algebra.

    :return: (True se la distanza ≤ 1e-9·‖X‖_F, distanza).
    """
    m = check_dimension(x, algebra.dim)
    residual = _distance(algebra.frame, m.reshape(-1))
    return residual <= MEMBERSHIP_TOLERANCE * frobenius_norm(m), residual


def _group_eigenvalues(values: np.ndarray, tol: float) -> List[List[int]]:
    groups = [[0]]
    for k in range(1, len(values)):
        if values[k] - values[k - 1] > tol:
            groups.append([k])
        else:
            groups[-1].append(k)
    return groups


def superselection_sectors(algebra: OperatorAlgebra, seed: int = 0, max_dim: int = ALGEBRA_DIMENSION_CAP) -> ProjectorSet:
    """
    Proiettori centrali minimali dell'algebra (settori di superselezione).

    Si diagonalizza un elemento hermitiano generico del centro; gli autospazi,
    raggruppati entro 1e-8·max(1, ‖H‖), sono i settori. Se il numero di
    gruppi differisce dalla dimensione del centro (degenerazione accidentale)
    si ripete con una nuova estrazione, fino a 3 volte.

    :param algebra: Algebra con struttura di superselezione discreta.
    :param seed: Seme del generatore per l'elemento generico.
    :param max_dim: Limite su d per il calcolo del centro.
    :return: ProjectorSet ordinato per primo indice di supporto, poi per rango.
    :raises SectorExtractionError: se il centro non produce proiettori centrali minimali.
    """
    z = center(algebra, max_dim)
    n_central = z.linear_dimension
    if n_central == 0:
        raise SectorExtractionError("centro vuoto: l'algebra non contiene l'identità")
    hermitian_parts = [(b + dagger(b)) / 2 for b in z.basis] + [(b - dagger(b)) / 2j for b in z.basis]
    rng = np.random.default_rng(seed)
    groups, vectors = None, None
    for draw in range(SECTOR_DRAWS):
        coefficients = rng.standard_normal(len(hermitian_parts))
        h = sum(c * part for c, part in zip(coefficients, hermitian_parts))
        h = (h + dagger(h)) / 2
        values, vectors = la.eigh(h)
        tol = SECTOR_GROUPING_TOLERANCE * max(1.0, float(np.max(np.abs(values))))
        groups = _group_eigenvalues(values, tol)
        if len(groups) == n_central:
            break
        logging.debug(f"Estrazione {draw + 1}: {len(groups)} gruppi per un centro di dimensione {n_central}")
    else:
        raise SectorExtractionError(
            f"{len(groups)} autospazi per un centro di dimensione {n_central} dopo {SECTOR_DRAWS} estrazioni"
        )
    projectors = []
    for group in groups:
        v = vectors[:, group]
        p = v @ dagger(v)
        member, residual = contains(z, p)
        if not member:
            raise SectorExtractionError(f"proiettore di settore fuori dal centro (residuo {residual:.3e})")
        idempotence = frobenius_norm(p @ p - p)
        if idempotence > SECTOR_GROUPING_TOLERANCE:
            raise SectorExtractionError(f"proiettore di settore non idempotente (residuo {idempotence:.3e})")
        projectors.append(p)
    projectors.sort(key=_sector_order)
    logging.info(f"Estratti {len(projectors)} settori di superselezione (ranghi {[round(np.trace(p).real) for p in projectors]})")
    return validate_projector_set(projectors)


def _sector_order(p: np.ndarray):
    diagonal = np.real(np.diag(p))
    first = int(np.argmax(diagonal > SECTOR_GROUPING_TOLERANCE))
    return first, float(np.sum(diagonal))


def superselection_operator(projset, eigenvalues) -> SuperselectionOperator:
    if not isinstance(projset, ProjectorSet):
        projset = projset.as_projector_set() if isinstance(projset, ApparatusProjectorSet) else validate_projector_set(projset)
    return SuperselectionOperator(np.asarray(eigenvalues, dtype=complex), projset)


def verify_duality(projset, max_dim: int = ALGEBRA_DIMENSION_CAP) -> DualityReport:
    """
    Verifica numerica di 𝒜 = 𝒜″, 𝒜′ ⊆ 𝒜 e 𝒵 = 𝒜′ per 𝒜 generata da 𝒫.

    Non solleva eccezioni sui residui: riporta i contenimenti tra sottospazi.

    :param max_dim: Limite su d (setting ALGEBRA_DIMENSION_CAP).
    """
    a = generated_algebra(projset, max_dim)
    a_prime = commutant(a.basis, a.dim, max_dim=max_dim)
    a_double = commutant(a_prime.basis, a.dim, max_dim=max_dim)
    z = center(a, max_dim)
    residuals = {
        "bicommutant_equality": max(containment_residual(a, a_double), containment_residual(a_double, a)),
        "commutant_in_algebra": containment_residual(a_prime, a),
        "center_equals_commutant": max(containment_residual(z, a_prime), containment_residual(a_prime, z)),
    }
    violations = tuple(
        Violation(name, "contenimento tra sottospazi violato", r)
        for name, r in residuals.items() if r > CLOSURE_TOLERANCE
    )
    for v in violations:
        logging.warning(f"Verifica di dualità fallita: {v.invariant} (residuo {v.residual:.3e})")
    dimensions = {
        "algebra": a.linear_dimension,
        "commutant": a_prime.linear_dimension,
        "bicommutant": a_double.linear_dimension,
        "center": z.linear_dimension,
    }
    return DualityReport(residuals, dimensions, CLOSURE_TOLERANCE, violations)
