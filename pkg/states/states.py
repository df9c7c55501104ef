"""
Oggetti di dominio per stati e insiemi di proiettori.

Contiene stati puri e misti, espansioni a stato relativo, insiemi di
proiettori validati, proiettori dell'apparato P_i = P_i^A ⊗ 1_B e stati
condizionati del sottosistema isolato B.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from core.errors import (
    DimensionError,
    InvalidStateError,
    PreconditionError,
    ProjectorSetError,
    Violation,
)
from core.tensor_space import (
    BipartiteSpace,
    as_matrix,
    dagger,
    frobenius_norm,
    hermitian_tolerance,
    hermiticity_residual,
    partial_trace_a,
)

NORMALIZATION_TOLERANCE = 1e-9
AUTO_NORMALIZATION_WINDOW = 1e-6
TRACE_TOLERANCE = 1e-9
PSD_TOLERANCE = 1e-10
PROJECTOR_TOLERANCE = 1e-9
UNOCCUPIED_WEIGHT = 1e-12


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """
    Operatore densità: hermitiano, semidefinito positivo, traccia unitaria.

    Attributi:
    -----------
    matrix (np.ndarray): Matrice complessa dim × dim (parte hermitiana).
    space (BipartiteSpace): Spazio bipartito di appartenenza, se noto.
    """
    matrix: np.ndarray
    space: Optional[BipartiteSpace] = None

    def __post_init__(self):
        m = as_matrix(self.matrix, "rho")
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"rho non quadrata: {m.shape}")
        if self.space is not None and m.shape[0] != self.space.dim:
            raise DimensionError(f"rho di dimensione {m.shape[0]} incompatibile con lo spazio {self.space}")
        herm = hermiticity_residual(m)
        if herm > hermitian_tolerance(m.shape[0]):
            raise InvalidStateError(f"rho non hermitiana: residuo {herm:.3e}")
        m = (m + dagger(m)) / 2
        trace = float(np.real(np.trace(m)))
        if abs(trace - 1.0) > TRACE_TOLERANCE:
            raise InvalidStateError(f"traccia di rho = {trace:.12g}, attesa 1")
        lowest = float(np.linalg.eigvalsh(m)[0])
        if lowest < -PSD_TOLERANCE:
            raise InvalidStateError(f"rho non positiva: autovalore minimo {lowest:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def with_space(self, space: BipartiteSpace) -> "DensityOperator":
        return DensityOperator(self.matrix, space)


@dataclass(frozen=True, eq=False)
class PureState:
    """
    Stato puro bipartito |ψ> = Σ c_{αβ} |ψ_α^A>|ψ_β^B>.

    Attributi:
    -----------
    space (BipartiteSpace): Spazio bipartito.
    coefficients (np.ndarray): Tensore dei coefficienti c_{αβ} di forma dim_a × dim_b.
    """
    space: BipartiteSpace
    coefficients: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return self.coefficients.reshape(-1)

    def density(self) -> DensityOperator:
        v = self.vector
        return DensityOperator(np.outer(v, v.conj()), self.space)


@dataclass(frozen=True, eq=False)
class RelativeComponent:
    """Termine (α, |φ_α^B>, ‖φ_α^B‖²) dell'espansione a stato relativo."""
    alpha: int
    vector: np.ndarray
    weight: float


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """
    Insieme esaustivo ortonormale di proiettori.

    Attributi:
    -----------
    projectors (tuple): Matrici P_i.
    labels (tuple): Identificativi degli esiti.
    """
    projectors: Tuple[np.ndarray, ...]
    labels: Tuple[str, ...]

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self):
        return len(self.projectors)

    def ranks(self) -> List[int]:
        return [int(round(float(np.real(np.trace(p))))) for p in self.projectors]


@dataclass(frozen=True, eq=False)
class ApparatusProjectorSet:
    """
    Proiettori dell'apparato P_i = P_i^A ⊗ 1_B.

    Attributi:
    -----------
    space (BipartiteSpace): Spazio bipartito.
    sector_bases (tuple): Per ogni settore, matrice dim_a × d_i^A con i vettori di A
                          che generano M_i^A disposti per colonne.
    projectors_a (tuple): Proiettori P_i^A su A.
    projectors (tuple): Proiettori sollevati P_i su AB.
    dims_a (tuple): Dimensioni d_i^A = tr P_i^A.
    labels (tuple): Identificativi dei settori.
    """
    space: BipartiteSpace
    sector_bases: Tuple[np.ndarray, ...]
    projectors_a: Tuple[np.ndarray, ...]
    projectors: Tuple[np.ndarray, ...]
    dims_a: Tuple[int, ...]
    labels: Tuple[str, ...]

    def __len__(self):
        return len(self.projectors)

    def as_projector_set(self) -> ProjectorSet:
        return ProjectorSet(self.projectors, self.labels)

    def sector_state_a(self, i: int) -> np.ndarray:
        """Stato di massima entropia ρ_i^A = P_i^A / d_i^A nel settore i."""
        return self.projectors_a[i] / self.dims_a[i]


@dataclass(frozen=True, eq=False)
class ConditionalState:
    """
    Stato condizionato di B dato l'esito i dell'apparato.

    Attributi:
    -----------
    index (int): Indice del settore.
    weight (float): Probabilità w_i = tr(ρ P_i).
    state (DensityOperator | None): ρ_i^B, None se il settore non è occupato.
    """
    index: int
    weight: float
    state: Optional[DensityOperator]

    @property
    def occupied(self) -> bool:
        return self.state is not None


def make_pure(space: BipartiteSpace, coefficients) -> Tuple[PureState, DensityOperator]:
    """
    Costruisce uno stato puro e il suo operatore densità |ψ><ψ|.

    I coefficienti vengono normalizzati se la norma dista da 1 meno di 1e-6,
    altrimenti vengono rifiutati.

    :param space: Spazio bipartito.
    :param coefficients: Tensore c_{αβ} di forma dim_a × dim_b.
    :return: (PureState, DensityOperator).
    """
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (space.dim_a, space.dim_b):
        raise DimensionError(f"coefficienti di forma {c.shape}, attesa {(space.dim_a, space.dim_b)}")
    if not np.all(np.isfinite(c)):
        raise InvalidStateError("coefficienti non finiti")
    norm = float(np.linalg.norm(c))
    if norm == 0.0:
        raise InvalidStateError("vettore nullo: impossibile costruire uno stato")
    if abs(norm - 1.0) > AUTO_NORMALIZATION_WINDOW:
        raise InvalidStateError(f"norma {norm:.6g} fuori dalla finestra di normalizzazione")
    c = c / norm
    c.setflags(write=False)
    psi = PureState(space, c)
    return psi, psi.density()


def relative_state(psi: PureState, alpha: int) -> Tuple[np.ndarray, float]:
    """
    Stato relativo (non normalizzato) di B rispetto a |ψ_α^A>.

    :param psi: Stato puro bipartito.
    :param alpha: Indice della base di A.
    :return: (|φ_α^B> = Σ_β c_{αβ}|ψ_β^B>, norma al quadrato).
    """
    if not 0 <= alpha < psi.space.dim_a:
        raise PreconditionError(f"indice alpha={alpha} fuori intervallo [0, {psi.space.dim_a})")
    phi = np.array(psi.coefficients[alpha, :])
    weight = float(np.real(np.vdot(phi, phi)))
    if weight == 0.0:
        logging.debug(f"Stato relativo nullo per alpha={alpha}.")
    return phi, weight


def relative_expansion(psi: PureState) -> List[RelativeComponent]:
    """
    Espansione a stato relativo |ψ> = Σ_α |ψ_α^A>|φ_α^B>.

    Restituisce un termine per ogni α, anche quelli di peso nullo; i pesi
    sommano a 1.
    """
    components = []
    for alpha in range(psi.space.dim_a):
        phi, weight = relative_state(psi, alpha)
        components.append(RelativeComponent(alpha, phi, weight))
    return components


def reassemble_expansion(space: BipartiteSpace, components: Sequence[RelativeComponent]) -> np.ndarray:
    """Ricompone il vettore globale Σ_α |ψ_α^A> ⊗ |φ_α^B>."""
    vector = np.zeros(space.dim, dtype=complex)
    for component in components:
        basis_a = np.zeros(space.dim_a, dtype=complex)
        basis_a[component.alpha] = 1.0
        vector += np.kron(basis_a, component.vector)
    return vector


def check_projector_set(candidates, tol=PROJECTOR_TOLERANCE) -> List[Violation]:
    """
    Verifica gli invarianti di un insieme di proiettori senza sollevare eccezioni.

    :param candidates: Lista di matrici quadrate di pari dimensione.
    :return: Lista di violazioni (vuota se l'insieme è valido).
    """
    violations = []
    matrices = [as_matrix(c, f"P[{k}]") for k, c in enumerate(candidates)]
    if not matrices:
        return [Violation("exhaustiveness", "insieme vuoto di proiettori", None)]
    dim = matrices[0].shape[0]
    for k, p in enumerate(matrices):
        if p.shape != (dim, dim):
            violations.append(Violation("shape", f"P[{k}] ha forma {p.shape}, attesa {(dim, dim)}", None))
    if violations:
        return violations
    for k, p in enumerate(matrices):
        residual = frobenius_norm(p - dagger(p))
        if residual > tol:
            violations.append(Violation("hermiticity", f"P[{k}] non hermitiano", residual))
        residual = frobenius_norm(p @ p - p)
        if residual > tol:
            violations.append(Violation("idempotence", f"P[{k}] non idempotente", residual))
    for i in range(len(matrices)):
        for j in range(i + 1, len(matrices)):
            residual = frobenius_norm(dagger(matrices[i]) @ matrices[j])
            if residual > tol:
                violations.append(Violation("orthogonality", f"P[{i}] e P[{j}] non ortogonali", residual))
    residual = frobenius_norm(sum(matrices) - np.eye(dim))
    if residual > tol:
        violations.append(Violation("exhaustiveness", "la somma dei proiettori differisce dall'identità", residual))
    return violations


def validate_projector_set(candidates, labels=None, tol=PROJECTOR_TOLERANCE) -> ProjectorSet:
    """
    Valida un insieme esaustivo ortonormale di proiettori.

    :param candidates: Matrici candidate.
    :param labels: Identificativi degli esiti (default "0", "1", ...).
    :return: ProjectorSet validato.
    :raises ProjectorSetError: con il rapporto strutturato delle violazioni.
    """
    violations = check_projector_set(candidates, tol)
    if violations:
        names = ", ".join(sorted({v.invariant for v in violations}))
        raise ProjectorSetError(f"insieme di proiettori non valido ({names})", violations)
    matrices = []
    for c in candidates:
        p = as_matrix(c).copy()
        p.setflags(write=False)
        matrices.append(p)
    labels = tuple(str(l) for l in labels) if labels is not None else tuple(str(k) for k in range(len(matrices)))
    if len(labels) != len(matrices):
        raise DimensionError(f"{len(labels)} etichette per {len(matrices)} proiettori")
    return ProjectorSet(tuple(matrices), labels)


def lift_apparatus_projectors(space: BipartiteSpace, sector_bases, labels=None, tol=PROJECTOR_TOLERANCE) -> ApparatusProjectorSet:
    """
    Costruisce P_i^A = Σ_{α∈i} |ψ_α^A><ψ_α^A| e li solleva a P_i = P_i^A ⊗ 1_B.

    :param space: Spazio bipartito.
    :param sector_bases: Per ogni settore, una sequenza di vettori di A.
    :param labels: Identificativi dei settori.
    :return: ApparatusProjectorSet.
    :raises ProjectorSetError: se i vettori non sono ortonormali o non completano H_A.
    """
    groups = []
    for k, group in enumerate(sector_bases):
        vectors = [np.asarray(v, dtype=complex).reshape(-1) for v in group]
        if not vectors:
            raise ProjectorSetError(f"settore {k} vuoto", [Violation("shape", f"settore {k} senza vettori")])
        for v in vectors:
            if v.shape != (space.dim_a,):
                raise DimensionError(f"settore {k}: vettore di lunghezza {v.shape[0]}, atteso {space.dim_a}")
        groups.append(np.column_stack(vectors))
    if not groups:
        raise ProjectorSetError("nessun settore", [Violation("exhaustiveness", "nessun settore definito")])
    stacked = np.hstack(groups)
    gram_residual = float(np.max(np.abs(dagger(stacked) @ stacked - np.eye(stacked.shape[1]))))
    if gram_residual > tol:
        raise ProjectorSetError(
            "i vettori dei settori non sono ortonormali",
            [Violation("orthonormality", "vettori di settore non ortonormali", gram_residual)],
        )
    if stacked.shape[1] != space.dim_a:
        raise ProjectorSetError(
            "l'unione dei settori non completa H_A",
            [Violation("exhaustiveness", f"{stacked.shape[1]} vettori per dim_a={space.dim_a}",
                       float(np.sqrt(space.dim_a - stacked.shape[1])) if stacked.shape[1] < space.dim_a else None)],
        )
    identity_b = np.eye(space.dim_b)
    projectors_a, projectors, dims_a = [], [], []
    for basis in groups:
        p_a = basis @ dagger(basis)
        p = np.kron(p_a, identity_b)
        for arr in (basis, p_a, p):
            arr.setflags(write=False)
        projectors_a.append(p_a)
        projectors.append(p)
        dims_a.append(basis.shape[1])
    labels = tuple(str(l) for l in labels) if labels is not None else tuple(str(k) for k in range(len(groups)))
    if len(labels) != len(groups):
        raise DimensionError(f"{len(labels)} etichette per {len(groups)} settori")
    logging.debug(f"Proiettori dell'apparato costruiti: dimensioni dei settori {dims_a}")
    return ApparatusProjectorSet(space, tuple(groups), tuple(projectors_a), tuple(projectors), tuple(dims_a), labels)


def computational_sectors(space: BipartiteSpace, groups: Sequence[Sequence[int]], labels=None) -> ApparatusProjectorSet:
    """Settori definiti da gruppi di indici della base computazionale di A."""
    identity = np.eye(space.dim_a)
    return lift_apparatus_projectors(space, [[identity[k] for k in group] for group in groups], labels)


def conditional_state(rho: DensityOperator, apparatus: ApparatusProjectorSet, i: int,
                      unoccupied_weight=UNOCCUPIED_WEIGHT) -> ConditionalState:
    """
    Stato condizionato ρ_i^B = tr_A(P_i ρ) / w_i con w_i = tr(ρ P_i).

    :param rho: Operatore densità su AB.
    :param apparatus: Proiettori dell'apparato.
    :param i: Indice del settore.
    :return: ConditionalState; se w_i ≤ ε_w il settore è non occupato e lo stato è None.
    """
    space = apparatus.space
    m = space.check_operator(rho.matrix, "rho")
    if not 0 <= i < len(apparatus):
        raise PreconditionError(f"settore {i} inesistente")
    projected = apparatus.projectors[i] @ m
    weight = float(np.clip(np.real(np.trace(projected)), 0.0, 1.0))
    if weight <= unoccupied_weight:
        logging.debug(f"Settore {i} non occupato (w={weight:.3e}).")
        return ConditionalState(i, weight, None)
    reduced = partial_trace_a(projected, space) / weight
    reduced = (reduced + dagger(reduced)) / 2
    reduced = reduced / np.real(np.trace(reduced))
    return ConditionalState(i, weight, DensityOperator(reduced))


def conditional_states(rho: DensityOperator, apparatus: ApparatusProjectorSet,
                       unoccupied_weight=UNOCCUPIED_WEIGHT) -> List[ConditionalState]:
    return [conditional_state(rho, apparatus, i, unoccupied_weight) for i in range(len(apparatus))]


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Unitaria di Haar (dim=1 restituisce una fase)."""
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(dim, random_state=rng)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int = None) -> np.ndarray:
    """Matrice densità casuale GG†/tr(GG†) (misura di Hilbert-Schmidt per rank pieno)."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ dagger(g)
    return m / np.real(np.trace(m))


def random_density_operator(space: BipartiteSpace, rng: np.random.Generator, rank: int = None) -> DensityOperator:
    return DensityOperator(random_density_matrix(space.dim, rng, rank), space)


def random_pure_state(space: BipartiteSpace, rng: np.random.Generator) -> PureState:
    c = rng.standard_normal((space.dim_a, space.dim_b)) + 1j * rng.standard_normal((space.dim_a, space.dim_b))
    psi, _ = make_pure(space, c / np.linalg.norm(c))
    return psi


def random_apparatus(space: BipartiteSpace, rng: np.random.Generator, n_sectors: int = None) -> ApparatusProjectorSet:
    """
    Apparato casuale: partizione casuale di una base di Haar di H_A.

    :param n_sectors: Numero di settori (default casuale tra 1 e dim_a).
    """
    n_sectors = int(rng.integers(1, space.dim_a + 1)) if n_sectors is None else n_sectors
    if not 1 <= n_sectors <= space.dim_a:
        raise PreconditionError(f"numero di settori {n_sectors} non valido per dim_a={space.dim_a}")
    cuts = np.sort(rng.choice(np.arange(1, space.dim_a), size=n_sectors - 1, replace=False)) if n_sectors > 1 else []
    bounds = [0, *[int(c) for c in cuts], space.dim_a]
    basis = random_unitary(space.dim_a, rng)
    groups = [[basis[:, k] for k in range(bounds[s], bounds[s + 1])] for s in range(n_sectors)]
    return lift_apparatus_projectors(space, groups)
