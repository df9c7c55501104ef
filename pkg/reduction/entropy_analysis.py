"""
Entropie di von Neumann lungo la catena ρ → ρ̂_Lüders → ρ̂_modificata.

Le entropie sono in nats (costante di Boltzmann k = 1).
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.special import xlogy

from core.errors import InvalidStateError, InvariantViolationError, PreconditionError, Violation
from core.tensor_space import BipartiteSpace, dagger, matrix_to_pairs, partial_trace_a, partial_trace_b
from reduction.reduction import EquivalenceClassRep, equivalent_modified, luders_dephase, modified_reduce
from states.states import ApparatusProjectorSet, DensityOperator, random_density_matrix, random_unitary

EIGENVALUE_CLAMP = 1e-10
ORDERING_TOLERANCE = 1e-9
DECOMPOSITION_TOLERANCE = 1e-8
MAX_ENTROPY_TOLERANCE = 1e-8
SAMPLE_EQUIVALENCE_TOLERANCE = 1e-9
EMBEDDING_RANK_THRESHOLD = 1e-13

SECTOR_STATE_KINDS = ("mixed", "pure", "uniform")


@dataclass(frozen=True)
class SectorEntropy:
    index: int
    label: str
    weight: float
    dim_a: int
    entropy_b: float


@dataclass(frozen=True)
class EntropyReport:
    """
    Entropie della catena di riduzione.

    Attributi:
    -----------
    s_rho (float): S(ρ).
    s_luders (float): S(ρ̂_Lüders).
    s_modified (float): S(ρ̂_modificata).
    jaynes_gap (float): S_modificata − S_Lüders.
    sectors (tuple): SectorEntropy per ogni settore occupato.
    decomposition_residual (float): |S_mod − Σ_i w_i (ln d_i^A + S(ρ_i^B) − ln w_i)|.
    mutual_information_rho (float): I(A:B) di ρ.
    mutual_information_modified (float): I(A:B) di ρ̂_modificata.
    """
    s_rho: float
    s_luders: float
    s_modified: float
    jaynes_gap: float
    sectors: Tuple[SectorEntropy, ...]
    decomposition_residual: float
    mutual_information_rho: float
    mutual_information_modified: float

    def as_dict(self):
        return {
            "S_rho": self.s_rho,
            "S_luders": self.s_luders,
            "S_modified": self.s_modified,
            "jaynes_gap": self.jaynes_gap,
            "sectors": [
                {"index": s.index, "label": s.label, "weight": s.weight, "dim_a": s.dim_a, "S_b": s.entropy_b}
                for s in self.sectors
            ],
            "decomposition_residual": self.decomposition_residual,
            "mutual_information_rho": self.mutual_information_rho,
            "mutual_information_modified": self.mutual_information_modified,
        }


@dataclass(frozen=True)
class MaxEntropyReport:
    """
    Esito della verifica di massima entropia su campioni di [ρ].

    Attributi:
    -----------
    samples (int): Numero di campioni.
    seed (int): Seme del campionatore.
    s_rho_hat (float): S(ρ̂).
    max_sample_entropy (float): Massimo S(σ) osservato.
    min_gap (float): min_σ (S(ρ̂) − S(σ)).
    max_equivalence_residual (float): Residuo massimo di equivalent_modified sui campioni.
    """
    samples: int
    seed: int
    s_rho_hat: float
    max_sample_entropy: float
    min_gap: float
    max_equivalence_residual: float

    def as_dict(self):
        return {
            "samples": self.samples,
            "seed": self.seed,
            "S_rho_hat": self.s_rho_hat,
            "max_sample_entropy": self.max_sample_entropy,
            "min_gap": self.min_gap,
            "max_equivalence_residual": self.max_equivalence_residual,
        }


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


def von_neumann_entropy(rho) -> float:
    """
    S(ρ) = −Σ_j λ_j ln λ_j con 0·ln 0 = 0.

    Gli autovalori in [−1e-10, 0) sono portati a zero.

    :raises InvalidStateError: per autovalori < −1e-10.
    """
    m = _matrix(rho)
    values = np.linalg.eigvalsh((m + dagger(m)) / 2)
    if values.size and values[0] < -EIGENVALUE_CLAMP:
        raise InvalidStateError(f"autovalore negativo {values[0]:.3e}: entropia non definita")
    values = np.clip(values, 0.0, None)
    return float(max(0.0, -np.sum(xlogy(values, values))))


def linear_entropy(rho) -> float:
    m = _matrix(rho)
    return float(1.0 - np.real(np.vdot(m, m)))


def shannon_entropy(weights) -> float:
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    return float(-np.sum(xlogy(w, w)))


def mutual_information(rho, space: BipartiteSpace) -> float:
    """I(A:B) = S(ρ_A) + S(ρ_B) − S(ρ)."""
    m = space.check_operator(_matrix(rho), "rho")
    value = von_neumann_entropy(partial_trace_b(m, space)) + von_neumann_entropy(partial_trace_a(m, space)) \
        - von_neumann_entropy(m)
    return max(0.0, value)


def decomposition_entropy(rep: EquivalenceClassRep) -> float:
    """Σ_i w_i (ln d_i^A + S(ρ_i^B) − ln w_i) sui settori occupati."""
    total = 0.0
    for s in rep.occupied_sectors():
        dim_a = rep.apparatus.dims_a[s.index]
        total += s.weight * (np.log(dim_a) + von_neumann_entropy(s.state_b) - np.log(s.weight))
    return float(total)


def entropy_chain(rho, apparatus: ApparatusProjectorSet) -> EntropyReport:
    """
    Calcola S(ρ) ≤ S(ρ̂_L) ≤ S(ρ̂_mod) e verifica l'identità di decomposizione.

    :raises InvariantViolationError: se l'ordinamento o la decomposizione falliscono.
    """
    rho = rho if isinstance(rho, DensityOperator) else DensityOperator(rho, apparatus.space)
    space = apparatus.space
    rep = modified_reduce(rho, apparatus)
    s_rho = von_neumann_entropy(rho)
    s_luders = von_neumann_entropy(luders_dephase(rho, apparatus))
    s_modified = von_neumann_entropy(rep.rho_hat)
    decomposition_residual = abs(s_modified - decomposition_entropy(rep))
    violations = []
    if s_rho > s_luders + ORDERING_TOLERANCE:
        violations.append(Violation("ordering", "S(ρ) > S(ρ̂_L)", s_rho - s_luders))
    if s_luders > s_modified + ORDERING_TOLERANCE:
        violations.append(Violation("ordering", "S(ρ̂_L) > S(ρ̂_mod)", s_luders - s_modified))
    if decomposition_residual > DECOMPOSITION_TOLERANCE:
        violations.append(Violation("decomposition", "identità di decomposizione violata", decomposition_residual))
    if violations:
        raise InvariantViolationError("catena di entropie non valida", violations)
    sectors = tuple(
        SectorEntropy(s.index, s.label, s.weight, apparatus.dims_a[s.index], von_neumann_entropy(s.state_b))
        for s in rep.occupied_sectors()
    )
    report = EntropyReport(
        s_rho=s_rho,
        s_luders=s_luders,
        s_modified=s_modified,
        jaynes_gap=s_modified - s_luders,
        sectors=sectors,
        decomposition_residual=decomposition_residual,
        mutual_information_rho=mutual_information(rho, space),
        mutual_information_modified=mutual_information(rep.rho_hat, space),
    )
    logging.debug(f"Catena di entropie: {s_rho:.6f} ≤ {s_luders:.6f} ≤ {s_modified:.6f}")
    return report


def jaynes_gap(rho, apparatus: ApparatusProjectorSet) -> float:
    """S(ρ̂_modificata) − S(ρ̂_Lüders): scarto del canale di Lüders dal massimo di entropia vincolato."""
    rho = rho if isinstance(rho, DensityOperator) else DensityOperator(rho, apparatus.space)
    return von_neumann_entropy(modified_reduce(rho, apparatus).rho_hat) - von_neumann_entropy(luders_dephase(rho, apparatus))


def _sector_state_a(basis: np.ndarray, kind: str, rng) -> np.ndarray:
    d = basis.shape[1]
    if kind == "uniform":
        small = np.eye(d, dtype=complex) / d
    elif kind == "pure":
        small = random_density_matrix(d, rng, rank=1)
    else:
        small = random_density_matrix(d, rng)
    return basis @ small @ dagger(basis)


def _pure_embedding(rep: EquivalenceClassRep, rng):
    """
    Stato puro |Ψ> = Σ_i √w_i e^{iφ_i} |Φ_i> con |Φ_i> = Σ_k √p_k |a_k>|b_k>.

    Richiede rank(ρ_i^B) ≤ d_i^A in ogni settore occupato; altrimenti None.
    """
    apparatus = rep.apparatus
    psi = np.zeros(apparatus.space.dim, dtype=complex)
    for s in rep.occupied_sectors():
        values, vectors = np.linalg.eigh(s.state_b.matrix)
        keep = values > EMBEDDING_RANK_THRESHOLD
        basis = apparatus.sector_bases[s.index]
        if np.count_nonzero(keep) > basis.shape[1]:
            return None
        rotated = basis @ random_unitary(basis.shape[1], rng)
        phi = np.zeros(apparatus.space.dim, dtype=complex)
        for k, (p, b) in enumerate(zip(values[keep], vectors[:, keep].T)):
            phi += np.sqrt(p) * np.kron(rotated[:, k], b)
        psi += np.sqrt(s.weight) * np.exp(2j * np.pi * rng.random()) * phi
    return np.outer(psi, psi.conj())


def _sector_unitary(apparatus: ApparatusProjectorSet, rng) -> np.ndarray:
    """U = (⊕_i U_i) ⊗ 1_B con U_i unitaria di Haar su M_i^A."""
    u_a = sum(basis @ random_unitary(basis.shape[1], rng) @ dagger(basis) for basis in apparatus.sector_bases)
    return np.kron(u_a, np.eye(apparatus.space.dim_b))


def sample_equivalence_class(rep: EquivalenceClassRep, n: int, seed: int) -> List[DensityOperator]:
    """
    Campiona n membri della classe [ρ] rappresentata da rep.

    Ogni campione combina: stati di A scelti a caso nei settori (misti, puri
    o uniformi), un eventuale stato puro globale con coerenze tra settori,
    una unitaria interna ai settori che agisce solo su A. Ogni campione è
    verificato con equivalent_modified.

    :raises PreconditionError: se n < 1.
    :raises InvariantViolationError: se un campione esce dalla classe.
    """
    if n < 1:
        raise PreconditionError(f"numero di campioni non valido: {n}")
    apparatus = rep.apparatus
    space = apparatus.space
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n):
        block = np.zeros((space.dim, space.dim), dtype=complex)
        for s in rep.occupied_sectors():
            kind = SECTOR_STATE_KINDS[int(rng.integers(len(SECTOR_STATE_KINDS)))]
            tau = _sector_state_a(apparatus.sector_bases[s.index], kind, rng)
            block += s.weight * np.kron(tau, s.state_b.matrix)
        sigma = block
        embedding = _pure_embedding(rep, rng) if rng.random() < 0.5 else None
        if embedding is not None:
            mix = rng.random()
            sigma = mix * block + (1.0 - mix) * embedding
        if rng.random() < 0.5:
            u = _sector_unitary(apparatus, rng)
            sigma = u @ sigma @ dagger(u)
        candidate = DensityOperator(sigma / np.real(np.trace(sigma)), space)
        equivalent, residual = equivalent_modified(candidate, rep.rho_hat, apparatus, SAMPLE_EQUIVALENCE_TOLERANCE)
        if not equivalent:
            raise InvariantViolationError(
                "campione fuori dalla classe di equivalenza",
                [Violation("sample_equivalence", "tr_A(P_i σ) ≠ tr_A(P_i ρ̂)", residual)],
            )
        samples.append(candidate)
    logging.debug(f"Campionati {n} membri della classe di equivalenza (seed={seed}).")
    return samples


def verify_max_entropy(rep: EquivalenceClassRep, n: int, seed: int, tol=MAX_ENTROPY_TOLERANCE) -> MaxEntropyReport:
    """
    Verifica S(σ) ≤ S(ρ̂) + tol per n campioni σ ∈ [ρ].

    :raises PreconditionError: se n < 1.
    :raises InvariantViolationError: con il controesempio serializzato nel payload.
    """
    if n < 1:
        raise PreconditionError(f"numero di campioni non valido: {n}")
    s_hat = von_neumann_entropy(rep.rho_hat)
    max_entropy, max_residual = -np.inf, 0.0
    for k, sigma in enumerate(sample_equivalence_class(rep, n, seed)):
        s_sigma = von_neumann_entropy(sigma)
        max_residual = max(max_residual, equivalent_modified(sigma, rep.rho_hat, rep.apparatus)[1])
        if s_sigma > s_hat + tol:
            logging.error(f"Controesempio alla massima entropia: campione {k}, S={s_sigma:.12g} > {s_hat:.12g}")
            raise InvariantViolationError(
                "trovato un membro della classe con entropia maggiore di ρ̂",
                [Violation("max_entropy", f"campione {k}", s_sigma - s_hat)],
                payload={"sample_index": k, "entropy": s_sigma, "sigma": matrix_to_pairs(sigma.matrix)},
            )
        max_entropy = max(max_entropy, s_sigma)
    return MaxEntropyReport(n, seed, s_hat, float(max_entropy), float(s_hat - max_entropy), max_residual)
