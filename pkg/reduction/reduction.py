"""
Canali di riduzione dello stato dopo una misura.

- Lüders: Σ_i P_i ρ P_i (eliminazione dell'interferenza) e selezione di un esito.
- Modificata: rappresentante canonico della classe di equivalenza
  ρ̂ = Σ_i w_i (P_i^A / d_i^A) ⊗ ρ_i^B, con le due relazioni di equivalenza.
- DLP: ricostruzione per purificazione degli stati condizionati.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from core.errors import DimensionError, ImpossibleOutcomeError, PreconditionError, Violation
from core.tensor_space import frobenius_norm, partial_trace_a, spectral_decompose
from states.states import (
    UNOCCUPIED_WEIGHT,
    ApparatusProjectorSet,
    DensityOperator,
    ProjectorSet,
    PureState,
    conditional_states,
)

EQUIVALENCE_TOLERANCE = 1e-9
WEIGHT_SUM_TOLERANCE = 1e-9
RECONSTRUCTION_TOLERANCE = 1e-10
COMMUTATION_TOLERANCE = 1e-9
IDEMPOTENCE_TOLERANCE = 1e-10
PURITY_TOLERANCE = 1e-9

CHANNELS = ("luders", "modified", "dlp")
DLP_RECONSTRUCTION = "dominant-eigenvector purification"

ProjectorsLike = Union[ProjectorSet, ApparatusProjectorSet]


@dataclass(frozen=True, eq=False)
class SectorComponent:
    """
    Contributo di un settore al rappresentante ρ̂.

    Attributi:
    -----------
    index (int): Indice del settore.
    label (str): Etichetta del settore.
    weight (float): w_i = tr(ρ P_i).
    state_a (DensityOperator): ρ_i^A = P_i^A / d_i^A.
    state_b (DensityOperator | None): ρ_i^B, None per i settori non occupati.
    """
    index: int
    label: str
    weight: float
    state_a: DensityOperator
    state_b: Optional[DensityOperator]

    @property
    def occupied(self) -> bool:
        return self.state_b is not None

    def product(self) -> np.ndarray:
        """Operatore ρ_i^A ⊗ ρ_i^B (normalizzato)."""
        return np.kron(self.state_a.matrix, self.state_b.matrix)


@dataclass(frozen=True, eq=False)
class EquivalenceClassRep:
    """
    Rappresentante canonico della classe di equivalenza [ρ].

    Attributi:
    -----------
    apparatus (ApparatusProjectorSet): Proiettori dell'apparato.
    sectors (tuple): SectorComponent per ogni settore (occupati e non).
    rho_hat (DensityOperator): ρ̂ = Σ_i w_i ρ_i^A ⊗ ρ_i^B.
    unoccupied (tuple): Indici dei settori con w_i ≤ ε_w.
    """
    apparatus: ApparatusProjectorSet
    sectors: Tuple[SectorComponent, ...]
    rho_hat: DensityOperator
    unoccupied: Tuple[int, ...]

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.sectors])

    def occupied_sectors(self) -> List[SectorComponent]:
        return [s for s in self.sectors if s.occupied]

    def check_invariants(self) -> Dict[str, float]:
        """Residui degli invarianti: somma dei pesi, ricostruzione, commutazione, idempotenza."""
        assembled = sum((s.weight * s.product() for s in self.occupied_sectors()),
                        np.zeros_like(self.rho_hat.matrix))
        rho_hat = self.rho_hat.matrix
        residuals = {
            "weight_sum": abs(float(np.sum(self.weights)) - 1.0),
            "reconstruction": frobenius_norm(rho_hat - assembled),
            "commutation": max(frobenius_norm(rho_hat @ p - p @ rho_hat) for p in self.apparatus.projectors),
            "idempotence": frobenius_norm(modified_reduce(self.rho_hat, self.apparatus).rho_hat.matrix - rho_hat),
        }
        return residuals

    def violations(self) -> List[Violation]:
        limits = {
            "weight_sum": WEIGHT_SUM_TOLERANCE,
            "reconstruction": RECONSTRUCTION_TOLERANCE,
            "commutation": COMMUTATION_TOLERANCE,
            "idempotence": IDEMPOTENCE_TOLERANCE,
        }
        return [
            Violation(name, f"residuo oltre {limits[name]:.0e}", value)
            for name, value in self.check_invariants().items() if value > limits[name]
        ]


@dataclass(frozen=True, eq=False)
class DlpReduction:
    """
    Riduzione "diretta": stati condizionati sostituiti dal loro autovettore dominante.

    Attributi:
    -----------
    rep (EquivalenceClassRep): Rappresentante con ρ_i^B puri.
    purity_deficits (dict): 1 − tr((ρ_i^B)²) degli stati condizionati originali, per settore occupato.
    reconstruction (str): Etichetta della prescrizione usata.
    """
    rep: EquivalenceClassRep
    purity_deficits: Dict[int, float]
    reconstruction: str = DLP_RECONSTRUCTION


def _density(rho, space=None) -> DensityOperator:
    if isinstance(rho, DensityOperator):
        return rho
    if isinstance(rho, PureState):
        return rho.density()
    return DensityOperator(rho, space)


def _projectors(projset: ProjectorsLike, dim: int) -> Tuple[np.ndarray, ...]:
    if projset.projectors[0].shape != (dim, dim):
        raise DimensionError(f"proiettori di dimensione {projset.projectors[0].shape[0]} per uno stato di dimensione {dim}")
    return projset.projectors


def luders_dephase(rho, projset: ProjectorsLike) -> DensityOperator:
    """
    Stadio di eliminazione dell'interferenza: ρ̂_L = Σ_i P_i ρ P_i.

    :param rho: Operatore densità.
    :param projset: Insieme validato di proiettori (anche dell'apparato).
    :return: DensityOperator nello stesso spazio di ρ.
    """
    rho = _density(rho)
    m = rho.matrix
    dephased = sum(p @ m @ p for p in _projectors(projset, rho.dim))
    logging.debug(f"Defasamento di Lüders applicato con {len(projset.projectors)} proiettori.")
    return DensityOperator(dephased, rho.space)


def luders_select(rho, projset: ProjectorsLike, i: int, unoccupied_weight=UNOCCUPIED_WEIGHT) -> Tuple[float, DensityOperator]:
    """
    Selezione dell'esito i: (w_i, P_i ρ P_i / w_i).

    :raises ImpossibleOutcomeError: se w_i ≤ ε_w.
    """
    rho = _density(rho)
    projectors = _projectors(projset, rho.dim)
    if not 0 <= i < len(projectors):
        raise PreconditionError(f"esito {i} inesistente")
    p = projectors[i]
    projected = p @ rho.matrix @ p
    weight = float(np.real(np.trace(projected)))
    if weight <= unoccupied_weight:
        raise ImpossibleOutcomeError(f"esito {i} impossibile: w={weight:.3e}", weight)
    return weight, DensityOperator(projected / weight, rho.space)


def _assemble(apparatus: ApparatusProjectorSet, weights, states_b) -> EquivalenceClassRep:
    sectors, unoccupied = [], []
    rho_hat = np.zeros((apparatus.space.dim, apparatus.space.dim), dtype=complex)
    for i, (weight, state_b) in enumerate(zip(weights, states_b)):
        state_a = DensityOperator(apparatus.sector_state_a(i))
        component = SectorComponent(i, apparatus.labels[i], weight, state_a, state_b)
        if state_b is None:
            unoccupied.append(i)
        else:
            rho_hat += weight * component.product()
        sectors.append(component)
    return EquivalenceClassRep(apparatus, tuple(sectors), DensityOperator(rho_hat, apparatus.space), tuple(unoccupied))


def modified_reduce(rho, apparatus: ApparatusProjectorSet, unoccupied_weight=UNOCCUPIED_WEIGHT) -> EquivalenceClassRep:
    """
    Riduzione modificata: ρ̂ = Σ_i w_i (P_i^A / d_i^A) ⊗ ρ_i^B.

    Lo stato di A in ogni settore viene sostituito dallo stato di massima
    entropia in M_i^A; lo stato condizionato di B è conservato.

    :param rho: Operatore densità su AB.
    :param apparatus: Proiettori dell'apparato.
    :return: EquivalenceClassRep.
    """
    rho = _density(rho, apparatus.space)
    apparatus.space.check_operator(rho.matrix, "rho")
    conditionals = conditional_states(rho, apparatus, unoccupied_weight)
    for c in conditionals:
        if not c.occupied:
            logging.debug(f"Settore {apparatus.labels[c.index]} non occupato (w={c.weight:.3e}).")
    rep = _assemble(apparatus, [c.weight for c in conditionals], [c.state for c in conditionals])
    logging.debug(f"Riduzione modificata: pesi {[round(c.weight, 12) for c in conditionals]}")
    return rep


def modified_select(rep: EquivalenceClassRep, i: int) -> Tuple[float, DensityOperator]:
    """Selezione dell'esito i dopo la riduzione modificata: (w_i, ρ_i^A ⊗ ρ_i^B)."""
    if not 0 <= i < len(rep.sectors):
        raise PreconditionError(f"settore {i} inesistente")
    component = rep.sectors[i]
    if not component.occupied:
        raise ImpossibleOutcomeError(f"settore {component.label} non occupato: w={component.weight:.3e}", component.weight)
    return component.weight, DensityOperator(component.product(), rep.apparatus.space)


def equivalent_standard(sigma, rho, projset: ProjectorsLike, tol=EQUIVALENCE_TOLERANCE) -> Tuple[bool, float]:
    """
    Equivalenza σ ∼ ρ rispetto all'algebra generata dai proiettori.

    tr(Pσ) = tr(Pρ) per ogni proiettore P dell'algebra equivale a
    P_i σ P_i = P_i ρ P_i per ogni i.

    :return: (esito, massima differenza tra blocchi in norma di Frobenius).
    """
    sigma, rho = _density(sigma), _density(rho)
    if sigma.dim != rho.dim:
        raise DimensionError(f"stati di dimensioni diverse: {sigma.dim} e {rho.dim}")
    residual = max(frobenius_norm(p @ (sigma.matrix - rho.matrix) @ p) for p in _projectors(projset, rho.dim))
    return residual <= tol, residual


def equivalent_modified(sigma, rho, apparatus: ApparatusProjectorSet, tol=EQUIVALENCE_TOLERANCE) -> Tuple[bool, float]:
    """
    Equivalenza modificata: tr_A(P_i σ) = tr_A(P_i ρ) per ogni i.

    :return: (esito, massima differenza di Frobenius tra gli operatori su B).
    """
    space = apparatus.space
    sigma, rho = _density(sigma, space), _density(rho, space)
    difference = space.check_operator(sigma.matrix, "sigma") - space.check_operator(rho.matrix, "rho")
    residual = max(frobenius_norm(partial_trace_a(p @ difference, space)) for p in apparatus.projectors)
    return residual <= tol, residual


def representatives_equal(first: DensityOperator, second: DensityOperator, tol=EQUIVALENCE_TOLERANCE) -> Tuple[bool, float]:
    """Uguaglianza di rappresentanti con tolleranza relativa tol·(1 + ‖ρ̂‖_F)."""
    residual = frobenius_norm(first.matrix - second.matrix)
    return residual <= tol * (1.0 + frobenius_norm(first.matrix)), residual


def _pure_vector(state, space) -> np.ndarray:
    if isinstance(state, PureState):
        return state.vector
    rho = _density(state, space)
    deficit = 1.0 - rho.purity()
    if deficit > PURITY_TOLERANCE:
        raise PreconditionError(f"la riduzione DLP richiede uno stato puro (1 − tr ρ² = {deficit:.3e})")
    return spectral_decompose(rho.matrix).eigenvectors[:, 0]


def dlp_reduce(psi, apparatus: ApparatusProjectorSet, unoccupied_weight=UNOCCUPIED_WEIGHT) -> DlpReduction:
    """
    Variante "diretta": ogni ρ_i^B è sostituito dal proprio autovettore dominante |χ_i>.

    :param psi: PureState o DensityOperator puro.
    :param apparatus: Proiettori dell'apparato.
    :return: DlpReduction con i deficit di purezza 1 − tr((ρ_i^B)²).
    :raises PreconditionError: se lo stato globale non è puro.
    """
    space = apparatus.space
    vector = _pure_vector(psi, space)
    if vector.shape[0] != space.dim:
        raise DimensionError(f"stato di dimensione {vector.shape[0]} per lo spazio {space}")
    rho = DensityOperator(np.outer(vector, vector.conj()), space)
    conditionals = conditional_states(rho, apparatus, unoccupied_weight)
    states_b, deficits = [], {}
    for c in conditionals:
        if not c.occupied:
            states_b.append(None)
            continue
        chi = spectral_decompose(c.state.matrix).eigenvectors[:, 0]
        states_b.append(DensityOperator(np.outer(chi, chi.conj())))
        deficits[c.index] = max(0.0, 1.0 - c.state.purity())
    rep = _assemble(apparatus, [c.weight for c in conditionals], states_b)
    logging.debug(f"Riduzione DLP: deficit di purezza {deficits}")
    return DlpReduction(rep, deficits)


def reduce_with_channel(rho, apparatus: ApparatusProjectorSet, channel: str) -> DensityOperator:
    """
    Applica il canale richiesto e restituisce lo stato ridotto.

    :param channel: "luders", "modified" oppure "dlp".
    """
    if channel == "luders":
        return luders_dephase(rho, apparatus)
    if channel == "modified":
        return modified_reduce(rho, apparatus).rho_hat
    if channel == "dlp":
        return dlp_reduce(rho, apparatus).rep.rho_hat
    raise PreconditionError(f"canale di riduzione sconosciuto: {channel!r} (attesi {', '.join(CHANNELS)})")


def block_commutator_residual(rho: DensityOperator, projset: ProjectorsLike) -> float:
    """Massima norma di [ρ, P_i]: nulla se e solo se ρ è invariato dal defasamento."""
    m = rho.matrix
    return max(frobenius_norm(m @ p - p @ m) for p in _projectors(projset, rho.dim))


def check_channel_output(rho_out: DensityOperator, tol=1e-9) -> List[Violation]:
    """Verifica traccia e positività dello stato prodotto da un canale."""
    violations = []
    trace = float(np.real(np.trace(rho_out.matrix)))
    if abs(trace - 1.0) > tol:
        violations.append(Violation("trace", "traccia non conservata", abs(trace - 1.0)))
    lowest = float(rho_out.eigenvalues()[0])
    if lowest < -tol:
        violations.append(Violation("positivity", "autovalore negativo", -lowest))
    return violations
