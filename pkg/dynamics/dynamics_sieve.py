"""
Dinamica unitaria di sistema + apparato + ambiente, tempi di decoerenza,
disuguaglianza dei tempi caratteristici, setaccio di predicibilità e
traiettorie di entropia con riduzioni ripetute.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property, partial, reduce
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import DimensionError, PreconditionError, Violation
from core.tensor_space import (
    BipartiteSpace,
    SpectralDecomposition,
    dagger,
    frobenius_norm,
    partial_trace_factor,
    require_hermitian,
    spectral_decompose,
)
from reduction.entropy_analysis import von_neumann_entropy
from reduction.reduction import luders_dephase, modified_reduce
from states.states import ApparatusProjectorSet, DensityOperator, lift_apparatus_projectors

DIMENSION_CAP = 64
DECOHERENCE_THRESHOLD = float(np.exp(-1.0))
DECOHERENCE_PERSISTENCE = 3
MIN_INITIAL_INTERFERENCE = 0.01
MUCH_LESS_FACTOR = 10.0
TIMESCALE_SLACK = 1e-12
SIEVE_TIE_TOLERANCE = 1e-9
MONOTONE_TOLERANCE = 1e-8
NORM_FLOOR = 1e-15

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class MeasurementModelConfig:
    """
    Parametri del modello a puntatore.

    Attributi:
    -----------
    system_qubits (int): Qubit del sistema misurato (B).
    pointer_qubits (int): Qubit del puntatore dell'apparato (parte di A).
    environment_qubits (int): Qubit dell'ambiente (parte di A).
    g (float): Accoppiamento puntatore-sistema.
    g_env (float): Accoppiamento puntatore-ambiente.
    pointer_angle (float): θ dello stato iniziale cos θ|0> + sin θ|1> di ogni qubit del puntatore.
    t_max (float): Estremo della griglia temporale.
    time_points (int): Numero di punti della griglia.
    """
    system_qubits: int = 1
    pointer_qubits: int = 2
    environment_qubits: int = 2
    g: float = 1.0
    g_env: float = 4.0
    pointer_angle: float = np.pi / 16
    t_max: float = 4.0
    time_points: int = 401

    @classmethod
    def from_dict(cls, data: Dict) -> "MeasurementModelConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)

    def as_dict(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @property
    def dim_pointer(self) -> int:
        return 2 ** self.pointer_qubits

    @property
    def dim_environment(self) -> int:
        return 2 ** self.environment_qubits

    @property
    def space(self) -> BipartiteSpace:
        return BipartiteSpace(self.dim_pointer * self.dim_environment, 2 ** self.system_qubits)


@dataclass(frozen=True, eq=False)
class EvolutionSpec:
    """
    Sistema chiuso AB con hamiltoniana, stato iniziale e griglia temporale.

    Attributi:
    -----------
    space (BipartiteSpace): Spazio bipartito.
    hamiltonian (np.ndarray): Hamiltoniana hermitiana (ħ = 1).
    initial_state (DensityOperator): Stato a t = 0.
    times (np.ndarray): Griglia strettamente crescente che parte da 0.
    environment_dim (int): Dimensione del fattore d'ambiente in coda ad A (1 se assente).
    metadata (dict): Parametri del modello di provenienza.
    dimension_cap (int): Limite su dim_a·dim_b (setting DIMENSION_CAP).
    """
    space: BipartiteSpace
    hamiltonian: np.ndarray
    initial_state: DensityOperator
    times: np.ndarray
    environment_dim: int = 1
    metadata: Dict = field(default_factory=dict)
    dimension_cap: int = DIMENSION_CAP

    def __post_init__(self):
        if self.space.dim > self.dimension_cap:
            raise DimensionError(f"dimensione totale {self.space.dim} oltre il limite {self.dimension_cap}")
        h = require_hermitian(self.space.check_operator(self.hamiltonian, "H"), "H")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)
        self.space.check_operator(self.initial_state.matrix, "rho(0)")
        if self.initial_state.space is None:
            object.__setattr__(self, "initial_state", self.initial_state.with_space(self.space))
        times = np.asarray(self.times, dtype=float).reshape(-1)
        if times.size == 0 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise PreconditionError("la griglia temporale deve partire da 0 ed essere strettamente crescente")
        object.__setattr__(self, "times", times)
        if self.environment_dim < 1 or self.space.dim_a % self.environment_dim:
            raise DimensionError(f"dimensione d'ambiente {self.environment_dim} incompatibile con dim_a={self.space.dim_a}")

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return spectral_decompose(self.hamiltonian)


@dataclass(frozen=True)
class DecoherenceEstimate:
    tau_dec: float
    unbounded: bool
    initial_norm: float
    threshold: float
    persistence: int
    times: Tuple[float, ...]
    curve: Tuple[float, ...]

    def as_dict(self):
        return {
            "tau_dec": self.tau_dec,
            "unbounded": self.unbounded,
            "initial_norm": self.initial_norm,
            "threshold": self.threshold,
            "persistence": self.persistence,
            "curve": [{"time": t, "interference_norm": v} for t, v in zip(self.times, self.curve)],
        }


@dataclass(frozen=True)
class TimescaleReport:
    """
    Verifica di τ_dec ≪ Δt ≪ τ_P con "≪" reso come fattore `factor`.

    I rapporti valgono inf quando il tempo al numeratore è illimitato.
    """
    tau_dec: float
    delta_t: float
    tau_p: float
    factor: float
    decoherence_ratio: float
    stability_ratio: float
    decoherence_ok: bool
    stability_ok: bool
    unbounded_tau_dec: bool
    unbounded_tau_p: bool

    @property
    def passed(self) -> bool:
        return self.decoherence_ok and self.stability_ok

    def as_dict(self):
        return {
            "tau_dec": self.tau_dec,
            "delta_t": self.delta_t,
            "tau_p": self.tau_p,
            "factor": self.factor,
            "delta_t_over_tau_dec": self.decoherence_ratio,
            "tau_p_over_delta_t": self.stability_ratio,
            "decoherence_ok": self.decoherence_ok,
            "stability_ok": self.stability_ok,
            "unbounded_tau_dec": self.unbounded_tau_dec,
            "unbounded_tau_p": self.unbounded_tau_p,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class SieveReport:
    """
    Esito del setaccio: entropia generata da ogni candidato in Δt.

    Attributi:
    -----------
    candidate_ids (tuple): Identificativi dei candidati.
    entropies (tuple): S(ρ̂(Δt)) − S(ρ(0)) per candidato, in nats.
    winner (int): Indice del candidato con entropia minima (il più basso in caso di parità).
    tie (bool): True se un altro candidato è entro la tolleranza dal minimo.
    delta_t (float): Intervallo tra le riduzioni.
    """
    candidate_ids: Tuple[str, ...]
    entropies: Tuple[float, ...]
    winner: int
    tie: bool
    delta_t: float

    @property
    def winner_id(self) -> str:
        return self.candidate_ids[self.winner]

    def rows(self) -> List[Tuple]:
        return [
            (cid, s, int(k == self.winner), int(self.tie))
            for k, (cid, s) in enumerate(zip(self.candidate_ids, self.entropies))
        ]

    def as_dict(self):
        return {
            "delta_t": self.delta_t,
            "winner": self.winner,
            "winner_id": self.winner_id,
            "tie": self.tie,
            "candidates": [{"id": cid, "entropy_generated_nats": s} for cid, s in zip(self.candidate_ids, self.entropies)],
        }


@dataclass(frozen=True)
class EntropyTrajectory:
    """
    Traiettoria di una sequenza di riduzioni ripetute.

    La riga 0 registra lo stato iniziale non ridotto; la riga k registra lo
    stato evoluto per Δt, prima della riduzione del passo k. L'entropia del
    canale applicato è non decrescente dalla riga 1 in poi e non scende sotto S(ρ(0)).
    """
    channel: str
    delta_t: float
    times: Tuple[float, ...]
    s_rho: Tuple[float, ...]
    s_luders: Tuple[float, ...]
    s_modified: Tuple[float, ...]
    interference: Tuple[float, ...]
    winners: Tuple[int, ...] = ()

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def rows(self) -> List[Tuple]:
        return [
            (k, self.times[k], self.s_rho[k], self.s_luders[k], self.s_modified[k], self.interference[k])
            for k in range(len(self.times))
        ]

    def violations(self, tol=MONOTONE_TOLERANCE) -> List[Violation]:
        violations = []
        applied = self.s_modified if self.channel == "modified" else self.s_luders
        # la riga 0 non è ridotta: il riferimento del passo 1 è S(ρ(0))
        for k in range(1, len(applied)):
            previous = self.s_rho[0] if k == 1 else applied[k - 1]
            if applied[k] < previous - tol:
                violations.append(Violation("monotonicity", f"entropia in calo al passo {k}", previous - applied[k]))
        for k, (s_l, s_m) in enumerate(zip(self.s_luders, self.s_modified)):
            if s_l > s_m + tol:
                violations.append(Violation("ordering", f"S_luders > S_modified al passo {k}", s_l - s_m))
        return violations

    def as_dict(self):
        return {
            "channel": self.channel,
            "delta_t": self.delta_t,
            "steps": self.steps,
            "rows": [
                {"step": k, "time": t, "S_rho": a, "S_luders": b, "S_modified": c, "interference_norm": d}
                for k, t, a, b, c, d in self.rows()
            ],
            "winners": list(self.winners),
        }


@dataclass(frozen=True)
class StabilityReport:
    """Proxy di τ_P: primo passo in cui il vincitore del setaccio cambia."""
    tau_p: float
    unbounded: bool
    change_step: Optional[int]
    winners: Tuple[int, ...]

    def as_dict(self):
        return {"tau_p": self.tau_p, "unbounded": self.unbounded, "change_step": self.change_step,
                "winners": list(self.winners)}


def _unitary(hamiltonian, t: float) -> np.ndarray:
    spectrum = hamiltonian if isinstance(hamiltonian, SpectralDecomposition) else spectral_decompose(hamiltonian)
    return spectrum.apply_function(lambda values: np.exp(-1j * values * t))


def evolve(rho, hamiltonian, t: float) -> DensityOperator:
    """
    ρ(t) = e^{−iHt} ρ e^{iHt} tramite la decomposizione spettrale di H.

    :param hamiltonian: Matrice hermitiana o SpectralDecomposition già calcolata.
    """
    rho = rho if isinstance(rho, DensityOperator) else DensityOperator(rho)
    u = _unitary(hamiltonian, float(t))
    if u.shape != rho.matrix.shape:
        raise DimensionError(f"hamiltoniana {u.shape} incompatibile con rho {rho.matrix.shape}")
    return DensityOperator(u @ rho.matrix @ dagger(u), rho.space)


def _embed(single: np.ndarray, position: int, n_qubits: int) -> np.ndarray:
    factors = [np.eye(2, dtype=complex)] * n_qubits
    factors[position] = single
    return reduce(np.kron, factors)


def build_measurement_model(config: MeasurementModelConfig, dimension_cap: int = DIMENSION_CAP) -> EvolutionSpec:
    """
    Modello a puntatore con ordine globale puntatore ⊗ ambiente ⊗ sistema.

    H = g·(Σ_k Z_pk) ⊗ (Σ_q Z_sq) + g_env·Σ_j c_j Z_p(j mod P) X_ej, con
    c_j = 1/(1 + ⌊j/P⌋). Tutti i termini commutano e sono diagonali nella
    base z del puntatore.

    :param dimension_cap: Limite su dim_a·dim_b.
    :raises DimensionError: se la dimensione totale supera il limite.
    """
    if min(config.system_qubits, config.pointer_qubits) < 1 or config.environment_qubits < 0:
        raise DimensionError("servono almeno un qubit di sistema e uno di puntatore")
    n_p, n_e, n_s = config.pointer_qubits, config.environment_qubits, config.system_qubits
    n = n_p + n_e + n_s
    if 2 ** n > dimension_cap:
        raise DimensionError(f"dimensione totale {2 ** n} oltre il limite {dimension_cap}")
    pointer_z = sum(_embed(PAULI_Z, k, n) for k in range(n_p))
    system_z = sum(_embed(PAULI_Z, n_p + n_e + q, n) for q in range(n_s))
    hamiltonian = config.g * pointer_z @ system_z
    for j in range(n_e):
        coupling = 1.0 / (1 + j // n_p)
        hamiltonian = hamiltonian + config.g_env * coupling * _embed(PAULI_Z, j % n_p, n) @ _embed(PAULI_X, n_p + j, n)
    pointer = np.array([np.cos(config.pointer_angle), np.sin(config.pointer_angle)], dtype=complex)
    zero = np.array([1, 0], dtype=complex)
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    psi = reduce(np.kron, [pointer] * n_p + [zero] * n_e + [plus] * n_s)
    space = config.space
    spec = EvolutionSpec(
        space=space,
        hamiltonian=hamiltonian,
        initial_state=DensityOperator(np.outer(psi, psi.conj()), space),
        times=np.linspace(0.0, config.t_max, config.time_points),
        environment_dim=config.dim_environment,
        metadata={"model": config},
        dimension_cap=dimension_cap,
    )
    logging.info(f"Modello di misura costruito: dim_a={space.dim_a}, dim_b={space.dim_b}, g={config.g}, g_env={config.g_env}")
    return spec


def pointer_sectors(model, basis: str = "z") -> ApparatusProjectorSet:
    """
    Settori dell'apparato: uno per configurazione del puntatore nella base
    richiesta ("z" o "x"), tensorizzata con l'intero ambiente.
    """
    config = model.metadata["model"] if isinstance(model, EvolutionSpec) else model
    if basis not in ("z", "x"):
        raise PreconditionError(f"base del puntatore sconosciuta: {basis!r}")
    local = np.eye(2, dtype=complex) if basis == "z" else HADAMARD
    pointer_basis = reduce(np.kron, [local] * config.pointer_qubits)
    environment = np.eye(config.dim_environment, dtype=complex)
    groups, labels = [], []
    for c in range(config.dim_pointer):
        groups.append([np.kron(pointer_basis[:, c], environment[:, e]) for e in range(config.dim_environment)])
        labels.append(f"{basis}:{c:0{config.pointer_qubits}b}")
    return lift_apparatus_projectors(config.space, groups, labels)


def interference_norm(rho, projset, environment_dim: int = 1) -> float:
    """
    ‖ρ − Σ_i P_i ρ P_i‖_F / max(‖ρ‖_F, ε).

    Con environment_dim = k > 1 il fattore finale di A di dimensione k viene
    tracciato da entrambi gli operatori prima di calcolare le norme.
    """
    rho = rho if isinstance(rho, DensityOperator) else DensityOperator(rho)
    m = rho.matrix
    residual = m - luders_dephase(rho, projset).matrix
    if environment_dim > 1:
        if not isinstance(projset, ApparatusProjectorSet):
            raise PreconditionError("la traccia sull'ambiente richiede i proiettori dell'apparato")
        space = projset.space
        if space.dim_a % environment_dim:
            raise DimensionError(f"ambiente di dimensione {environment_dim} incompatibile con dim_a={space.dim_a}")
        dims = [space.dim_a // environment_dim, environment_dim, space.dim_b]
        residual = partial_trace_factor(residual, dims, 1)
        m = partial_trace_factor(m, dims, 1)
    return frobenius_norm(residual) / max(frobenius_norm(m), NORM_FLOOR)


def estimate_decoherence_time(spec: EvolutionSpec, apparatus: ApparatusProjectorSet,
                              threshold=DECOHERENCE_THRESHOLD, persistence=DECOHERENCE_PERSISTENCE) -> DecoherenceEstimate:
    """
    Primo istante in cui la norma d'interferenza scende sotto threshold volte
    il valore iniziale e vi resta per `persistence` punti consecutivi.

    :raises PreconditionError: se la norma iniziale non supera 0.01.
    """
    initial = interference_norm(spec.initial_state, apparatus, spec.environment_dim)
    if initial <= MIN_INITIAL_INTERFERENCE:
        raise PreconditionError(f"interferenza iniziale {initial:.3e} troppo bassa: nulla da far decadere")
    curve = [interference_norm(evolve(spec.initial_state, spec.spectrum, t), apparatus, spec.environment_dim)
             for t in spec.times]
    below = np.asarray(curve) / initial <= threshold
    tau_dec = float("inf")
    for k in range(len(below) - persistence + 1):
        if np.all(below[k:k + persistence]):
            tau_dec = float(spec.times[k])
            break
    unbounded = not np.isfinite(tau_dec)
    if unbounded:
        logging.warning("L'interferenza non decade entro la griglia temporale: τ_dec illimitato.")
    else:
        logging.info(f"Tempo di decoerenza stimato: {tau_dec:.6g}")
    return DecoherenceEstimate(tau_dec, unbounded, initial, threshold, persistence,
                               tuple(float(t) for t in spec.times), tuple(float(v) for v in curve))


def check_timescales(tau_dec: float, delta_t: float, tau_p: float, factor: float = MUCH_LESS_FACTOR) -> TimescaleReport:
    """
    Verifica Δt ≥ factor·τ_dec e τ_P ≥ factor·Δt.

    τ_dec o τ_P possono valere inf (illimitati); un τ_dec illimitato fa
    fallire la prima disuguaglianza.
    """
    if not (tau_dec > 0 and delta_t > 0 and tau_p > 0) or not np.isfinite(delta_t):
        raise PreconditionError(f"tempi non validi: τ_dec={tau_dec}, Δt={delta_t}, τ_P={tau_p}")
    unbounded_dec = not np.isfinite(tau_dec)
    unbounded_p = not np.isfinite(tau_p)
    decoherence_ok = (not unbounded_dec) and delta_t >= factor * tau_dec * (1.0 - TIMESCALE_SLACK)
    stability_ok = unbounded_p or tau_p >= factor * delta_t * (1.0 - TIMESCALE_SLACK)
    report = TimescaleReport(
        tau_dec=float(tau_dec),
        delta_t=float(delta_t),
        tau_p=float(tau_p),
        factor=float(factor),
        decoherence_ratio=0.0 if unbounded_dec else delta_t / tau_dec,
        stability_ratio=float("inf") if unbounded_p else tau_p / delta_t,
        decoherence_ok=bool(decoherence_ok),
        stability_ok=bool(stability_ok),
        unbounded_tau_dec=unbounded_dec,
        unbounded_tau_p=unbounded_p,
    )
    if not report.passed:
        logging.warning(f"Disuguaglianza dei tempi caratteristici non soddisfatta: {report.as_dict()}")
    return report


def _generated_entropy(candidate: ApparatusProjectorSet, evolved: DensityOperator, s_initial: float) -> float:
    return von_neumann_entropy(modified_reduce(evolved, candidate).rho_hat) - s_initial


def sieve(spec: EvolutionSpec, candidates: Sequence[ApparatusProjectorSet], delta_t: float, rho=None,
          candidate_ids: Sequence[str] = None, mapper: Callable = map, tie_tol=SIEVE_TIE_TOLERANCE) -> SieveReport:
    """
    Setaccio di predicibilità modificato: vince il candidato che genera
    meno entropia nell'intervallo Δt.

    :param rho: Stato di partenza (default: stato iniziale della spec).
    :param mapper: Funzione con la semantica di map, usata per valutare i candidati.
    :raises PreconditionError: se la lista dei candidati è vuota.
    """
    if not candidates:
        raise PreconditionError("il setaccio richiede almeno un candidato")
    for k, candidate in enumerate(candidates):
        if (candidate.space.dim_a, candidate.space.dim_b) != (spec.space.dim_a, spec.space.dim_b):
            raise DimensionError(f"candidato {k} definito su {candidate.space}, atteso {spec.space}")
    if delta_t < 0:
        raise PreconditionError(f"Δt negativo: {delta_t}")
    start = spec.initial_state if rho is None else rho
    evolved = evolve(start, spec.spectrum, delta_t)
    evaluate = partial(_generated_entropy, evolved=evolved, s_initial=von_neumann_entropy(start))
    entropies = tuple(float(s) for s in mapper(evaluate, candidates))
    winner = int(np.argmin(entropies))
    tie = any(abs(s - entropies[winner]) <= tie_tol for k, s in enumerate(entropies) if k != winner)
    ids = tuple(candidate_ids) if candidate_ids is not None else tuple(f"candidate_{k}" for k in range(len(candidates)))
    if tie:
        logging.warning(f"Parità nel setaccio: vincitore {ids[winner]} per indice più basso.")
    return SieveReport(ids, entropies, winner, tie, float(delta_t))


def repeated_reduction_run(spec: EvolutionSpec, apparatus: ApparatusProjectorSet, delta_t: float, steps: int,
                           channel: str = "modified", candidates: Sequence[ApparatusProjectorSet] = None,
                           mapper: Callable = map) -> EntropyTrajectory:
    """
    Alterna evoluzione unitaria per Δt e riduzione, a partire da ρ(0) non ridotto.

    La riga 0 registra ρ(0) senza applicare riduzioni; la riga k registra lo
    stato evoluto per Δt (da ρ(0) per k = 1, dal ridotto del passo k−1 poi),
    prima della sua riduzione, quindi steps = 1 coincide con reduce(evolve(ρ(0), Δt)).
    Con channel="luders" la riduzione applicata è il defasamento di Lüders
    (modalità diagnostica); S_luders e S_modified sono comunque registrate entrambe.
    Se `candidates` è fornito, a ogni riga si rilancia il setaccio dallo stato
    con cui parte il passo successivo.
    """
    if steps < 1:
        raise PreconditionError(f"numero di passi non valido: {steps}")
    if delta_t <= 0:
        raise PreconditionError(f"Δt deve essere positivo: {delta_t}")
    if channel not in ("modified", "luders"):
        raise PreconditionError(f"canale non supportato per la traiettoria: {channel!r}")
    rows = {"times": [], "s_rho": [], "s_luders": [], "s_modified": [], "interference": []}
    winners = []
    state = spec.initial_state
    for step in range(steps + 1):
        if step > 0:
            state = evolve(state, spec.spectrum, delta_t)
        dephased = luders_dephase(state, apparatus)
        rep = modified_reduce(state, apparatus)
        rows["times"].append(step * float(delta_t))
        rows["s_rho"].append(von_neumann_entropy(state))
        rows["s_luders"].append(von_neumann_entropy(dephased))
        rows["s_modified"].append(von_neumann_entropy(rep.rho_hat))
        rows["interference"].append(interference_norm(state, apparatus, spec.environment_dim))
        if step > 0:
            state = rep.rho_hat if channel == "modified" else dephased
        if candidates:
            winners.append(sieve(spec, candidates, delta_t, rho=state, mapper=mapper).winner)
    trajectory = EntropyTrajectory(
        channel=channel,
        delta_t=float(delta_t),
        times=tuple(rows["times"]),
        s_rho=tuple(rows["s_rho"]),
        s_luders=tuple(rows["s_luders"]),
        s_modified=tuple(rows["s_modified"]),
        interference=tuple(rows["interference"]),
        winners=tuple(winners),
    )
    for v in trajectory.violations():
        logging.warning(f"Traiettoria: {v.detail} (residuo {v.residual:.3e})")
    logging.info(f"Riduzioni ripetute completate: {steps} passi, canale {channel}")
    return trajectory


def stability_time(trajectory: EntropyTrajectory) -> StabilityReport:
    """
    Proxy di τ_P: istante del primo passo in cui il vincitore del setaccio
    cambia rispetto al passo 0; inf se non cambia mai.
    """
    if not trajectory.winners:
        raise PreconditionError("la traiettoria non contiene i vincitori del setaccio")
    first = trajectory.winners[0]
    for k, winner in enumerate(trajectory.winners):
        if winner != first:
            return StabilityReport(k * trajectory.delta_t, False, k, trajectory.winners)
    return StabilityReport(float("inf"), True, None, trajectory.winners)
