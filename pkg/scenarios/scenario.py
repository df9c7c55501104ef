from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from core.errors import PreconditionError
from core.tensor_space import BipartiteSpace
from dynamics.dynamics_sieve import EvolutionSpec, MeasurementModelConfig
from states.states import ApparatusProjectorSet, DensityOperator, PureState


@dataclass(frozen=True)
class DeltaT:
    """
    Intervallo tra le riduzioni: valore assoluto oppure multiplo di τ_dec.

    Attributi:
    -----------
    value (float | None): Δt esplicito.
    tau_multiple (float | None): k tale che Δt = k·τ_dec.
    """
    value: Optional[float] = None
    tau_multiple: Optional[float] = None

    @classmethod
    def from_config(cls, data) -> "DeltaT":
        if isinstance(data, dict):
            return cls(tau_multiple=float(data["tau_multiple"]))
        return cls(value=float(data))

    @property
    def needs_tau(self) -> bool:
        return self.value is None

    def resolve(self, tau_dec: float = None) -> float:
        if self.value is not None:
            return self.value
        if tau_dec is None or not np.isfinite(tau_dec):
            raise PreconditionError(f"Δt = {self.tau_multiple}·τ_dec richiede un τ_dec finito (ricevuto {tau_dec})")
        return self.tau_multiple * tau_dec

    def as_dict(self):
        return {"value": self.value} if self.value is not None else {"tau_multiple": self.tau_multiple}


@dataclass(frozen=True, eq=False)
class CandidateSet:
    id: str
    apparatus: ApparatusProjectorSet


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Scenario validato, pronto per i comandi della CLI.

    Attributi:
    -----------
    name (str): Identificativo dello scenario.
    seed (int): Seme per ogni scelta casuale.
    space (BipartiteSpace): Spazio bipartito.
    rho (DensityOperator): Stato iniziale.
    psi (PureState | None): Stato puro, se assegnato tramite coefficienti.
    apparatus (ApparatusProjectorSet): Proiettori dell'apparato.
    spec (EvolutionSpec): Dinamica del sistema chiuso (H = 0 se non dichiarata).
    model (MeasurementModelConfig | None): Parametri del modello a puntatore.
    candidates (tuple): CandidateSet per il setaccio.
    sieve_delta_t (DeltaT | None): Δt del setaccio.
    run_delta_t (DeltaT | None): Δt delle riduzioni ripetute.
    steps (int | None): Numero di passi delle riduzioni ripetute.
    run_channel (str): Canale applicato nelle riduzioni ripetute.
    samples (int): Campioni per la verifica di massima entropia.
    source (str): Percorso del documento di origine.
    """
    name: str
    seed: int
    space: BipartiteSpace
    rho: DensityOperator
    psi: Optional[PureState]
    apparatus: ApparatusProjectorSet
    spec: EvolutionSpec
    model: Optional[MeasurementModelConfig] = None
    candidates: Tuple[CandidateSet, ...] = ()
    sieve_delta_t: Optional[DeltaT] = None
    run_delta_t: Optional[DeltaT] = None
    steps: Optional[int] = None
    run_channel: str = "modified"
    samples: int = 200
    source: str = ""
    document: Dict = field(default_factory=dict)

    def summary(self) -> Dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "dim_a": self.space.dim_a,
            "dim_b": self.space.dim_b,
            "sectors": [
                {"label": label, "dim_a": d} for label, d in zip(self.apparatus.labels, self.apparatus.dims_a)
            ],
            "candidates": [c.id for c in self.candidates],
            "model": self.model.as_dict() if self.model is not None else None,
            "run": None if self.steps is None else {
                "delta_t": self.run_delta_t.as_dict(), "steps": self.steps, "channel": self.run_channel,
            },
            "sieve_delta_t": self.sieve_delta_t.as_dict() if self.sieve_delta_t is not None else None,
        }
