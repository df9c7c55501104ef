import json
import logging

import numpy as np
from jsonschema import Draft7Validator
from scipy.linalg import hadamard

from core.errors import (
    ConfigError,
    DimensionError,
    InvalidStateError,
    NonHermitianError,
    PreconditionError,
    ProjectorSetError,
    Violation,
)
from core.tensor_space import BipartiteSpace, pairs_to_matrix
from core.utils import DEFAULT_SCHEMA_CONFIG
from dynamics.dynamics_sieve import DIMENSION_CAP, EvolutionSpec, MeasurementModelConfig, build_measurement_model, pointer_sectors
from scenarios.scenario import CandidateSet, DeltaT, Scenario
from states.states import (
    DensityOperator,
    computational_sectors,
    lift_apparatus_projectors,
    make_pure,
    random_density_operator,
    random_pure_state,
)

DEFAULT_T_MAX = 4.0
DEFAULT_TIME_POINTS = 401
DEFAULT_SIEVE_DELTA_T = 1.0


class ScenarioParser:
    """
    Legge, valida e costruisce gli scenari JSON.

    La validazione avviene in due passi: struttura (jsonschema) e semantica
    (dimensioni, stati, insiemi di proiettori). Ogni problema viene
    restituito come ConfigError con l'elenco delle violazioni.
    """

    def __init__(self, schema_file=None, default_samples=200, dimension_cap=DIMENSION_CAP):
        """
        :param schema_file: Percorso allo schema JSON degli scenari.
        :param default_samples: Campioni di massima entropia se lo scenario non li specifica.
        :param dimension_cap: Limite su dim_a·dim_b per modelli e dinamiche.
        """
        self.schema_file = schema_file or DEFAULT_SCHEMA_CONFIG
        self.default_samples = default_samples
        self.dimension_cap = dimension_cap
        with open(self.schema_file, "r") as f:
            self.validator = Draft7Validator(json.load(f))
        logging.debug(f"Schema degli scenari caricato da {self.schema_file}")

    def load(self, path):
        """
        Legge il documento JSON dello scenario.

        :raises ConfigError: file mancante o JSON malformato (con riga e contesto).
        """
        try:
            with open(path, "r") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"Impossibile leggere lo scenario {path}: {e}",
                              [Violation("readable", str(e))]) from e
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            lines = text.splitlines()
            context = lines[e.lineno - 1] if 0 < e.lineno <= len(lines) else ""
            raise ConfigError(f"JSON malformato in {path}: {e.msg}",
                              [Violation("syntax", f"riga {e.lineno}, colonna {e.colno}: {e.msg}")],
                              line=e.lineno, context=context) from e

    def validate(self, document):
        """Violazioni dello schema, ordinate per posizione nel documento."""
        violations = []
        for error in sorted(self.validator.iter_errors(document), key=lambda e: [str(p) for p in e.absolute_path]):
            where = "/".join(str(p) for p in error.absolute_path) or "<radice>"
            violations.append(Violation("schema", f"{where}: {error.message}"))
        return violations

    def parse(self, path, seed=None):
        """
        Carica, valida e costruisce lo scenario.

        :param path: Percorso del documento.
        :param seed: Seme che sostituisce quello dello scenario (opzionale).
        :return: Scenario.
        """
        document = self.load(path)
        if isinstance(document, dict) and seed is not None:
            document = {**document, "seed": int(seed)}
        violations = self.validate(document)
        if violations:
            for v in violations:
                logging.error(f"Scenario {path}: {v.detail}")
            raise ConfigError(f"Scenario {path} non conforme allo schema", violations)
        try:
            scenario = self.build(document, str(path))
        except ProjectorSetError as e:
            raise ConfigError(f"Apparato non valido in {path}: {e}", e.violations) from e
        except (DimensionError, InvalidStateError, NonHermitianError, PreconditionError, ValueError) as e:
            raise ConfigError(f"Scenario {path} incoerente: {e}", [Violation("semantics", str(e))]) from e
        logging.info(f"Scenario {scenario.name} caricato da {path}")
        return scenario

    def build(self, document, source=""):
        seed = int(document["seed"])
        model = None
        if "model" in document:
            model = MeasurementModelConfig.from_dict(document["model"])
            space = model.space
            if "space" in document and (document["space"]["dim_a"], document["space"]["dim_b"]) != (space.dim_a, space.dim_b):
                raise DimensionError(f"'space' {document['space']} incompatibile con il modello ({space.dim_a}, {space.dim_b})")
        elif "space" in document:
            space = BipartiteSpace(document["space"]["dim_a"], document["space"]["dim_b"])
        else:
            raise ConfigError("Lo scenario deve dichiarare 'space' oppure 'model'",
                              [Violation("schema", "<radice>: manca 'space' o 'model'")])

        model_spec = build_measurement_model(model, self.dimension_cap) if model is not None else None
        rho, psi = self._initial_state(document["initial_state"], space, model_spec, seed)
        spec = self._evolution(document.get("dynamics", {}), space, rho, model_spec, self.dimension_cap)
        apparatus = self._apparatus(document["apparatus"], space, model)

        candidates, sieve_delta_t = (), None
        if "sieve" in document:
            candidates = tuple(
                CandidateSet(c.get("id", f"candidate_{k}"), self._apparatus(c, space, model))
                for k, c in enumerate(document["sieve"]["candidates"])
            )
            sieve_delta_t = DeltaT.from_config(document["sieve"].get("delta_t", DEFAULT_SIEVE_DELTA_T))

        run = document.get("run")
        return Scenario(
            name=document["name"],
            seed=seed,
            space=space,
            rho=rho,
            psi=psi,
            apparatus=apparatus,
            spec=spec,
            model=model,
            candidates=candidates,
            sieve_delta_t=sieve_delta_t,
            run_delta_t=DeltaT.from_config(run["delta_t"]) if run else None,
            steps=run["steps"] if run else None,
            run_channel=run.get("channel", "modified") if run else "modified",
            samples=document.get("samples", self.default_samples),
            source=source,
            document=document,
        )

    @staticmethod
    def _initial_state(section, space, model_spec, seed):
        if "coefficients" in section:
            psi, rho = make_pure(space, pairs_to_matrix(section["coefficients"], "coefficients"))
            return rho, psi
        if "density" in section:
            return DensityOperator(pairs_to_matrix(section["density"], "density"), space), None
        if "model" in section:
            if model_spec is None:
                raise PreconditionError("initial_state.model richiede la sezione 'model'")
            return model_spec.initial_state, None
        options = section["random"]
        rng = np.random.default_rng(seed)
        if options.get("kind", "mixed") == "pure":
            psi = random_pure_state(space, rng)
            return psi.density(), psi
        return random_density_operator(space, rng, options.get("rank")), None

    @staticmethod
    def _evolution(section, space, rho, model_spec, dimension_cap):
        if model_spec is not None:
            if section:
                raise PreconditionError("'dynamics' e 'model' non possono comparire insieme")
            return EvolutionSpec(space, model_spec.hamiltonian, rho, model_spec.times,
                                 model_spec.environment_dim, model_spec.metadata, dimension_cap)
        hamiltonian = pairs_to_matrix(section["hamiltonian"], "hamiltonian") if "hamiltonian" in section \
            else np.zeros((space.dim, space.dim), dtype=complex)
        times = np.linspace(0.0, section.get("t_max", DEFAULT_T_MAX), section.get("time_points", DEFAULT_TIME_POINTS))
        return EvolutionSpec(space, hamiltonian, rho, times, section.get("environment_dim", 1), dimension_cap=dimension_cap)

    @staticmethod
    def _apparatus(section, space, model):
        basis = section["basis"]
        labels = section.get("labels")
        if basis in ("pointer_z", "pointer_x"):
            if model is None:
                raise PreconditionError(f"la base {basis} richiede la sezione 'model'")
            apparatus = pointer_sectors(model, basis[-1])
            if labels is not None:
                apparatus = lift_apparatus_projectors(space, [list(b.T) for b in apparatus.sector_bases], labels)
            return apparatus
        sectors = section.get("sectors")
        if basis == "explicit":
            if not sectors or not all(isinstance(s[0], list) for s in sectors):
                raise PreconditionError("la base 'explicit' richiede una lista di vettori per settore")
            groups = [[pairs_to_matrix([v], "vettore")[0] for v in sector] for sector in sectors]
            return lift_apparatus_projectors(space, groups, labels)
        if sectors is None:
            sectors = [[k] for k in range(space.dim_a)]
        for sector in sectors:
            for index in sector:
                if not isinstance(index, int) or index >= space.dim_a:
                    raise DimensionError(f"indice di settore {index!r} non valido per dim_a={space.dim_a}")
        if basis == "computational":
            return computational_sectors(space, sectors, labels)
        if space.dim_a & (space.dim_a - 1):
            raise DimensionError(f"la base di Hadamard richiede dim_a potenza di 2 (dim_a={space.dim_a})")
        columns = hadamard(space.dim_a).astype(complex) / np.sqrt(space.dim_a)
        return lift_apparatus_projectors(space, [[columns[:, k] for k in sector] for sector in sectors], labels)