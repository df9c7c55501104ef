import json
import logging
import time

from algebra.operator_algebra import verify_duality
from core.errors import ConfigError, InvariantViolationError, PreconditionError, ToolkitError, Violation
from core.tensor_space import frobenius_norm, matrix_to_pairs, partial_trace_a, partial_trace_b
from dynamics.dynamics_sieve import check_timescales, estimate_decoherence_time, repeated_reduction_run, sieve, stability_time
from reduction.entropy_analysis import entropy_chain, verify_max_entropy, von_neumann_entropy
from reduction.reduction import (
    check_channel_output,
    dlp_reduce,
    equivalent_modified,
    equivalent_standard,
    luders_dephase,
    luders_select,
    modified_reduce,
    representatives_equal,
)
from scenarios.preset_manager import PresetManager
from scenarios.scenario_parser import ScenarioParser
from services.candidate_pool import CandidatePool
from services.config_service import ConfigService
from services.report_writer import ReportWriter

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_INVARIANT_FAILURE = 3
EXIT_INTERNAL_ERROR = 4

SIEVE_CSV_HEADER = ("candidate_id", "entropy_generated_nats", "winner_flag", "tie_flag")
TRAJECTORY_CSV_HEADER = ("step", "time", "S_rho", "S_luders", "S_modified", "interference_norm")


class ExperimentManager:
    """
    Esegue i comandi della CLI su uno scenario e ne scrive i report.

    Ogni comando restituisce il dizionario dei risultati e scrive
    report_<comando>.json (più gli eventuali CSV) prima di segnalare
    violazioni numeriche, così gli artefatti restano ispezionabili anche
    quando l'uscita è non nulla.

    Attributes:
        scenario_ref (str): Percorso dello scenario o nome di un preset.
        config (ConfigService): Settings numerici.
        channel (str): Canale per il comando reduce.
        seed (int | None): Seme che sostituisce quello dello scenario.
        pool (CandidatePool): Pool per la valutazione dei candidati del setaccio.
        writer (ReportWriter): Scrittore dei report.
        scenario (Scenario | None): Scenario caricato dal comando in corso.
    """

    def __init__(self, scenario_ref, out_dir="./reports", config_service=None, channel="modified", seed=None, jobs=1):
        self.scenario_ref = scenario_ref
        self.config = config_service or ConfigService()
        self.channel = channel
        self.seed = seed
        self.pool = CandidatePool(jobs)
        self.writer = ReportWriter(out_dir, self.config.get("SIGNIFICANT_DIGITS"))
        self.scenario = None
        self.report_written = False
        self.commands = {
            "validate": self.cmd_validate,
            "reduce": self.cmd_reduce,
            "compare": self.cmd_compare,
            "sieve": self.cmd_sieve,
            "run": self.cmd_run,
        }

    def run(self, command):
        """
        Esegue il comando e traduce l'esito in un codice di uscita.

        :return: 0 successo, 2 errore di configurazione, 3 invariante numerico fallito, 4 errore interno.
        """
        if command not in self.commands:
            logging.error(f"Comando sconosciuto: {command}")
            return EXIT_CONFIG_ERROR
        logging.info(f"Avvio del comando {command} sullo scenario {self.scenario_ref}")
        started = time.perf_counter()
        try:
            self.commands[command]()
            code = EXIT_OK
        except ConfigError as e:
            logging.error(f"Errore di configurazione: {e}")
            self._emit_failure(command, "config_error", str(e), e.report())
            code = EXIT_CONFIG_ERROR
        except InvariantViolationError as e:
            logging.error(f"Invariante numerico violato: {e}")
            self._emit_failure(command, "invariant_violation", str(e), e.report(), e.payload)
            code = EXIT_INVARIANT_FAILURE
        except ToolkitError as e:
            logging.error(f"Errore numerico: {e}")
            self._emit_failure(command, "numerical_error", str(e), [])
            code = EXIT_INVARIANT_FAILURE
        except Exception as e:
            logging.exception(f"Errore interno durante {command}: {e}")
            self._emit_failure(command, "internal_error", repr(e), [])
            code = EXIT_INTERNAL_ERROR
        elapsed = time.perf_counter() - started
        self.writer.write_timing(command, elapsed)
        print(f"Tempo di esecuzione: {elapsed:.3f} s")
        logging.info(f"Comando {command} terminato con codice {code} in {elapsed:.3f} s")
        return code

    def _emit_failure(self, command, status, message, violations, payload=None):
        listing = {"status": status, "message": message, "violations": violations}
        if payload is not None:
            listing["payload"] = payload
        print(json.dumps(self.writer.normalize(listing), sort_keys=True, indent=2, ensure_ascii=False))
        if not self.report_written:
            self.writer.write_report(command, self.scenario, listing)
            self.report_written = True

    def _write(self, command, results):
        self.writer.write_report(command, self.scenario, results)
        self.report_written = True

    def _load(self):
        presets = PresetManager(self.config.presets_file)
        path = presets.resolve(self.scenario_ref)
        cap = self.config.get("DIMENSION_CAP")
        parser = ScenarioParser(self.config.schema_file, self.config.get("DEFAULT_SAMPLES"), cap)
        self.scenario = parser.parse(path, self.seed)
        if self.scenario.space.dim > cap:
            raise ConfigError(
                f"Dimensione totale {self.scenario.space.dim} oltre il limite {cap}",
                [Violation("dimension_cap", f"dim_a·dim_b = {self.scenario.space.dim} > {cap}")],
            )
        return self.scenario

    @staticmethod
    def _raise_if(violations, message, payload=None):
        if violations:
            raise InvariantViolationError(message, violations, payload)

    def cmd_validate(self):
        """Schema, semantica, limiti dimensionali e, per algebre piccole, la verifica di dualità."""
        scenario = self._load()
        results = {"status": "valid", "scenario": scenario.summary(), "violations": []}
        violations = []
        algebra_cap = self.config.get("ALGEBRA_DIMENSION_CAP")
        if scenario.space.dim <= algebra_cap:
            duality = verify_duality(scenario.apparatus, algebra_cap)
            results["duality"] = duality.as_dict()
            violations = list(duality.violations)
            results["violations"] = [v.as_dict() for v in violations]
        else:
            logging.info(f"Verifica di dualità saltata: dimensione {scenario.space.dim} oltre il limite dell'algebra")
            results["duality"] = None
        if results["violations"]:
            results["status"] = "invalid"
        self._write("validate", results)
        print(f"Scenario {scenario.name}: {results['status']} "
              f"(dim_a={scenario.space.dim_a}, dim_b={scenario.space.dim_b}, settori={len(scenario.apparatus)})")
        self._raise_if(violations, "verifica di dualità fallita")
        return results

    def cmd_reduce(self):
        scenario = self._load()
        apparatus = scenario.apparatus
        unoccupied = self.config.get("UNOCCUPIED_WEIGHT")
        rep = modified_reduce(scenario.rho, apparatus, unoccupied)
        chain = entropy_chain(scenario.rho, apparatus)
        results = {"channel": self.channel, "entropy": chain.as_dict()}

        if self.channel == "luders":
            reduced = luders_dephase(scenario.rho, apparatus)
        elif self.channel == "dlp":
            dlp = dlp_reduce(scenario.psi if scenario.psi is not None else scenario.rho, apparatus, unoccupied)
            rep, reduced = dlp.rep, dlp.rep.rho_hat
            results["dlp"] = {
                "reconstruction": dlp.reconstruction,
                "purity_deficits": {apparatus.labels[i]: d for i, d in sorted(dlp.purity_deficits.items())},
            }
        else:
            reduced = rep.rho_hat
            results["max_entropy"] = verify_max_entropy(
                rep, scenario.samples, scenario.seed, self.config.get("MAX_ENTROPY_TOLERANCE")).as_dict()

        results["sectors"] = [
            {
                "index": s.index,
                "label": s.label,
                "weight": s.weight,
                "occupied": s.occupied,
                "conditional_state_b": matrix_to_pairs(s.state_b.matrix) if s.occupied else None,
                "purity_b": s.state_b.purity() if s.occupied else None,
            }
            for s in rep.sectors
        ]
        results["weights"] = [s.weight for s in rep.sectors]
        results["reduced_state"] = matrix_to_pairs(reduced.matrix)
        results["S_reduced"] = von_neumann_entropy(reduced)
        results["invariants"] = rep.check_invariants()
        violations = check_channel_output(reduced) + rep.violations()
        results["violations"] = [v.as_dict() for v in violations]
        self._write("reduce", results)

        print(f"Scenario {scenario.name}, canale {self.channel}")
        for s in rep.sectors:
            print(f"  settore {s.label}: w = {s.weight:.12g}{'' if s.occupied else ' (non occupato)'}")
        print(f"  S(ρ) = {chain.s_rho:.12g}  S_luders = {chain.s_luders:.12g}  S_modified = {chain.s_modified:.12g}")
        print(f"  jaynes_gap = {chain.jaynes_gap:.12g}  S(ridotto) = {results['S_reduced']:.12g}")
        self._raise_if(violations, f"stato ridotto dal canale {self.channel} non valido")
        return results

    def cmd_compare(self):
        """Lüders e riduzione modificata a confronto, con le verifiche di equivalenza."""
        scenario = self._load()
        apparatus, rho, space = scenario.apparatus, scenario.rho, scenario.space
        tol = self.config.get("EQUIVALENCE_TOLERANCE")
        luders = luders_dephase(rho, apparatus)
        rep = modified_reduce(rho, apparatus, self.config.get("UNOCCUPIED_WEIGHT"))

        checks = []
        for name, (ok, residual) in (
            ("equivalent_modified(luders, modified)", equivalent_modified(luders, rep.rho_hat, apparatus, tol)),
            ("equivalent_modified(rho, modified)", equivalent_modified(rho, rep.rho_hat, apparatus, tol)),
            ("equivalent_standard(luders, rho)", equivalent_standard(luders, rho, apparatus, tol)),
            ("equivalent_standard(modified, rho)", equivalent_standard(rep.rho_hat, rho, apparatus, tol)),
            ("representatives_equal(luders, modified)",
             representatives_equal(modified_reduce(luders, apparatus).rho_hat, rep.rho_hat, tol)),
        ):
            checks.append({"check": name, "result": bool(ok), "residual": residual})

        entropies = {
            "S_rho": von_neumann_entropy(rho),
            "S_luders": von_neumann_entropy(luders),
            "S_modified": von_neumann_entropy(rep.rho_hat),
        }
        distances = []
        for s in rep.sectors:
            if not s.occupied:
                distances.append({"index": s.index, "label": s.label, "weight": s.weight,
                                  "b_conditional_distance": None, "a_block_distance": None})
                continue
            _, selected = luders_select(rho, apparatus, s.index)
            distances.append({
                "index": s.index,
                "label": s.label,
                "weight": s.weight,
                "b_conditional_distance": frobenius_norm(partial_trace_a(selected.matrix, space) - s.state_b.matrix),
                "a_block_distance": frobenius_norm(partial_trace_b(selected.matrix, space) - s.state_a.matrix),
            })

        violations = []
        if not checks[0]["result"]:
            violations.append(Violation("equivalence", "gli stati ridotti dai due canali non sono equivalenti",
                                        checks[0]["residual"]))
        ordering = entropies["S_luders"] - entropies["S_modified"]
        if ordering > self.config.get("ORDERING_TOLERANCE"):
            violations.append(Violation("ordering", "S_luders > S_modified", ordering))
        results = {
            "entropies": entropies,
            "jaynes_gap": entropies["S_modified"] - entropies["S_luders"],
            "equivalence_checks": checks,
            "sector_distances": distances,
            "violations": [v.as_dict() for v in violations],
        }
        self._write("compare", results)

        print(f"Scenario {scenario.name}: confronto Lüders / modificata")
        print(f"  {'':12}{'S (nats)':>20}")
        for key, value in entropies.items():
            print(f"  {key:12}{value:>20.12g}")
        for c in checks:
            print(f"  {c['check']}: {c['result']} (residuo {c['residual']:.3e})")
        for d in distances:
            if d["a_block_distance"] is not None:
                print(f"  settore {d['label']}: distanza B {d['b_conditional_distance']:.3e}, "
                      f"distanza blocco A {d['a_block_distance']:.3e}")
        self._raise_if(violations, "confronto tra canali non coerente")
        return results

    def _decoherence(self, scenario):
        return estimate_decoherence_time(
            scenario.spec,
            scenario.apparatus,
            self.config.get("DECOHERENCE_THRESHOLD"),
            self.config.get("DECOHERENCE_PERSISTENCE"),
        )

    @staticmethod
    def _decoherence_summary(estimate):
        return {k: v for k, v in estimate.as_dict().items() if k != "curve"}

    def cmd_sieve(self):
        scenario = self._load()
        if not scenario.candidates:
            raise ConfigError(f"Lo scenario {scenario.name} non elenca candidati per il setaccio",
                              [Violation("candidates", "sieve.candidates assente o vuoto")])
        decoherence = self._decoherence(scenario) if scenario.sieve_delta_t.needs_tau else None
        delta_t = scenario.sieve_delta_t.resolve(decoherence.tau_dec if decoherence else None)
        report = sieve(
            scenario.spec,
            [c.apparatus for c in scenario.candidates],
            delta_t,
            candidate_ids=[c.id for c in scenario.candidates],
            mapper=self.pool.map,
            tie_tol=self.config.get("SIEVE_TIE_TOLERANCE"),
        )
        self.writer.write_csv("sieve.csv", SIEVE_CSV_HEADER, report.rows())
        results = {
            "sieve": report.as_dict(),
            "delta_t_request": scenario.sieve_delta_t.as_dict(),
            "decoherence": self._decoherence_summary(decoherence) if decoherence else None,
        }
        self._write("sieve", results)

        print(f"Scenario {scenario.name}: setaccio con Δt = {delta_t:.12g}")
        for cid, s, winner, tie in report.rows():
            print(f"  {cid:20} {s:>20.12g}{'  <- vincitore' if winner else ''}")
        if report.tie:
            print("  parità entro la tolleranza: vince l'indice più basso")
        return results

    def cmd_run(self):
        scenario = self._load()
        if scenario.steps is None:
            raise ConfigError(f"Lo scenario {scenario.name} non ha la sezione 'run'",
                              [Violation("run", "sezione 'run' assente")])
        try:
            decoherence = self._decoherence(scenario)
            tau_dec, decoherence_summary = decoherence.tau_dec, self._decoherence_summary(decoherence)
        except PreconditionError as e:
            logging.warning(f"τ_dec non stimabile: {e}")
            tau_dec, decoherence_summary = float("inf"), {"tau_dec": float("inf"), "unbounded": True, "error": str(e)}
        delta_t = scenario.run_delta_t.resolve(tau_dec)
        candidates = [c.apparatus for c in scenario.candidates] or None
        trajectory = repeated_reduction_run(
            scenario.spec, scenario.apparatus, delta_t, scenario.steps, scenario.run_channel,
            candidates=candidates, mapper=self.pool.map,
        )
        stability = stability_time(trajectory) if candidates else None
        tau_p = stability.tau_p if stability else float("inf")
        timescales = check_timescales(tau_dec, delta_t, tau_p, self.config.get("MUCH_LESS_FACTOR"))
        self.writer.write_csv("trajectory.csv", TRAJECTORY_CSV_HEADER, trajectory.rows())

        violations = trajectory.violations()
        results = {
            "trajectory": trajectory.as_dict(),
            "decoherence": decoherence_summary,
            "stability": stability.as_dict() if stability else None,
            "timescales": timescales.as_dict(),
            "candidate_ids": [c.id for c in scenario.candidates],
            "violations": [v.as_dict() for v in violations],
        }
        self._write("run", results)

        print(f"Scenario {scenario.name}: {trajectory.steps} riduzioni ({trajectory.channel}), Δt = {delta_t:.12g}")
        print(f"  τ_dec = {tau_dec:.12g}  τ_P = {tau_p:.12g}  disuguaglianza dei tempi: "
              f"{'soddisfatta' if timescales.passed else 'NON soddisfatta'}")
        print(f"  S_modified: {trajectory.s_modified[0]:.12g} -> {trajectory.s_modified[-1]:.12g}")
        self._raise_if(violations, "traiettoria di entropia non monotona")
        return results
