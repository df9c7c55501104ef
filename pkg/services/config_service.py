import json
import logging
import math
import os

from core.utils import DEFAULT_CONFIG_DIR

# Valori usati se il file dei settings manca o non contiene la chiave
DEFAULT_SETTINGS = {
    "DIMENSION_CAP": 64,
    "ALGEBRA_DIMENSION_CAP": 16,
    "UNOCCUPIED_WEIGHT": 1e-12,
    "EQUIVALENCE_TOLERANCE": 1e-9,
    "MAX_ENTROPY_TOLERANCE": 1e-8,
    "ORDERING_TOLERANCE": 1e-9,
    "MUCH_LESS_FACTOR": 10.0,
    "DECOHERENCE_THRESHOLD": math.exp(-1.0),
    "DECOHERENCE_PERSISTENCE": 3,
    "SIEVE_TIE_TOLERANCE": 1e-9,
    "SIGNIFICANT_DIGITS": 12,
    "DEFAULT_SAMPLES": 200,
}


class ConfigService:

    def __init__(self, config_dir=None):
        """
        Inizializza il ConfigService e carica le configurazioni dalla directory specificata.

        :param config_dir: Directory contenente i file JSON di configurazione.
        """
        self.config_dir = config_dir or DEFAULT_CONFIG_DIR
        self.settings = {}
        self._load_all_configs()

    def _load_all_configs(self):
        self.settings = self._load_settings()
        logging.info("Tutte le configurazioni sono state caricate con successo.")

    def _load_settings(self):
        """
        Carica i settings da config_settings.json, completandoli con i valori di default.

        :return: Dizionario dei settings.
        """
        settings = dict(DEFAULT_SETTINGS)
        file_path = os.path.join(self.config_dir, "config_settings.json")
        try:
            with open(file_path, 'r') as f:
                data = json.load(f)
                loaded = data.get("settings", {})
                logging.info(f"Settings caricati da {file_path}: {loaded}")
                unknown = sorted(set(loaded) - set(DEFAULT_SETTINGS))
                if unknown:
                    logging.warning(f"Chiavi di configurazione sconosciute ignorate: {unknown}")
                settings.update({k: v for k, v in loaded.items() if k in DEFAULT_SETTINGS})
        except FileNotFoundError:
            logging.error(f"File di configurazione {file_path} non trovato: uso i valori di default.")
        except json.JSONDecodeError as e:
            logging.error(f"Errore nella lettura del file JSON {file_path}: {e}")
        return settings

    @property
    def presets_file(self):
        return os.path.join(self.config_dir, "config_presets.json")

    @property
    def schema_file(self):
        return os.path.join(self.config_dir, "config_scenario_schema.json")

    def get(self, key):
        """
        Restituisce il valore tipizzato di un setting (int o float come il default).

        :raises KeyError: se la chiave non esiste.
        """
        if key not in DEFAULT_SETTINGS:
            raise KeyError(f"Setting sconosciuto: {key}")
        value = self.settings.get(key, DEFAULT_SETTINGS[key])
        kind = type(DEFAULT_SETTINGS[key])
        try:
            return kind(value)
        except (TypeError, ValueError):
            logging.error(f"Valore non valido per {key}: {value!r}; uso il default {DEFAULT_SETTINGS[key]!r}")
            return DEFAULT_SETTINGS[key]
