import json
import logging
import os

from core.errors import ConfigError, Violation
from core.utils import DEFAULT_PRESETS_CONFIG, REPOSITORY_ROOT


class PresetManager:
    def __init__(self, presets_config_file=None):
        """
        Inizializza il PresetManager e carica il registro degli scenari predefiniti.

        :param presets_config_file: Percorso al file JSON con il registro dei preset.
        """
        self.presets_config_file = presets_config_file or DEFAULT_PRESETS_CONFIG
        self.presets = {}  # nome -> percorso del documento
        self.load_presets()

    def load_presets(self):
        logging.info(f"Caricamento del registro dei preset da {self.presets_config_file}")
        try:
            with open(self.presets_config_file, "r") as f:
                data = json.load(f)
            for name, path in data.get("presets", {}).items():
                self.presets[name] = path if os.path.isabs(path) else os.path.normpath(os.path.join(REPOSITORY_ROOT, path))
                logging.debug(f"Preset {name} registrato: {self.presets[name]}")
        except FileNotFoundError:
            logging.error(f"File dei preset {self.presets_config_file} non trovato.")
        except json.JSONDecodeError as e:
            logging.error(f"Errore nella lettura del file JSON dei preset: {e}")

    def names(self):
        return sorted(self.presets)

    def resolve(self, reference):
        """
        Restituisce il percorso dello scenario: un file esistente oppure il nome di un preset.

        :raises ConfigError: se il riferimento non è né un file né un preset noto.
        """
        if os.path.isfile(reference):
            return reference
        if reference in self.presets:
            logging.debug(f"Preset {reference} -> {self.presets[reference]}")
            return self.presets[reference]
        raise ConfigError(
            f"Scenario {reference!r} non trovato (preset disponibili: {', '.join(self.names())})",
            [Violation("readable", f"{reference}: né file né preset")],
        )
