import argparse
import logging
import os
import sys

DEFAULT_LOG_FILE = "/tmp/equivalence-toolkit.log"


def setup_logging(log_file=DEFAULT_LOG_FILE, verbose=False):
    """
    Configura la registrazione dei log per il toolkit.

    Tutti i messaggi (DEBUG con `verbose`, altrimenti INFO) vengono scritti nel
    file indicato; avvisi ed errori compaiono anche su standard error, così
    lo standard output resta riservato al riepilogo dei comandi.

    Argomenti:
        log_file (str): Percorso del file di log. Default "/tmp/equivalence-toolkit.log".
        verbose (bool): Se True registra anche i messaggi di DEBUG.

    Esempio di utilizzo:
        setup_logging("/path/to/logfile.log", verbose=True)
        logging.debug("Canale di Lüders applicato.")
        logging.warning("Settore non occupato.")
    """
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.WARNING)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            console,
        ],
        force=True,
    )


def parse_arguments(argv=None):
    """
    Analizza gli argomenti da riga di comando.

    Restituisce:
        Namespace con gli argomenti forniti dalla riga di comando.
    """
    parser = argparse.ArgumentParser(
        prog="equivalence-toolkit",
        description="Riduzione a classi di equivalenza di stati quantistici bipartiti",
    )
    parser.add_argument(
        "command",
        choices=["validate", "reduce", "compare", "sieve", "run"],
        help="Comando da eseguire sullo scenario"
    )
    parser.add_argument(
        "scenario",
        help="Percorso a uno scenario JSON oppure nome di un preset (es. bell, pointer_benchmark)"
    )
    parser.add_argument(
        "--channel",
        choices=["luders", "modified", "dlp"],
        default="modified",
        help="Canale di riduzione per il comando reduce (default: modified)"
    )
    parser.add_argument(
        "-o", "--out",
        default="./reports",
        help="Directory in cui scrivere report e CSV (default: ./reports)"
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Seme che sostituisce quello dello scenario"
    )
    parser.add_argument(
        "-j", "--jobs",
        type=int,
        default=1,
        help="Numero di thread per la valutazione dei candidati del setaccio (default: 1)"
    )
    parser.add_argument(
        "--config-dir",
        default=DEFAULT_CONFIG_DIR,
        help="Directory dei file di configurazione (settings, preset, schema)"
    )
    parser.add_argument(
        "--log-file",
        default=DEFAULT_LOG_FILE,
        help=f"File di log (default: {DEFAULT_LOG_FILE})"
    )
    parser.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Registra anche i messaggi di DEBUG"
    )
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs deve essere almeno 1")
    return args


def clear_log_file(log_file=DEFAULT_LOG_FILE):
    """
    Svuota il file di log all'inizio di ogni invocazione, creandolo se non esiste.
    """
    try:
        open(log_file, 'w').close()
        logging.info(f"File di log {log_file} svuotato.")
    except OSError as e:
        logging.error(f"Errore durante la gestione del file di log: {e}")


REPOSITORY_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

DEFAULT_CONFIG_DIR = os.path.join(REPOSITORY_ROOT, "configuration")

DEFAULT_SETTINGS_CONFIG = os.path.join(DEFAULT_CONFIG_DIR, "config_settings.json")

DEFAULT_PRESETS_CONFIG = os.path.join(DEFAULT_CONFIG_DIR, "config_presets.json")

DEFAULT_SCHEMA_CONFIG = os.path.join(DEFAULT_CONFIG_DIR, "config_scenario_schema.json")
