"""
Riduzione a classi di equivalenza di stati quantistici bipartiti

Questo script esegue, a partire da uno scenario JSON, i confronti tra la riduzione di Lüders e la riduzione modificata (rappresentante a massima entropia della classe di equivalenza), il setaccio di predicibilità sulle basi candidate e le traiettorie di entropia con riduzioni ripetute. Ogni esecuzione registra gli eventi in un file di log e scrive report JSON e CSV deterministici nella directory di output.

Utilizza la libreria argparse per la gestione della riga di comando e logging per la gestione dei log.

Argomenti da linea di comando:
------------------------------
command                : Comando da eseguire
                         - 'validate' verifica schema, dimensioni e insieme di proiettori
                         - 'reduce'   applica il canale scelto con --channel
                         - 'compare'  confronta Lüders e riduzione modificata
                         - 'sieve'    esegue il setaccio di predicibilità sui candidati
                         - 'run'      esegue le riduzioni ripetute e la verifica dei tempi caratteristici
scenario               : Percorso a uno scenario JSON oppure nome di un preset
                         Esempio: bell, rank2_sector, pointer_benchmark, dephasing_idle
--channel              : luders | modified | dlp (default: modified)
-o, --out              : Directory dei report (default: ./reports)
--seed                 : Seme che sostituisce quello dello scenario
-j, --jobs             : Thread per i candidati del setaccio (default: 1)
--config-dir           : Directory dei file di configurazione
--log-file             : File di log (default: /tmp/equivalence-toolkit.log)
-v, --verbose          : Log di livello DEBUG

Codici di uscita:
-----------------
0 successo, 2 errore di configurazione, 3 invariante numerico violato, 4 errore interno.

Esempio di utilizzo:
--------------------
    python main.py reduce bell --channel modified --out ./reports
    python main.py run pointer_benchmark --jobs 2
"""

import logging
import sys

from core.utils import clear_log_file, parse_arguments, setup_logging
from services.config_service import ConfigService
from services.experiment_manager import EXIT_INTERNAL_ERROR, ExperimentManager


def main(argv=None):
    """
    1. Parse degli argomenti da riga di comando.
    2. Svuota il file di log e configura il logging.
    3. Carica i settings e inizializza l'ExperimentManager.
    4. Esegue il comando e restituisce il codice di uscita.
    """
    args = parse_arguments(argv)
    clear_log_file(args.log_file)
    setup_logging(args.log_file, args.verbose)

    try:
        config_service = ConfigService(args.config_dir)
        manager = ExperimentManager(
            args.scenario,
            out_dir=args.out,
            config_service=config_service,
            channel=args.channel,
            seed=args.seed,
            jobs=args.jobs,
        )
    except Exception as e:
        logging.exception(f"Inizializzazione fallita: {e}")
        return EXIT_INTERNAL_ERROR
    return manager.run(args.command)


if __name__ == "__main__":
    sys.exit(main())
