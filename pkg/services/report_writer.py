import csv
import json
import logging
import math
import os

import numpy as np

from core import __version__
from core.tensor_space import matrix_to_pairs


class ReportWriter:
    """
    Scrive i report JSON e i CSV di un comando nella directory di output.

    Ogni numero reale viene arrotondato a `significant_digits` cifre
    significative prima della serializzazione; i valori non finiti diventano
    le stringhe "inf", "-inf" e "nan". Chiavi ordinate e indentazione fissa
    rendono i file identici byte per byte a parità di scenario e seme.

    Attributes:
        out_dir (str): Directory di output.
        significant_digits (int): Cifre significative dei numeri reali.
    """

    def __init__(self, out_dir, significant_digits=12):
        self.out_dir = out_dir
        self.significant_digits = int(significant_digits)
        os.makedirs(self.out_dir, exist_ok=True)

    def format_float(self, value):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        rounded = float(f"{value:.{self.significant_digits}g}")
        return 0.0 if rounded == 0.0 else rounded

    def normalize(self, value):
        """Converte ricorsivamente il valore in tipi JSON con formattazione fissa."""
        if isinstance(value, dict):
            return {str(k): self.normalize(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self.normalize(v) for v in value]
        if isinstance(value, np.ndarray):
            if np.iscomplexobj(value) and value.ndim == 2:
                return self.normalize(matrix_to_pairs(value))
            return self.normalize(value.tolist())
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (complex, np.complexfloating)):
            return [self.format_float(value.real), self.format_float(value.imag)]
        if isinstance(value, (float, np.floating)):
            return self.format_float(value)
        return value

    def _cell(self, value):
        if isinstance(value, (bool, np.bool_)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            formatted = self.format_float(value)
            return formatted if isinstance(formatted, str) else f"{formatted:.{self.significant_digits}g}"
        return str(value)

    def write_report(self, command, scenario, results):
        """
        Scrive report_<command>.json.

        :param command: Nome del comando.
        :param scenario: Scenario eseguito (None se il parsing è fallito).
        :param results: Dizionario dei risultati per operazione.
        :return: Percorso del file scritto.
        """
        report = {
            "command": command,
            "toolkit_version": __version__,
            "scenario": scenario.name if scenario is not None else None,
            "seed": scenario.seed if scenario is not None else None,
            "results": results,
        }
        path = os.path.join(self.out_dir, f"report_{command}.json")
        with open(path, "w") as f:
            json.dump(self.normalize(report), f, sort_keys=True, indent=2, ensure_ascii=False)
            f.write("\n")
        logging.info(f"Report scritto in {path}")
        return path

    def write_csv(self, name, header, rows):
        """Scrive un CSV con intestazione fissa e una riga per record."""
        path = os.path.join(self.out_dir, name)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"riga di {len(row)} campi per un'intestazione di {len(header)}")
                writer.writerow([self._cell(v) for v in row])
        logging.info(f"CSV scritto in {path} ({len(rows)} righe)")
        return path

    def write_timing(self, command, seconds):
        path = os.path.join(self.out_dir, "timing.json")
        with open(path, "w") as f:
            json.dump({"command": command, "wall_clock_seconds": round(float(seconds), 6)}, f, indent=2)
            f.write("\n")
        return path
