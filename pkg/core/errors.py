"""
Gerarchia delle eccezioni del toolkit.

Le funzioni di libreria sollevano queste eccezioni; il livello dei servizi le
intercetta, le registra nel log e le traduce in codici di uscita.
"""
from dataclasses import dataclass, field
from typing import List, Optional


@dataclass(frozen=True)
class Violation:
    """
    Singola violazione di un invariante.

    :param invariant: Nome dell'invariante violato (es. "orthogonality").
    :param detail: Descrizione leggibile della violazione.
    :param residual: Residuo numerico misurato (None se non applicabile).
    """
    invariant: str
    detail: str
    residual: Optional[float] = None

    def as_dict(self):
        return {"invariant": self.invariant, "detail": self.detail, "residual": self.residual}


class ToolkitError(Exception):
    """Errore base del toolkit."""


class DimensionError(ToolkitError):
    """Dimensioni incompatibili tra operatori, spazi o configurazioni."""


class NonHermitianError(ToolkitError):
    """Operatore non hermitiano oltre la tolleranza."""


class InvalidStateError(ToolkitError):
    """Stato quantistico non valido (norma, traccia o positività)."""


class PreconditionError(ToolkitError):
    """Precondizione di un'operazione non soddisfatta."""


class SectorExtractionError(ToolkitError):
    """Il centro dell'algebra non produce proiettori centrali minimali."""


class ImpossibleOutcomeError(ToolkitError):
    """Esito con probabilità nulla: nessuno stato condizionato esiste."""

    def __init__(self, message, weight):
        super().__init__(message)
        self.weight = weight


class ViolationError(ToolkitError):
    """Errore che trasporta un elenco strutturato di violazioni."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations: List[Violation] = list(violations or [])

    def report(self):
        return [v.as_dict() for v in self.violations]


class ProjectorSetError(ViolationError):
    """Insieme di proiettori non esaustivo o non ortonormale."""


class InvariantViolationError(ViolationError):
    """Un invariante numerico è fallito (codice di uscita 3)."""

    def __init__(self, message, violations=None, payload=None):
        super().__init__(message, violations)
        self.payload = payload


@dataclass(eq=False)
class ConfigError(ToolkitError):
    """
    Errore di configurazione dello scenario (codice di uscita 2).

    :param message: Messaggio principale.
    :param violations: Violazioni individuate (campo mancante, invariante, ...).
    :param line: Numero di riga del documento, se noto.
    :param context: Testo della riga incriminata, se noto.
    """
    message: str
    violations: List[Violation] = field(default_factory=list)
    line: Optional[int] = None
    context: Optional[str] = None

    def __post_init__(self):
        super().__init__(self.message)

    def __str__(self):
        if self.line is not None:
            return f"{self.message} (riga {self.line}: {self.context!r})"
        return self.message

    def report(self):
        return [v.as_dict() for v in self.violations]
