"""
Algebra lineare densa su uno spazio bipartito H_A ⊗ H_B.

Convenzione degli indici (unica per tutto il toolkit): A-major, cioè
indice globale = alpha * dim_b + beta.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from core.errors import DimensionError, NonHermitianError

# Tolleranze numeriche
HERMITIAN_TOLERANCE_PER_DIM = 1e-10
ORTHONORMAL_TOLERANCE = 1e-9
RECONSTRUCTION_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class BipartiteSpace:
    """
    Spazio di Hilbert bipartito H_A ⊗ H_B.

    Attributi:
    -----------
    dim_a (int): Dimensione di H_A (sottosistemi integrati, apparato).
    dim_b (int): Dimensione di H_B (sottosistemi isolati).
    """
    dim_a: int
    dim_b: int

    def __post_init__(self):
        for name in ("dim_a", "dim_b"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise DimensionError(f"{name} deve essere un intero positivo, ricevuto {value!r}")

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    def index(self, alpha: int, beta: int) -> int:
        """Indice globale del vettore di base |alpha>|beta>."""
        return alpha * self.dim_b + beta

    def check_operator(self, m, name="operatore") -> np.ndarray:
        """Converte e verifica un operatore su AB."""
        return check_square(m, self.dim, name)

    def check_operator_a(self, x, name="operatore su A") -> np.ndarray:
        return check_square(x, self.dim_a, name)

    def check_operator_b(self, y, name="operatore su B") -> np.ndarray:
        return check_square(y, self.dim_b, name)


def as_matrix(data, name="matrice") -> np.ndarray:
    """
    Converte l'input in una matrice complessa 2D a valori finiti.

    :param data: Array-like da convertire.
    :param name: Nome usato nei messaggi d'errore.
    :return: np.ndarray complesso.
    """
    m = np.asarray(data, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"{name}: attesa una matrice 2D, ricevuta forma {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionError(f"{name}: contiene valori NaN o infiniti")
    return m


def check_square(m, dim, name="operatore") -> np.ndarray:
    m = as_matrix(m, name)
    if m.shape != (dim, dim):
        raise DimensionError(f"{name}: attesa forma {(dim, dim)}, ricevuta {m.shape}")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(m, "fro"))


def hs_inner(x: np.ndarray, y: np.ndarray) -> complex:
    """Prodotto scalare di Hilbert-Schmidt <X, Y> = tr(X† Y)."""
    return complex(np.vdot(x, y))


def hermitian_tolerance(dim: int) -> float:
    return HERMITIAN_TOLERANCE_PER_DIM * dim


def hermiticity_residual(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - dagger(h)))) if h.size else 0.0


def is_hermitian(h, tol=None) -> bool:
    h = as_matrix(h)
    tol = hermitian_tolerance(h.shape[0]) if tol is None else tol
    return h.shape[0] == h.shape[1] and hermiticity_residual(h) <= tol


def require_hermitian(h, name="operatore", tol=None) -> np.ndarray:
    """Verifica l'hermitianità e restituisce la parte hermitiana (H + H†)/2."""
    h = as_matrix(h, name)
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"{name}: matrice non quadrata {h.shape}")
    tol = hermitian_tolerance(h.shape[0]) if tol is None else tol
    residual = hermiticity_residual(h)
    if residual > tol:
        raise NonHermitianError(f"{name} non hermitiano: residuo {residual:.3e} > {tol:.3e}")
    return (h + dagger(h)) / 2


def tensor_product(x, y, space: BipartiteSpace = None) -> np.ndarray:
    """
    Prodotto tensoriale X ⊗ Y con convenzione A-major.

    :param x: Operatore su A.
    :param y: Operatore su B.
    :param space: Spazio dichiarato; se fornito le dimensioni vengono verificate.
    :return: Matrice (dim_a*dim_b)² con elementi X[α,α']·Y[β,β'].
    """
    x = as_matrix(x, "X")
    y = as_matrix(y, "Y")
    if space is not None:
        space.check_operator_a(x, "X")
        space.check_operator_b(y, "Y")
    return np.kron(x, y)


def partial_trace_factor(m, dims: Sequence[int], axis: int) -> np.ndarray:
    """
    Traccia parziale sul fattore `axis` di un prodotto tensoriale a più fattori.

    :param m: Operatore sul prodotto dei fattori `dims` (ordine A-major).
    :param dims: Dimensioni dei fattori.
    :param axis: Indice del fattore da tracciare.
    :return: Operatore sui fattori rimanenti.
    """
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    m = check_square(m, total, "operatore")
    if not 0 <= axis < len(dims):
        raise DimensionError(f"fattore {axis} fuori intervallo per dims {dims}")
    n = len(dims)
    tensor = m.reshape(dims + dims)
    traced = np.trace(tensor, axis1=axis, axis2=n + axis)
    kept = total // dims[axis]
    return traced.reshape(kept, kept)


def partial_trace_a(m, space: BipartiteSpace) -> np.ndarray:
    """
    Traccia parziale su A: X_B[β,β'] = Σ_α M[αβ, αβ'].

    Lineare e conserva la traccia.
    """
    m = space.check_operator(m, "M")
    return np.einsum("abac->bc", m.reshape(space.dim_a, space.dim_b, space.dim_a, space.dim_b))


def partial_trace_b(m, space: BipartiteSpace) -> np.ndarray:
    """Traccia parziale su B: X_A[α,α'] = Σ_β M[αβ, α'β]."""
    m = space.check_operator(m, "M")
    return np.einsum("abcb->ac", m.reshape(space.dim_a, space.dim_b, space.dim_a, space.dim_b))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """
    Decomposizione spettrale di un operatore hermitiano.

    Attributi:
    -----------
    eigenvalues (np.ndarray): Autovalori reali in ordine decrescente.
    eigenvectors (np.ndarray): Autovettori ortonormali disposti per colonne.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def pairs(self) -> List[Tuple[float, np.ndarray]]:
        return [(float(self.eigenvalues[k]), self.eigenvectors[:, k]) for k in range(len(self.eigenvalues))]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)

    def apply_function(self, f) -> np.ndarray:
        """Calcola f(H) = Σ f(λ)|v><v|."""
        v = self.eigenvectors
        return (v * f(self.eigenvalues)) @ dagger(v)

    def orthonormality_residual(self) -> float:
        v = self.eigenvectors
        return float(np.max(np.abs(dagger(v) @ v - np.eye(v.shape[1])))) if v.size else 0.0


def spectral_decompose(h, tol=None) -> SpectralDecomposition:
    """
    Decomposizione spettrale di un operatore hermitiano.

    :param h: Operatore hermitiano entro la tolleranza ε_herm = 1e-10·dim.
    :param tol: Tolleranza di hermitianità alternativa.
    :return: SpectralDecomposition con autovalori decrescenti.
    """
    h = require_hermitian(h, "H", tol)
    values, vectors = la.eigh(h)
    order = np.argsort(values)[::-1]
    decomposition = SpectralDecomposition(values[order], vectors[:, order])
    logging.debug(f"Decomposizione spettrale di dimensione {h.shape[0]} completata.")
    return decomposition


def matrix_to_pairs(m) -> List[List[List[float]]]:
    """Serializza una matrice complessa come lista di righe di coppie [re, im]."""
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def pairs_to_matrix(data, name="matrice") -> np.ndarray:
    """Inverso di matrix_to_pairs; accetta anche numeri reali al posto delle coppie."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return as_matrix(arr[..., 0] + 1j * arr[..., 1], name)
    return as_matrix(arr, name)
