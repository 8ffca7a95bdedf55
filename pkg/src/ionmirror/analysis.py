"""Entanglement of the post-selected ion-mirror states and the local-measurement witness."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fock import (
    ION_VIBRATION,
    MIRROR,
    ModeLayout,
    Operator,
    StateVector,
    TruncationError,
    coherent_amplitudes,
    coherent_overlap,
    expm,
    ladder,
    mirror_dim_for,
    partial_trace,
)
from .interferometer import HybridTwoTermState

WITNESS_THRESHOLD = 0.99
_NORM_TOL = 1e-9


class Method(str, enum.Enum):
    ANALYTIC = "analytic"
    NUMERIC = "numeric"


class Verdict(str, enum.Enum):
    ENTANGLED = "consistent-with-entangled"
    PRODUCT = "consistent-with-product"


@dataclass(frozen=True)
class EntanglementReport:
    schmidt_coefficients: tuple
    entropy_bits: float
    negativity: float
    overlap_s: complex
    method: Method


@dataclass(frozen=True)
class WitnessReport:
    projection_probability: float
    post_displacement_vacuum_probability: Optional[float]
    verdict: Verdict


def entropy_bits(probabilities) -> float:
    p = np.asarray(probabilities, dtype=float)
    p = p[p > 1e-300]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def pure_state_negativity(schmidt) -> float:
    """((sum of Schmidt coefficients)^2 - 1) / 2."""
    lam = np.asarray(schmidt, dtype=float)
    return float(max(0.0, (lam.sum() ** 2 - 1.0) / 2.0))


def _report(schmidt, overlap, method) -> EntanglementReport:
    lam = np.sort(np.clip(np.asarray(schmidt, dtype=float), 0.0, None))[::-1]
    return EntanglementReport(
        schmidt_coefficients=tuple(float(x) for x in lam[:2]),
        entropy_bits=entropy_bits(lam**2),
        negativity=pure_state_negativity(lam),
        overlap_s=complex(overlap),
        method=method,
    )


def entanglement_analytic(h: HybridTwoTermState) -> EntanglementReport:
    """Schmidt spectrum of a two-branch hybrid state from its coherent overlap.

    The mirror branches are Gram-orthogonalized with |beta1> as the first
    direction: |beta2> = s|e1> + sqrt(1-|s|^2)|e2>.
    """
    if h.vib_labels[0] == h.vib_labels[1]:
        raise ValueError("branches must carry distinct vibrational labels")
    if abs(h.norm - 1.0) > _NORM_TOL:
        raise ValueError(f"hybrid state is not normalized (norm {h.norm})")
    s = h.overlap
    r = math.sqrt(max(0.0, 1.0 - abs(s) ** 2))
    coeffs = np.array([[h.c1, 0.0], [h.c2 * s, h.c2 * r]], dtype=complex)
    return _report(np.linalg.svd(coeffs, compute_uv=False), s, Method.ANALYTIC)


def entanglement_numeric(
    state: StateVector, keep=ION_VIBRATION, overlap: complex = float("nan")
) -> EntanglementReport:
    """Schmidt spectrum of ``keep`` against the rest of the modes.

    The spectrum is taken from the singular values of the amplitude matrix,
    which equal the square roots of the reduced density matrix eigenvalues
    without the loss of relative accuracy in the small ones.
    """
    if abs(state.stored_norm - 1.0) > _NORM_TOL:
        raise ValueError(f"state is not normalized (norm {state.stored_norm})")
    i = state.layout.index(keep)
    mat = np.moveaxis(state.tensor_view(), i, 0).reshape(state.layout.dims[i], -1)
    return _report(np.linalg.svd(mat, compute_uv=False), overlap, Method.NUMERIC)


def reduced_spectrum(state: StateVector, keep=ION_VIBRATION) -> np.ndarray:
    """Eigenvalues of the reduced density matrix of ``keep`` (descending)."""
    rho = partial_trace(state, keep)
    return np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[::-1]


def partial_transpose_negativity(state: StateVector, keep=ION_VIBRATION) -> float:
    """Negativity from the partial transpose of |psi><psi| (small layouts only)."""
    i = state.layout.index(keep)
    psi = np.moveaxis(state.tensor_view(), i, 0)
    da = psi.shape[0]
    psi = psi.reshape(da, -1)
    db = psi.shape[1]
    rho = np.einsum("ab,cd->abcd", psi, psi.conj())  # rho[a,b,a',b']
    rho_pt = rho.transpose(2, 1, 0, 3).reshape(da * db, da * db)
    w = np.linalg.eigvalsh(0.5 * (rho_pt + rho_pt.conj().T))
    return float(-w[w < 0].sum())


def displacement_operator(alpha: complex, dim: int, label: str = MIRROR) -> Operator:
    """exp(alpha B^dag - alpha* B) on ``dim`` levels.

    The exponential is taken in an enlarged space and cropped, so the low-lying
    block is free of the truncation edge.
    """
    need = mirror_dim_for(abs(alpha))
    if dim < need:
        raise TruncationError(f"dim {dim} too small for displacement {abs(alpha):.4g}; need {need}")
    big = dim + need + 20
    b = ladder(big).matrix
    gen = alpha * b.conj().T - np.conj(alpha) * b
    return Operator(ModeLayout.single(dim, label), expm(gen)[:dim, :dim])


def _occupied_extent(amplitudes: np.ndarray, tol: float = 1e-14) -> float:
    weights = np.abs(amplitudes) ** 2
    significant = np.nonzero(weights > tol * max(weights.sum(), 1e-300))[0]
    return math.sqrt(significant[-1]) if significant.size else 0.0


def witness(
    state: StateVector, alpha0: complex, threshold: float = WITNESS_THRESHOLD,
    vib_mode=ION_VIBRATION, mirror_mode=MIRROR,
) -> WitnessReport:
    """Project the vibration onto |1>, displace the mirror by alpha0, read the vacuum weight."""
    projected = state.project(vib_mode, 1)
    prob = projected.stored_norm / state.stored_norm
    if prob <= 1e-300:
        return WitnessReport(0.0, None, Verdict.PRODUCT)
    mirror = projected.normalized().amplitudes
    if len(projected.layout) != 1:
        raise ValueError("witness expects a (vibration, mirror) state")
    # pad so that the displaced state stays inside the truncation
    extent = _occupied_extent(mirror) + abs(alpha0)
    dim = max(len(mirror), mirror_dim_for(extent))
    padded = np.zeros(dim, dtype=complex)
    padded[: len(mirror)] = mirror
    displaced = displacement_operator(alpha0, dim).matrix @ padded
    vacuum = float(abs(displaced[0]) ** 2)
    verdict = Verdict.ENTANGLED if vacuum >= threshold else Verdict.PRODUCT
    return WitnessReport(prob, vacuum, verdict)


def product_comparator(alpha0: complex, kappa: float, vib_dim: int = 3, mirror_dim: Optional[int] = None) -> StateVector:
    """Normalized (|-alpha0 + 2 kappa> + |-alpha0>) (x) (|0> + |1>), vibration first."""
    b1, b2 = -alpha0 + 2 * kappa, -alpha0
    if mirror_dim is None:
        mirror_dim = mirror_dim_for(max(abs(b1), abs(b2)))
    mirror = coherent_amplitudes(b1, mirror_dim) + coherent_amplitudes(b2, mirror_dim)
    vib = np.zeros(vib_dim, dtype=complex)
    vib[:2] = 1.0
    layout = ModeLayout((vib_dim, mirror_dim), (ION_VIBRATION, MIRROR))
    return StateVector(layout, np.kron(vib, mirror)).normalized()


def overlap_s(h: HybridTwoTermState) -> complex:
    return coherent_overlap(h.beta1, h.beta2)
