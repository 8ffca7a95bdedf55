"""Optomechanical cavity: radiation-pressure Hamiltonian, no-click evolution, closed form."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .fock import (
    FIELD_2,
    FIELD_DIM,
    HBAR,
    MIRROR,
    Hermiticity,
    ModeLayout,
    Operator,
    StateVector,
    TruncationError,
    coherent_amplitudes,
    embed,
    expm_apply,
    ladder,
    mirror_dim_for,
)


@dataclass(frozen=True)
class OmParams:
    Omega_m: float = 1.0
    g: float = 1.0
    Gamma: float = 0.0
    alpha0: complex = 1.0
    Omega_c: float = 0.0

    def __post_init__(self):
        if not self.Omega_m > 0:
            raise ValueError(f"Omega_m must be positive, got {self.Omega_m}")
        if not self.Gamma >= 0:
            raise ValueError(f"Gamma must be nonnegative, got {self.Gamma}")
        object.__setattr__(self, "alpha0", complex(self.alpha0))

    @property
    def kappa(self) -> float:
        return self.g / self.Omega_m

    @property
    def t_half(self) -> float:
        """Half a mechanical period, pi / Omega_m."""
        return math.pi / self.Omega_m


class BranchTerm(NamedTuple):
    photons: int
    amplitude: complex
    coefficient: complex


@dataclass(frozen=True, eq=False)
class OmPreparationResult:
    """Normalized (field-2, mirror) state with its two-branch analytic form.

    ``norm_constant`` is the M multiplying the unnormalized branch weights
    1 and exp(-Gamma t/2) exp(i phi).
    """

    state: StateVector
    analytic_terms: tuple
    norm_constant: float
    t_dprime: float
    params: OmParams


def mirror_extent(p: OmParams) -> float:
    """Largest coherent magnitude visited by either photon branch.

    The one-photon branch circles kappa with radius |alpha0 - kappa|.
    """
    return max(abs(p.alpha0), abs(p.alpha0 - p.kappa) + abs(p.kappa))


def om_layout(
    p: OmParams, field_dim: int = FIELD_DIM, mirror_dim: Optional[int] = None, check: bool = True
) -> ModeLayout:
    """(field-2, mirror) layout; an explicit ``mirror_dim`` must satisfy the truncation rule."""
    need = mirror_dim_for(mirror_extent(p))
    if mirror_dim is None:
        mirror_dim = need
    elif check and mirror_dim < need:
        raise TruncationError(f"mirror dimension {mirror_dim} too small for these parameters; need {need}")
    return ModeLayout((field_dim, mirror_dim), (FIELD_2, MIRROR))


def build_om_hamiltonian(
    p: OmParams, with_jump: bool = True, layout: Optional[ModeLayout] = None
) -> Operator:
    """Omega_c A^dag A + Omega_m B^dag B - g A^dag A (B + B^dag) [- i Gamma/2 A^dag A]."""
    layout = layout or om_layout(p)
    a = embed(ladder(layout.dim(FIELD_2)).matrix, layout, FIELD_2)
    b = embed(ladder(layout.dim(MIRROR)).matrix, layout, MIRROR)
    n_photon = a.conj().T @ a
    h = (
        p.Omega_c * n_photon
        + p.Omega_m * b.conj().T @ b
        - p.g * n_photon @ (b + b.conj().T)
    )
    flag = Hermiticity.HERMITIAN
    if with_jump:
        h = h - 0.5j * p.Gamma * n_photon
        if p.Gamma > 0:
            flag = Hermiticity.NON_HERMITIAN
    return Operator(layout, HBAR * h, flag)


def initial_om_state(p: OmParams, layout: Optional[ModeLayout] = None) -> StateVector:
    """(|0>_2 + |1>_2)|alpha0>_m / sqrt(2)."""
    layout = layout or om_layout(p)
    field = np.zeros(layout.dim(FIELD_2), dtype=complex)
    field[:2] = 1.0 / math.sqrt(2.0)
    mirror = coherent_amplitudes(p.alpha0, layout.dim(MIRROR))
    return StateVector(layout, np.kron(field, mirror))


def _rotate_photon_sectors(state: StateVector, mode, phase_per_photon: float) -> StateVector:
    n = np.arange(state.layout.dim(mode))
    return state.apply_local(np.diag(np.exp(1j * phase_per_photon * n)), [mode])


def evolve_om_conditional(
    p: OmParams, initial: StateVector, t_dprime: float, frame: str = "interaction"
) -> StateVector:
    """No-click evolution by t''.

    In the "interaction" frame the free optical rotation exp(-i Omega_c n t'')
    is removed afterwards; "lab" keeps it.
    """
    if t_dprime < 0:
        raise ValueError("t_dprime must be nonnegative")
    h = build_om_hamiltonian(p, with_jump=True, layout=initial.layout)
    out = expm_apply(h, t_dprime, initial)
    if frame == "interaction" and p.Omega_c != 0:
        out = _rotate_photon_sectors(out, FIELD_2, p.Omega_c * t_dprime)
    elif frame not in ("interaction", "lab"):
        raise ValueError(f"unknown frame {frame!r}")
    return out


def branch_amplitude(p: OmParams, photons: int, t_dprime: float) -> complex:
    """alpha(t'') = alpha0 e^{-i Omega_m t''} + n kappa (1 - e^{-i Omega_m t''})."""
    rot = cmath.exp(-1j * p.Omega_m * t_dprime)
    return p.alpha0 * rot + photons * p.kappa * (1.0 - rot)


def branch_phase(p: OmParams, photons: int, t_dprime: float, convention: str = "exact") -> float:
    """Phase acquired by the n-photon branch relative to the vacuum branch.

    "printed" is n^2 kappa^2 (tau - sin tau) with tau = Omega_m t''.
    "exact" is n^2 kappa^2 tau + n kappa [Im alpha0 - Im((alpha0 - n kappa) e^{-i tau})],
    which for real alpha0 equals the printed phase plus n kappa alpha0 sin tau.
    The two coincide when alpha0 = 0, tau in {0, 2 pi}, or tau = pi with real alpha0.
    """
    tau = p.Omega_m * t_dprime
    k, n = p.kappa, photons
    if convention == "printed":
        return n * n * k * k * (tau - math.sin(tau))
    if convention == "exact":
        shifted = (p.alpha0 - n * k) * cmath.exp(-1j * tau)
        return n * n * k * k * tau + n * k * (p.alpha0.imag - shifted.imag)
    raise ValueError(f"unknown phase convention {convention!r}")


def closed_form_terms(p: OmParams, t_dprime: float, convention: str = "exact"):
    """Normalized two-branch form: returns (terms, M)."""
    decay = math.exp(-0.5 * p.Gamma * t_dprime)
    norm_constant = 1.0 / math.sqrt(1.0 + decay * decay)
    terms = (
        BranchTerm(0, branch_amplitude(p, 0, t_dprime), complex(norm_constant)),
        BranchTerm(
            1,
            branch_amplitude(p, 1, t_dprime),
            norm_constant * decay * cmath.exp(1j * branch_phase(p, 1, t_dprime, convention)),
        ),
    )
    return terms, norm_constant


def expand_terms(terms, layout: ModeLayout, field_mode: str = FIELD_2, mirror_mode: str = MIRROR) -> StateVector:
    """Sum_k c_k |n_k>_field |beta_k>_mirror in the truncated basis (field before mirror)."""
    fdim, mdim = layout.dim(field_mode), layout.dim(mirror_mode)
    amps = np.zeros((fdim, mdim), dtype=complex)
    for term in terms:
        amps[term.photons] += term.coefficient * coherent_amplitudes(term.amplitude, mdim)
    return StateVector(ModeLayout((fdim, mdim), (field_mode, mirror_mode)), amps.reshape(-1))


def closed_form_om_state(
    p: OmParams,
    t_dprime: Optional[float] = None,
    layout: Optional[ModeLayout] = None,
    convention: str = "exact",
) -> OmPreparationResult:
    t_dprime = p.t_half if t_dprime is None else t_dprime
    layout = layout or om_layout(p)
    terms, m = closed_form_terms(p, t_dprime, convention)
    return OmPreparationResult(
        state=expand_terms(terms, layout).normalized(),
        analytic_terms=terms,
        norm_constant=m,
        t_dprime=t_dprime,
        params=p,
    )


def prepare_om(
    p: OmParams, t_dprime: Optional[float] = None, layout: Optional[ModeLayout] = None
) -> OmPreparationResult:
    """Propagator-evolved state paired with the exact analytic branch terms."""
    t_dprime = p.t_half if t_dprime is None else t_dprime
    layout = layout or om_layout(p)
    evolved = evolve_om_conditional(p, initial_om_state(p, layout), t_dprime)
    terms, m = closed_form_terms(p, t_dprime, "exact")
    return OmPreparationResult(
        state=evolved.normalized(), analytic_terms=terms, norm_constant=m,
        t_dprime=t_dprime, params=p,
    )


def decay_to_detection(
    state: StateVector, field_mode: Union[int, str], rate: float, t: float
) -> StateVector:
    """Weight each n-photon component of ``field_mode`` by exp(-rate n t / 2); not renormalized."""
    if t < 0:
        raise ValueError("decay time must be nonnegative")
    n = np.arange(state.layout.dim(field_mode))
    return state.apply_local(np.diag(np.exp(-0.5 * rate * n * t)), [field_mode])
