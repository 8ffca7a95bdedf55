"""Trapped ion in a lossy cavity: Hamiltonians, conditional evolution and closed forms.

Electronic basis ordering is index 0 = |g>, index 1 = |e>.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .fock import (
    FIELD_1,
    FIELD_DIM,
    HBAR,
    ION_ELECTRONIC,
    ION_VIBRATION,
    Hermiticity,
    ModeLayout,
    Operator,
    StateVector,
    embed,
    expm_apply,
    fidelity,
    ladder,
)

GROUND = 0
EXCITED = 1

VIB_DIM = 3
LAMB_DICKE_WARNING = 0.3

_SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
_SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)


class Sideband(str, enum.Enum):
    RED = "red"
    BLUE = "blue"

    def detuning(self, omega_v: float) -> float:
        """omega_0 - omega_c selecting this sideband."""
        return omega_v if self is Sideband.RED else -omega_v

    @property
    def vib_labels(self) -> tuple:
        """Vibrational occupation paired with (no cavity photon, one cavity photon)."""
        return (0, 1) if self is Sideband.RED else (1, 0)


@dataclass(frozen=True)
class IonParams:
    """Ion-cavity parameters in rad/s (natural units, hbar = 1).

    ``xi`` is a phase on the |g> branch of the blue-sideband preparation.
    """

    G: float = 10.0
    eta: float = 0.1
    gamma: float = 0.0
    theta: float = math.pi / 4
    xi: float = 0.0
    omega_c: float = 0.0
    omega_v: float = 0.0
    omega_0: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.G > 0:
            raise ValueError(f"G must be positive, got {self.G}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if not 0.0 <= self.theta <= math.pi / 2 + 1e-15:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")

    @property
    def etaG(self) -> float:
        return self.eta * self.G

    @property
    def t_transfer(self) -> float:
        """pi / (2 eta G), the full-transfer time."""
        return math.pi / (2.0 * self.etaG)

    @property
    def outside_lamb_dicke(self) -> bool:
        return self.eta >= LAMB_DICKE_WARNING


def ion_layout(field_dim: int = FIELD_DIM, vib_dim: int = VIB_DIM) -> ModeLayout:
    return ModeLayout((field_dim, vib_dim, 2), (FIELD_1, ION_VIBRATION, ION_ELECTRONIC))


def _mode_ops(layout: ModeLayout):
    a = embed(ladder(layout.dim(FIELD_1)).matrix, layout, FIELD_1)
    b = embed(ladder(layout.dim(ION_VIBRATION)).matrix, layout, ION_VIBRATION)
    sp = embed(_SIGMA_PLUS, layout, ION_ELECTRONIC)
    return a, b, sp


def _operator_sine(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(x)
    return (v * np.sin(w)) @ v.conj().T


def build_full_ion_hamiltonian(p: IonParams, layout: Optional[ModeLayout] = None) -> Operator:
    """Full ion-cavity Hamiltonian with the nonlinear sin[eta (b + b^dag)] coupling."""
    layout = layout or ion_layout()
    vib_dim = layout.dim(ION_VIBRATION)
    b_local = ladder(vib_dim).matrix
    sine_local = _operator_sine(p.eta * (b_local + b_local.conj().T))
    a, b, sp = _mode_ops(layout)
    sine = embed(sine_local, layout, ION_VIBRATION)
    sz = embed(_SIGMA_Z, layout, ION_ELECTRONIC)
    h = (
        p.omega_c * a.conj().T @ a
        + p.omega_v * b.conj().T @ b
        + 0.5 * p.omega_0 * sz
        + p.G * (sp + sp.conj().T) @ (a + a.conj().T) @ sine
    )
    h = 0.5 * (h + h.conj().T)
    return Operator(layout, HBAR * h, Hermiticity.HERMITIAN)


def build_sideband_hamiltonian(
    p: IonParams, sideband: Sideband, with_jump: bool = True, layout: Optional[ModeLayout] = None
) -> Operator:
    """Interaction-picture sideband Hamiltonian, optionally with the no-click decay term.

    red:  eta G (s- a^dag b^dag + s+ a b)
    blue: eta G (s- a^dag b + s+ a b^dag)
    """
    layout = layout or ion_layout()
    sideband = Sideband(sideband)
    a, b, sp = _mode_ops(layout)
    sm = sp.conj().T
    ad, bd = a.conj().T, b.conj().T
    if sideband is Sideband.RED:
        coupling = sm @ ad @ bd + sp @ a @ b
    else:
        coupling = sm @ ad @ b + sp @ a @ bd
    h = HBAR * p.etaG * coupling
    if with_jump:
        h = h - 0.5j * HBAR * p.gamma * (ad @ a)
        flag = Hermiticity.NON_HERMITIAN if p.gamma > 0 else Hermiticity.HERMITIAN
    else:
        flag = Hermiticity.HERMITIAN
    return Operator(layout, h, flag)


def initial_ion_state(
    p: IonParams, sideband: Sideband, layout: Optional[ModeLayout] = None
) -> StateVector:
    """|0>_1 |v0>_v (cos theta |e> + e^{i xi} sin theta |g>), v0 = 0 (red) or 1 (blue)."""
    layout = layout or ion_layout()
    v0 = Sideband(sideband).vib_labels[0]
    amps = np.zeros(layout.total, dtype=complex)
    amps[layout.basis_index((0, v0, EXCITED))] = math.cos(p.theta)
    ground_phase = cmath.exp(1j * p.xi) if Sideband(sideband) is Sideband.BLUE else 1.0
    amps[layout.basis_index((0, v0, GROUND))] = ground_phase * math.sin(p.theta)
    return StateVector(layout, amps)


@dataclass(frozen=True, eq=False)
class IonPreparationResult:
    """Normalized (field-1, ion-vibration) state after projecting the ion onto |g>.

    ``closed_form_coefficients`` are the unnormalized amplitudes of the
    no-photon branch and the one-photon branch, in that order.
    ``success_probability`` is the conditional probability of finding |g>
    given no photon was emitted; ``no_click_norm`` is the squared norm the
    no-click evolution left behind.
    """

    state: StateVector
    success_probability: float
    closed_form_coefficients: tuple
    sideband: Sideband
    t_prime: float
    params: IonParams
    no_click_norm: float = 1.0
    method: str = "propagator"


def branch_occupations(sideband: Sideband) -> tuple:
    """((n1, nv) of the no-photon branch, (n1, nv) of the one-photon branch)."""
    v0, v1 = Sideband(sideband).vib_labels
    return (0, v0), (1, v1)


def project_electronic(state: StateVector, level: int = GROUND):
    """Project the electronic mode onto ``level``.

    Returns the unnormalized remainder over the other modes, its squared norm
    and the squared norm of the orthogonal projection.
    """
    kept = state.project(ION_ELECTRONIC, level)
    other = state.project(ION_ELECTRONIC, 1 - level)
    return kept, kept.stored_norm, other.stored_norm


def _result_from_projection(
    projected: StateVector, total_norm: float, sideband, t_prime, p, method
) -> IonPreparationResult:
    if projected.stored_norm <= 0.0:
        raise ValueError("projection onto |g> has zero probability")
    zero, one = branch_occupations(sideband)
    coeffs = (projected.amplitude(zero), projected.amplitude(one))
    prob = projected.stored_norm / total_norm if total_norm > 0 else 0.0
    return IonPreparationResult(
        state=projected.normalized(),
        success_probability=prob,
        closed_form_coefficients=coeffs,
        sideband=Sideband(sideband),
        t_prime=t_prime,
        params=p,
        no_click_norm=total_norm,
        method=method,
    )


def prepare_ion(
    p: IonParams,
    sideband: Sideband,
    t_prime: Optional[float] = None,
    layout: Optional[ModeLayout] = None,
) -> IonPreparationResult:
    """No-click evolution under the sideband Hamiltonian, then projection onto |g>."""
    t_prime = p.t_transfer if t_prime is None else t_prime
    if t_prime < 0:
        raise ValueError("t_prime must be nonnegative")
    layout = layout or ion_layout()
    h = build_sideband_hamiltonian(p, sideband, with_jump=True, layout=layout)
    evolved = expm_apply(h, t_prime, initial_ion_state(p, sideband, layout))
    projected, _, _ = project_electronic(evolved, GROUND)
    return _result_from_projection(
        projected, evolved.stored_norm, sideband, t_prime, p, "propagator"
    )


def prepare_ion_red(p: IonParams, t_prime: Optional[float] = None, **kw) -> IonPreparationResult:
    return prepare_ion(p, Sideband.RED, t_prime, **kw)


def prepare_ion_blue(p: IonParams, t_prime: Optional[float] = None, **kw) -> IonPreparationResult:
    return prepare_ion(p, Sideband.BLUE, t_prime, **kw)


def block_amplitudes(p: IonParams, t_prime: float) -> tuple:
    """Exact evolution of (excited, photon-emitted) amplitudes starting from (1, 0).

    The no-click generator restricted to the two coupled states is
    [[0, eta G], [eta G, -i gamma/2]], with eigenvalues
    -i gamma/4 +- sqrt((eta G)^2 - (gamma/4)^2).
    """
    g, q = p.etaG, p.gamma / 4.0
    omega = cmath.sqrt(g * g - q * q)
    # sin(omega t)/omega stays finite at the exceptional point omega -> 0
    if abs(omega * t_prime) < 1e-8:
        sinc = t_prime * (1 - (omega * t_prime) ** 2 / 6)
    else:
        sinc = cmath.sin(omega * t_prime) / omega
    damp = math.exp(-q * t_prime)
    excited = damp * (cmath.cos(omega * t_prime) + q * sinc)
    emitted = damp * (-1j * g * sinc)
    return excited, emitted


def ion_block_oracle(
    p: IonParams, sideband: Sideband, t_prime: Optional[float] = None,
    layout: Optional[ModeLayout] = None,
) -> IonPreparationResult:
    """Conditional state from the closed 2x2 non-Hermitian evolution (no matrix exponential)."""
    t_prime = p.t_transfer if t_prime is None else t_prime
    layout = layout or ion_layout()
    sideband = Sideband(sideband)
    excited, emitted = block_amplitudes(p, t_prime)
    ground = math.sin(p.theta) * (cmath.exp(1j * p.xi) if sideband is Sideband.BLUE else 1.0)
    photon = emitted * math.cos(p.theta)
    sub = layout.without([ION_ELECTRONIC])
    zero, one = branch_occupations(sideband)
    amps = np.zeros(sub.total, dtype=complex)
    amps[sub.basis_index(zero)] = ground
    amps[sub.basis_index(one)] = photon
    projected = StateVector(sub, amps)
    total = abs(ground) ** 2 + abs(photon) ** 2 + abs(excited * math.cos(p.theta)) ** 2
    return _result_from_projection(projected, total, sideband, t_prime, p, "block-oracle")


def closed_form_coefficients(
    p: IonParams, sideband: Sideband, t_prime: float, blue_decay_time: float = 0.0
) -> tuple:
    """Printed closed-form branch coefficients after projection onto |g>, unnormalized.

    The red photon branch carries exp(-gamma t') on its sinh term and the blue
    one exp(-gamma t'/2), reproduced as printed. ``blue_decay_time`` is the time
    in the extra exp(-gamma t/2) of the blue result, whose argument is left
    unspecified; 0 reproduces the general-t' expression.
    """
    sideband = Sideband(sideband)
    g = p.etaG
    x = 0.5 * p.gamma * g * t_prime**2
    c, s = math.cos(g * t_prime), math.sin(g * t_prime)
    cos_th, sin_th = math.cos(p.theta), math.sin(p.theta)
    if sideband is Sideband.RED:
        photon = (
            1j * c * math.exp(-p.gamma * t_prime) * math.sinh(x) - 1j * s * math.cosh(x)
        ) * cos_th
        return complex(sin_th), complex(photon)
    photon = (
        -1j * c * math.exp(-0.5 * p.gamma * t_prime) * math.sinh(x) - 1j * s * math.cosh(x)
    ) * cos_th * math.exp(-0.5 * p.gamma * blue_decay_time)
    return cmath.exp(1j * p.xi) * sin_th, complex(photon)


def closed_form_ion_state(
    p: IonParams,
    sideband: Sideband,
    t_prime: Optional[float] = None,
    blue_decay_time: float = 0.0,
    layout: Optional[ModeLayout] = None,
) -> IonPreparationResult:
    t_prime = p.t_transfer if t_prime is None else t_prime
    layout = layout or ion_layout()
    sub = layout.without([ION_ELECTRONIC])
    zero, one = branch_occupations(sideband)
    c0, c1 = closed_form_coefficients(p, sideband, t_prime, blue_decay_time)
    if c0 == 0 and c1 == 0:
        raise ValueError("projection onto |g> has zero probability")
    amps = np.zeros(sub.total, dtype=complex)
    amps[sub.basis_index(zero)] = c0
    amps[sub.basis_index(one)] = c1
    projected = StateVector(sub, amps)
    return IonPreparationResult(
        state=projected.normalized(),
        success_probability=p_no_detection_formula(p) if Sideband(sideband) is Sideband.RED else float("nan"),
        closed_form_coefficients=(c0, c1),
        sideband=Sideband(sideband),
        t_prime=t_prime,
        params=p,
        no_click_norm=float("nan"),
        method="closed-form",
    )


def blue_closed_form_variants(p: IonParams, layout: Optional[ModeLayout] = None) -> dict:
    """Both readings of the blue result's extra decay factor: t = 0 and t = t'."""
    t = p.t_transfer
    return {
        "t=0": closed_form_ion_state(p, Sideband.BLUE, t, 0.0, layout),
        "t=t'": closed_form_ion_state(p, Sideband.BLUE, t, t, layout),
    }


def closed_form_fidelity_gap(
    p: IonParams, sideband: Sideband, t_prime: Optional[float] = None,
    reference: str = "oracle",
) -> float:
    """1 - fidelity between the printed closed form and an exact route.

    ``reference`` is "oracle" (2x2 closed evolution) or "propagator".
    """
    closed = closed_form_ion_state(p, sideband, t_prime)
    if reference == "oracle":
        exact = ion_block_oracle(p, sideband, t_prime)
    elif reference == "propagator":
        exact = prepare_ion(p, sideband, t_prime)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    # 1 - |<a|b>|^2 computed from the orthogonal component to avoid cancellation
    a, b = closed.state.amplitudes, exact.state.amplitudes
    overlap = np.vdot(a, b)
    residual = b - overlap * a
    return float(np.vdot(residual, residual).real)


def p_no_detection_formula(p: IonParams) -> float:
    if abs(p.theta - math.pi / 2) <= 1e-15:
        return 1.0
    x = math.pi**2 * p.gamma / (8.0 * p.etaG)
    cos2 = math.cos(p.theta) ** 2
    # multiplied through by cos^2(theta) to avoid tan overflow near pi/2
    correction = (
        math.exp(-math.pi * p.gamma / p.etaG) * math.sinh(x) ** 2 * cos2
        / (math.cosh(x) ** 2 * cos2 + math.sin(p.theta) ** 2)
    )
    return 1.0 / (1.0 + correction)


class NoDetection(NamedTuple):
    formula: float
    propagator: float


def p_no_detection_red(p: IonParams) -> NoDetection:
    """Probability of |g> after the no-click red-sideband evolution to t' = pi/(2 eta G).

    Returns the printed formula and the propagator value |<g|psi>|^2 / <psi|psi>.
    """
    return NoDetection(
        p_no_detection_formula(p), prepare_ion(p, Sideband.RED).success_probability
    )


def state_fidelity(a: IonPreparationResult, b: IonPreparationResult) -> float:
    return fidelity(a.state, b.state)
