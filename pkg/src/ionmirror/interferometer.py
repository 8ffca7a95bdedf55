"""Beam-splitter combination of the two cavity outputs and photodetection post-selection."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import product
from typing import Optional, Tuple, Union

import numpy as np

from .fock import (
    FIELD_1,
    FIELD_2,
    ION_VIBRATION,
    MIRROR,
    InvalidDimensionError,
    ModeLayout,
    StateVector,
    coherent_amplitudes,
    coherent_overlap,
    tensor,
)
from .ion import IonParams, IonPreparationResult, Sideband
from .optomech import OmParams, OmPreparationResult, decay_to_detection

#: creation-operator map, column j is the image of input mode j:
#: a^dag -> (a^dag + A^dag)/sqrt2, A^dag -> (a^dag - A^dag)/sqrt2
BALANCED = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
#: a^dag -> (a^dag + A^dag)/sqrt2, A^dag -> (A^dag - a^dag)/sqrt2; swaps which detector carries the minus sign
ALTERNATE = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2.0)
DEFAULT_CONVENTION = BALANCED

ZERO_PROBABILITY = 1e-300


class Detector(str, enum.Enum):
    D_A = "D_A"
    D_B = "D_B"
    NONE = "none"
    MULTI = "multi"


#: output occupations (mode 1, mode 2) selected by each single-count detector
SINGLE_COUNT = {Detector.D_A: (1, 0), Detector.D_B: (0, 1), Detector.NONE: (0, 0)}


@dataclass(frozen=True)
class DetectorOutcome:
    which: Detector
    probability: float


def two_mode_unitary(mode_matrix: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Fock-space matrix of a linear two-mode transformation.

    Total-photon sectors small enough to fit both truncations are mapped
    exactly; states in incomplete sectors are left untouched, which keeps the
    result unitary.
    """
    u = np.asarray(mode_matrix, dtype=complex)
    n_complete = min(d1, d2) - 1
    dim = d1 * d2
    out = np.zeros((dim, dim), dtype=complex)
    for n1, n2 in product(range(d1), range(d2)):
        col = n1 * d2 + n2
        if n1 + n2 > n_complete:
            out[col, col] = 1.0
            continue
        # (u00 a^dag + u10 A^dag)^n1 (u01 a^dag + u11 A^dag)^n2 |0,0> / sqrt(n1! n2!)
        poly = {(0, 0): 1.0 + 0j}
        for j, count in ((0, n1), (1, n2)):
            for _ in range(count):
                nxt = {}
                for (p, q), c in poly.items():
                    nxt[(p + 1, q)] = nxt.get((p + 1, q), 0) + c * u[0, j]
                    nxt[(p, q + 1)] = nxt.get((p, q + 1), 0) + c * u[1, j]
                poly = nxt
        norm_in = math.sqrt(math.factorial(n1) * math.factorial(n2))
        for (p, q), c in poly.items():
            out[p * d2 + q, col] += c * math.sqrt(math.factorial(p) * math.factorial(q)) / norm_in
    return out


def beam_splitter(
    state: StateVector,
    mode1: Union[int, str] = FIELD_1,
    mode2: Union[int, str] = FIELD_2,
    convention: np.ndarray = DEFAULT_CONVENTION,
    inverse: bool = False,
) -> StateVector:
    d1, d2 = state.layout.dim(mode1), state.layout.dim(mode2)
    if d1 != 3 or d2 != 3:
        raise InvalidDimensionError(f"beam splitter needs two dimension-3 field modes, got {d1}, {d2}")
    u = np.asarray(convention, dtype=complex)
    if inverse:
        u = u.conj().T
    return state.apply_local(two_mode_unitary(u, d1, d2), [mode1, mode2])


def _field_weights(state: StateVector, mode1, mode2) -> np.ndarray:
    i, j = state.layout.index(mode1), state.layout.index(mode2)
    psi = np.moveaxis(state.tensor_view(), [i, j], [0, 1])
    w = np.abs(psi) ** 2
    return w.reshape(psi.shape[0], psi.shape[1], -1).sum(axis=2)


def outcome_probabilities(
    state: StateVector, mode1: Union[int, str] = FIELD_1, mode2: Union[int, str] = FIELD_2
) -> dict:
    """Exhaustive outcome probabilities, relative to the state's stored norm."""
    w = _field_weights(state, mode1, mode2) / state.stored_norm
    n1 = np.arange(w.shape[0])[:, None]
    n2 = np.arange(w.shape[1])[None, :]
    return {
        Detector.D_A: float(w[1, 0]),
        Detector.D_B: float(w[0, 1]),
        Detector.NONE: float(w[0, 0]),
        Detector.MULTI: float(w[(n1 + n2) >= 2].sum()),
    }


def detect(
    state: StateVector,
    which: Union[Detector, str],
    mode1: Union[int, str] = FIELD_1,
    mode2: Union[int, str] = FIELD_2,
) -> Tuple[Optional[StateVector], float]:
    """Post-select on a detector outcome.

    Single-count and no-count outcomes contract both field modes and return the
    normalized remainder. The multi-photon outcome keeps the field modes (the
    remainder is not a pure state of the other modes) with everything outside
    the two-photon-or-more sector zeroed. A zero-probability outcome returns
    ``(None, 0.0)``.
    """
    which = Detector(which)
    prob = outcome_probabilities(state, mode1, mode2)[which]
    if prob <= ZERO_PROBABILITY:
        return None, 0.0
    if which is Detector.MULTI:
        i, j = state.layout.index(mode1), state.layout.index(mode2)
        psi = np.moveaxis(state.tensor_view(), [i, j], [0, 1]).copy()
        n1 = np.arange(psi.shape[0])[:, None]
        n2 = np.arange(psi.shape[1])[None, :]
        psi[(n1 + n2) < 2] = 0.0
        psi = np.moveaxis(psi, [0, 1], [i, j])
        return StateVector(state.layout, psi.reshape(-1)).normalized(), prob
    o1, o2 = SINGLE_COUNT[which]
    i, j = sorted((state.layout.index(mode1), state.layout.index(mode2)))
    occ = {state.layout.index(mode1): o1, state.layout.index(mode2): o2}
    rest = state.project(j, occ[j]).project(i, occ[i])
    return rest.normalized(), prob


@dataclass(frozen=True)
class HybridTwoTermState:
    """c1 |v1>_v |beta1>_m + c2 |v2>_v |beta2>_m with vibrational labels (v1, v2)."""

    c1: complex
    beta1: complex
    c2: complex
    beta2: complex
    vib_labels: tuple = (0, 1)
    normalized_flag: bool = False

    @property
    def overlap(self) -> complex:
        return coherent_overlap(self.beta1, self.beta2)

    @property
    def norm(self) -> float:
        n = abs(self.c1) ** 2 + abs(self.c2) ** 2
        if self.vib_labels[0] == self.vib_labels[1]:
            n += 2 * (self.c1.conjugate() * self.c2 * self.overlap).real
        return n

    def normalized(self) -> "HybridTwoTermState":
        s = math.sqrt(self.norm)
        return HybridTwoTermState(
            self.c1 / s, self.beta1, self.c2 / s, self.beta2, self.vib_labels, True
        )

    def to_state(self, vib_dim: int, mirror_dim: int) -> StateVector:
        amps = np.zeros((vib_dim, mirror_dim), dtype=complex)
        amps[self.vib_labels[0]] += self.c1 * coherent_amplitudes(self.beta1, mirror_dim)
        amps[self.vib_labels[1]] += self.c2 * coherent_amplitudes(self.beta2, mirror_dim)
        layout = ModeLayout((vib_dim, mirror_dim), (ION_VIBRATION, MIRROR))
        return StateVector(layout, amps.reshape(-1))


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    """Post-selected hybrid state from both routes.

    ``hybrid`` comes from two-branch algebra on the prepared coefficients,
    ``state`` from the full truncated-basis pipeline. ``hybrid`` and ``state``
    are None for a zero-probability outcome.
    """

    hybrid: Optional[HybridTwoTermState]
    state: Optional[StateVector]
    outcome: DetectorOutcome
    probabilities: dict
    analytic_probability: float
    sideband: Sideband
    joint_norm: float = 1.0

    @property
    def empty(self) -> bool:
        return self.state is None


def joint_state(ion: IonPreparationResult, om: OmPreparationResult) -> StateVector:
    """Product of the two prepared arms, ordered (field-1, ion-vibration, field-2, mirror)."""
    return tensor(ion.state, om.state)


def _analytic_postselection(ion, om, t, gamma, Gamma, which, convention):
    sideband = ion.sideband
    (z_occ, o_occ) = ((0, sideband.vib_labels[0]), (1, sideband.vib_labels[1]))
    x0, x1 = ion.state.amplitude(z_occ), ion.state.amplitude(o_occ)
    x1 *= math.exp(-0.5 * gamma * t)
    terms = {term.photons: term for term in om.analytic_terms}
    y0, y1 = terms[0].coefficient, terms[1].coefficient * math.exp(-0.5 * Gamma * t)
    beta_dark, beta_bright = terms[0].amplitude, terms[1].amplitude
    total = (abs(x0) ** 2 + abs(x1) ** 2) * (abs(y0) ** 2 + abs(y1) ** 2)
    # input |1,0> (ion photon) carries x1 y0; input |0,1> (mirror-arm photon) carries x0 y1
    u = np.asarray(convention, dtype=complex)
    row = 0 if which is Detector.D_A else 1
    ion_photon = x1 * y0 * u[row, 0]
    om_photon = x0 * y1 * u[row, 1]
    v_ion, v_om = sideband.vib_labels[1], sideband.vib_labels[0]
    branches = sorted(
        [(v_ion, ion_photon, beta_dark), (v_om, om_photon, beta_bright)], key=lambda b: b[0]
    )
    hybrid = HybridTwoTermState(
        complex(branches[0][1]), complex(branches[0][2]),
        complex(branches[1][1]), complex(branches[1][2]),
        (branches[0][0], branches[1][0]),
    )
    prob = hybrid.norm / total
    return hybrid, prob


def run_protocol(
    ion: IonPreparationResult,
    om: OmPreparationResult,
    t: float = 0.0,
    rates: Optional[Tuple[float, float]] = None,
    outcome: Union[Detector, str] = Detector.D_B,
    convention: np.ndarray = DEFAULT_CONVENTION,
) -> ProtocolResult:
    """Joint state -> decay to detection time t -> beam splitter -> post-selection.

    ``rates`` defaults to (gamma, Gamma) from the prepared arms' parameters.
    """
    which = Detector(outcome)
    if which not in (Detector.D_A, Detector.D_B):
        raise ValueError("run_protocol post-selects on a single count (D_A or D_B)")
    gamma, Gamma = rates if rates is not None else (ion.params.gamma, om.params.Gamma)
    joint = joint_state(ion, om)
    joint = decay_to_detection(joint, FIELD_1, gamma, t)
    joint = decay_to_detection(joint, FIELD_2, Gamma, t)
    mixed = beam_splitter(joint, FIELD_1, FIELD_2, convention)
    probabilities = outcome_probabilities(mixed)
    remainder, prob = detect(mixed, which)
    hybrid, analytic_prob = _analytic_postselection(ion, om, t, gamma, Gamma, which, convention)
    if remainder is None or hybrid.norm <= ZERO_PROBABILITY:
        return ProtocolResult(
            None, None, DetectorOutcome(which, 0.0), probabilities, analytic_prob,
            ion.sideband, joint.stored_norm,
        )
    return ProtocolResult(
        hybrid.normalized(), remainder, DetectorOutcome(which, prob), probabilities,
        analytic_prob, ion.sideband, joint.stored_norm,
    )


def printed_coefficients(
    sideband: Union[Sideband, str], ion_params: IonParams, om_params: OmParams, t: float = 0.0
) -> Tuple[complex, complex]:
    """Printed post-selected coefficients (C1, C2), C1 on |0>_v and C2 on |1>_v."""
    sideband = Sideband(sideband)
    x = math.pi**2 * ion_params.gamma / (8.0 * ion_params.etaG)
    ion_factor = math.exp(-0.5 * ion_params.gamma * t) * math.cosh(x) * math.cos(ion_params.theta)
    om_factor = (
        math.exp(-0.5 * om_params.Gamma * t)
        * math.exp(-math.pi * om_params.Gamma / (2.0 * om_params.Omega_m))
        * complex(math.cos(math.pi * om_params.kappa**2), math.sin(math.pi * om_params.kappa**2))
    )
    if sideband is Sideband.RED:
        return om_factor, complex(ion_factor)
    return complex(0.5 * ion_factor), 0.5 * om_factor * math.sin(ion_params.theta)


def coefficient_ratio_comparison(result: ProtocolResult, printed: Tuple[complex, complex]) -> complex:
    """(C1/C2 from first principles) / (C1/C2 as printed)."""
    h = result.hybrid
    return (h.c1 / h.c2) / (printed[0] / printed[1])
