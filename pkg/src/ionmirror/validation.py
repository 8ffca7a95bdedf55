"""Invariant and closed-form-vs-oracle checks run by ``ionmirror validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, List

import mpmath
import numpy as np

from .analysis import entanglement_analytic, entanglement_numeric, product_comparator, witness
from .fock import FIELD_1, FIELD_2, ModeLayout, StateVector, coherent_amplitudes, fidelity
from .interferometer import Detector, beam_splitter, outcome_probabilities, run_protocol
from .ion import IonParams, Sideband, closed_form_fidelity_gap, p_no_detection_formula, prepare_ion
from .optomech import (
    OmParams,
    closed_form_om_state,
    evolve_om_conditional,
    initial_om_state,
    om_layout,
    prepare_om,
)
from .scenario import ScenarioConfig, emit, run_scenario


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: str
    detail: str = ""


PROTOCOL_GRID = list(product((0.0, math.pi / 4, math.pi / 2), (0.0, 0.05), (0.0, 0.1), (0.0, 1.0)))


def check_bell_limit() -> CheckResult:
    row = run_scenario(ScenarioConfig(sideband="red", theta=math.pi / 4, kappa=3.0, outcome="D_B"))
    err = abs(row.entropy_bits - 1.0)
    sym = abs(row.prob_D_A - row.prob_D_B)
    return CheckResult("bell-limit entropy and detector symmetry", err <= 1e-3 and sym <= 1e-10,
                       max(err, sym), "entropy 1e-3, symmetry 1e-10",
                       f"entropy={row.entropy_bits:.12f} |P_A-P_B|={sym:.2e}")


def check_om_closed_form() -> CheckResult:
    worst = 0.0
    for a0, k, gam in product((0.0, 1.0, 2.0), (0.0, 0.5, 1.0), (0.0, 0.1)):
        p = OmParams(g=k, Gamma=gam, alpha0=a0)
        layout = om_layout(p)
        for tau in np.linspace(0.0, 2 * math.pi, 9):
            evolved = evolve_om_conditional(p, initial_om_state(p, layout), tau)
            f = fidelity(evolved, closed_form_om_state(p, tau, layout).state)
            worst = max(worst, 1.0 - f)
    return CheckResult("optomechanical closed form vs propagator", worst <= 1e-8, worst, "1-F <= 1e-8")


def check_ion_perturbative() -> CheckResult:
    d2 = closed_form_fidelity_gap(IonParams(gamma=1e-2), Sideband.RED)
    d3 = closed_form_fidelity_gap(IonParams(gamma=1e-3), Sideband.RED)
    d0 = closed_form_fidelity_gap(IonParams(gamma=0.0), Sideband.RED)
    ratio = d2 / d3
    return CheckResult("ion closed form deficit scales quadratically", 50 <= ratio <= 200 and d0 <= 1e-12,
                       ratio, "ratio in [50, 200], gamma=0 deficit <= 1e-12",
                       f"deficits {d2:.3e} {d3:.3e} {d0:.1e}")


def _p_nd_mp(gamma, etaG, theta):
    with mpmath.workdps(50):
        x = mpmath.pi**2 * gamma / (8 * etaG)
        corr = mpmath.e ** (-mpmath.pi * gamma / etaG) * mpmath.sinh(x) ** 2 / (
            mpmath.cosh(x) ** 2 + mpmath.tan(theta) ** 2)
        return 1 / (1 + corr)


def check_no_detection_formula() -> CheckResult:
    ok = p_no_detection_formula(IonParams(gamma=0.0)) == 1.0
    ok &= p_no_detection_formula(IonParams(gamma=0.3, theta=math.pi / 2)) == 1.0
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        gamma, theta = float(rng.uniform(0, 0.5)), float(rng.uniform(0, math.pi / 2))
        p = IonParams(gamma=gamma, theta=theta)
        worst = max(worst, abs(p_no_detection_formula(p) - float(_p_nd_mp(mpmath.mpf(gamma), mpmath.mpf(p.etaG), mpmath.mpf(theta)))))
    return CheckResult("no-detection probability formula", ok and worst <= 1e-12, worst, "1e-12")


def _protocol(theta, g_ratio, G_ratio, kappa, sideband, outcome, alpha0=1.0):
    ion = prepare_ion(IonParams(gamma=g_ratio, theta=theta), sideband)
    om = prepare_om(OmParams(g=kappa, Gamma=G_ratio, alpha0=alpha0))
    return run_protocol(ion, om, outcome=outcome)


def check_probability_completeness() -> CheckResult:
    worst = 0.0
    for theta, gr, Gr, k in PROTOCOL_GRID:
        r = _protocol(theta, gr, Gr, k, Sideband.RED, Detector.D_B)
        worst = max(worst, abs(sum(r.probabilities.values()) - 1.0))
    layout = ModeLayout((3, 3), (FIELD_1, FIELD_2))
    hom = outcome_probabilities(beam_splitter(StateVector.basis(layout, (1, 1))))
    single = hom[Detector.D_A] + hom[Detector.D_B]
    return CheckResult("outcome completeness and HOM suppression", worst <= 1e-10 and single <= 1e-12,
                       max(worst, single), "sum 1e-10, HOM 1e-12")


def check_hybrid_faithfulness() -> CheckResult:
    worst = 0.0
    for theta, gr, Gr, k in PROTOCOL_GRID:
        for sb, det in product(Sideband, (Detector.D_A, Detector.D_B)):
            r = _protocol(theta, gr, Gr, k, sb, det)
            if r.empty:
                continue
            expanded = r.hybrid.to_state(*r.state.layout.dims)
            worst = max(worst, 1.0 - fidelity(expanded, r.state))
    return CheckResult("hybrid two-term state vs truncated pipeline", worst <= 1e-9, worst, "1-F <= 1e-9")


def check_witness() -> CheckResult:
    r = _protocol(math.pi / 4, 0.0, 0.0, 1.0, Sideband.RED, Detector.D_B)
    entangled = witness(r.state, 1.0).post_displacement_vacuum_probability
    product_state = product_comparator(1.0, 1.0)
    product_vac = witness(product_state, 1.0).post_displacement_vacuum_probability
    mirror = product_state.project("ion-vibration", 1).normalized().amplitudes
    oracle = abs(np.vdot(coherent_amplitudes(-1.0, len(mirror)), mirror)) ** 2
    ok = entangled >= 1 - 1e-6 and product_vac < entangled and abs(product_vac - oracle) <= 1e-8
    return CheckResult("witness discriminates entangled from product", ok, product_vac,
                       "entangled >= 1-1e-6, product matches oracle 1e-8",
                       f"entangled={entangled:.12f} product={product_vac:.12f} oracle={oracle:.12f}")


def check_degenerate_coupling() -> CheckResult:
    worst = 0.0
    for theta in np.linspace(0, math.pi / 2, 7):
        for sb in ("red", "blue"):
            row = run_scenario(ScenarioConfig(sideband=sb, theta=float(theta), kappa=0.0))
            if row.empty_postselection:
                continue
            worst = max(worst, row.entropy_bits, row.negativity)
    return CheckResult("zero coupling gives no entanglement", worst <= 1e-9, worst, "1e-9")


def check_analytic_numeric_agreement() -> CheckResult:
    worst = 0.0
    for theta, gr, Gr, k in PROTOCOL_GRID:
        r = _protocol(theta, gr, Gr, k, Sideband.RED, Detector.D_B)
        if r.empty:
            continue
        a, n = entanglement_analytic(r.hybrid), entanglement_numeric(r.state)
        worst = max(worst, abs(a.entropy_bits - n.entropy_bits), abs(a.negativity - n.negativity))
    return CheckResult("analytic vs numeric entanglement", worst <= 1e-7, worst, "1e-7")


def check_determinism() -> CheckResult:
    import io

    cfg = ScenarioConfig(theta=0.6, gamma_over_etaG=0.02, Gamma_over_Omega=0.05, kappa=0.8)
    outputs = []
    for fmt in ("csv", "json"):
        bufs = []
        for _ in range(2):
            buf = io.StringIO()
            emit([run_scenario(cfg)], fmt, buf)
            bufs.append(buf.getvalue())
        outputs.append(bufs[0] == bufs[1])
    return CheckResult("repeated runs are byte-identical", all(outputs), float(all(outputs)), "exact")


CHECKS: List[Callable[[], CheckResult]] = [
    check_bell_limit,
    check_om_closed_form,
    check_ion_perturbative,
    check_no_detection_formula,
    check_probability_completeness,
    check_hybrid_faithfulness,
    check_witness,
    check_degenerate_coupling,
    check_analytic_numeric_agreement,
    check_determinism,
]


def run_validation() -> List[CheckResult]:
    return [check() for check in CHECKS]
