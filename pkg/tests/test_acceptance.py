"""Acceptance suite: one test per criterion, each at its stated tolerance."""

import math
import subprocess
import sys
from itertools import product

import numpy as np

from ionmirror.analysis import entanglement_numeric, product_comparator, witness
from ionmirror.fock import FIELD_1, FIELD_2, MIRROR, ModeLayout, StateVector, fidelity
from ionmirror.interferometer import Detector, beam_splitter, outcome_probabilities, run_protocol
from ionmirror.ion import IonParams, Sideband, closed_form_ion_state, p_no_detection_formula, prepare_ion
from ionmirror.optomech import OmParams, closed_form_om_state, evolve_om_conditional, initial_om_state, om_layout, prepare_om
from ionmirror.scenario import ScenarioConfig, run_scenario
from oracles import fock_coherent, p_no_detection_mp, two_level_nonhermitian

GRID = list(product((0.0, math.pi / 4, math.pi / 2), (0.0, 0.05), (0.0, 0.1), (0.0, 1.0)))


def protocol(theta, gamma_ratio, Gamma, kappa, sideband=Sideband.RED, outcome="D_B", alpha0=1.0):
    ion = prepare_ion(IonParams(gamma=gamma_ratio, theta=theta), sideband)
    om = prepare_om(OmParams(g=kappa, Gamma=Gamma, alpha0=alpha0))
    return run_protocol(ion, om, outcome=outcome)


def deficit(a, b):
    """1 - |<a|b>|^2 for unit vectors, from the orthogonal residual."""
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    r = b - np.vdot(a, b) * a
    return float(np.vdot(r, r).real)


def test_criterion_1_bell_limit(acceptance):
    r = protocol(math.pi / 4, 0.0, 0.0, 3.0)
    entropy = entanglement_numeric(r.state).entropy_bits
    asym = abs(r.probabilities[Detector.D_A] - r.probabilities[Detector.D_B])
    ok = abs(entropy - 1.0) <= 1e-3 and asym <= 1e-10
    assert acceptance(1, "Bell-limit reproduction", ok, f"entropy={entropy:.12f} |P_A-P_B|={asym:.1e}")


def test_criterion_2_optomechanical_closed_form(acceptance):
    worst = worst_printed_valid = worst_printed_other = 0.0
    for a0, kappa, Gamma in product((0.0, 1.0, 2.0), (0.0, 0.5, 1.0), (0.0, 0.1)):
        p = OmParams(g=kappa, Gamma=Gamma, alpha0=a0)
        layout = om_layout(p)
        for k, tau in enumerate(np.linspace(0.0, 2 * math.pi, 9)):
            numeric = evolve_om_conditional(p, initial_om_state(p, layout), tau).amplitudes
            exact = closed_form_om_state(p, tau, layout).state.amplitudes
            printed = closed_form_om_state(p, tau, layout, convention="printed").state.amplitudes
            worst = max(worst, deficit(exact, numeric))
            # the printed phase omits n kappa alpha0 sin(tau); it is exact where that term vanishes
            if a0 == 0 or k in (0, 4, 8):
                worst_printed_valid = max(worst_printed_valid, deficit(printed, numeric))
            else:
                worst_printed_other = max(worst_printed_other, deficit(printed, numeric))
    ok = worst <= 1e-8 and worst_printed_valid <= 1e-8
    print(f"printed-phase form off its exact subgrid: worst 1-F = {worst_printed_other:.3f}")
    assert acceptance(2, "optomechanical closed form vs propagator", ok,
                      f"worst 1-F={worst:.1e}; printed phase where exact {worst_printed_valid:.1e}; "
                      f"printed phase elsewhere {worst_printed_other:.3f} (phase term corrected)")


def _closed_form_deficit(gamma_ratio):
    p = IonParams(gamma=gamma_ratio, theta=math.pi / 4)
    closed = closed_form_ion_state(p, Sideband.RED).state
    excited, emitted = two_level_nonhermitian(p.etaG, p.gamma, p.t_transfer)
    ref = np.zeros_like(closed.amplitudes)
    ref[closed.layout.basis_index((0, 0))] = math.sin(p.theta)
    ref[closed.layout.basis_index((1, 1))] = emitted * math.cos(p.theta)
    return deficit(closed.amplitudes, ref)


def test_criterion_3_ion_closed_form_scaling(acceptance):
    d2, d3, d0 = (_closed_form_deficit(g) for g in (1e-2, 1e-3, 0.0))
    ratio = d2 / d3
    ok = 50 <= ratio <= 200 and d0 <= 1e-12
    assert acceptance(3, "ion closed form is perturbative", ok,
                      f"deficits {d2:.3e} -> {d3:.3e}, ratio {ratio:.1f}, gamma=0 deficit {d0:.1e}")


def test_criterion_4_no_detection_formula(acceptance):
    exact_limits = (p_no_detection_formula(IonParams(gamma=0.0, theta=0.4)) == 1.0
                    and p_no_detection_formula(IonParams(gamma=0.3, theta=math.pi / 2)) == 1.0)
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(10):
        gamma, theta = rng.uniform(0.0, 0.5), rng.uniform(0.0, math.pi / 2)
        p = IonParams(gamma=float(gamma), theta=float(theta))
        worst = max(worst, abs(p_no_detection_formula(p) - p_no_detection_mp(p.gamma, p.etaG, p.theta)))
    ok = exact_limits and worst <= 1e-12
    assert acceptance(4, "no-detection probability formula", ok,
                      f"limits exact={exact_limits}, worst vs extended precision {worst:.1e}")


def test_criterion_5_probability_completeness(acceptance):
    worst = 0.0
    for theta, g, G, k in GRID:
        probs = protocol(theta, g, G, k).probabilities
        worst = max(worst, abs(sum(probs.values()) - 1.0))
    layout = ModeLayout((3, 3), (FIELD_1, FIELD_2))
    hom = outcome_probabilities(beam_splitter(StateVector.basis(layout, (1, 1))))
    single = hom[Detector.D_A] + hom[Detector.D_B]
    ok = worst <= 1e-10 and single <= 1e-12
    assert acceptance(5, "probability completeness and HOM", ok,
                      f"worst |sum-1|={worst:.1e}, HOM single-count probability {single:.1e}")


def test_criterion_6_hybrid_faithfulness(acceptance):
    worst, count = 0.0, 0
    for (theta, g, G, k), sideband, outcome in product(GRID, Sideband, ("D_A", "D_B")):
        r = protocol(theta, g, G, k, sideband, outcome)
        assert not r.empty
        expanded = r.hybrid.to_state(*r.state.layout.dims)
        worst = max(worst, 1.0 - fidelity(expanded, r.state))
        count += 1
    assert acceptance(6, "hybrid-state faithfulness", worst <= 1e-9, f"{count} runs, worst 1-F={worst:.1e}")


def test_criterion_7_witness(acceptance):
    r = protocol(math.pi / 4, 0.0, 0.0, 1.0)
    entangled = witness(r.state, 1.0).post_displacement_vacuum_probability
    comparator = product_comparator(1.0, 1.0)
    prod = witness(comparator, 1.0).post_displacement_vacuum_probability
    dim = comparator.layout.dim(MIRROR)
    phi = fock_coherent(1.0, dim) + fock_coherent(-1.0, dim)
    oracle = abs(np.vdot(fock_coherent(-1.0, dim), phi)) ** 2 / np.vdot(phi, phi).real
    ok = entangled >= 1 - 1e-6 and prod < entangled and abs(prod - oracle) <= 1e-8
    assert acceptance(7, "witness discrimination", ok,
                      f"entangled {entangled:.12f}, product {prod:.12f}, oracle {oracle:.12f}")


def test_criterion_8_degenerate_coupling(acceptance):
    worst = 0.0
    for theta, sideband, outcome, (g, G) in product(np.linspace(0, math.pi / 2, 13), ("red", "blue"),
                                                   ("D_A", "D_B"), ((0.0, 0.0), (0.05, 0.1))):
        row = run_scenario(ScenarioConfig(sideband=sideband, theta=float(theta), kappa=0.0, outcome=outcome,
                                          gamma_over_etaG=g, Gamma_over_Omega=G))
        assert not row.empty_postselection
        worst = max(worst, row.entropy_bits, row.negativity)
    assert acceptance(8, "zero coupling gives a product state", worst <= 1e-9, f"worst entropy/negativity {worst:.1e}")


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "ionmirror", *argv], capture_output=True)


def test_criterion_9_determinism_and_interface(acceptance):
    configs = [
        ("run", "--theta", "0.6", "--gamma_over_etaG", "0.02", "--Gamma_over_Omega", "0.05", "--kappa", "0.8"),
        ("run", "--sideband", "blue", "--alpha0", "0.5-0.3j", "--outcome", "D_A",
         "--detection_time_fraction", "0.5", "--detection_window", "1.0"),
        ("sweep", "--parameter", "kappa", "--start", "0.1", "--stop", "3", "--count", "5", "--scale", "log",
         "--workers", "3"),
    ]
    identical = True
    for argv, fmt in product(configs, ("csv", "json")):
        first, second = _cli(*argv, "--format", fmt), _cli(*argv, "--format", fmt)
        identical &= first.returncode == 0 and first.stdout == second.stdout and len(first.stdout) > 0
    validate = _cli("validate")
    ok = identical and validate.returncode == 0
    assert acceptance(9, "determinism and validate interface", ok,
                      f"byte-identical={identical}, validate exit={validate.returncode}")
