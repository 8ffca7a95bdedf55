import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionmirror.analysis import (
    Method,
    Verdict,
    displacement_operator,
    entanglement_analytic,
    entanglement_numeric,
    entropy_bits,
    partial_transpose_negativity,
    product_comparator,
    pure_state_negativity,
    reduced_spectrum,
    witness,
)
from ionmirror.fock import ION_VIBRATION, MIRROR, ModeLayout, StateVector, TruncationError, mirror_dim_for
from ionmirror.interferometer import HybridTwoTermState, run_protocol
from ionmirror.ion import IonParams, Sideband, prepare_ion
from ionmirror.optomech import OmParams, prepare_om
from oracles import binary_entropy_mp, fock_coherent

PRODUCT_VACUUM_K1 = 0.5676676416183064  # (1 + e^-2) / 2


def protocol(theta=math.pi / 4, gamma=0.0, kappa=1.0, sideband=Sideband.RED, outcome="D_B", alpha0=1.0, Gamma=0.0):
    ion = prepare_ion(IonParams(gamma=gamma, theta=theta), sideband)
    om = prepare_om(OmParams(g=kappa, Gamma=Gamma, alpha0=alpha0))
    return run_protocol(ion, om, outcome=outcome)


def vib_mirror(amps):
    dims = amps.shape
    return StateVector(ModeLayout(dims, (ION_VIBRATION, MIRROR)), amps.reshape(-1))


def test_entropy_bits_edges():
    assert entropy_bits([1.0, 0.0]) == 0.0
    assert entropy_bits([0.5, 0.5]) == pytest.approx(1.0)


# -- analytic ------------------------------------------------------------------

def test_analytic_bell_limit():
    k = 3.0
    h = HybridTwoTermState(1 / math.sqrt(2), k, 1 / math.sqrt(2), -k)
    r = entanglement_analytic(h)
    assert abs(r.entropy_bits - 1.0) < 1e-3
    assert r.method is Method.ANALYTIC
    assert sum(x * x for x in r.schmidt_coefficients) == pytest.approx(1.0, abs=1e-10)


def test_analytic_product_cases():
    r = entanglement_analytic(HybridTwoTermState(1.0, 0.4, 0.0, -0.4))
    assert r.entropy_bits == 0.0 and r.negativity == 0.0
    r = entanglement_analytic(HybridTwoTermState(0.6, -0.3, 0.8j, -0.3))
    assert r.entropy_bits < 1e-12 and r.negativity < 1e-12


def test_analytic_rejects_unnormalized():
    with pytest.raises(ValueError):
        entanglement_analytic(HybridTwoTermState(1.0, 0.0, 1.0, 1.0))


def test_analytic_equal_weights_oracle():
    s = math.exp(-2)
    h = HybridTwoTermState(1 / math.sqrt(2), 1.0, 1 / math.sqrt(2), -1.0)
    r = entanglement_analytic(h)
    assert r.overlap_s == pytest.approx(s)
    assert r.entropy_bits == pytest.approx(binary_entropy_mp((1 + mpmath.e**-2) / 2), abs=1e-13)
    assert r.entropy_bits == pytest.approx(0.9867474300396563, abs=1e-13)


def test_entropy_monotone_in_overlap():
    values = []
    for s in np.linspace(0.0, 1.0, 20):
        beta = math.sqrt(-2 * math.log(max(s, 1e-300)))
        h = HybridTwoTermState(1 / math.sqrt(2), 0.0, 1 / math.sqrt(2), beta)
        values.append(entanglement_analytic(h).entropy_bits)
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert values[0] == pytest.approx(1.0) and values[-1] < 1e-7


# -- numeric ---------------------------------------------------------------------

def test_numeric_bell_state():
    amps = np.zeros((3, 4), dtype=complex)
    amps[0, 0] = amps[1, 3] = 1 / math.sqrt(2)
    r = entanglement_numeric(vib_mirror(amps))
    assert abs(r.entropy_bits - 1.0) < 1e-9
    assert r.negativity == pytest.approx(0.5, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_numeric_random_product(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    m = rng.normal(size=8) + 1j * rng.normal(size=8)
    s = vib_mirror(np.outer(v, m)).normalized()
    r = entanglement_numeric(s)
    assert r.entropy_bits <= 1e-9 and r.negativity <= 1e-9


def test_numeric_matches_analytic_on_protocol_state():
    r = protocol()
    a, n = entanglement_analytic(r.hybrid), entanglement_numeric(r.state)
    assert r.hybrid.overlap == pytest.approx(math.exp(-2), abs=1e-15)
    assert abs(a.entropy_bits - n.entropy_bits) < 1e-7
    assert abs(a.negativity - n.negativity) < 1e-7
    assert n.entropy_bits == pytest.approx(0.9867474300396563, abs=1e-7)


def test_numeric_rejects_unnormalized():
    amps = np.zeros((2, 2), dtype=complex)
    amps[0, 0] = 2.0
    with pytest.raises(ValueError):
        entanglement_numeric(vib_mirror(amps))


def test_reduced_spectrum_route_agrees():
    r = protocol(theta=0.5, kappa=0.6)
    lam = np.sort(np.sqrt(np.clip(reduced_spectrum(r.state)[:2], 0, None)))[::-1]
    np.testing.assert_allclose(lam, entanglement_numeric(r.state).schmidt_coefficients, atol=1e-8)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_negativity_is_schmidt_product(seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(2, 5)) + 1j * rng.normal(size=(2, 5))
    s = vib_mirror(amps).normalized()
    r = entanglement_numeric(s)
    lam = r.schmidt_coefficients
    assert r.negativity == pytest.approx(lam[0] * lam[1], abs=1e-12)
    assert partial_transpose_negativity(s) == pytest.approx(lam[0] * lam[1], abs=1e-10)
    assert pure_state_negativity(lam) == pytest.approx(r.negativity, abs=1e-15)


@given(st.floats(0.05, math.pi / 2 - 0.05), st.floats(0, 0.1), st.floats(0, 2), st.sampled_from(list(Sideband)))
@settings(max_examples=20, deadline=None)
def test_detector_choice_leaves_entropy(theta, gamma, kappa, sideband):
    a = entanglement_numeric(protocol(theta, gamma, kappa, sideband, "D_A").state)
    b = entanglement_numeric(protocol(theta, gamma, kappa, sideband, "D_B").state)
    assert abs(a.entropy_bits - b.entropy_bits) < 1e-10
    assert 0.0 <= a.entropy_bits <= 1.0


# -- displacement and witness ---------------------------------------------------

def test_displacement_on_vacuum_is_coherent():
    dim = mirror_dim_for(abs(1.3 - 0.4j))
    d = displacement_operator(1.3 - 0.4j, dim).matrix
    np.testing.assert_allclose(d[:, 0], fock_coherent(1.3 - 0.4j, dim), atol=1e-12)


def test_displacement_composition():
    dim = 30
    d1 = displacement_operator(1.0, dim).matrix
    d2 = displacement_operator(2.0, dim).matrix
    low = 10
    np.testing.assert_allclose((d1 @ d1)[:low, :low], d2[:low, :low], atol=1e-9)


def test_displacement_truncation_check():
    with pytest.raises(TruncationError):
        displacement_operator(3.0, 10)


def test_witness_on_generated_state():
    r = protocol()
    w = witness(r.state, 1.0)
    assert w.post_displacement_vacuum_probability == pytest.approx(1.0, abs=1e-9)
    assert w.verdict is Verdict.ENTANGLED
    assert w.projection_probability == pytest.approx(0.5, abs=1e-12)


def test_witness_on_product_comparator():
    alpha0 = kappa = 1.0
    state = product_comparator(alpha0, kappa)
    w = witness(state, alpha0)
    # independent route: <0|D(alpha0)|phi> = <-alpha0|phi>, with plain-factorial amplitudes
    dim = state.layout.dim(MIRROR)
    phi = fock_coherent(-alpha0 + 2 * kappa, dim) + fock_coherent(-alpha0, dim)
    oracle = abs(np.vdot(fock_coherent(-alpha0, dim), phi)) ** 2 / np.vdot(phi, phi).real
    assert abs(w.post_displacement_vacuum_probability - oracle) < 1e-8
    assert abs(oracle - PRODUCT_VACUUM_K1) < 1e-12
    assert w.verdict is Verdict.PRODUCT
    assert w.projection_probability == pytest.approx(0.5, abs=1e-12)


def test_witness_vacuum_mirror():
    amps = np.zeros((3, 10), dtype=complex)
    amps[0, 0] = amps[1, 0] = 1 / math.sqrt(2)
    w = witness(vib_mirror(amps), 0.0)
    assert w.post_displacement_vacuum_probability == pytest.approx(1.0, abs=1e-15)


def test_witness_zero_projection():
    amps = np.zeros((3, 10), dtype=complex)
    amps[0, 2] = 1.0
    w = witness(vib_mirror(amps), 1.0)
    assert w.projection_probability == 0.0
    assert w.post_displacement_vacuum_probability is None


@given(st.floats(0.01, math.pi / 2 - 0.01), st.floats(0, 0.1), st.floats(0, 2))
@settings(max_examples=20, deadline=None)
def test_witness_across_red_family(theta, gamma, kappa):
    r = protocol(theta, gamma, kappa)
    w = witness(r.state, 1.0)
    assert w.post_displacement_vacuum_probability >= 1 - 1e-6
    assert 0.0 <= w.projection_probability <= 1.0


def test_product_comparator_normalized():
    s = product_comparator(0.5 + 0.5j, 0.7)
    assert s.is_normalized
    assert s.layout.labels == (ION_VIBRATION, MIRROR)
