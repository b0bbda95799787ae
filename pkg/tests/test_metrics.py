import math

import numpy as np
import pytest

from aqtsim.errors import DimensionError, DomainError
from aqtsim.gaussian import coherent
from aqtsim.fock import fock_overlap
from aqtsim.metrics import (
    FIDELITY_THRESHOLD,
    average_coherent_fidelity,
    capacity_lower_bound,
    capacity_threshold,
    coherent_information,
    coherent_state_fidelity,
    dqt_fidelity,
    noise_matched_squeeze,
)
from aqtsim.transducer import (
    BeamSplitter,
    EffectiveChannel,
    ImperfectionParams,
    PhysicalCavity,
    TwoModeSqueezer,
    aqt_channel,
    dqt_channel,
)


def identity_channel():
    return EffectiveChannel(np.eye(2), np.zeros((2, 2)))


def test_fidelity_noiseless_is_one():
    assert average_coherent_fidelity(identity_channel()) == pytest.approx(1.0)


def test_fidelity_closed_form_value():
    ch = aqt_channel(BeamSplitter(0.8), ImperfectionParams.from_db(0.0, 0.0))
    np.testing.assert_allclose(ch.V, np.diag([0.25, 0.2]), atol=1e-12)
    assert average_coherent_fidelity(ch) == pytest.approx(2 / math.sqrt(2.25 * 2.2), abs=1e-12)


def test_fidelity_mean_independent_flag():
    ch = aqt_channel(BeamSplitter(0.5), ImperfectionParams.from_db(-5.0, -5.0))
    F, indep = average_coherent_fidelity(ch, full=True)
    assert indep
    for alpha in (0.0, 1.0 + 2.0j, -3.0j):
        assert coherent_state_fidelity(ch, alpha) == pytest.approx(F, rel=1e-12)


def test_coherent_state_fidelity_matches_fock():
    ch = EffectiveChannel(0.9 * np.eye(2), np.diag([0.3, 0.1]) + 0.19 * np.eye(2))
    alpha = 0.7 - 0.4j
    inp = coherent(alpha)
    out = ch.apply(inp)
    assert coherent_state_fidelity(ch, alpha) == pytest.approx(fock_overlap(inp, out), abs=1e-6)


def test_aqt_beats_dqt_at_low_transmittance():
    aqt = aqt_channel(BeamSplitter(0.1), ImperfectionParams.from_db(-30.0, -30.0))
    assert average_coherent_fidelity(aqt) > 0.99
    assert dqt_fidelity(BeamSplitter(0.1), 10.0) < FIDELITY_THRESHOLD


def test_dqt_fidelity():
    assert dqt_fidelity(BeamSplitter(1.0), 3.0) == pytest.approx(1.0)
    vals = [dqt_fidelity(BeamSplitter(0.8), lam) for lam in (1.0, 10.0, 100.0)]
    assert all(0 < v < 1 for v in vals) and vals[0] > vals[1] > vals[2]
    for lam in (0.1, 1.0, 10.0, 1e3):
        assert dqt_fidelity(TwoModeSqueezer(10.0), lam) < FIDELITY_THRESHOLD
    with pytest.raises(DomainError):
        dqt_fidelity(BeamSplitter(0.8), math.inf)


def test_prior_average_matches_quadrature():
    # average coherent_state_fidelity over alpha ~ CN(0, lam) by Gauss-Hermite quadrature
    ch = dqt_channel(BeamSplitter(0.7))
    lam = 2.0
    x, w = np.polynomial.hermite_e.hermegauss(60)
    s = math.sqrt(lam / 2)
    tot = sum(wi * wj * coherent_state_fidelity(ch, complex(s * xi, s * xj)) for xi, wi in zip(x, w) for xj, wj in zip(x, w))
    assert dqt_fidelity(BeamSplitter(0.7), lam) == pytest.approx(tot / (2 * math.pi), rel=1e-10)


def test_coherent_information_examples():
    assert coherent_information(identity_channel(), 1.0) == pytest.approx(2.0, abs=1e-9)
    loss = dqt_channel(BeamSplitter(0.8))
    assert coherent_information(loss, 1e4) == pytest.approx(2.0, abs=0.02)
    noisy = EffectiveChannel(np.eye(2), 10 * np.eye(2))
    assert coherent_information(noisy, 1.0) < 0


def test_coherent_information_rejects_non_cp():
    with pytest.raises(DomainError):
        coherent_information(EffectiveChannel(2 * np.eye(2), np.zeros((2, 2))), 1.0)


def test_capacity_identity_flags_divergence():
    est = capacity_lower_bound(identity_channel())
    assert est.divergent and est.grid_meta["at_upper_edge"]
    assert est.lower_bound > 10


def test_capacity_zero_for_anti_degradable():
    est = capacity_lower_bound(dqt_channel(BeamSplitter(0.1)))
    assert est.lower_bound == 0.0 and est.argmax_input_photons == 0.0
    assert capacity_lower_bound(dqt_channel(TwoModeSqueezer(10.0))).lower_bound == 0.0


def test_capacity_positive_for_small_additive_noise():
    assert capacity_lower_bound(EffectiveChannel(np.eye(2), 0.3 * np.eye(2))).lower_bound > 0


def test_capacity_uses_noise_matched_input():
    ch = EffectiveChannel(np.eye(2), np.diag([1e-3, 1.0]))
    sq = noise_matched_squeeze(ch)
    np.testing.assert_allclose(sq @ sq.T, np.diag([math.sqrt(1e-3), 1 / math.sqrt(1e-3)]), rtol=1e-10)
    est = capacity_lower_bound(ch)
    assert est.grid_meta["input"] == "noise-matched"


@pytest.mark.parametrize(
    "conv, expected",
    [(BeamSplitter(0.1), 4 / 72.9), (TwoModeSqueezer(10.0), 4 / (9 * 12.1))],
)
def test_threshold_values(conv, expected):
    assert capacity_threshold(conv) == pytest.approx(expected, rel=1e-12)


def test_threshold_grows_near_matching():
    assert capacity_threshold(BeamSplitter(0.999)) > 1e5
    with pytest.raises(DomainError):
        capacity_threshold(BeamSplitter(1.0))
    with pytest.raises(DomainError):
        capacity_threshold(PhysicalCavity(1.0, 0.0, 1.0, 1.0))


def test_multi_mode_channel_rejected():
    with pytest.raises(DimensionError):
        average_coherent_fidelity(EffectiveChannel(np.eye(4), np.zeros((4, 4))))
