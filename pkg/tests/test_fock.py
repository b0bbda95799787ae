import math

import numpy as np
import pytest

from aqtsim.errors import DimensionError, TruncationError
from aqtsim.fock import density_matrix, fock_overlap, quadrature_moments
from aqtsim.gaussian import AncillaSpec, GaussianState, coherent, fidelity_same_dim, squeezed, thermal, vacuum


def test_vacuum_overlap():
    assert fock_overlap(vacuum(), vacuum(), dim=20) == pytest.approx(1.0, abs=1e-10)


def test_coherent_overlap():
    assert fock_overlap(vacuum(), coherent(1.0), dim=40) == pytest.approx(math.exp(-1), abs=1e-6)


def test_mixed_same_mean():
    s = coherent(0.5)
    mixed = GaussianState(s.mean, 2 * np.eye(2))
    assert fock_overlap(s, mixed, dim=40) == pytest.approx(2 / 3, abs=1e-6)


@pytest.mark.parametrize(
    "state",
    [
        squeezed(AncillaSpec(0.4, 0.2), 0.9),
        GaussianState([0.6, -0.3], squeezed(AncillaSpec(0.3, 0.1), 2.1).cov),
        thermal(0.7),
    ],
)
def test_moments_roundtrip(state):
    mean, cov = quadrature_moments(density_matrix(state, dim=40))
    np.testing.assert_allclose(mean, state.mean, atol=1e-8)
    np.testing.assert_allclose(cov, state.cov, atol=1e-7)


def test_generic_pair_agrees_with_closed_form():
    a = GaussianState([0.4, 0.1], squeezed(AncillaSpec(0.25, 0.3), 0.6).cov)
    b = GaussianState([-0.2, 0.3], thermal(0.4).cov)
    assert fock_overlap(a, b) == pytest.approx(fidelity_same_dim(a, b), abs=1e-6)


def test_truncation_detected():
    with pytest.raises(TruncationError):
        density_matrix(coherent(4.0), dim=10, pad=10)


def test_single_mode_only():
    with pytest.raises(DimensionError):
        density_matrix(vacuum(2))
