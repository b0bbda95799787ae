import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqtsim.errors import DimensionError, DomainError
from aqtsim.gaussian import (
    AncillaSpec,
    GaussianState,
    apply_symplectic,
    coherent,
    condition_on_homodyne,
    displace,
    entropy,
    entropy_from_cov,
    epr,
    fidelity_same_dim,
    make_state,
    squeezed,
    symplectic_eigenvalues,
    tensor,
    thermal,
    vacuum,
)
from aqtsim.symplectic import beam_splitter, identity, random_symplectic
from aqtsim.trajectory import sample_homodyne


def test_vacuum():
    s = make_state("vacuum", 1)
    np.testing.assert_array_equal(s.mean, [0, 0])
    np.testing.assert_array_equal(s.cov, np.eye(2))
    assert s.is_physical()


def test_squeezed_minus_ten_db():
    s = make_state("squeezed", AncillaSpec(math.log(10) / 2), 0.0)
    np.testing.assert_allclose(s.cov, np.diag([0.1, 10.0]), rtol=1e-14)


def test_squeezed_phase_rotates_squeezed_quadrature():
    s = squeezed(AncillaSpec(0.5), math.pi / 2)
    np.testing.assert_allclose(s.cov, np.diag([math.e, 1 / math.e]), rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("xi, nz", [(0.0, 0.0), (0.7, 0.0), (1.2, 0.4)])
def test_ancilla_variances(xi, nz):
    a = AncillaSpec(xi, nz)
    assert a.nu == pytest.approx(math.exp(-2 * xi) * (2 * nz + 1))
    assert a.nu * a.nu_anti == pytest.approx((2 * nz + 1) ** 2)


def test_epr_zero_is_vacuum():
    np.testing.assert_array_equal(epr(0.0).cov, np.eye(4))


def test_unknown_kind_and_bad_inputs():
    with pytest.raises(DomainError):
        make_state("cat")
    with pytest.raises(DomainError):
        thermal(-1.0)
    with pytest.raises(DomainError):
        GaussianState([0, 0], [[1, 0.5], [0, 1]])
    with pytest.raises(DimensionError):
        GaussianState([0, 0, 0], np.eye(3))


def test_unphysical_detected():
    assert not GaussianState([0, 0], np.diag([0.5, 1.0])).is_physical()


def test_apply_identity_and_beam_splitter():
    s = tensor(coherent(1.0), vacuum())
    assert np.array_equal(apply_symplectic(s, identity(2)).cov, s.cov)
    out = apply_symplectic(s, beam_splitter(0.5))
    np.testing.assert_allclose(np.abs(out.mean[:2]), [2 / math.sqrt(2)] * 2)


def test_symplectic_preserves_purity(rng):
    s = apply_symplectic(vacuum(2), random_symplectic(2, rng))
    assert np.linalg.det(s.mode(0).cov) >= 1 - 1e-9
    assert entropy(s) == pytest.approx(0.0, abs=1e-7)
    assert np.linalg.det(s.cov) == pytest.approx(1.0, rel=1e-9)


def test_displace():
    s = vacuum()
    assert np.array_equal(displace(s, [0, 0]).mean, s.mean)
    np.testing.assert_array_equal(displace(s, [2, 0]).mean, coherent(1.0).mean)
    np.testing.assert_array_equal(displace(displace(s, [1, 2]), [3, -1]).mean, [4, 1])


def test_condition_product_state_leaves_partner_alone():
    s = tensor(squeezed(AncillaSpec(0.3)), vacuum())
    post, _ = condition_on_homodyne(s, 1, 0.7)
    np.testing.assert_allclose(post.cov, s.mode(0).cov)
    np.testing.assert_allclose(post.mean, [0, 0])


@pytest.mark.parametrize("xi", [0.2, 0.8, 1.5])
def test_condition_epr_schur_complement(xi):
    post, (m, v) = condition_on_homodyne(epr(xi), 1, 0.3)
    assert post.cov[0, 0] == pytest.approx(1 / math.cosh(2 * xi), rel=1e-12)
    assert v == pytest.approx(math.cosh(2 * xi))
    assert post.mean[0] == pytest.approx(0.3 * math.tanh(2 * xi))


def test_condition_efficiency_outcome_stats_match_sampling():
    s = squeezed(AncillaSpec(0.6))
    _, (m, v) = condition_on_homodyne(tensor(s, vacuum()), 2, 0.0, efficiency=0.5)
    x = sample_homodyne(s, 1, 0.5, 1_000_000, seed=3)
    se = v * math.sqrt(2 / (x.size - 1))
    assert abs(x.var(ddof=1) - v) < 3 * se
    assert abs(x.mean() - m) < 3 * math.sqrt(v / x.size)


def test_condition_domain():
    with pytest.raises(DomainError):
        condition_on_homodyne(vacuum(2), 0, 0.0, efficiency=0.0)
    with pytest.raises(DimensionError):
        condition_on_homodyne(vacuum(2), 4, 0.0)


@pytest.mark.parametrize(
    "state, expected",
    [(vacuum(), 0.0), (thermal(1.0), 2.0), (squeezed(AncillaSpec(1.3)), 0.0)],
)
def test_entropy(state, expected):
    assert entropy(state) == pytest.approx(expected, abs=1e-9)


def test_symplectic_eigenvalues_thermal_invariant(rng):
    S = random_symplectic(2, rng).entries
    cov = S @ np.diag([3.0, 5.0, 3.0, 5.0]) @ S.T
    np.testing.assert_allclose(np.sort(symplectic_eigenvalues(cov)), [3.0, 5.0], rtol=1e-8)


def test_entropy_rejects_unphysical():
    with pytest.raises(DomainError):
        entropy_from_cov(0.5 * np.eye(2))


def test_fidelity_examples():
    s = coherent(0.3 + 0.1j)
    assert fidelity_same_dim(s, s) == pytest.approx(1.0)
    mixed = GaussianState(s.mean, 2 * np.eye(2))
    assert fidelity_same_dim(s, mixed) == pytest.approx(2 / 3)
    assert fidelity_same_dim(vacuum(), coherent(1.2)) == pytest.approx(math.exp(-1.44))


@given(
    nbar=st.floats(0, 5),
    xi=st.floats(0, 1.5),
    phase=st.floats(0, math.pi),
    dx=st.floats(-2, 2),
)
@settings(max_examples=50, deadline=None)
def test_fidelity_is_symmetric_and_bounded(nbar, xi, phase, dx):
    a = squeezed(AncillaSpec(xi, nbar), phase)
    b = GaussianState([dx, 0.0], thermal(nbar / 2).cov)
    f = fidelity_same_dim(a, b)
    assert 0 <= f <= 1
    assert f == pytest.approx(fidelity_same_dim(b, a), rel=1e-9)


def test_sample_matches_moments(rng):
    s = apply_symplectic(thermal([0.5, 1.0]), random_symplectic(2, rng))
    x = s.sample(rng, 200_000)
    np.testing.assert_allclose(np.cov(x.T), s.cov, atol=0.05 * np.abs(s.cov).max())
