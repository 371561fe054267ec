import numpy as np
import pytest

from sovlab.errors import DegenerateReference
from sovlab.gl2_model import (
    Gl2Params,
    Gl2TransferCache,
    binary_labels,
    coupling_prediction,
    flat2,
    gl2_bases,
    gl2_eigen_reps,
    gl2_transfer,
    identity_decomposition_residual,
    qdet_scalar,
    reference_states,
)
from sovlab.sampling import ParameterSampler


def make_gl2(seed, sites):
    s = ParameterSampler(seed)
    eta = s.shift()
    xi = s.inhomogeneities(sites, eta)
    return Gl2Params(sites, eta, xi, s.gl2_twist(), s.reference2()), s


@pytest.fixture(scope="module")
def gl2_chain3():
    params, _ = make_gl2(401, 3)
    return params, Gl2TransferCache(params)


def test_one_site_transfer_closed_form():
    params, _ = make_gl2(403, 1)
    lam = 0.3 + 0.8j
    want = (lam - params.xi[0]) * np.trace(params.k_matrix) * np.eye(2) \
        + params.eta * params.k_matrix
    np.testing.assert_allclose(gl2_transfer(params, lam), want, atol=1e-13)


def test_transfer_commutation(gl2_chain3):
    params, cache = gl2_chain3
    s = ParameterSampler(404)
    for _ in range(3):
        a = cache.value(s.complex_rational())
        b = cache.value(s.complex_rational())
        assert np.abs(a @ b - b @ a).max() <= 1e-11 * np.abs(a @ b).max()


def test_fusion_scalar_centrality(gl2_chain3):
    params, cache = gl2_chain3
    for a in range(params.sites):
        scalar, resid, closed = qdet_scalar(params, a, cache)
        assert resid <= 1e-10
        assert abs(scalar - closed) <= 1e-10 * abs(closed)


def test_pairing_form_antiperiodic():
    """The antiperiodic twist with reference (1, 0) has unit pairing form."""
    s = ParameterSampler(405)
    eta = s.shift()
    xi = s.inhomogeneities(2, eta)
    params = Gl2Params(2, eta, xi, np.array([[0.0, 1.0], [1.0, 0.0]]), (1.0, 0.0))
    assert params.pairing_form() == 1.0


def test_params_validation():
    s = ParameterSampler(406)
    eta = s.shift()
    xi = s.inhomogeneities(2, eta)
    with pytest.raises(ValueError):
        Gl2Params(2, eta, xi, 2.5 * np.eye(2), (1.0, 1.0))
    # reference aligned so that the pairing form vanishes: b x^2 = 0 with
    # K = [[0,0],[1,0]] means x = ... pick K making n_K(1,0) = b = 0
    with pytest.raises(DegenerateReference):
        Gl2Params(2, eta, xi, np.array([[0.0, 0.0], [1.0, 0.5]]), (1.0, 0.0))


def test_orthogonal_measure(gl2_chain3):
    params, cache = gl2_chain3
    left, right, _ = gl2_bases(params, cache)
    g = left @ right
    for h in binary_labels(params.sites):
        for k in binary_labels(params.sites):
            got = g[flat2(h), flat2(k)]
            if h == k:
                want = coupling_prediction(params, h)
                assert abs(got - want) <= 1e-9 * abs(want)
            else:
                assert abs(got) <= 1e-9 * np.abs(g).max()


def test_identity_decomposition(gl2_chain3):
    params, cache = gl2_chain3
    assert identity_decomposition_residual(params, cache) <= 1e-8


def test_reference_normalizations(gl2_chain3):
    """The all-ones and all-zeros tensor vectors reproduce the stated dual
    couplings against the left family."""
    params, cache = gl2_chain3
    left, right, zeros_col = gl2_bases(params, cache)
    row_flats = {h: flat2(h) for h in binary_labels(params.sites)}
    _, ones_col, _ = reference_states(params)
    v0 = coupling_prediction(params, (0,) * params.sites)  # 1 / V(xi)^2
    for h, flat in row_flats.items():
        want_ones = 0.0
        if all(d == 1 for d in h):
            want_ones = coupling_prediction(params, h)
        got = left[flat] @ ones_col
        assert abs(got - want_ones) <= 1e-10 * abs(coupling_prediction(params, h))
        want_zeros = v0 if all(d == 0 for d in h) else 0.0
        gotz = left[flat] @ zeros_col
        assert abs(gotz - want_zeros) <= 1e-10 * abs(v0)


def test_eigen_representations_one_site():
    params, _ = make_gl2(407, 1)
    out = gl2_eigen_reps(params)
    assert out["reconstruction_residual"] <= 1e-12
    assert out["min_overlap"] > 1e-9


def test_eigen_representations_three_sites(gl2_chain3):
    params, cache = gl2_chain3
    out = gl2_eigen_reps(params, cache=cache)
    assert out["reconstruction_residual"] <= 1e-7
    assert out["detk_rep_residual"] <= 1e-7
    assert out["min_overlap"] > 1e-9
    assert len(out["states"]) == params.dim
