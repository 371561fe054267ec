import numpy as np
import pytest

from sovlab.det0_spectrum import (
    SeparateState,
    make_khat,
    norm_determinant,
    scalar_product_determinant,
    zero_pattern,
)
from sovlab.errors import SpectrumNotSimple
from sovlab.gl3_model import ModelParams, TransferCache, TwistData
from sovlab.numkernel import eig_general
from sovlab.sampling import ParameterSampler
from sovlab.sov_bases import TernaryIndex
from sovlab.sov_measure import diag_formula, gram
from sovlab.tt_charges import (
    build_tt,
    eigenstate_representation_residual,
    fusion_residuals_tt,
    tt_sov_bases,
)

from conftest import make_params


@pytest.fixture(scope="module")
def family2(chain2):
    params, xyz, cache, _ = chain2
    return params, xyz, cache, build_tt(params)


def test_one_site_closed_form():
    """With one site the charges share the twist eigenvectors and carry the
    companion twist's shifted eigenvalues (lam - xi) tr(K-hat) + eta k-hat."""
    params, xyz, _ = make_params(301, 1)
    family = build_tt(params)
    lam = 0.4 - 0.9j
    c1 = family.charge(1, lam)
    khat = family.khat_params.twist
    dec = eig_general(c1)
    want = sorted(
        ((lam - params.xi[0]) * khat.trace_inv + params.eta * k for k in khat.eigenvalues),
        key=lambda z: (round(z.real, 9), round(z.imag, 9)),
    )
    got = sorted(dec.values, key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    for w, g in zip(want, got):
        assert abs(w - g) <= 1e-10 * max(abs(w), 1)
    # eigenvectors match the twist's (one-site transfer matrices are K-linear)
    kvecs = eig_general(params.twist.k_matrix)
    overlap = np.abs(np.linalg.det(np.linalg.solve(kvecs.right, dec.right)))
    assert overlap > 1e-6


def test_projector_family(family2):
    _, _, _, family = family2
    assert family.completeness_residual() <= 1e-8
    assert family.idempotence_residual() <= 1e-8


def test_truncated_fusion(family2):
    _, _, _, family = family2
    assert max(fusion_residuals_tt(family).values()) <= 1e-8


def test_commutation_with_transfer(family2):
    params, _, cache, family = family2
    s = ParameterSampler(310)
    for _ in range(3):
        t = cache.t1(s.complex_rational())
        c = family.charge(1, s.complex_rational())
        c2 = family.charge(2, s.complex_rational())
        for x in (c, c2):
            comm = t @ x - x @ t
            assert np.abs(comm).max() <= 1e-9 * max(np.abs(t @ x).max(), 1e-300)
        comm = c @ c2 - c2 @ c
        assert np.abs(comm).max() <= 1e-9 * max(np.abs(c @ c2).max(), 1e-300)


def test_central_zeros(family2):
    params, _, _, family = family2
    scale = np.abs(family.charge(2, params.xi[0])).max()
    for x in params.xi:
        assert np.abs(family.charge(2, x + params.eta)).max() <= 1e-9 * scale


def test_charge_bases_orthogonal_with_vandermonde_diagonal():
    s = ParameterSampler(311)
    eta = s.shift()
    twist = TwistData.from_eigenvalues([1.0, 2.0, 3.0])
    params = ModelParams(2, eta, s.inhomogeneities(2, eta), twist)
    family = build_tt(params)
    pair = tt_sov_bases(family, s.reference3())
    report = gram(pair.left, pair.right, family.khat_params)
    assert report.max_offdiag_cosine <= 1e-9
    assert report.max_diag_rel_err <= 1e-8
    assert pair.provenance == "charge-family"


def test_eigenstate_representation(family2):
    params, xyz, _, family = family2
    pair = tt_sov_bases(family, xyz)
    assert eigenstate_representation_residual(family, pair) <= 1e-7


def test_diagonal_independent_of_zeroed_eigenvalue(family2):
    """Two invertible twists sharing the companion spectrum give the same
    charge-basis diagonal."""
    params, xyz, _, family = family2
    pair = tt_sov_bases(family, xyz)
    g1 = np.diagonal(pair.left @ pair.right)
    eigs = list(params.twist.eigenvalues)
    idx = int(np.argmin(np.abs(eigs)))
    eigs[idx] = 0.5 * eigs[idx]  # still the smallest: same companion spectrum
    other = params.with_twist(TwistData.from_eigenvalues(eigs, w=params.twist.w))
    assert np.abs(np.array(make_khat(other.twist).eigenvalues)
                  - np.array(family.khat_params.twist.eigenvalues)).max() <= 1e-12
    family2_ = build_tt(other)
    pair2 = tt_sov_bases(family2_, xyz)
    g2 = np.diagonal(pair2.left @ pair2.right)
    assert np.abs(g1 - g2).max() <= 1e-8 * np.abs(g1).max()


def test_determinant_formulas_in_charge_bases(family2):
    """Overlaps of separate states with the invertible-twist eigenstates take
    the same determinant form, driven by the companion-model eigenvalues."""
    params, xyz, cache, family = family2
    kp = family.khat_params
    pair = tt_sov_bases(family, xyz)
    n = params.sites
    one_flat = TernaryIndex((1,) * n).flat
    zero_flat = TernaryIndex((0,) * n).flat
    gen = np.random.default_rng(5)
    checked = 0
    for a, proj in enumerate(family.projectors):
        st = family.khat_states[family.pairing[a]]
        zero_pattern(st, kp)
        col = proj[:, int(np.argmax(np.abs(proj).sum(axis=0)))]
        col = col / (pair.left[one_flat] @ col)
        row = proj[int(np.argmax(np.abs(proj).sum(axis=1)))]
        row = row / (row @ pair.right[:, zero_flat])
        # norm identity transfers verbatim
        want = norm_determinant(st, kp)
        assert abs((row @ col) - want) <= 1e-7 * abs(want)
        for _ in range(2):
            alpha = SeparateState.random(gen, n)
            det_val = scalar_product_determinant(alpha, st, kp)
            direct = 0.0 + 0j
            for h in TernaryIndex.all(n):
                direct += (
                    alpha.coordinate(h)
                    * (pair.left[h.flat] @ col)
                    / diag_formula(kp, h)
                )
            assert abs(det_val - direct) <= 1e-7 * abs(direct)
            checked += 1
    assert checked == 2 * params.dim


def test_build_tt_rejects_mismatched_chain(chain2):
    params, _, _, _ = chain2
    other = ModelParams(
        params.sites, params.eta, tuple(x + 0.25 for x in params.xi), params.twist
    )
    with pytest.raises(ValueError):
        build_tt(params, khat_params=other.with_twist(make_khat(params.twist)))


def test_overlap_matrix_finite(family2):
    _, _, _, family = family2
    overlaps = family.overlap_matrix()
    assert overlaps.shape == (9, 9)
    assert np.all(np.isfinite(overlaps))
