"""Conserved charges carrying a degenerate twist's spectrum on an invertible
twist's eigenprojectors.

Given an invertible simple-spectrum twist K and its zero-determinant companion
K-hat (smallest eigenvalue set to zero), the charges

    C_j(lam) = sum_a  t_j^{hat}(lam; a) |t_a> <t_a| / <t_a|t_a>

are built from the spectral projectors of T_1^{(K)} and the eigenvalue
functions of the K-hat model.  They commute with the original transfer
matrices, satisfy the truncated fusion relations of the zero-determinant
hierarchy, and therefore generate mutually orthogonal SoV bases with the same
Vandermonde diagonal as the K-hat model.
"""

from dataclasses import dataclass

import numpy as np

from .det0_spectrum import default_probe_point, eigensolve_sov, make_khat
from .errors import SpectrumNotSimple
from .gl3_model import TransferCache
from .numkernel import canonical_eig_order
from .sov_bases import (
    SovBasisPair,
    TernaryIndex,
    build_left_basis,
    build_right_basis,
    reference_covector,
    reference_vector_solve,
)


@dataclass
class ChargeFamily:
    """Spectral projectors of the invertible-twist chain paired with the
    eigenvalue families of its zero-determinant companion.

    ``pairing[a]`` is the K-hat eigenstate index assigned to projector a; both
    sides are sorted by the canonical (Re, Im) key of their probe-point
    eigenvalue, so the pairing is the identity permutation by construction.
    That choice is a determinism convention: the fusion and orthogonality
    identities hold per projector for any bijection.
    """

    params: object
    khat_params: object
    projectors: list
    khat_states: list
    pairing: tuple
    probe_point: complex
    _khat_cache: TransferCache

    def charge(self, j, lam):
        """Dense charge matrix of fusion order j in {1, 2} at spectral parameter lam."""
        if j not in (1, 2):
            raise ValueError("charge order must be 1 or 2")
        tj = self._khat_cache.value(j, lam)
        out = np.zeros((self.params.dim, self.params.dim), dtype=complex)
        for a, proj in enumerate(self.projectors):
            st = self.khat_states[self.pairing[a]]
            value = (st.left @ tj @ st.right) / (st.left @ st.right)
            out += value * proj
        return out

    def completeness_residual(self):
        total = sum(self.projectors)
        return float(np.abs(total - np.eye(self.params.dim)).max())

    def overlap_matrix(self):
        """Pairings of the invertible-twist left eigenstates against the
        companion-model right eigenstates, row-normalized.

        This is the change of basis between the two eigen-families; no
        structural claim is made about it here beyond finiteness, so it is
        exposed for inspection only.
        """
        rows = []
        for a, proj in enumerate(self.projectors):
            row = proj[int(np.argmax(np.abs(proj).sum(axis=1)))]
            row = row / np.linalg.norm(row)
            rows.append([
                complex(row @ st.right / np.linalg.norm(st.right))
                for st in self.khat_states
            ])
        out = np.array(rows)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("overlap matrix contains non-finite entries")
        return out

    def idempotence_residual(self):
        worst = 0.0
        for a, pa in enumerate(self.projectors):
            for b, pb in enumerate(self.projectors):
                prod = pa @ pb
                ref = pa if a == b else 0.0
                worst = max(worst, np.abs(prod - ref).max())
        return float(worst)


def build_tt(params, khat_params=None, lambda0=None, gap_rtol=1e-6):
    """Assemble the charge family for an invertible simple-spectrum twist.

    ``khat_params`` defaults to the same chain with the smallest twist
    eigenvalue zeroed.  Both transfer spectra at the probe point must be
    simple.
    """
    if khat_params is None:
        khat_params = params.with_twist(make_khat(params.twist))
    if (khat_params.sites, khat_params.eta, khat_params.xi) != (
        params.sites,
        params.eta,
        params.xi,
    ):
        raise ValueError("charge construction needs matching (sites, eta, xi)")
    lam0 = default_probe_point(params) if lambda0 is None else lambda0
    cache_k = TransferCache(params)
    probe = cache_k.t1(lam0)
    vals, vr = np.linalg.eig(probe)
    vals_l, vl = np.linalg.eig(probe.T)
    order = canonical_eig_order(vals)
    vals, vr = vals[order], vr[:, order]
    order_l = canonical_eig_order(vals_l)
    vals_l, vl = vals_l[order_l], vl[:, order_l]
    scale = max(np.abs(vals).max(), 1e-300)
    diffs = np.abs(vals[:, None] - vals[None, :])
    diffs[np.diag_indices_from(diffs)] = np.inf
    if diffs.min() <= gap_rtol * scale:
        raise SpectrumNotSimple("invertible-twist transfer spectrum is not simple")

    projectors = []
    for a in range(params.dim):
        pairing = vl[:, a] @ vr[:, a]
        projectors.append(np.outer(vr[:, a], vl[:, a]) / pairing)

    khat_cache = TransferCache(khat_params)
    # reference components only matter for normalization here; eigensolve
    # validates simplicity of the companion spectrum
    khat_states, _, _ = eigensolve_sov(
        khat_params, (1.0, 1.0, 1.0), lambda0=lam0, cache=khat_cache, gap_rtol=gap_rtol
    )
    return ChargeFamily(
        params,
        khat_params,
        projectors,
        khat_states,
        tuple(range(params.dim)),
        complex(lam0),
        khat_cache,
    )


def fusion_residuals_tt(family):
    """Truncated fusion residuals of the charges at every inhomogeneity:
    C_2(xi - eta) C_1(xi) = C_2(xi - eta) C_2(xi) = 0 and
    C_1(xi - eta) C_1(xi) = C_2(xi)."""
    p = family.params
    out = {}
    for a in range(p.sites):
        x = p.xi[a]
        c1 = family.charge(1, x)
        c2 = family.charge(2, x)
        c1s = family.charge(1, x - p.eta)
        c2s = family.charge(2, x - p.eta)
        scale = max(np.abs(c2).max(), 1e-300)
        out[(a, "annihilate_1")] = float(np.abs(c2s @ c1).max() / scale)
        out[(a, "annihilate_2")] = float(np.abs(c2s @ c2).max() / scale)
        out[(a, "produce_2")] = float(np.abs(c1s @ c1 - c2).max() / scale)
    return out


def tt_sov_bases(family, xyz):
    """Dressed SoV pair generated by the charges.

    The left reference is the same tensor co-vector as for the transfer
    bases.  The right reference is *solved* from the duality condition
    <k|0> = delta_{k,0} against the charge-generated left family - the
    transfer-basis tensor vector does not satisfy it (the charges are not
    polynomials in the original transfer matrices at the same nodes).
    """
    p = family.params

    class _ChargeEvaluator:
        """Duck-typed stand-in for TransferCache over the charge family."""

        def __init__(self, fam):
            self.fam = fam
            self._store = {}

        def value(self, m, lam):
            key = (m, complex(lam))
            if key not in self._store:
                self._store[key] = self.fam.charge(m, lam)
            return self._store[key]

        def t1(self, lam):
            return self.value(1, lam)

        def t2(self, lam):
            return self.value(2, lam)

    evaluator = _ChargeEvaluator(family)
    ref_row = reference_covector(xyz, p.twist, p)
    left = build_left_basis(p, ref_row, "dressed", evaluator)
    ref_col = reference_vector_solve(left)
    right = build_right_basis(p, ref_col, "dressed", evaluator)
    return SovBasisPair(left, right, "dressed", ref_row, ref_col, provenance="charge-family")


def eigenstate_representation_residual(family, pair):
    """The invertible-twist eigenstates must be separate states of the charge
    bases with the companion-model eigenvalue exponents."""
    p = family.params
    n = p.sites
    one_flat = TernaryIndex((1,) * n).flat
    worst = 0.0
    for a, proj in enumerate(family.projectors):
        st = family.khat_states[family.pairing[a]]
        # any nonzero column of the projector is the eigenvector
        col = proj[:, int(np.argmax(np.abs(proj).sum(axis=0)))]
        coords = pair.left @ col
        coords = coords / coords[one_flat]
        for h in TernaryIndex.all(n):
            pred = 1.0 + 0j
            for site, d in enumerate(h.digits):
                if d == 0:
                    pred *= st.t2_shift[site]
                elif d == 2:
                    pred *= st.t1_xi[site]
            worst = max(worst, abs(coords[h.flat] - pred) / max(np.abs(coords).max(), 1e-300))
    return float(worst)
