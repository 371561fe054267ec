"""Left and right SoV bases generated by transfer matrices on a reference pair.

Two variants are supported.  The "powers" variant applies plain powers
T_1(xi_a)^{h_a} to a free tensor reference on either side.  The "dressed"
variant applies T_2(xi_a - eta) for digit 0 and T_1(xi_a) for digit 2 on the
left, and T_2(xi_a) / T_1(xi_a) for digits 1 / 2 on the right; its right
reference vector is pinned by the duality condition <k|0> = delta_{k,0}
against the dressed left family and admits a closed per-site form.

Basis families are enumerated in flat ternary order with site 1 fastest, the
ordering used by every report and file format in the package.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateReference, SingularBasis
from .gl3_model import TransferCache
from .numkernel import rank_ratio

_NONZERO_ATOL = 1e-12


@dataclass(frozen=True)
class TernaryIndex:
    """An N-tuple over {0,1,2}; digit a (0-based) weights 3^a in the flat index."""

    digits: tuple

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        if any(d not in (0, 1, 2) for d in self.digits):
            raise ValueError("digits must lie in {0, 1, 2}")

    @property
    def sites(self):
        return len(self.digits)

    @property
    def flat(self):
        out = 0
        for a, d in enumerate(self.digits):
            out += d * 3**a
        return out

    @classmethod
    def from_flat(cls, flat, sites):
        digits = []
        x = int(flat)
        for _ in range(sites):
            digits.append(x % 3)
            x //= 3
        if x:
            raise ValueError("flat index out of range")
        return cls(tuple(digits))

    @classmethod
    def all(cls, sites):
        """All indices in flat order."""
        for flat in range(3**sites):
            yield cls.from_flat(flat, sites)

    def ones(self):
        """Positions carrying digit 1 (the set the pair substitutions act on)."""
        return tuple(a for a, d in enumerate(self.digits) if d == 1)

    def count(self, value):
        return self.digits.count(value)

    def with_digit(self, a, value):
        d = list(self.digits)
        d[a] = value
        return TernaryIndex(tuple(d))

    def pair_substitution(self, alpha, beta):
        """Digits at alpha -> 0 and at beta -> 2 (used on positions with digit 1)."""
        d = list(self.digits)
        for a in alpha:
            d[a] = 0
        for b in beta:
            d[b] = 2
        return TernaryIndex(tuple(d))


def tensor_product_state(factors):
    """Tensor product over sites 1..N (factors[0] is site 1, the fastest index)."""
    out = np.array([1.0 + 0j])
    for f in factors:
        out = np.kron(np.asarray(f, dtype=complex), out)
    return out


def reference_covector(xyz, twist, params):
    """Tensor-product reference row <site copies of (x,y,z) W^{-1}>.

    The admissibility condition depends on the Jordan case of the twist:
    all of x, y, z nonzero for case i, x and z for case ii, x for case iii.
    """
    x, y, z = (complex(c) for c in xyz)
    need = {"i": (x, y, z), "ii": (x, z), "iii": (x,)}[twist.case]
    if any(abs(c) <= _NONZERO_ATOL for c in need):
        raise DegenerateReference(
            f"components {xyz} violate the case-{twist.case} non-vanishing condition"
        )
    row = np.array([x, y, z]) @ np.linalg.inv(twist.w)
    return tensor_product_state([row] * params.sites)


def _local_reference_column(xyz, twist):
    """Unnormalized per-site column annihilated by (x,y,z) and (x,y,z)K_J,
    together with its pairing against (x,y,z) adj(K_J)."""
    v = np.array([complex(c) for c in xyz])
    direction = np.cross(v, v @ twist.k_jordan)
    pairing = v @ twist.k_adjugate @ direction
    return direction, complex(pairing)


def reference_vector_closed(xyz, twist, params):
    """Closed tensor-product form of the right reference vector |0>.

    Per site the column is the (unique) direction annihilated by the rows
    (x,y,z) and (x,y,z) K_J, normalized so that its pairing with
    (x,y,z) adj(K_J) equals 1 / (d(xi_a - eta) d(xi_a - 2 eta)).  With this
    normalization the dressed left family satisfies <k|0> = delta_{k,0}.
    """
    reference_covector(xyz, twist, params)  # validate the case condition
    direction, pairing = _local_reference_column(xyz, twist)
    if abs(pairing) <= _NONZERO_ATOL * max(np.abs(direction).max(), 1.0):
        raise DegenerateReference("reference vector degenerate: adjugate pairing vanishes")
    factors = []
    for a in range(params.sites):
        denom = pairing
        for shift in (1, 2):
            node = params.xi_shifted(a, shift)
            for x in params.xi:
                denom *= node - x
        factors.append(twist.w @ (direction / denom))
    return tensor_product_state(factors)


def reference_vector_solve(left_basis):
    """Solve <k|v> = delta_{k,0} against an explicit left family."""
    left = np.asarray(left_basis, dtype=complex)
    norms = np.linalg.norm(left, axis=1)
    ratio = rank_ratio(left / norms[:, None]) if norms.min() > 0 else 0.0
    if ratio < 1e-13:
        raise SingularBasis(f"left family is rank deficient (sigma ratio {ratio:.2e})")
    rhs = np.zeros(left.shape[0], dtype=complex)
    rhs[0] = 1.0
    return np.linalg.solve(left, rhs)


def _left_row(h, ref_row, t1, t2shift, variant):
    row = ref_row
    if variant == "powers":
        for a, d in enumerate(h.digits):
            for _ in range(d):
                row = row @ t1[a]
        return row
    for a, d in enumerate(h.digits):
        if d == 0:
            row = row @ t2shift[a]
        elif d == 2:
            row = row @ t1[a]
    return row


def _right_col(h, ref_col, t1, t2, variant):
    col = ref_col
    if variant == "powers":
        for a, d in enumerate(h.digits):
            for _ in range(d):
                col = t1[a] @ col
        return col
    for a, d in enumerate(h.digits):
        if d == 1:
            col = t2[a] @ col
        elif d == 2:
            col = t1[a] @ col
    return col


def build_left_basis(params, ref_row, variant="dressed", cache=None):
    """Matrix whose row ``h.flat`` is the co-vector labeled by ``h``."""
    if variant not in ("powers", "dressed"):
        raise ValueError("variant must be 'powers' or 'dressed'")
    cache = cache or TransferCache(params)
    t1 = [cache.t1(x) for x in params.xi]
    t2s = [cache.t2(x - params.eta) for x in params.xi] if variant == "dressed" else None
    out = np.empty((params.dim, params.dim), dtype=complex)
    for h in TernaryIndex.all(params.sites):
        out[h.flat] = _left_row(h, ref_row, t1, t2s, variant)
    return out


def build_right_basis(params, ref_col, variant="dressed", cache=None):
    """Matrix whose column ``h.flat`` is the vector labeled by ``h``."""
    if variant not in ("powers", "dressed"):
        raise ValueError("variant must be 'powers' or 'dressed'")
    cache = cache or TransferCache(params)
    t1 = [cache.t1(x) for x in params.xi]
    t2 = [cache.t2(x) for x in params.xi] if variant == "dressed" else None
    out = np.empty((params.dim, params.dim), dtype=complex)
    for h in TernaryIndex.all(params.sites):
        out[:, h.flat] = _right_col(h, ref_col, t1, t2, variant)
    return out


@dataclass
class SovBasisPair:
    """Ordered left (rows) and right (columns) SoV families with their references."""

    left: np.ndarray
    right: np.ndarray
    variant: str
    ref_covector: np.ndarray
    ref_vector: np.ndarray
    provenance: str = "transfer"

    @property
    def dim(self):
        return self.left.shape[0]

    def rank_ratios(self):
        """sigma_min/sigma_max of the two families after unit-normalizing
        each member.

        Every basis state carries an arbitrary overall scale (products of
        transfer-matrix values), so the raw singular-value ratio conflates
        that normalization freedom with actual rank; the normalized ratio
        tests linear independence of the family itself.
        """
        row_norms = np.linalg.norm(self.left, axis=1)
        col_norms = np.linalg.norm(self.right, axis=0)
        if row_norms.min() == 0 or col_norms.min() == 0:
            return 0.0, 0.0
        return (
            rank_ratio(self.left / row_norms[:, None]),
            rank_ratio(self.right / col_norms[None, :]),
        )

    def require_full_rank(self, rtol=1e-9):
        rl, rr = self.rank_ratios()
        if rl <= rtol or rr <= rtol:
            raise SingularBasis(f"basis rank ratios ({rl:.2e}, {rr:.2e}) below {rtol}")
        return rl, rr


def dressed_pair(params, xyz, cache=None):
    """Dressed left/right bases from the tensor reference pair fixed by xyz."""
    cache = cache or TransferCache(params)
    ref_row = reference_covector(xyz, params.twist, params)
    ref_col = reference_vector_closed(xyz, params.twist, params)
    left = build_left_basis(params, ref_row, "dressed", cache)
    right = build_right_basis(params, ref_col, "dressed", cache)
    return SovBasisPair(left, right, "dressed", ref_row, ref_col)


def power_pair(params, xyz, rst, cache=None):
    """Plain-powers left/right bases on free tensor references."""
    cache = cache or TransferCache(params)
    ref_row = reference_covector(xyz, params.twist, params)
    r, s, t = (complex(c) for c in rst)
    need = {"i": (r, s, t), "ii": (s, t), "iii": (t,)}[params.twist.case]
    if any(abs(c) <= _NONZERO_ATOL for c in need):
        raise DegenerateReference(
            f"components {rst} violate the case-{params.twist.case} condition for vectors"
        )
    col = params.twist.w @ np.array([r, s, t])
    ref_col = tensor_product_state([col] * params.sites)
    left = build_left_basis(params, ref_row, "powers", cache)
    right = build_right_basis(params, ref_col, "powers", cache)
    return SovBasisPair(left, right, "powers", ref_row, ref_col)
