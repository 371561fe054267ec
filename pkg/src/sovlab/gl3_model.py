"""Fundamental gl(3) chain: R-matrix, monodromy, fused transfer matrices.

Conventions used everywhere in the library:

* quantum site 1 is the fastest-varying index of a state vector, i.e. a state
  on N sites reshapes to ``(3,)*N`` with site N on axis 0 and site 1 on the
  last axis;
* auxiliary legs always precede quantum legs in dense operators, so the
  monodromy matrix lives on ``C^3 (x) H`` with the auxiliary index slowest.

The fused transfer matrices are evaluated by contracting the auxiliary-space
product site by site (a bond-``3^m`` matrix product operator), never by
forming the ``3^m * 3^N`` dimensional product space densely.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import IndexOrder, SizeCapError, SpectrumNotSimple
from .numkernel import (
    DENSE_DIM_CAP,
    adjugate3,
    antisymmetrizer,
    as_matrix,
    canonical_eig_order,
)

_P9 = None


def _perm9():
    global _P9
    if _P9 is None:
        p = np.zeros((9, 9), dtype=complex)
        for i in range(3):
            for j in range(3):
                p[j * 3 + i, i * 3 + j] = 1.0
        _P9 = p
    return _P9


def r_matrix(lam, eta):
    """Rational gl(3) R-matrix lam*I + eta*P on C^3 (x) C^3."""
    return lam * np.eye(9, dtype=complex) + eta * _perm9()


def check_yang_baxter(lam, mu, eta):
    """Relative residual of R12(lam-mu) R13(lam) R23(mu) = R23(mu) R13(lam) R12(lam-mu)."""
    r12 = embed_pair(r_matrix(lam - mu, eta), 3, 0, 1)
    r13 = embed_pair(r_matrix(lam, eta), 3, 0, 2)
    r23 = embed_pair(r_matrix(mu, eta), 3, 1, 2)
    lhs = r12 @ r13 @ r23
    rhs = r23 @ r13 @ r12
    scale = max(np.abs(lhs).max(), 1e-300)
    return float(np.abs(lhs - rhs).max() / scale)


def scalar_yb_residual(k_matrix, lam, eta):
    """Relative residual of R12(lam) K1 K2 = K2 K1 R12(lam)."""
    k = as_matrix(k_matrix)
    k1 = np.kron(k, np.eye(3))
    k2 = np.kron(np.eye(3), k)
    r = r_matrix(lam, eta)
    lhs = r @ k1 @ k2
    rhs = k2 @ k1 @ r
    scale = max(np.abs(lhs).max(), 1e-300)
    return float(np.abs(lhs - rhs).max() / scale)


def embed_pair(op, n_slots, i, j, d=3):
    """Dense embedding of a two-slot operator into slots (i, j) of n slots.

    Slot 0 is the slowest index.  ``op`` is (d*d, d*d) with slot i as its
    first factor.
    """
    if i == j or not (0 <= i < n_slots and 0 <= j < n_slots):
        raise ValueError("embed_pair needs two distinct valid slots")
    rest = n_slots - 2
    full = np.kron(op, np.eye(d**rest, dtype=complex))
    full = full.reshape((d,) * (2 * n_slots))
    order = [i, j] + [s for s in range(n_slots) if s not in (i, j)]
    inv = list(np.argsort(order))
    perm = inv + [n_slots + p for p in inv]
    return full.transpose(perm).reshape(d**n_slots, d**n_slots)


# ---------------------------------------------------------------------------
# twist data


def _case_of_jordan(kj, rtol=1e-10):
    scale = max(np.abs(kj).max(), 1.0)
    y1, y2 = kj[0, 1], kj[1, 2]
    lower = np.abs(np.tril(kj, -1)).max()
    if lower > rtol * scale or abs(kj[0, 2]) > rtol * scale:
        raise ValueError("k_jordan must be upper triangular with zero (0,2) entry")
    k0, k1, k2 = kj[0, 0], kj[1, 1], kj[2, 2]
    if abs(y1) <= rtol * scale and abs(y2) <= rtol * scale:
        if min(abs(k0 - k1), abs(k0 - k2), abs(k1 - k2)) <= rtol * scale:
            raise ValueError("diagonal Jordan form requires distinct eigenvalues")
        return "i"
    if abs(y1 - 1) <= rtol and abs(y2) <= rtol * scale:
        if abs(k0 - k1) > rtol * scale or abs(k0 - k2) <= rtol * scale:
            raise ValueError("2+1 Jordan form requires k0 == k1 != k2")
        return "ii"
    if abs(y1 - 1) <= rtol and abs(y2 - 1) <= rtol:
        if max(abs(k0 - k1), abs(k0 - k2)) > rtol * scale:
            raise ValueError("full Jordan block requires k0 == k1 == k2")
        return "iii"
    raise ValueError("off-diagonal Jordan entries must be 0 or 1")


@dataclass(frozen=True)
class TwistData:
    """Twist matrix K together with its Jordan data K = W K_J W^{-1}.

    ``case`` is "i" (diagonalizable, distinct eigenvalues), "ii" (one 2-block)
    or "iii" (a single 3-block).  Spectral invariants: ``trace_inv`` = tr K,
    ``second_inv`` = ((tr K)^2 - tr K^2)/2 and ``det`` = det K.
    """

    k_matrix: np.ndarray
    case: str
    w: np.ndarray
    k_jordan: np.ndarray
    k_adjugate: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "k_matrix", as_matrix(self.k_matrix))
        object.__setattr__(self, "w", as_matrix(self.w))
        object.__setattr__(self, "k_jordan", as_matrix(self.k_jordan))
        adj = adjugate3(self.k_jordan)
        object.__setattr__(self, "k_adjugate", adj)
        recon = self.w @ self.k_jordan @ np.linalg.inv(self.w)
        scale = max(np.abs(self.k_matrix).max(), 1e-300)
        if np.abs(recon - self.k_matrix).max() > 1e-10 * scale:
            raise ValueError("K != W K_J W^{-1} within tolerance")
        prod = adj @ self.k_jordan
        if np.abs(prod - self.det * np.eye(3)).max() > 1e-10 * max(np.abs(prod).max(), scale**3, 1.0):
            raise ValueError("adjugate identity violated")

    @property
    def trace_inv(self):
        return complex(np.trace(self.k_matrix))

    @property
    def second_inv(self):
        t = np.trace(self.k_matrix)
        return complex((t * t - np.trace(self.k_matrix @ self.k_matrix)) / 2)

    @property
    def det(self):
        return complex(np.linalg.det(self.k_jordan))

    @property
    def eigenvalues(self):
        return (complex(self.k_jordan[0, 0]), complex(self.k_jordan[1, 1]),
                complex(self.k_jordan[2, 2]))

    @classmethod
    def from_jordan(cls, w, k_jordan):
        kj = as_matrix(k_jordan)
        case = _case_of_jordan(kj)
        w = as_matrix(w)
        k = w @ kj @ np.linalg.inv(w)
        return cls(k, case, w, kj)

    @classmethod
    def from_matrix(cls, k, gap_rtol=1e-8):
        """Diagonalize a user-supplied K (case i only).

        Numerical Jordan forms are ill-posed, so a K with (numerically)
        repeated eigenvalues is rejected; supply explicit (W, K_J) instead.
        """
        k = as_matrix(k)
        vals, vecs = np.linalg.eig(k)
        order = canonical_eig_order(vals)
        vals, vecs = vals[order], vecs[:, order]
        scale = max(np.abs(vals).max(), 1e-300)
        gaps = [abs(vals[i] - vals[j]) for i in range(3) for j in range(i + 1, 3)]
        if min(gaps) <= gap_rtol * scale:
            raise SpectrumNotSimple(
                "K has (numerically) repeated eigenvalues; supply (w, k_jordan) explicitly"
            )
        return cls(k, "i", vecs, np.diag(vals))

    @classmethod
    def from_eigenvalues(cls, eigenvalues, w=None):
        vals = [complex(v) for v in eigenvalues]
        w = np.eye(3, dtype=complex) if w is None else as_matrix(w)
        kj = np.diag(vals)
        case = _case_of_jordan(kj)
        return cls(w @ kj @ np.linalg.inv(w), case, w, kj)

    def replace_jordan(self, k_jordan):
        return TwistData.from_jordan(self.w, k_jordan)


# ---------------------------------------------------------------------------
# model parameters


@dataclass(frozen=True)
class ModelParams:
    """Sites, shift eta, inhomogeneities and twist of one gl(3) chain."""

    sites: int
    eta: complex
    xi: tuple
    twist: TwistData
    dense_cap: int = DENSE_DIM_CAP

    def __post_init__(self):
        object.__setattr__(self, "eta", complex(self.eta))
        object.__setattr__(self, "xi", tuple(complex(x) for x in self.xi))
        if self.sites < 1 or len(self.xi) != self.sites:
            raise ValueError("need sites >= 1 inhomogeneities")
        if self.eta == 0:
            raise ValueError("eta must be nonzero")
        for i in range(self.sites):
            for j in range(self.sites):
                if i == j:
                    continue
                diff = self.xi[i] - self.xi[j]
                if min(abs(diff), abs(diff - self.eta), abs(diff + self.eta)) < 1e-12:
                    raise ValueError("inhomogeneities must satisfy xi_i - xi_j not in {0, +eta, -eta}")

    @property
    def dim(self):
        return 3**self.sites

    def xi_shifted(self, a, h):
        """xi_a - h*eta for 0-based site a."""
        return self.xi[a] - h * self.eta

    def require_dense(self, dim):
        if dim > self.dense_cap:
            raise SizeCapError(f"dense dimension {dim} exceeds cap {self.dense_cap}")

    def with_twist(self, twist):
        return ModelParams(self.sites, self.eta, self.xi, twist, self.dense_cap)


# ---------------------------------------------------------------------------
# monodromy and transfer matrices


def monodromy(params, lam):
    """Dense monodromy matrix K_a R_{a,N}(lam - xi_N) ... R_{a,1}(lam - xi_1)
    on the auxiliary (x) quantum space, auxiliary index slowest."""
    n = params.sites
    params.require_dense(3 ** (n + 1))
    slots = n + 1  # slot 0 = auxiliary, slot 1 + (N - a) = site a
    m = np.kron(params.twist.k_matrix, np.eye(3**n, dtype=complex))
    for a in range(n, 0, -1):
        slot = 1 + (n - a)
        m = m @ embed_pair(r_matrix(lam - params.xi[a - 1], params.eta), slots, 0, slot)
    return m


def rtt_residual(params, lam, mu):
    """Relative residual of the exchange relation
    R12(lam-mu) M1(lam) M2(mu) = M2(mu) M1(lam) R12(lam-mu)."""
    n = params.sites
    params.require_dense(3 ** (n + 2))
    slots = n + 2  # 0, 1 auxiliary; 2 + (N - a) = site a
    k = params.twist.k_matrix

    def mono(slot, lam_):
        ops = _embed_single(k, slots, slot)
        for a in range(n, 0, -1):
            ops = ops @ embed_pair(r_matrix(lam_ - params.xi[a - 1], params.eta), slots, slot, 2 + (n - a))
        return ops

    m1 = mono(0, lam)
    m2 = mono(1, mu)
    r12 = embed_pair(r_matrix(lam - mu, params.eta), slots, 0, 1)
    lhs = r12 @ m1 @ m2
    rhs = m2 @ m1 @ r12
    return float(np.abs(lhs - rhs).max() / max(np.abs(lhs).max(), 1e-300))


def _embed_single(op, n_slots, slot, d=3):
    full = np.kron(op, np.eye(d ** (n_slots - 1), dtype=complex)).reshape((d,) * (2 * n_slots))
    order = [slot] + [s for s in range(n_slots) if s != slot]
    inv = list(np.argsort(order))
    perm = inv + [n_slots + p for p in inv]
    return full.transpose(perm).reshape(d**n_slots, d**n_slots)


def _site_operator(lam, eta, xi_j, m):
    """Auxiliary-bond site operator of the order-m fused product, shaped
    (3^m, 3, 3^m, 3): the product R^{(1)}(lam - xi) ... R^{(m)}(lam-(m-1)eta - xi)
    with all auxiliary legs kept open and the quantum legs chained."""
    op = r_matrix(lam - xi_j, eta).reshape(3, 3, 3, 3)
    bond = 3
    for k in range(1, m):
        r = r_matrix(lam - k * eta - xi_j, eta).reshape(3, 3, 3, 3)
        op = np.einsum('AuBv,avbw->AauBbw', op.reshape(bond, 3, bond, 3), r)
        bond *= 3
        op = op.reshape(bond, 3, bond, 3)
    return op


def _fused_boundary(twist, m):
    kfull = twist.k_matrix.copy()
    for _ in range(m - 1):
        kfull = np.kron(kfull, twist.k_matrix)
    return antisymmetrizer(3, m) @ kfull


def fused_apply(params, m, lam, block):
    """Apply T_m(lam) to the columns of ``block`` without forming the
    auxiliary product space densely."""
    if m not in (1, 2, 3):
        raise ValueError("fusion order m must be 1, 2 or 3")
    n = params.sites
    d = 3
    bond = d**m
    cols = block.shape[1] if block.ndim == 2 else 1
    v = block.reshape(d**n, cols)
    boundary = _fused_boundary(params.twist, m)
    y = np.einsum('ut,qb->utbq', np.eye(bond, dtype=complex), v)
    y = y.reshape((bond, bond, cols) + (d,) * n)
    for a in range(1, n + 1):
        s_mat = _site_operator(lam, params.eta, params.xi[a - 1], m).reshape(bond * d, bond * d)
        ax = 3 + (n - a)
        y = np.moveaxis(y, ax, 1)  # (bond_u, q_a, bond_t, cols, rest...)
        shape = y.shape
        y = (s_mat @ y.reshape(bond * d, -1)).reshape((bond, d) + shape[2:])
        y = np.moveaxis(y, 1, ax)
    out = np.einsum('tu,utb...->b...', boundary, y).reshape(cols, d**n).T
    return out if block.ndim == 2 else out[:, 0]


def apply_transfer_free(params, m, lam, vec):
    """Matrix-free action of T_m(lam), m in {1, 2}, on a state vector."""
    if m not in (1, 2):
        raise ValueError("matrix-free path supports m in {1, 2}")
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (params.dim,):
        raise ValueError(f"state vector must have length {params.dim}")
    return fused_apply(params, m, lam, vec.reshape(-1, 1))[:, 0]


_DENSE_BLOCK_BUDGET = 1 << 23  # complex entries of the running contraction tensor


def transfer(params, m, lam):
    """Dense fused transfer matrix T_m(lam) on the 3^N quantum space."""
    params.require_dense(params.dim)
    dim = params.dim
    bond = 3**m
    block = max(1, min(dim, _DENSE_BLOCK_BUDGET // (bond * bond * dim)))
    out = np.empty((dim, dim), dtype=complex)
    eye = np.eye(dim, dtype=complex)
    for lo in range(0, dim, block):
        hi = min(dim, lo + block)
        out[:, lo:hi] = fused_apply(params, m, lam, eye[:, lo:hi])
    return out


class TransferCache:
    """Memoizing evaluator for dense transfer matrices, keyed by (m, lam).

    Single-threaded use; share one instance per parameter set within a task.
    """

    def __init__(self, params):
        self.params = params
        self._store = {}

    def value(self, m, lam):
        key = (m, complex(lam))
        if key not in self._store:
            self._store[key] = transfer(self.params, m, lam)
        return self._store[key]

    def t1(self, lam):
        return self.value(1, lam)

    def t2(self, lam):
        return self.value(2, lam)

    def t3(self, lam):
        return self.value(3, lam)


def quantum_determinant(params, lam):
    """Closed-form scalar value of T_3(lam)."""
    val = params.twist.det
    for x in params.xi:
        val *= (lam - x + params.eta) * (lam - x - params.eta) * (lam - x - 2 * params.eta)
    return complex(val)


def quantum_determinant_identity(xi_list, eta, lam):
    """q-det of the untwisted chain (K = I)."""
    val = 1.0 + 0j
    for x in xi_list:
        val *= (lam - x + eta) * (lam - x - eta) * (lam - x - 2 * eta)
    return complex(val)


# ---------------------------------------------------------------------------
# interpolation machinery


class InterpolationWeights:
    """Lagrange data for transfer matrices on shifted inhomogeneity nodes.

    ``g(a, shifts, lam, order)`` is the weight multiplying T_order at node
    xi_a - shifts[a]*eta when a degree-N (order=1) or degree-2N-with-known-
    zeros (order=2) family is reconstructed from its values at the N nodes
    xi_b - shifts[b]*eta plus the central asymptotics.
    """

    def __init__(self, params):
        self.params = params

    def d(self, lam):
        out = 1.0 + 0j
        for x in self.params.xi:
            out *= lam - x
        return complex(out)

    def a(self, lam):
        return self.d(lam + self.params.eta)

    def g(self, a, shifts, lam, order):
        p = self.params
        node = p.xi_shifted(a, shifts[a])
        out = 1.0 + 0j
        for b in range(p.sites):
            if b == a:
                continue
            other = p.xi_shifted(b, shifts[b])
            out *= (lam - other) / (node - other)
        if order == 2:
            for b in range(p.sites):
                out /= node - (p.xi[b] + p.eta)
        elif order != 1:
            raise ValueError("interpolation order must be 1 or 2")
        return complex(out)

    def asymptotic(self, m, shifts, lam):
        """Central leading term: (tr K or second invariant) * prod(lam - node_b)."""
        p = self.params
        lead = p.twist.trace_inv if m == 1 else p.twist.second_inv
        out = lead
        for b in range(p.sites):
            out *= lam - p.xi_shifted(b, shifts[b])
        return complex(out)

    def node_normalization(self, a, shifts, order):
        """The product that g(a, ., node_a, order) must invert at its own node."""
        p = self.params
        node = p.xi_shifted(a, shifts[a])
        out = 1.0 + 0j
        if order == 2:
            for b in range(p.sites):
                out *= node - (p.xi[b] + p.eta)
        return complex(out)


def t2_interpolated(params, lam, cache=None):
    """Reconstruct T_2(lam) from T_1 values at the inhomogeneities via the
    fusion products T_1(xi_a - eta) T_1(xi_a), the central zeros at xi_a + eta
    and the known asymptotics."""
    cache = cache or TransferCache(params)
    w = InterpolationWeights(params)
    zero_shifts = (0,) * params.sites
    acc = w.asymptotic(2, zero_shifts, lam) * np.eye(params.dim, dtype=complex)
    for a in range(params.sites):
        prod = cache.t1(params.xi[a] - params.eta) @ cache.t1(params.xi[a])
        acc = acc + w.g(a, zero_shifts, lam, 2) * prod
    return w.d(lam - params.eta) * acc


def fusion_residuals(params, cache=None):
    """Per-site residual table of the fusion hierarchy.

    Returns ``{"fusion": {(a, m): r}, "central_zero": {a: r}}`` with 0-based
    site keys, every residual relative to the magnitude of its left-hand side.
    """
    cache = cache or TransferCache(params)
    out = {"fusion": {}, "central_zero": {}}
    for a in range(params.sites):
        xa = params.xi[a]
        t1 = cache.t1(xa)
        for m in (1, 2):
            lhs = t1 @ cache.value(m, xa - params.eta)
            rhs = cache.value(m + 1, xa)
            scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
            out["fusion"][(a, m)] = float(np.abs(lhs - rhs).max() / scale)
        tz = cache.t2(xa + params.eta)
        zscale = max(np.abs(cache.t2(xa)).max(), 1e-300)
        out["central_zero"][a] = float(np.abs(tz).max() / zscale)
    return out


# ---------------------------------------------------------------------------
# product of transfer matrices at the inhomogeneities


def _chain(params, a, others, omit):
    """R_{a,b_M}(xi_a - xi_{b_M}) ... R_{a,b_1}(xi_a - xi_{b_1}) on the
    quantum space, skipping sites listed in ``omit`` (1-based sites)."""
    n = params.sites
    out = np.eye(params.dim, dtype=complex)
    for b in others:
        if b in omit:
            continue
        r = r_matrix(params.xi[a - 1] - params.xi[b - 1], params.eta)
        out = embed_pair(r, n, n - a, n - b) @ out
    return out


def product_formula_check(params, a_indices):
    """Relative residual of the closed product formula for
    prod_j T_1(xi_{a_j}) as a twist insertion dressed by R-chains.

    ``a_indices`` are 1-based, strictly ascending.  The scalar prefactor is
    eta^M * prod_{i<j} (eta^2 - (xi_{a_i} - xi_{a_j})^2).
    """
    sites = list(a_indices)
    if sites != sorted(set(sites)) or any(not 1 <= a <= params.sites for a in sites):
        raise IndexOrder("site indices must be strictly ascending and within range")
    mm = len(sites)
    params.require_dense(params.dim)
    cache = TransferCache(params)
    lhs = np.eye(params.dim, dtype=complex)
    for a in sites:
        lhs = lhs @ cache.t1(params.xi[a - 1])
    coef = params.eta**mm
    for i in range(mm):
        for j in range(i + 1, mm):
            coef *= params.eta**2 - (params.xi[sites[i] - 1] - params.xi[sites[j] - 1]) ** 2
    rhs = np.eye(params.dim, dtype=complex)
    for pos, a in enumerate(sites):
        rhs = rhs @ _chain(params, a, range(1, a), omit=sites[:pos])
    for a in sites:
        rhs = rhs @ _embed_single(params.twist.k_matrix, params.sites, params.sites - a)
    for pos, a in enumerate(sites):
        rhs = rhs @ _chain(params, a, range(a + 1, params.sites + 1), omit=sites[pos + 1:])
    rhs = coef * rhs
    return float(np.abs(lhs - rhs).max() / max(np.abs(lhs).max(), 1e-300))


def exchange_relation_residual(params, low, high, between):
    """Residual of the R-chain exchange identity used to prove the product
    formula: moving the left chain of site ``high`` through the right chain
    of site ``low`` (both with the sites in ``between`` omitted) costs the
    scalar eta^2 - (xi_high - xi_low)^2 and extends both omission sets."""
    n = params.sites
    if not low < high or any(not low < b < high for b in between):
        raise IndexOrder("need low < between sites < high")
    right_low = lambda omit: _chain(params, low, range(low + 1, n + 1), omit=omit)
    left_high = lambda omit: _chain(params, high, range(1, high), omit=omit)
    between = tuple(between)
    lhs = right_low(between) @ left_high(between)
    scal = params.eta**2 - (params.xi[high - 1] - params.xi[low - 1]) ** 2
    rhs = scal * (left_high(between + (low,)) @ right_low(between + (high,)))
    return float(np.abs(lhs - rhs).max() / max(np.abs(lhs).max(), 1e-300))


def t1_leading_coefficient(params, cache=None):
    """Degree-N leading coefficient of T_1 recovered by finite differencing
    through N+1 evaluation points (divided differences)."""
    cache = cache or TransferCache(params)
    n = params.sites
    pts = [params.xi[0] + (2 + k) * params.eta * (1 + 0.25j) for k in range(n + 1)]
    table = [cache.t1(p) for p in pts]
    for level in range(1, n + 1):
        table = [
            (table[i + 1] - table[i]) / (pts[i + level] - pts[i])
            for i in range(len(table) - 1)
        ]
    return table[0]
