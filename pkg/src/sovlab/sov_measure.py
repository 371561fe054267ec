"""Coupling (Gram) matrix of the SoV basis pair and its sparse inverse measure.

The dressed left and right families are generically *pseudo-orthogonal*: the
coupling <h|k> vanishes unless h = k or h is obtained from k by replacing r
disjoint pairs of digit-1 entries with one 0 and one 2.  Each surviving
off-diagonal entry factors as <k|k> * C * (det K)^r with C independent of
det K.  The diagonal is an explicit Vandermonde expression in the shifted
inhomogeneities, independent of the twist.
"""

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFamily, DetKZero, SingularGram
from .gl3_model import InterpolationWeights, TransferCache, quantum_determinant_identity
from .numkernel import vandermonde
from .sov_bases import TernaryIndex, dressed_pair


@dataclass(frozen=True)
class PairClass:
    """Classification of one (h, k) cell: 'diagonal', 'offdiag' or 'zero'."""

    kind: str
    alpha: tuple = ()
    beta: tuple = ()

    @property
    def pair_count(self):
        return len(self.alpha)


def classify_pair(h, k):
    """Decide whether <h|k> may be nonzero and find the unique pair move.

    Off-diagonal couplings require disjoint alpha, beta inside the digit-1
    set of k, of equal size r >= 1, with h = k after alpha -> 0, beta -> 2
    and all other digits equal.  In particular nonzero cells conserve the
    total digit sum (each pair move trades two 1s for a 0 and a 2).
    """
    if h.digits == k.digits:
        return PairClass("diagonal")
    ones = set(k.ones())
    alpha = []
    beta = []
    for a, (ha, ka) in enumerate(zip(h.digits, k.digits)):
        if ha == ka:
            continue
        if ka == 1 and ha == 0:
            alpha.append(a)
        elif ka == 1 and ha == 2:
            beta.append(a)
        else:
            return PairClass("zero")
    if len(alpha) != len(beta) or not alpha:
        return PairClass("zero")
    return PairClass("offdiag", tuple(alpha), tuple(beta))


def diag_formula(params, h):
    """Twist-independent diagonal coupling <h|h> of the dressed pair."""
    w = InterpolationWeights(params)
    out = 1.0 + 0j
    zshift = []
    yshift = []
    for a, d in enumerate(h.digits):
        z = 1 if d in (1, 2) else 0
        y = 1 if d == 2 else 0
        zshift.append(params.xi_shifted(a, z))
        yshift.append(params.xi_shifted(a, y))
        out *= w.d(params.xi_shifted(a, 1)) / w.d(params.xi_shifted(a, 1 + z))
    out *= vandermonde(params.xi) ** 2 / (vandermonde(zshift) * vandermonde(yshift))
    return complex(out)


@dataclass
class GramReport:
    """Full coupling matrix with its classification audit.

    Sparsity decisions are taken on the ``cosine`` matrix (couplings divided
    by the Euclidean norms of the two states) so that the arbitrary overall
    scale of each basis member neither hides a genuine coupling nor turns
    dot-product cancellation noise into a fake one.  ``violations`` lists
    zero-classified cells above ``rtol * max|cosine|`` and, for invertible
    twists, off-diagonal cells below ``1e3 * rtol * max|cosine|`` (the
    hysteresis gap keeps the two checks from flapping).  Diagonal values are
    compared raw: the closed formula fixes their normalization.
    """

    params: object
    gram: np.ndarray
    cosine: np.ndarray
    diag: np.ndarray
    predicted_diag: np.ndarray
    rtol: float
    violations: list = field(default_factory=list)
    coefficients: dict = field(default_factory=dict)

    @property
    def scale(self):
        return float(np.abs(self.gram).max())

    @property
    def max_zero_cosine(self):
        """Largest zero-classified |cosine| relative to the largest |cosine|."""
        cscale = max(np.abs(self.cosine).max(), 1e-300)
        worst = 0.0
        for h in TernaryIndex.all(self.params.sites):
            for k in TernaryIndex.all(self.params.sites):
                if classify_pair(h, k).kind == "zero":
                    worst = max(worst, abs(self.cosine[h.flat, k.flat]) / cscale)
        return float(worst)

    @property
    def max_offdiag_cosine(self):
        cscale = max(np.abs(self.cosine).max(), 1e-300)
        worst = 0.0
        for h in TernaryIndex.all(self.params.sites):
            for k in TernaryIndex.all(self.params.sites):
                if h.digits != k.digits:
                    worst = max(worst, abs(self.cosine[h.flat, k.flat]) / cscale)
        return float(worst)

    @property
    def max_diag_rel_err(self):
        return float(
            np.max(np.abs(self.diag - self.predicted_diag) / np.abs(self.predicted_diag))
        )

    def entry(self, h, k):
        return self.gram[h.flat, k.flat]


def gram(left, right, params, rtol=1e-9):
    """Assemble <h|k>, classify every cell and compare the diagonal."""
    left = np.asarray(left)
    right = np.asarray(right)
    g = left @ right
    idx = list(TernaryIndex.all(params.sites))
    diag = np.diagonal(g).copy()
    predicted = np.array([diag_formula(params, h) for h in idx])
    row_norms = np.linalg.norm(left, axis=1)
    col_norms = np.linalg.norm(right, axis=0)
    cosine = g / np.outer(row_norms, col_norms)
    cscale = max(np.abs(cosine).max(), 1e-300)
    report = GramReport(params, g, cosine, diag, predicted, rtol)
    detk = params.twist.det
    kscale = max(np.abs(params.twist.k_matrix).max(), 1e-300) ** 3
    invertible = abs(detk) > rtol * kscale
    for k in idx:
        for h in idx:
            cls = classify_pair(h, k)
            val = cosine[h.flat, k.flat]
            if cls.kind == "zero" and abs(val) > rtol * cscale:
                report.violations.append(
                    {"kind": "zero", "h": h.digits, "k": k.digits,
                     "magnitude": abs(val) / cscale}
                )
            elif cls.kind == "offdiag":
                if invertible and abs(val) <= 1e3 * rtol * cscale:
                    report.violations.append(
                        {"kind": "offdiag", "h": h.digits, "k": k.digits,
                         "magnitude": abs(val) / cscale}
                    )
                if invertible:
                    coeff = g[h.flat, k.flat] / (g[k.flat, k.flat] * detk**cls.pair_count)
                    report.coefficients[(h.flat, k.flat)] = complex(coeff)
    return report


def extract_coefficient(report, h, k):
    """C = <h|k> / (<k|k> (det K)^r) for an off-diagonal cell."""
    cls = classify_pair(h, k)
    if cls.kind != "offdiag":
        raise ValueError("coefficient extraction needs an off-diagonal cell")
    detk = report.params.twist.det
    kscale = max(np.abs(report.params.twist.k_matrix).max(), 1e-300) ** 3
    if abs(detk) <= report.rtol * kscale:
        raise DetKZero("det K is numerically zero; the coefficient is undefined by this route")
    return complex(
        report.entry(h, k) / (report.entry(k, k) * detk**cls.pair_count)
    )


def coeff_r0_closed_form(params, h_rest):
    """Closed form of the single-pair coefficient with the pair on sites 1, 2.

    ``h_rest`` are the digits on sites 3..N (each in {0, 1, 2}), shared by the
    co-vector (0, 2, h_rest) and the vector (1, 1, h_rest).
    """
    if len(h_rest) != params.sites - 2:
        raise ValueError("h_rest must cover sites 3..N")
    eta = params.eta
    x1, x2 = params.xi[0], params.xi[1]
    w = InterpolationWeights(params)
    val = w.d(x2 - eta) / w.d(x1 - eta)
    val *= quantum_determinant_identity(params.xi, eta, x1) * eta**2 / (x1 - x2 + eta) ** 2
    for i, d in enumerate(h_rest):
        xa = params.xi[2 + i]
        up = xa - (eta if d == 2 else 0)
        lo = xa - (0 if d == 0 else eta)
        val *= ((x1 - eta - up) * (x2 - lo)) / ((x2 - eta - up) * (x1 - lo))
    return complex(val)


def c_scaling_scan(params, c_values, xyz, rtol=1e-9):
    """Scan twists with fixed (tr K, second invariant) and varying det K = c.

    For each c the twist eigenvalues are the roots of
    t^3 - a t^2 + b t - c with (a, b) taken from ``params.twist`` and the
    change of basis W kept fixed.  Returns per-cell least-squares slopes of
    log|coupling| against log|c| plus the extracted coefficients, which must
    be constant along the family.
    """
    if len(c_values) < 3:
        raise ValueError("need at least 3 det-K values")
    a_inv = params.twist.trace_inv
    b_inv = params.twist.second_inv
    reports = []
    for c in c_values:
        roots = np.roots([1.0, -a_inv, b_inv, -complex(c)])
        gaps = [abs(roots[i] - roots[j]) for i in range(3) for j in range(i + 1, 3)]
        if min(gaps) <= 1e-6 * max(np.abs(roots).max(), 1e-300):
            raise DegenerateFamily(f"cubic root collision at c={c}")
        order = np.lexsort((roots.imag, roots.real))
        twist = params.twist.from_eigenvalues(roots[order], w=params.twist.w)
        p = params.with_twist(twist)
        pair = dressed_pair(p, xyz)
        reports.append((complex(c), gram(pair.left, pair.right, p, rtol)))

    idx = list(TernaryIndex.all(params.sites))
    logc = np.log(np.abs([c for c, _ in reports]))
    slopes = {}
    coeff_spread = {}
    for k in idx:
        ones = k.ones()
        for r in range(1, len(ones) // 2 + 1):
            for alpha in itertools.combinations(ones, r):
                rest = [o for o in ones if o not in alpha]
                for beta in itertools.combinations(rest, r):
                    h = k.pair_substitution(alpha, beta)
                    mags = np.array([abs(rep.gram[h.flat, k.flat]) for _, rep in reports])
                    logm = np.log(mags)
                    slope = np.polyfit(logc, logm, 1)[0]
                    coeffs = [rep.coefficients[(h.flat, k.flat)] for _, rep in reports]
                    spread = max(abs(c0 - coeffs[0]) for c0 in coeffs) / max(
                        abs(coeffs[0]), 1e-300
                    )
                    slopes[(h.flat, k.flat)] = (float(slope.real), r)
                    coeff_spread[(h.flat, k.flat)] = float(spread)
    diag_mags = np.array([[abs(rep.gram[k.flat, k.flat]) for _, rep in reports] for k in idx])
    diag_slopes = [float(np.polyfit(logc, np.log(m), 1)[0].real) for m in diag_mags]
    return {
        "slopes": slopes,
        "coefficient_spread": coeff_spread,
        "diag_slopes": diag_slopes,
        "reports": reports,
    }


# ---------------------------------------------------------------------------
# dual families and the inverse measure


@dataclass
class DualBasisData:
    """Families bi-orthogonal to the SoV pair and the inverse coupling matrix.

    Rows of ``p_covectors`` pair to delta against right columns, columns of
    ``p_vectors`` against left rows, both normalized by the diagonal coupling.
    ``measure`` is the inverse of the coupling matrix.  All solves and residuals
    are carried out in the row/column-equilibrated frame: the basis members
    carry arbitrary overall scales spanning many orders of magnitude, and raw
    products of the inverse against the coupling matrix are dominated by
    cancellation noise proportional to that spread rather than by the actual
    quality of the inverse.
    """

    p_covectors: np.ndarray
    p_vectors: np.ndarray
    measure: np.ndarray
    ortho_residual: float
    inverse_residual: float


def dual_bases(pair, report):
    """p-families D R^{-1} and L^{-1} D plus the inverse measure."""
    dim = pair.dim
    eye = np.eye(dim)
    row_norms = np.linalg.norm(pair.left, axis=1)
    col_norms = np.linalg.norm(pair.right, axis=0)
    left_u = pair.left / row_norms[:, None]
    right_u = pair.right / col_norms[None, :]
    cosine = report.gram / np.outer(row_norms, col_norms)
    try:
        cos_inv = np.linalg.solve(cosine, eye.astype(complex))
        # p_cov = D R^{-1} = diag(N/dc) Ru^{-1};  p_vec = L^{-1} D = Lu^{-1} diag(N/dr)
        p_cov = np.linalg.solve(right_u.T, np.diag(report.diag / col_norms).T).T
        p_vec = np.linalg.solve(left_u, np.diag(report.diag / row_norms))
    except np.linalg.LinAlgError as exc:
        raise SingularGram(str(exc)) from exc
    measure = (cos_inv / row_norms[None, :]) / col_norms[:, None]
    inverse = np.abs(cos_inv @ cosine - eye).max()
    if not np.isfinite(inverse) or inverse > 1e-4:
        raise SingularGram(f"inverse residual {inverse:.2e}; coupling matrix near singular")
    ortho = max(
        np.abs(p_cov @ right_u - np.diag(report.diag / col_norms)).max()
        / max(np.abs(report.diag / col_norms).max(), 1e-300),
        np.abs(left_u @ p_vec - np.diag(report.diag / row_norms)).max()
        / max(np.abs(report.diag / row_norms).max(), 1e-300),
    )
    return DualBasisData(p_cov, p_vec, measure, float(ortho), float(inverse))


def expansion_coefficients(report, dual, h):
    """Coordinates of the dual vector labeled h in the right SoV family."""
    return dual.measure[:, h.flat] * report.diag[h.flat]


def _cbar(report, s, r_idx, pair_count):
    """<s|r> / (<s|s> c^p) for the h-side-normalized coefficient."""
    c = report.params.twist.det
    return report.entry(s, r_idx) / (report.entry(s, s) * c**pair_count)


def b_recursion(report, h):
    """Expansion coefficients of the dual vector of ``h`` over pair moves.

    Solved bottom-up in the pair count: the single-pair coefficients are
    B_{a,b} = -Cbar(h_{a,b} | h) and each larger move subtracts the already
    known sub-move contributions weighted by the corresponding Cbar.
    Returns ``{(alpha, beta): B}``.
    """
    ones = h.ones()
    out = {}
    max_r = len(ones) // 2
    for r in range(1, max_r + 1):
        for alpha in itertools.combinations(ones, r):
            rest = [o for o in ones if o not in alpha]
            for beta in itertools.combinations(rest, r):
                s = h.pair_substitution(alpha, beta)
                total = _cbar(report, s, h, r)
                for rp in range(1, r):
                    for ap in itertools.combinations(alpha, rp):
                        for bp in itertools.combinations(beta, rp):
                            rmid = h.pair_substitution(ap, bp)
                            total += out[(ap, bp)] * _cbar(report, s, rmid, r - rp)
                out[(alpha, beta)] = -total
    return out


# ---------------------------------------------------------------------------
# recursion checks for the coupling coefficients


def appc_recursion_check(params, r, xyz, h_rest=(), cache=None):
    """Numerical check of the coupling-coefficient recursion at pair depth r.

    r = 0 verifies the seed identity
    ``<h^(1,1)|T2(xi_2)|h^(0,1)> = <h^(1,1)|h^(1,1)> * d(xi_2 - eta)/d(xi_1 - eta)
    * eta/(xi_1 - xi_2 + eta) * prod_{a>=3} (xi_2 - xi_a^{(s_a)}) / (xi_1 - xi_a^{(s_a)})``
    with s_a = 1 - delta_{h_a,0}.  r = 1 verifies the two-pair reduction with
    sites (1,2) outer and (3,4) carrying the extra pair.  Returns relative
    residuals keyed by the configuration.
    """
    if r not in (0, 1):
        raise ValueError("recursion check supports r in {0, 1}")
    needed = 2 + 2 * r
    if params.sites < needed or len(h_rest) != params.sites - needed:
        raise ValueError(f"need {needed}+len(h_rest) sites")
    cache = cache or TransferCache(params)
    pair = dressed_pair(params, xyz, cache)
    eta = params.eta
    xi = params.xi
    w = InterpolationWeights(params)
    out = {}
    if r == 0:
        hk = TernaryIndex((1, 1) + tuple(h_rest))
        hb = TernaryIndex((0, 1) + tuple(h_rest))
        t2 = cache.t2(xi[1])
        lhs = pair.left[hk.flat] @ t2 @ pair.right[:, hb.flat]
        diag = pair.left[hk.flat] @ pair.right[:, hk.flat]
        pred = diag * w.d(xi[1] - eta) / w.d(xi[0] - eta) * eta / (xi[0] - xi[1] + eta)
        for i, d in enumerate(h_rest):
            node = xi[2 + i] - (0 if d == 0 else eta)
            pred *= (xi[1] - node) / (xi[0] - node)
        out["seed"] = abs(lhs - pred) / max(abs(lhs), 1e-300)
        return out

    # r = 1: sites (0,1) outer, (2,3) the pair, 0-based
    rest = tuple(h_rest)
    cov = TernaryIndex((1, 1, 0, 2) + rest)
    vec = TernaryIndex((0, 1, 1, 1) + rest)
    t2_outer = cache.t2(xi[1])
    t2_inner = cache.t2(xi[3])
    lhs = pair.left[cov.flat] @ t2_outer @ pair.right[:, vec.flat]

    def r_coef(src):
        # src is the 0-based index of the odd-slot node the expansion lands on
        val = w.d(xi[1] - eta) / w.d(xi[src] - eta)
        for n in (1, 3):
            val *= (xi[1] - (xi[n] - eta)) / (xi[src] - (xi[n] - eta))
        for n in (0, 2):
            if n == src:
                continue
            val *= (xi[1] - xi[n]) / (xi[src] - xi[n])
        for j, d in enumerate(rest):
            node = xi[4 + j] - (0 if d == 0 else eta)
            val *= (xi[1] - node) / (xi[src] - node)
        return val

    def s_coef():
        val = 1.0 + 0j
        for i in (0, 1):
            val *= (xi[2] - eta - xi[i]) / (xi[3] - eta - xi[i])
        val *= -eta / (xi[3] - eta - xi[2])
        for j, d in enumerate(rest):
            node = xi[4 + j] - (eta if d == 2 else 0)
            val *= (xi[2] - eta - node) / (xi[3] - eta - node)
        return val

    cova = TernaryIndex((1, 1, 1, 1) + rest)
    veca = TernaryIndex((1, 1, 0, 1) + rest)
    c3 = params.twist.det * quantum_determinant_identity(xi, eta, xi[2])
    m1 = pair.left[cova.flat] @ t2_inner @ pair.right[:, veca.flat]
    m2 = pair.left[cova.flat] @ t2_inner @ pair.right[:, vec.flat]
    rhs = c3 * s_coef() * (r_coef(0) * m1 + r_coef(2) * m2)
    out["two_pair"] = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    return out


# ---------------------------------------------------------------------------
# exports


def export_matrix_csv(matrix, path, sites):
    """CSV with flat ternary row/column headers; complex cells as "re,im"."""
    matrix = np.asarray(matrix)
    headers = [str(h.flat) for h in TernaryIndex.all(sites)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["h\\k"] + headers)
        for i, row in enumerate(matrix):
            writer.writerow(
                [headers[i]] + [f"{float(z.real)!r},{float(z.imag)!r}" for z in row]
            )


def report_summary(report):
    """JSON-friendly digest of a coupling-matrix report."""
    return {
        "scale": report.scale,
        "max_diag_rel_err": report.max_diag_rel_err,
        "max_zero_cosine": report.max_zero_cosine,
        "violations": report.violations,
        "n_offdiag": len(report.coefficients),
        "coefficients": {
            f"{hf}|{kf}": [c.real, c.imag] for (hf, kf), c in sorted(report.coefficients.items())
        },
    }
