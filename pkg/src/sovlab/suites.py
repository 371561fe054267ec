"""Named verification suites shared by the command line driver and the tests.

Each suite checks one cluster of identities on a reproducible parameter set
and returns a :class:`TaskResult` whose ``max_residual`` is compared against
the suite tolerance.  Sampled model data is derived from the run seed; rank
failures of sampled bases trigger resampling with the seed advanced (at most
five retries, all recorded in the result).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import gl2_model, gl3_model, sov_measure
from .det0_spectrum import (
    SeparateState,
    boundary_eigenstate_check,
    eigensolve_sov,
    interpolated_action_check,
    make_khat,
    norm_determinant,
    norm_direct,
    scalar_product_determinant,
    separate_overlap_direct,
    zero_pattern,
)
from .errors import ConfigError, SingularBasis
from .gl3_model import ModelParams, TransferCache, TwistData
from .sampling import ParameterSampler
from .sov_bases import TernaryIndex, dressed_pair, power_pair, reference_vector_solve
from .sov_measure import (
    appc_recursion_check,
    b_recursion,
    c_scaling_scan,
    coeff_r0_closed_form,
    dual_bases,
    expansion_coefficients,
    extract_coefficient,
    gram,
)
from .tt_charges import (
    build_tt,
    eigenstate_representation_residual,
    fusion_residuals_tt,
    tt_sov_bases,
)

MAX_RETRIES = 5

#: headline tolerance per suite
DEFAULT_TOLERANCES = {
    "yangbaxter": 1e-11,
    "fusion": 1e-9,
    "bases": 1e-9,
    "gram": 1e-8,
    "measure": 1e-8,
    "dual": 1e-7,
    "det0": 1e-8,
    "scalarproducts": 1e-7,
    "ttcharges": 1e-7,
    "gl2": 1e-7,
    "appendixA": 1e-10,
    "appendixC": 1e-8,
}

GL2_TASKS = ("yangbaxter", "gram", "measure", "gl2")


@dataclass
class TaskResult:
    name: str
    passed: bool
    tolerance: float
    max_residual: float
    details: dict = field(default_factory=dict)
    retries: list = field(default_factory=list)


class Workspace:
    """Lazily built shared model data for one verification run."""

    def __init__(self, algebra, sites, seed, eta=None, xi=None, twist=None, reference=None):
        self.algebra = algebra
        self.sites = sites
        self.seed = seed
        self._eta = eta
        self._xi = xi
        self._twist = twist
        self._reference = reference
        self._explicit = twist is not None or xi is not None or eta is not None
        self.retries = []
        self._cache = {}

    # -- gl3 ---------------------------------------------------------------

    def _sample_gl3(self, seed):
        s = ParameterSampler(seed)
        eta = self._eta if self._eta is not None else s.shift()
        if self._twist is not None:
            twist = self._twist
        else:
            twist = TwistData.from_eigenvalues(s.distinct_eigenvalues(), w=s.invertible3())
        xi = tuple(self._xi) if self._xi is not None else s.inhomogeneities(self.sites, eta)
        xyz = tuple(self._reference) if self._reference is not None else s.reference3()
        return ModelParams(self.sites, eta, xi, twist), xyz

    def gl3(self):
        """Invertible-twist chain, resampled until the dressed pair has full rank."""
        if "gl3" in self._cache:
            return self._cache["gl3"]
        seed = self.seed
        for attempt in range(MAX_RETRIES + 1):
            params, xyz = self._sample_gl3(seed)
            cache = TransferCache(params)
            pair = dressed_pair(params, xyz, cache)
            try:
                pair.require_full_rank()
            except SingularBasis as exc:
                if self._explicit or attempt == MAX_RETRIES:
                    raise
                self.retries.append({"seed": seed, "reason": str(exc)})
                seed += 1
                continue
            self._cache["gl3"] = (params, xyz, cache, pair)
            return self._cache["gl3"]

    def gl3_gram(self, rtol=1e-9):
        if "gram" not in self._cache:
            params, xyz, cache, pair = self.gl3()
            self._cache["gram"] = gram(pair.left, pair.right, params, rtol)
        return self._cache["gram"]

    def khat(self):
        """Zero-determinant companion chain with the same (eta, xi)."""
        if "khat" not in self._cache:
            params, xyz, _, _ = self.gl3()
            kp = params.with_twist(make_khat(params.twist))
            cache = TransferCache(kp)
            pair = dressed_pair(kp, xyz, cache)
            pair.require_full_rank()
            self._cache["khat"] = (kp, xyz, cache, pair)
        return self._cache["khat"]

    def khat_states(self):
        """Eigenstates with their zero patterns; ambiguous patterns are
        excluded from determinant runs and logged."""
        if "khat_states" not in self._cache:
            from .errors import AmbiguousPattern

            kp, xyz, cache, pair = self.khat()
            states, _, _ = eigensolve_sov(kp, xyz, pair=pair, cache=cache)
            kept, excluded = [], []
            for st in states:
                try:
                    zero_pattern(st, kp, cache)
                    kept.append(st)
                except AmbiguousPattern as exc:
                    excluded.append({"index": st.index, "reason": str(exc)})
            self._cache["khat_states"] = (kept, excluded)
        return self._cache["khat_states"]

    # -- gl2 ---------------------------------------------------------------

    def gl2(self):
        if "gl2" not in self._cache:
            s = ParameterSampler(self.seed)
            eta = self._eta if self._eta is not None else s.shift()
            xi = tuple(self._xi) if self._xi is not None else s.inhomogeneities(self.sites, eta)
            if self._twist is not None:
                k = np.asarray(self._twist, dtype=complex)
            else:
                k = s.gl2_twist()
            ref = tuple(self._reference) if self._reference is not None else s.reference2()
            params = gl2_model.Gl2Params(self.sites, eta, xi, k, ref)
            self._cache["gl2"] = (params, gl2_model.Gl2TransferCache(params))
        return self._cache["gl2"]


def _result(name, tol, residual, details, ws, extra_ok=True):
    return TaskResult(
        name=name,
        passed=bool(residual <= tol and extra_ok),
        tolerance=tol,
        max_residual=float(residual),
        details=details,
        retries=list(ws.retries),
    )


# ---------------------------------------------------------------------------
# suites


def run_yangbaxter(ws, tol):
    s = ParameterSampler(ws.seed + 1000)
    worst = 0.0
    details = {}
    for _ in range(3):
        lam, mu, eta = s.complex_rational(), s.complex_rational(), s.shift()
        worst = max(worst, gl3_model.check_yang_baxter(lam, mu, eta))
        worst = max(worst, gl3_model.check_yang_baxter(lam, lam, eta))
    details["yang_baxter"] = worst
    if ws.algebra == "gl3":
        params, _, _, _ = ws.gl3()
        k = params.twist.k_matrix
        scal = max(
            gl3_model.scalar_yb_residual(k, s.complex_rational(), params.eta) for _ in range(3)
        )
        details["scalar_yang_baxter"] = scal
        worst = max(worst, scal)
        rtt_sites = min(ws.sites, 2)  # two auxiliary legs triple the dense space
        small = ModelParams(rtt_sites, params.eta, params.xi[:rtt_sites], params.twist)
        rtt = gl3_model.rtt_residual(small, s.complex_rational(), s.complex_rational())
        details["rtt"] = rtt
        worst = max(worst, rtt)
    return _result("yangbaxter", tol, worst, details, ws)


def run_fusion(ws, tol):
    params, _, cache, _ = ws.gl3()
    s = ParameterSampler(ws.seed + 2000)
    table = gl3_model.fusion_residuals(params, cache)
    worst = max(table["fusion"].values())
    worst = max(worst, max(table["central_zero"].values()))
    qworst = 0.0
    for _ in range(5):
        lam = s.spectral_point(params.xi, params.eta)
        t3 = cache.t3(lam)
        pred = gl3_model.quantum_determinant(params, lam)
        qworst = max(
            qworst, np.abs(t3 - pred * np.eye(params.dim)).max() / max(abs(pred), 1e-300)
        )
    interp = 0.0
    for _ in range(3):
        lam = s.complex_rational()
        t2 = cache.t2(lam)
        interp = max(
            interp,
            np.abs(gl3_model.t2_interpolated(params, lam, cache) - t2).max()
            / max(np.abs(t2).max(), 1e-300),
        )
    asym = _asymptotics_residual(params, cache)
    details = {
        "fusion": worst,
        "quantum_determinant": qworst,
        "t2_interpolation": interp,
        "asymptotics": asym,
    }
    return _result("fusion", tol, max(worst, qworst, interp), details, ws, extra_ok=asym < 1e-4)


def _asymptotics_residual(params, cache):
    """First-order Richardson check of the central large-argument behavior."""
    scale = max(max(abs(x) for x in params.xi), abs(params.eta), 1.0)
    lam = 1e6 * scale
    worst = 0.0
    for m, lead in ((1, params.twist.trace_inv), (2, params.twist.second_inv)):
        f1 = cache.value(m, lam) / lam ** (m * params.sites)
        f2 = cache.value(m, 2 * lam) / (2 * lam) ** (m * params.sites)
        richardson = 2 * f2 - f1
        worst = max(
            worst, np.abs(richardson - lead * np.eye(params.dim)).max() / max(abs(lead), 1e-300)
        )
    return float(worst)


def run_bases(ws, tol):
    params, xyz, cache, pair = ws.gl3()
    rl, rr = pair.rank_ratios()
    details = {"rank_left": rl, "rank_right": rr, "variant": pair.variant}
    defr0 = float(
        np.abs(pair.left @ pair.ref_vector - np.eye(params.dim)[0]).max()
    )
    solved = reference_vector_solve(pair.left)
    agree = float(
        np.abs(solved - pair.ref_vector).max() / max(np.abs(pair.ref_vector).max(), 1e-300)
    )
    s = ParameterSampler(ws.seed + 3000)
    rst = s.reference3()
    ppair = power_pair(params, xyz, rst, cache)
    prl, prr = ppair.rank_ratios()
    details.update({"def_r0": defr0, "closed_vs_solve": agree,
                    "rank_left_powers": prl, "rank_right_powers": prr})
    alpha = _variant_relation_residual(params, xyz, cache)
    details["variant_relation"] = alpha
    worst = max(defr0, agree, alpha)
    ok = min(rl, rr, prl, prr) > 1e-9
    return _result("bases", tol, worst, details, ws, extra_ok=ok)


def _variant_relation_residual(params, xyz, cache):
    """Dressed rows equal plain-power rows up to the per-label quantum
    determinant factor, after matching the references through the full
    transfer product."""
    pair = dressed_pair(params, xyz, cache)
    full = np.eye(params.dim, dtype=complex)
    for x in params.xi:
        full = full @ cache.t1(x)
    base_row = np.linalg.solve(full.T, pair.ref_covector)
    t1 = [cache.t1(x) for x in params.xi]
    worst = 0.0
    for h in TernaryIndex.all(params.sites):
        row = base_row
        for a, d in enumerate(h.digits):
            for _ in range(d):
                row = row @ t1[a]
        alpha = 1.0 + 0j
        for a, d in enumerate(h.digits):
            if d == 0:
                alpha *= gl3_model.quantum_determinant(params, params.xi[a])
        ref = pair.left[h.flat]
        worst = max(worst, np.abs(ref - alpha * row).max() / max(np.abs(ref).max(), 1e-300))
    return float(worst)


def run_gram(ws, tol):
    if ws.algebra == "gl2":
        return _run_gram_gl2(ws, tol)
    params, _, _, _ = ws.gl3()
    report = ws.gl3_gram()
    zero_worst = max(
        (v["magnitude"] for v in report.violations if v["kind"] == "zero"), default=0.0
    )
    offdiag_bad = [v for v in report.violations if v["kind"] == "offdiag"]
    details = sov_measure.report_summary(report)
    ok = not offdiag_bad
    return _result("gram", tol, max(zero_worst, report.max_diag_rel_err), details, ws, ok)


def _run_gram_gl2(ws, tol):
    params, cache = ws.gl2()
    left, right, _ = gl2_model.gl2_bases(params, cache)
    g = left @ right
    scale = np.abs(g).max()
    worst = 0.0
    for h in gl2_model.binary_labels(params.sites):
        for k in gl2_model.binary_labels(params.sites):
            pred = gl2_model.coupling_prediction(params, h) if h == k else 0.0
            worst = max(
                worst, abs(g[gl2_model.flat2(h), gl2_model.flat2(k)] - pred) / scale
            )
    return _result("gram", tol, worst, {"scale": float(scale)}, ws)


def run_measure(ws, tol, out_dir=None):
    if ws.algebra == "gl2":
        params, cache = ws.gl2()
        left, right, _ = gl2_model.gl2_bases(params, cache)
        g = left @ right
        worst = 0.0
        for h in gl2_model.binary_labels(params.sites):
            pred = gl2_model.coupling_prediction(params, h)
            worst = max(worst, abs(g[gl2_model.flat2(h), gl2_model.flat2(h)] - pred) / abs(pred))
        if out_dir is not None:
            _write_gl2_csv(g, out_dir / "gram.csv", params.sites)
            _write_gl2_csv(np.linalg.inv(g), out_dir / "measure.csv", params.sites)
        return _result("measure", tol, worst, {"dim": params.dim}, ws)
    params, _, _, pair = ws.gl3()
    report = ws.gl3_gram()
    worst = report.max_diag_rel_err
    kind_worst = _twist_independence_residual(ws)
    if out_dir is not None:
        sov_measure.export_matrix_csv(report.gram, out_dir / "gram.csv", params.sites)
        measure = np.linalg.solve(report.gram, np.eye(params.dim, dtype=complex))
        sov_measure.export_matrix_csv(measure, out_dir / "measure.csv", params.sites)
    details = {"max_diag_rel_err": worst, "twist_independence": kind_worst}
    return _result("measure", tol, max(worst, kind_worst), details, ws)


def _write_gl2_csv(matrix, path, sites):
    import csv

    headers = [str(gl2_model.flat2(h)) for h in gl2_model.binary_labels(sites)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["h\\k"] + headers)
        for i, row in enumerate(np.asarray(matrix)):
            writer.writerow(
                [headers[i]] + [f"{float(z.real)!r},{float(z.imag)!r}" for z in row]
            )


def _twist_independence_residual(ws):
    """The diagonal couplings must not move when the twist changes."""
    params, xyz, _, _ = ws.gl3()
    report = ws.gl3_gram()
    s = ParameterSampler(ws.seed + 4000)
    other = TwistData.from_eigenvalues(s.distinct_eigenvalues(), w=s.invertible3())
    p2 = params.with_twist(other)
    pair2 = dressed_pair(p2, xyz)
    g2 = pair2.left @ pair2.right
    diag2 = np.diagonal(g2)
    return float(np.max(np.abs(diag2 - report.diag) / np.abs(report.diag)))


def run_dual(ws, tol):
    params, xyz, cache, pair = ws.gl3()
    report = ws.gl3_gram()
    dual = dual_bases(pair, report)
    worst = max(dual.inverse_residual, 0.0)
    sparsity = _dual_sparsity_residual(params, report, dual)
    brec = _b_recursion_residual(params, report, dual)
    details = {
        "inverse_residual": dual.inverse_residual,
        "ortho_residual": dual.ortho_residual,
        "expansion_sparsity": sparsity,
        "b_recursion": brec,
    }
    return _result("dual", tol, max(worst, sparsity, brec), details, ws)


def _dual_sparsity_residual(params, report, dual):
    """Dual-vector coordinates must vanish outside the pair-move support."""
    worst = 0.0
    for h in TernaryIndex.all(params.sites):
        coeffs = expansion_coefficients(report, dual, h)
        scale = max(np.abs(coeffs).max(), 1e-300)
        allowed = {h.flat}
        ones = h.ones()
        for r in range(1, len(ones) // 2 + 1):
            for alpha in itertools.combinations(ones, r):
                rest = [o for o in ones if o not in alpha]
                for beta in itertools.combinations(rest, r):
                    allowed.add(h.pair_substitution(alpha, beta).flat)
        for flat, c in enumerate(coeffs):
            if flat not in allowed:
                worst = max(worst, abs(c) / scale)
    return float(worst)


def _b_recursion_residual(params, report, dual):
    c = params.twist.det
    worst = 0.0
    for h in TernaryIndex.all(params.sites):
        if len(h.ones()) < 2:
            continue
        coeffs = expansion_coefficients(report, dual, h)
        bmap = b_recursion(report, h)
        for (alpha, beta), b in bmap.items():
            target = h.pair_substitution(alpha, beta)
            pred = c ** len(alpha) * b
            worst = max(
                worst, abs(coeffs[target.flat] - pred) / max(np.abs(coeffs).max(), 1e-300)
            )
    return float(worst)


def run_det0(ws, tol):
    kp, xyz, cache, pair = ws.khat()
    report = gram(pair.left, pair.right, kp)
    off = report.max_offdiag_cosine
    diag_err = report.max_diag_rel_err
    s = ParameterSampler(ws.seed + 5000)
    lams = [s.spectral_point(kp.xi, kp.eta) for _ in range(3)]
    action_worst = 0.0
    rng = np.random.default_rng(ws.seed + 17)
    for _ in range(5):
        digits = tuple(rng.integers(0, 3, kp.sites).tolist())
        h = TernaryIndex(digits)
        for which in (1, 2):
            for side in ("left", "right"):
                action_worst = max(
                    action_worst,
                    interpolated_action_check(kp, h, which, side, xyz, lams, cache),
                )
    boundary = boundary_eigenstate_check(
        kp, xyz, [s.spectral_point(kp.xi, kp.eta) for _ in range(5)], cache
    )
    bworst = max(v[0] if isinstance(v, tuple) else v for v in boundary.values())
    spread = max(v[2] for v in boundary.values() if isinstance(v, tuple))
    details = {
        "offdiag": float(off),
        "diag_rel_err": float(diag_err),
        "interpolated_actions": float(action_worst),
        "boundary_residual": float(bworst),
        "boundary_constant_spread": float(spread),
    }
    worst = max(off, diag_err, action_worst, bworst, spread)
    return _result("det0", tol, worst, details, ws)


def run_scalarproducts(ws, tol, n_random=20):
    kp, xyz, cache, pair = ws.khat()
    states, excluded = ws.khat_states()
    fact = max(st.factorization_residual for st in states)
    rng = np.random.default_rng(ws.seed + 23)
    sp_worst = 0.0
    norm_worst = 0.0
    records = []
    for st in states:
        nd = norm_determinant(st, kp, cache)
        direct = norm_direct(st)
        nres = abs(nd - direct) / max(abs(direct), 1e-300)
        norm_worst = max(norm_worst, nres)
        records.append(
            {
                "index": st.index,
                "pattern": list(st.perm),
                "split": st.msize,
                "norm_formula": [nd.real, nd.imag],
                "norm_direct": [direct.real, direct.imag],
                "rel_err": float(nres),
            }
        )
    for _ in range(n_random):
        st = states[int(rng.integers(0, len(states)))]
        alpha = SeparateState.random(rng, kp.sites)
        det_val = scalar_product_determinant(alpha, st, kp)
        direct = separate_overlap_direct(alpha, st, kp)
        sp_worst = max(sp_worst, abs(det_val - direct) / max(abs(direct), 1e-300))
    details = {
        "factorization": float(fact),
        "scalar_products": float(sp_worst),
        "norms": float(norm_worst),
        "per_state": records,
        "excluded_ambiguous": excluded,
    }
    return _result("scalarproducts", tol, max(fact, sp_worst, norm_worst), details, ws)


def run_ttcharges(ws, tol):
    params, xyz, cache, _ = ws.gl3()
    family = build_tt(params)
    fus = fusion_residuals_tt(family)
    s = ParameterSampler(ws.seed + 6000)
    comm_worst = 0.0
    for _ in range(3):
        mu = s.spectral_point(params.xi, params.eta)
        lam = s.spectral_point(params.xi, params.eta)
        t = cache.t1(mu)
        c = family.charge(1, lam)
        comm_worst = max(
            comm_worst, np.abs(t @ c - c @ t).max() / max(np.abs(t @ c).max(), 1e-300)
        )
    tpair = tt_sov_bases(family, xyz)
    treport = gram(tpair.left, tpair.right, params.with_twist(family.khat_params.twist))
    off = treport.max_offdiag_cosine
    diag_err = treport.max_diag_rel_err
    rep = eigenstate_representation_residual(family, tpair)
    central = max(
        np.abs(family.charge(2, x + params.eta)).max() for x in params.xi
    ) / max(np.abs(family.charge(2, params.xi[0])).max(), 1e-300)
    details = {
        "fusion": float(max(fus.values())),
        "commutation": float(comm_worst),
        "projector_completeness": family.completeness_residual(),
        "gram_offdiag": float(off),
        "gram_diag": float(diag_err),
        "eigen_representation": float(rep),
        "central_zero": float(central),
    }
    worst = max(max(fus.values()), comm_worst, off, diag_err, rep, central)
    return _result("ttcharges", tol, worst, details, ws)


def run_gl2(ws, tol):
    params, cache = ws.gl2()
    left, right, _ = gl2_model.gl2_bases(params, cache)
    g = left @ right
    scale = np.abs(g).max()
    measure_worst = 0.0
    for h in gl2_model.binary_labels(params.sites):
        for k in gl2_model.binary_labels(params.sites):
            pred = gl2_model.coupling_prediction(params, h) if h == k else 0.0
            measure_worst = max(
                measure_worst, abs(g[gl2_model.flat2(h), gl2_model.flat2(k)] - pred) / scale
            )
    ident = gl2_model.identity_decomposition_residual(params, cache)
    qworst = 0.0
    for a in range(params.sites):
        scalar, resid, closed = gl2_model.qdet_scalar(params, a, cache)
        qworst = max(qworst, resid, abs(scalar - closed) / abs(closed))
    reps = gl2_model.gl2_eigen_reps(params, cache=cache)
    details = {
        "measure": float(measure_worst),
        "identity_decomposition": float(ident),
        "fusion_scalar": float(qworst),
        "eigen_reconstruction": reps["reconstruction_residual"],
        "detk_representation": reps["detk_rep_residual"],
        "min_reference_overlap": reps["min_overlap"],
    }
    worst = max(measure_worst, ident, qworst, reps["reconstruction_residual"],
                reps["detk_rep_residual"] or 0.0)
    ok = reps["min_overlap"] > 1e-9
    return _result("gl2", tol, worst, details, ws, extra_ok=ok)


def run_appendix_a(ws, tol):
    params, _, cache, _ = ws.gl3()
    worst = 0.0
    details = {}
    for m in range(1, min(params.sites, 3) + 1):
        sites = tuple(range(1, m + 1))
        r = gl3_model.product_formula_check(params, sites)
        details[f"product_m{m}"] = r
        worst = max(worst, r)
    if params.sites >= 3:
        r = gl3_model.exchange_relation_residual(
            params, 1, params.sites, tuple(range(2, params.sites))
        )
        details["exchange_relation"] = r
        worst = max(worst, r)
    return _result("appendixA", tol, worst, details, ws)


def run_appendix_c(ws, tol):
    params, xyz, cache, _ = ws.gl3()
    details = {}
    worst = 0.0
    if params.sites >= 2:
        rng = np.random.default_rng(ws.seed + 31)
        rest = tuple(rng.integers(0, 3, params.sites - 2).tolist())
        out = appc_recursion_check(params, 0, xyz, h_rest=rest, cache=cache)
        details["seed_rest_" + "".join(map(str, rest))] = out["seed"]
        worst = max(worst, out["seed"])
    if params.sites >= 4:
        rest = tuple()
        if params.sites > 4:
            rng = np.random.default_rng(ws.seed + 37)
            rest = tuple(rng.integers(0, 3, params.sites - 4).tolist())
        out = appc_recursion_check(params, 1, xyz, h_rest=rest, cache=cache)
        details["two_pair"] = out["two_pair"]
        worst = max(worst, out["two_pair"])
    coeff_worst = 0.0
    if params.sites in (2, 3):
        report = ws.gl3_gram()
        for rest in itertools.product((0, 1, 2), repeat=params.sites - 2):
            h = TernaryIndex((0, 2) + rest)
            k = TernaryIndex((1, 1) + rest)
            c_meas = extract_coefficient(report, h, k)
            c_form = coeff_r0_closed_form(params, rest)
            coeff_worst = max(coeff_worst, abs(c_meas - c_form) / abs(c_form))
        details["single_pair_coefficient"] = coeff_worst
    worst = max(worst, coeff_worst)
    return _result("appendixC", tol, worst, details, ws)


SUITES = {
    "yangbaxter": run_yangbaxter,
    "fusion": run_fusion,
    "bases": run_bases,
    "gram": run_gram,
    "measure": run_measure,
    "dual": run_dual,
    "det0": run_det0,
    "scalarproducts": run_scalarproducts,
    "ttcharges": run_ttcharges,
    "gl2": run_gl2,
    "appendixA": run_appendix_a,
    "appendixC": run_appendix_c,
}


def validate_tasks(tasks, algebra):
    for t in tasks:
        if t not in SUITES:
            raise ConfigError(f"unknown task {t!r}; known: {sorted(SUITES)}")
        if algebra == "gl2" and t not in GL2_TASKS:
            raise ConfigError(f"task {t!r} is not available for algebra gl2")


def run_task(name, ws, tolerances, out_dir=None):
    tol = tolerances.get(name, DEFAULT_TOLERANCES[name])
    if name == "measure":
        return run_measure(ws, tol, out_dir=out_dir)
    return SUITES[name](ws, tol)
