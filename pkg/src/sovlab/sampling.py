"""Seeded parameter sampling on small rational grids.

All random model data flows through :class:`ParameterSampler` so that a run is
reproducible from a single integer seed.  Values are drawn as complex numbers
(p + i q)/den with small integer p, q, then rejected if they violate (or come
within ``margin`` of violating) the genericity conditions.  The rational grid
keeps condition numbers tame and makes reports bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np

_DEN = 8
_LO, _HI = -12, 12
MARGIN = 1e-3


class ParameterSampler:
    def __init__(self, seed):
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)

    def complex_rational(self, min_abs=0.0):
        while True:
            p = self._rng.integers(_LO, _HI + 1)
            q = self._rng.integers(_LO, _HI + 1)
            z = complex(p, q) / _DEN
            if abs(z) >= min_abs:
                return z

    def shift(self):
        """Shift parameter eta, bounded away from zero."""
        return self.complex_rational(min_abs=0.3)

    def inhomogeneities(self, sites, eta, margin=MARGIN, max_tries=500):
        """Pairwise-generic inhomogeneities: xi_i - xi_j stays at distance
        >= margin from {0, +eta, -eta}."""
        for _ in range(max_tries):
            xs = [self.complex_rational() for _ in range(sites)]
            ok = True
            for i in range(sites):
                for j in range(sites):
                    if i == j:
                        continue
                    d = xs[i] - xs[j]
                    if min(abs(d), abs(d - eta), abs(d + eta)) < margin:
                        ok = False
            if ok:
                return tuple(xs)
        raise RuntimeError("could not sample generic inhomogeneities")

    def reference3(self):
        """(x, y, z) with every component bounded away from zero."""
        return tuple(self.complex_rational(min_abs=0.25) for _ in range(3))

    def spectral_point(self, xi, eta, margin=5e-2, max_tries=500):
        """A spectral parameter away from every shifted inhomogeneity node.

        Grid rationals can hit xi_a + k*eta exactly, where interpolation
        weights and eigenvalue profiles have poles or zeros.
        """
        nodes = [x + k * eta for x in xi for k in (-1, 0, 1, 2)]
        for _ in range(max_tries):
            lam = self.complex_rational()
            if min(abs(lam - n) for n in nodes) >= margin:
                return lam
        raise RuntimeError("could not sample a generic spectral point")

    def reference2(self):
        return tuple(self.complex_rational(min_abs=0.25) for _ in range(2))

    def distinct_eigenvalues(self, n=3, min_gap=0.2, nonzero=True, max_tries=500):
        for _ in range(max_tries):
            vals = [self.complex_rational(min_abs=0.3 if nonzero else 0.0) for _ in range(n)]
            gaps = [abs(vals[i] - vals[j]) for i in range(n) for j in range(i + 1, n)]
            if min(gaps) >= min_gap and (not nonzero or min(abs(v) for v in vals) >= 0.3):
                return vals
        raise RuntimeError("could not sample distinct eigenvalues")

    def invertible3(self, max_tries=200):
        """A generic well-conditioned 3x3 change-of-basis matrix."""
        for _ in range(max_tries):
            w = np.array([[self.complex_rational() for _ in range(3)] for _ in range(3)])
            w += np.eye(3)
            s = np.linalg.svd(w, compute_uv=False)
            if s[-1] > 0.2 * s[0]:
                return w
        raise RuntimeError("could not sample an invertible change of basis")

    def gl2_twist(self, max_tries=200):
        """Generic 2x2 twist, not a multiple of the identity."""
        for _ in range(max_tries):
            k = np.array([[self.complex_rational() for _ in range(2)] for _ in range(2)])
            off = max(abs(k[0, 1]), abs(k[1, 0]), abs(k[0, 0] - k[1, 1]))
            if off >= 0.2 and abs(np.linalg.det(k)) >= 0.05:
                return k
        raise RuntimeError("could not sample a gl2 twist")


@dataclass
class SampleLog:
    """Record of resampling retries, embedded into reports."""

    seed: int
    retries: int = 0
    notes: tuple = ()

    def bumped(self, note):
        return SampleLog(self.seed + 1, self.retries + 1, self.notes + (note,))
