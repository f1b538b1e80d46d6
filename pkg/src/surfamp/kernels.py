"""Trilinear interaction kernels and the sampling certificates that police them.

A kernel here is a complex symbol b(xi1, xi2, xi3) defined for real frequencies
summing to zero with every leg nonzero (the excluded set Z = {xi1*xi2*xi3 = 0}
is rejected, never extended).  Admissibility is not assumed: symmetry,
conjugation, homogeneity, the singular-rescaling bounds and the two-argument
reduction identities are all certified by reproducible random sampling.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

SUM_TOL = 1e-14          # zero-sum slack relative to the largest leg
IDENTITY_TOL = 1e-12     # pass level for exact algebraic identities
DOUBLING_RATIO = 1.1     # sup stability threshold for ~<-type bounds
_FLOOR = 1e-30           # additive floor for relative deviations


class ExcludedSetError(ValueError):
    """Evaluation requested on Z or on a pair-kernel sector boundary."""


# ---------------------------------------------------------------------------
# domain types


@dataclasses.dataclass(frozen=True)
class ZeroSumTriple:
    xi1: float
    xi2: float
    xi3: float

    def __post_init__(self):
        m = max(abs(self.xi1), abs(self.xi2), abs(self.xi3))
        if not np.isfinite(m) or m == 0.0:
            raise ValueError(f"degenerate triple {self.astuple()}")
        if abs(self.xi1 + self.xi2 + self.xi3) > SUM_TOL * m:
            raise ValueError(f"frequencies do not sum to zero: {self.astuple()}")
        if self.xi1 == 0.0 or self.xi2 == 0.0 or self.xi3 == 0.0:
            raise ExcludedSetError(f"triple touches the excluded set: {self.astuple()}")

    def astuple(self) -> tuple:
        return (self.xi1, self.xi2, self.xi3)


def _validate_triple_arrays(x1, x2, x3):
    m = np.maximum(np.abs(x1), np.maximum(np.abs(x2), np.abs(x3)))
    bad = ~np.isfinite(m) | (m == 0.0) | (np.abs(x1 + x2 + x3) > SUM_TOL * m)
    if np.any(bad):
        i = int(np.argmax(np.atleast_1d(bad)))
        raise ValueError(
            "frequencies do not sum to zero: "
            f"({np.atleast_1d(x1)[i]}, {np.atleast_1d(x2)[i]}, {np.atleast_1d(x3)[i]})"
        )
    on_z = (x1 == 0.0) | (x2 == 0.0) | (x3 == 0.0)
    if np.any(on_z):
        i = int(np.argmax(np.atleast_1d(on_z)))
        raise ExcludedSetError(
            "triple touches the excluded set: "
            f"({np.atleast_1d(x1)[i]}, {np.atleast_1d(x2)[i]}, {np.atleast_1d(x3)[i]})"
        )


@dataclasses.dataclass(frozen=True)
class Kernel:
    """Symmetric trilinear symbol on zero-sum triples.

    ``fn`` must accept three broadcastable float arrays and return a complex
    array; scalar calls go through the same path.  ``homogeneity_degree`` is
    declared, never inferred, and is None for kernels mixing degrees.
    """

    name: str
    fn: Callable
    homogeneity_degree: float | None = None
    params: dict = dataclasses.field(default_factory=dict)

    def __call__(self, xi1, xi2, xi3):
        x1 = np.asarray(xi1, dtype=float)
        x2 = np.asarray(xi2, dtype=float)
        x3 = np.asarray(xi3, dtype=float)
        _validate_triple_arrays(x1, x2, x3)
        out = np.asarray(self.fn(x1, x2, x3), dtype=complex)
        if out.ndim == 0 and np.ndim(xi1) == 0:
            return complex(out)
        return out

    def evaluate(self, triple: ZeroSumTriple) -> complex:
        return complex(self.fn(
            np.float64(triple.xi1), np.float64(triple.xi2), np.float64(triple.xi3)))


@dataclasses.dataclass(frozen=True)
class PairKernel:
    """Two-argument kernel q(k, l), defined off {k*l*(k+l) = 0}.

    gamma is the defining constant of the phase-boundary instance (None for
    reductions of trilinear kernels).
    """

    name: str
    fn: Callable
    gamma: complex | None = None
    params: dict = dataclasses.field(default_factory=dict)

    def __call__(self, k, ell):
        ka = np.asarray(k, dtype=float)
        la = np.asarray(ell, dtype=float)
        bad = (ka == 0.0) | (la == 0.0) | (ka + la == 0.0)
        if np.any(bad):
            i = int(np.argmax(np.atleast_1d(bad)))
            raise ExcludedSetError(
                f"pair kernel evaluated on a sector boundary: "
                f"({np.atleast_1d(ka)[i]}, {np.atleast_1d(la)[i]})")
        out = np.asarray(self.fn(ka, la), dtype=complex)
        if out.ndim == 0 and np.ndim(k) == 0:
            return complex(out)
        return out


@dataclasses.dataclass
class BoundCertificate:
    """Outcome of one sampled property check.

    For ~<-type bounds, ``constant`` is the certified (sampled, doubling-stable)
    sup and equals ``worst_ratio``.  For exact identities, ``constant`` is the
    tolerance and ``worst_ratio`` the observed worst deviation, so
    worst_ratio <= constant exactly when the check passes.
    """

    property_name: str
    constant: float
    samples_checked: int
    worst_ratio: float
    passed: bool
    worst_point: tuple = ()
    details: dict = dataclasses.field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "property": self.property_name,
            "constant": self.constant,
            "samples": self.samples_checked,
            "worst_ratio": self.worst_ratio,
            "worst_triple": list(self.worst_point),
            "passed": bool(self.passed),
        }


# ---------------------------------------------------------------------------
# built-in kernels


def hiz_kernel() -> Kernel:
    """|k l m| / (|k|+|l|+|m|), the classical degree-2 elastic-wave kernel."""
    def fn(k, l, m):
        return (np.abs(k * l * m) / (np.abs(k) + np.abs(l) + np.abs(m))) + 0j
    return Kernel("hiz", fn, homogeneity_degree=2.0)


def austria_hunter_kernel(A: float, B: float, C: float, D: float) -> Kernel:
    """Four-parameter degree-1 family; (2, 0, -2, 0) collapses to |k|+|l|+|m|."""
    def fn(k, l, m):
        s = np.abs(k) + np.abs(l) + np.abs(m)
        sg = np.sign(k * l * m)
        return ((A - 1j * B * sg) * (np.abs(k * l) + np.abs(l * m) + np.abs(m * k))
                + (C - 1j * D * sg) * (k * l + l * m + m * k)) / s
    return Kernel("austria", fn, homogeneity_degree=1.0,
                  params={"A": A, "B": B, "C": C, "D": D})


def phase_boundary_pair_kernel(gamma: complex) -> PairKernel:
    """Piecewise kernel over the six sectors cut by {k=0}, {l=0}, {k+l=0}.

    Each sector value is gamma or conj(gamma) times a real factor of modulus
    at most 1, so sup|q| = |gamma|.  Sector classification is by strict sign
    tests; boundaries are rejected upstream.
    """
    g = complex(gamma)
    if not np.isfinite(g.real) or not np.isfinite(g.imag):
        raise ValueError("gamma must be finite")
    gc = np.conj(g)

    def fn(k, l):
        s = k + l
        out = np.empty(np.broadcast(k, l).shape, dtype=complex)
        pp = (k > 0) & (l > 0)
        nn = (k < 0) & (l < 0)
        pn_p = (k > 0) & (l < 0) & (s > 0)
        np_n = (k < 0) & (l > 0) & (s < 0)
        np_p = (k < 0) & (l > 0) & (s > 0)
        pn_n = (k > 0) & (l < 0) & (s < 0)
        kk = np.broadcast_to(k, out.shape)
        ll = np.broadcast_to(l, out.shape)
        ss = np.broadcast_to(s, out.shape)
        # factors written as (k+l)/k, not 1 + l/k: one rounded subtraction
        # instead of a catastrophic cancellation when l/k is near -1
        out[pp] = g
        out[nn] = gc
        out[pn_p] = gc * (ss[pn_p] / kk[pn_p])
        out[np_n] = g * (ss[np_n] / kk[np_n])
        out[np_p] = gc * (ss[np_p] / ll[np_p])
        out[pn_n] = g * (ss[pn_n] / ll[pn_n])
        return out

    return PairKernel("pb", fn, gamma=g, params={"gamma": g})


def rescale_to_p(b: Kernel) -> Kernel:
    """Divide by |xi1 xi2 xi3|^(1/2); drops the declared degree by 3/2."""
    def fn(k, l, m):
        return b.fn(k, l, m) / np.sqrt(np.abs(k * l * m))
    deg = None if b.homogeneity_degree is None else b.homogeneity_degree - 1.5
    return Kernel(f"p({b.name})", fn, homogeneity_degree=deg, params=dict(b.params))


def reduce_to_q(b: Kernel) -> PairKernel:
    """q(a, l) = b(-a-l, a, l) / (|a| |l|), defined only for degree-2 kernels.

    For any other degree the reduction is not bounded and is refused.
    """
    if b.homogeneity_degree != 2:
        raise ValueError(
            f"pair reduction needs a declared degree-2 kernel, got {b.homogeneity_degree}")
    def fn(a, l):
        return b.fn(-a - l, a, l) / (np.abs(a) * np.abs(l))
    return PairKernel(f"q({b.name})", fn, params=dict(b.params))


# ---------------------------------------------------------------------------
# sampling


def sample_zero_sum_triples(n: int, seed: int, mag_lo: float = 1e-3,
                            mag_hi: float = 1e3):
    """n triples with log-uniform magnitudes and random signs; xi3 closes the sum.

    Pairs whose closing leg lands exactly on Z are redrawn by sign flip.
    """
    rng = np.random.default_rng(seed)
    x1 = _signed_loguniform(rng, n, mag_lo, mag_hi)
    x2 = _signed_loguniform(rng, n, mag_lo, mag_hi)
    x3 = -(x1 + x2)
    dead = x3 == 0.0
    x2[dead] = -x2[dead]
    x3 = -(x1 + x2)
    return x1, x2, x3


def _signed_loguniform(rng, n, lo, hi):
    mag = 10.0 ** rng.uniform(np.log10(lo), np.log10(hi), size=n)
    return mag * rng.choice([-1.0, 1.0], size=n)


def _sample_pairs(rng, n, mag_lo=1e-3, mag_hi=1e3):
    k = _signed_loguniform(rng, n, mag_lo, mag_hi)
    l = _signed_loguniform(rng, n, mag_lo, mag_hi)
    dead = k + l == 0.0
    l[dead] = 0.5 * l[dead]
    return k, l


def _n_workers() -> int:
    try:
        return max(1, int(os.environ.get("SURFAMP_THREADS", "1")))
    except ValueError:
        return 1


def _sharded_max(worker: Callable, n: int, seed: int):
    """Run worker(shard_n, shard_seed) -> (val, point) over shards, merge by max."""
    w = _n_workers()
    if w == 1:
        return worker(n, seed)
    shard = (n + w - 1) // w
    sizes = [min(shard, n - i * shard) for i in range(w) if i * shard < n]
    with ThreadPoolExecutor(max_workers=w) as ex:
        results = list(ex.map(worker, sizes, [seed + 7919 * i for i in range(len(sizes))]))
    return max(results, key=lambda r: r[0])


# ---------------------------------------------------------------------------
# certificates: trilinear kernels


_PERMS = ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def check_symmetry_conjugation(b: Kernel, n_samples: int = 10_000,
                               seed: int = 0) -> BoundCertificate:
    """Permutation invariance and b(-xi) = conj b(xi), relative to |b|+floor."""
    def worker(n, s):
        xs = sample_zero_sum_triples(n, s)
        base = b(*xs)
        denom = np.abs(base) + _FLOOR
        worst, point = 0.0, (xs[0][0], xs[1][0], xs[2][0])
        for p in _PERMS:
            dev = np.abs(b(xs[p[0]], xs[p[1]], xs[p[2]]) - base) / denom
            i = int(np.argmax(dev))
            if dev[i] > worst:
                worst, point = float(dev[i]), (xs[0][i], xs[1][i], xs[2][i])
        dev = np.abs(b(-xs[0], -xs[1], -xs[2]) - np.conj(base)) / denom
        i = int(np.argmax(dev))
        if dev[i] > worst:
            worst, point = float(dev[i]), (xs[0][i], xs[1][i], xs[2][i])
        return worst, point

    worst, point = _sharded_max(worker, n_samples, seed)
    return BoundCertificate("symmetry_conjugation", IDENTITY_TOL, n_samples,
                            worst, worst <= IDENTITY_TOL, point)


def check_homogeneity(b: Kernel, n_samples: int = 10_000, seed: int = 0,
                      factors=(0.5, 2.0, 10.0)) -> BoundCertificate:
    """b(lam xi) = lam^h b(xi) for the declared h; skipped if none declared."""
    if b.homogeneity_degree is None:
        raise ValueError(f"kernel {b.name!r} declares no homogeneity degree")
    h = b.homogeneity_degree

    def worker(n, s):
        xs = sample_zero_sum_triples(n, s)
        base = b(*xs)
        worst, point = 0.0, (xs[0][0], xs[1][0], xs[2][0])
        for lam in factors:
            ref = lam ** h * base
            dev = np.abs(b(lam * xs[0], lam * xs[1], lam * xs[2]) - ref)
            rel = dev / (np.abs(ref) + _FLOOR)
            i = int(np.argmax(rel))
            if rel[i] > worst:
                worst, point = float(rel[i]), (xs[0][i], xs[1][i], xs[2][i])
        return worst, point

    worst, point = _sharded_max(worker, n_samples, seed)
    return BoundCertificate("homogeneity", IDENTITY_TOL, n_samples, worst,
                            worst <= IDENTITY_TOL, point,
                            details={"degree": h, "factors": list(factors)})


def _sup_certificate(name, ratio_fn, sampler, n_samples, seed, extra=None):
    """Generic ~<-bound certificate: sampled sup, stable under doubling."""
    xs_a = sampler(n_samples, seed)
    xs_b = sampler(n_samples, seed + 1)
    r_a = ratio_fn(*xs_a)
    r_b = ratio_fn(*xs_b)
    sup_half = float(np.max(r_a))
    sup_full = max(sup_half, float(np.max(r_b)))
    if sup_full >= sup_half * DOUBLING_RATIO or not np.isfinite(sup_full):
        passed = False
    else:
        passed = True
    if float(np.max(r_b)) > sup_half:
        i = int(np.argmax(r_b))
        point = tuple(np.atleast_1d(x)[i] for x in xs_b)
    else:
        i = int(np.argmax(r_a))
        point = tuple(np.atleast_1d(x)[i] for x in xs_a)
    details = {"sup_first_half": sup_half, "doubling_ratio": sup_full / sup_half
               if sup_half > 0 else 1.0}
    if extra:
        details.update(extra)
    return BoundCertificate(name, sup_full, 2 * n_samples, sup_full, passed,
                            point, details)


def check_bound_C1(p: Kernel, n_samples: int = 10_000, seed: int = 0) -> BoundCertificate:
    """sup |p(xi)| * min(|xi_i|)^(1/2): the bound for degree -1/2 rescalings."""
    def ratio(x1, x2, x3):
        mn = np.minimum(np.abs(x1), np.minimum(np.abs(x2), np.abs(x3)))
        return np.abs(p(x1, x2, x3)) * np.sqrt(mn)
    return _sup_certificate("C1", ratio, sample_zero_sum_triples, n_samples, seed)


def check_bound_C2(p: Kernel, n_samples: int = 10_000, seed: int = 0) -> BoundCertificate:
    """sup |p(xi)| / min(|xi_i|)^(1/2): the bound for degree +1/2 rescalings."""
    def ratio(x1, x2, x3):
        mn = np.minimum(np.abs(x1), np.minimum(np.abs(x2), np.abs(x3)))
        return np.abs(p(x1, x2, x3)) / np.sqrt(mn)
    return _sup_certificate("C2", ratio, sample_zero_sum_triples, n_samples, seed)


def check_crucial_estimate(q: PairKernel, n_samples: int = 10_000,
                           seed: int = 0) -> BoundCertificate:
    """sup over 0<|l|<|k| of |q(k,l) - q(-l-k,l)| * |k/l| (Lipschitz-type tail)."""
    def sampler(n, s):
        rng = np.random.default_rng(s)
        k = _signed_loguniform(rng, n, 1e-3, 1e3)
        # |l| strictly below |k| over six decades so the l/k -> 0 corner is hit
        l = k * 10.0 ** rng.uniform(-6, -1e-12, size=n) * rng.choice([-1.0, 1.0], size=n)
        return k, l

    def ratio(k, l):
        return np.abs(q(k, l) - q(-l - k, l)) * np.abs(k / l)

    return _sup_certificate("crucial", ratio, sampler, n_samples, seed)


def check_crucialsym(q: PairKernel, n_samples: int = 10_000,
                     seed: int = 0) -> BoundCertificate:
    """Exact identity |k| q(k,l) = |k+l| q(-l-k,l) to 1e-12 relative.

    Deviations are measured against (|k| + |k+l|) * |q|: rounding the
    companion frequency -l-k loses |l/k| digits of k when |k| << |l|, so a
    pointwise-relative metric would report that conditioning, not the
    identity.  On comparable-magnitude samples the two metrics agree.
    """
    def worker(n, s):
        rng = np.random.default_rng(s)
        k, l = _sample_pairs(rng, n)
        qa = q(k, l)
        qb = q(-l - k, l)
        lhs = np.abs(k) * qa
        rhs = np.abs(k + l) * qb
        scale = (np.abs(k) + np.abs(k + l)) * np.maximum(np.abs(qa), np.abs(qb))
        rel = np.abs(lhs - rhs) / (scale + _FLOOR)
        i = int(np.argmax(rel))
        return float(rel[i]), (k[i], l[i])

    worst, point = _sharded_max(worker, n_samples, seed)
    return BoundCertificate("crucialsym", IDENTITY_TOL, n_samples, worst,
                            worst <= IDENTITY_TOL, point)


def _limit_at_zero(f: Callable, h: float) -> complex:
    # Richardson on nodes h, h/2, h/4; exact when f is quadratic in h
    return complex(f(h)) / 3.0 - 2.0 * complex(f(h / 2)) + (8.0 / 3.0) * complex(f(h / 4))


def check_hunter_condition(q: PairKernel, ell: float = 1e-6,
                           tol: float = 1e-8) -> BoundCertificate:
    """One-sided limits q(1, 0+) and q(-1, 0+) agree (well-posedness hinge).

    The limits are extrapolated from ell, ell/2, ell/4, so a kernel that is
    merely smooth in ell near 0+ is not penalized for its finite-step slope.
    """
    lo = _limit_at_zero(lambda h: q(1.0, h), ell)
    hi = _limit_at_zero(lambda h: q(-1.0, h), ell)
    dev = abs(lo - hi)
    return BoundCertificate("hunterH", tol, 6, dev, dev <= tol, (1.0, ell),
                            details={"q_plus": (lo.real, lo.imag),
                                     "q_minus": (hi.real, hi.imag)})


# ---------------------------------------------------------------------------
# certificates: pair kernels


def check_pair_symmetry_conjugation(q: PairKernel, n_samples: int = 10_000,
                                    seed: int = 0) -> BoundCertificate:
    """q(k,l) = q(l,k) and q(-k,-l) = conj q(k,l)."""
    def worker(n, s):
        rng = np.random.default_rng(s)
        k, l = _sample_pairs(rng, n)
        base = q(k, l)
        denom = np.abs(base) + _FLOOR
        dev = np.maximum(np.abs(q(l, k) - base),
                         np.abs(q(-k, -l) - np.conj(base))) / denom
        i = int(np.argmax(dev))
        return float(dev[i]), (k[i], l[i])

    worst, point = _sharded_max(worker, n_samples, seed)
    return BoundCertificate("pair_symmetry_conjugation", IDENTITY_TOL, n_samples,
                            worst, worst <= IDENTITY_TOL, point)


def check_pair_homogeneity(q: PairKernel, n_samples: int = 10_000, seed: int = 0,
                           factors=(0.5, 2.0, 10.0)) -> BoundCertificate:
    """Degree-0 scaling q(lam k, lam l) = q(k, l)."""
    def worker(n, s):
        rng = np.random.default_rng(s)
        k, l = _sample_pairs(rng, n)
        base = q(k, l)
        denom = np.abs(base) + _FLOOR
        worst, point = 0.0, (k[0], l[0])
        for lam in factors:
            rel = np.abs(q(lam * k, lam * l) - base) / denom
            i = int(np.argmax(rel))
            if rel[i] > worst:
                worst, point = float(rel[i]), (k[i], l[i])
        return worst, point

    worst, point = _sharded_max(worker, n_samples, seed)
    return BoundCertificate("pair_homogeneity", IDENTITY_TOL, n_samples, worst,
                            worst <= IDENTITY_TOL, point,
                            details={"degree": 0.0, "factors": list(factors)})


def check_pair_bound(q: PairKernel, n_samples: int = 10_000,
                     seed: int = 0) -> BoundCertificate:
    """Sampled sup |q|; certified against |gamma| when one is declared."""
    def ratio(k, l):
        return np.abs(q(k, l))

    def sampler(n, s):
        rng = np.random.default_rng(s)
        return _sample_pairs(rng, n)

    cert = _sup_certificate("pair_bound", ratio, sampler, n_samples, seed)
    if q.gamma is not None:
        bound = abs(q.gamma)
        cert.constant = bound
        cert.passed = cert.worst_ratio <= bound * (1 + IDENTITY_TOL)
        cert.details["declared_bound"] = bound
    return cert


# ---------------------------------------------------------------------------
# serialization


_BUILDERS = {
    "hiz": lambda params: hiz_kernel(),
    "austria": lambda params: austria_hunter_kernel(
        params["A"], params["B"], params["C"], params["D"]),
    "pb": lambda params: phase_boundary_pair_kernel(
        complex(params["gamma"][0], params["gamma"][1])
        if isinstance(params["gamma"], (list, tuple)) else complex(params["gamma"])),
}


def kernel_spec(obj) -> dict:
    """Serializable {name, parameters} record for a Kernel or PairKernel."""
    params = dict(obj.params)
    if isinstance(obj, PairKernel) and obj.gamma is not None:
        params["gamma"] = [obj.gamma.real, obj.gamma.imag]
    return {"name": obj.name, "parameters": params}


def kernel_from_spec(spec: dict):
    name = spec["name"]
    if name not in _BUILDERS:
        raise ValueError(f"unknown kernel name {name!r}; known: {sorted(_BUILDERS)}")
    return _BUILDERS[name](spec.get("parameters", {}))
