"""Surface waves and interaction kernels for variational half-space problems.

The pipeline starts from the second and third derivatives of an energy
density W(u, grad u) at a reference state: the rank-4 Hessian c in the
gradient slots, the rank-5 mixed tensor e (one state slot, two gradient
slots) and the rank-6 tensor d3 (three gradient slots).  From c alone we
solve the quadratic eigenvalue problem for decaying normal modes, build the
Lopatinskii determinant of the traction boundary operator, locate its roots
in the time frequency tau, and assemble the decaying profile V(z).  The
normalized profile then turns e and d3 into the closed-form interaction
kernel b = b1 + b2 of the nonlocal amplitude equation: every z-integral of a
triple product of exponentials collapses to the reciprocal of a sum of decay
rates, so no quadrature is involved.

Conventions.  The half space is {x . nu > 0} with inward unit normal nu and
tangential wave vector eta, eta . nu = 0.  A mode is V(z) = exp(-omega z) v
with Re omega > 0.  Frequencies of the kernel legs are real and nonzero with
zero sum; for xi < 0 the profile is the complex conjugate of the positive
branch, which the synthesis honours by conjugating modes legwise.
"""

from __future__ import annotations

import cmath
import dataclasses
import json
import math
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.optimize

from .kernels import BoundCertificate, ExcludedSetError, Kernel

SYMMETRY_TOL = 1e-12          # relative, on tensor symmetries
GEOMETRY_TOL = 1e-14
QEP_RESIDUAL_TOL = 1e-10
NORMAL_MODE_TOL = 1e-9        # |Re omega| <= tol*|omega| flags a propagating mode
JORDAN_COND_MAX = 1e10
BAND_MARGIN = 1e-6            # of the band width, kept off both endpoints
ROOT_TOL = 1e-12              # |Delta| at a refined root, relative to scan scale
ROOT_REPORT_TOL = 1e-10
NULLSPACE_RATIO = 1e-8        # second singular value below this x largest: not simple
AT_ROOT_RATIO = 1e-6          # smallest singular value above this x largest: no wave
BOUNDARY_TOL = 1e-10
NORM_TOL = 1e-12


# ---------------------------------------------------------------------------
# domain types


def _frozen_array(obj, name, value, shape):
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)
    return arr


def _symmetry_defect(arr, axes):
    ref = max(1.0, float(np.max(np.abs(arr))))
    return float(np.max(np.abs(arr - np.transpose(arr, axes)))) / ref


@dataclasses.dataclass(frozen=True)
class VariationalData:
    """Second and third derivatives of the energy density at the reference state.

    c[a][j][b][l] pairs gradient slots (a,j) and (b,l) and must be symmetric
    under swapping them.  e[a][b][j][g][l] has one state slot a and two
    gradient slots; it must be symmetric under swapping the gradient slots.
    d3 must be invariant under all permutations of its three gradient slots.
    """

    n: int
    d: int
    c: np.ndarray
    e: np.ndarray
    d3: np.ndarray

    def __post_init__(self):
        n, d = self.n, self.d
        if n < 1 or d < 1:
            raise ValueError(f"state/space dimensions must be positive, got n={n} d={d}")
        c = _frozen_array(self, "c", self.c, (n, d, n, d))
        e = _frozen_array(self, "e", self.e, (n, n, d, n, d))
        d3 = _frozen_array(self, "d3", self.d3, (n, d, n, d, n, d))
        if _symmetry_defect(c, (2, 3, 0, 1)) > SYMMETRY_TOL:
            raise ValueError("c is not symmetric under swapping its two gradient slots")
        if _symmetry_defect(e, (0, 3, 4, 1, 2)) > SYMMETRY_TOL:
            raise ValueError("e is not symmetric under swapping its two gradient slots")
        for axes in ((2, 3, 0, 1, 4, 5), (0, 1, 4, 5, 2, 3)):
            if _symmetry_defect(d3, axes) > SYMMETRY_TOL:
                raise ValueError("d3 is not symmetric under permuting its gradient slots")


@dataclasses.dataclass(frozen=True)
class WaveGeometry:
    """Inward unit normal, tangential wave vector, and time frequency."""

    nu: np.ndarray
    eta: np.ndarray
    tau: float

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float).copy()
        eta = np.asarray(self.eta, dtype=float).copy()
        if nu.ndim != 1 or eta.shape != nu.shape:
            raise ValueError("nu and eta must be vectors of the same dimension")
        if abs(np.linalg.norm(nu) - 1.0) > GEOMETRY_TOL:
            raise ValueError(f"nu must be a unit vector, |nu| = {np.linalg.norm(nu)!r}")
        eta_norm = float(np.linalg.norm(eta))
        if eta_norm == 0.0:
            raise ValueError("eta must be nonzero")
        if abs(float(nu @ eta)) > GEOMETRY_TOL * eta_norm:
            raise ValueError("eta must be orthogonal to nu")
        if not np.isfinite(self.tau):
            raise ValueError(f"tau must be finite, got {self.tau}")
        nu.setflags(write=False)
        eta.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "tau", float(self.tau))


@dataclasses.dataclass(frozen=True)
class SurfaceWaveProfile:
    """Decaying profile V(z) = sum_i coeff_i exp(-omega_i z) v_i.

    norm_const records tau * integral_0^inf |V|^2 after normalization; its
    modulus is 1 and its sign feeds the nonlocal coefficient a(k).
    """

    modes: tuple
    geometry: WaveGeometry
    norm_const: float

    def __post_init__(self):
        modes = tuple((complex(w), np.asarray(v, dtype=complex), complex(a))
                      for w, v, a in self.modes)
        for w, v, _ in modes:
            if not (w.real > 0.0):
                raise ValueError(f"profile mode must decay, got omega = {w}")
            if v.ndim != 1:
                raise ValueError("mode vectors must be one-dimensional")
        object.__setattr__(self, "modes", modes)


@dataclasses.dataclass(frozen=True)
class LopatinskiiScan:
    """Grid scan of the boundary determinant with refined roots.

    roots holds (tau_root, residual, simple_flag) triples; residual is
    |Delta| at the refined root and simple_flag reports whether the
    finite-difference tau-derivative of Delta is bounded away from zero.
    """

    tau_grid: tuple
    det_values: tuple
    roots: tuple


# ---------------------------------------------------------------------------
# presets and the symbolic generator


def isotropic_elasticity_data(lam: float, mu: float, d: int = 2) -> VariationalData:
    """Linear isotropic elasticity in d dimensions: n = d, e = d3 = 0.

    c[a][j][b][l] = lam delta_aj delta_bl + mu (delta_ab delta_jl
    + delta_al delta_jb).  Strict rank-one convexity needs mu > 0 and
    lam + 2 mu > 0; the tensor is built regardless so that the convexity
    certificate can be exercised on failing inputs.
    """
    n = d
    eye = np.eye(d)
    c = (lam * np.einsum("aj,bl->ajbl", eye, eye)
         + mu * (np.einsum("ab,jl->ajbl", eye, eye)
                 + np.einsum("al,jb->ajbl", eye, eye)))
    return VariationalData(n=n, d=d, c=c,
                           e=np.zeros((n, n, d, n, d)),
                           d3=np.zeros((n, d, n, d, n, d)))


def tensors_from_energy(W, u_syms, grad_syms, u_ref,
                        check_assumptions: bool = True) -> VariationalData:
    """Differentiate a symbolic energy density at (u_ref, grad = 0).

    W is a sympy expression in the state symbols u_syms (length n) and the
    gradient symbols grad_syms (n rows of length d, entry [a][j] standing
    for du_a/dx_j).  With check_assumptions the first derivative in u and
    the mixed second derivative must vanish identically at zero gradient,
    which is what makes constant states critical and the linearized
    boundary operator first order and homogeneous.
    """
    import sympy as sp

    n = len(u_syms)
    d = len(grad_syms[0])
    grad_flat = [s for row in grad_syms for s in row]
    at_zero_grad = {s: 0 for s in grad_flat}
    if check_assumptions:
        for a in range(n):
            if sp.expand(sp.diff(W, u_syms[a]).subs(at_zero_grad)) != 0:
                raise ValueError(
                    "dW/du must vanish identically at zero gradient; "
                    f"component {a} does not")
            for g in grad_flat:
                if sp.expand(sp.diff(W, u_syms[a], g).subs(at_zero_grad)) != 0:
                    raise ValueError(
                        "d2W/du dgrad must vanish identically at zero gradient; "
                        f"component {a} does not")
    at_ref = dict(at_zero_grad)
    at_ref.update({u_syms[a]: u_ref[a] for a in range(n)})

    dW = [[sp.diff(W, grad_syms[a][j]) for j in range(d)] for a in range(n)]
    c = np.zeros((n, d, n, d))
    d3 = np.zeros((n, d, n, d, n, d))
    e = np.zeros((n, n, d, n, d))
    slots = [(a, j) for a in range(n) for j in range(d)]
    for i1, (a, j) in enumerate(slots):
        for (b, l) in slots[i1:]:
            second = sp.diff(dW[a][j], grad_syms[b][l])
            val = float(second.subs(at_ref))
            c[a, j, b, l] = c[b, l, a, j] = val
            for al in range(n):
                ev = float(sp.diff(second, u_syms[al]).subs(at_ref))
                e[al, a, j, b, l] = e[al, b, l, a, j] = ev
            for i3, (g, m) in enumerate(slots):
                if i3 < i1:
                    continue
                dv = float(sp.diff(second, grad_syms[g][m]).subs(at_ref))
                for p1, p2, p3 in ((a, j), (b, l), (g, m)), ((a, j), (g, m), (b, l)), \
                        ((b, l), (a, j), (g, m)), ((b, l), (g, m), (a, j)), \
                        ((g, m), (a, j), (b, l)), ((g, m), (b, l), (a, j)):
                    d3[p1 + p2 + p3] = dv
    return VariationalData(n=n, d=d, c=c, e=e, d3=d3)


@lru_cache(maxsize=16)
def _oseen_frank_cached(alpha, beta, gamma, eta, u_ref):
    import sympy as sp

    u = sp.symbols("u0 u1 u2")
    G = [[sp.Symbol(f"g{a}{j}") for j in range(3)] for a in range(3)]
    div = G[0][0] + G[1][1] + G[2][2]
    curl = (G[2][1] - G[1][2], G[0][2] - G[2][0], G[1][0] - G[0][1])
    u_dot_c = sum(u[a] * curl[a] for a in range(3))
    u_sq = sum(u[a] ** 2 for a in range(3))
    c_sq = sum(curl[a] ** 2 for a in range(3))
    trace_sq = sum(G[a][j] * G[j][a] for a in range(3) for j in range(3))
    W = (alpha * div ** 2 + beta * u_dot_c ** 2
         + gamma * (u_sq * c_sq - u_dot_c ** 2)
         + eta * (trace_sq - div ** 2)) / 2
    return tensors_from_energy(W, u, G, u_ref)


def oseen_frank_data(alpha: float, beta: float, gamma: float, eta: float,
                     u_ref=(0.0, 0.0, 1.0)) -> VariationalData:
    """Unconstrained director-field energy in three dimensions, n = d = 3.

    2 W = alpha (div u)^2 + beta (u . curl u)^2 + gamma |u x curl u|^2
    + eta (tr((grad u)^2) - (div u)^2).  The last term vanishes on rank-one
    gradients, so positivity of alpha, beta, gamma keeps the acoustic tensor
    definite for any eta of moderate size.  W is quadratic in the gradient,
    hence d3 = 0 exactly; the splay/twist/bend weights depend on the state,
    which is what makes e nonzero.  The default reference state is the unit
    director along the third axis.
    """
    return _oseen_frank_cached(float(alpha), float(beta), float(gamma),
                               float(eta), tuple(float(x) for x in u_ref))


# ---------------------------------------------------------------------------
# sparse text-file interface


def variational_data_to_file(data: VariationalData, path) -> None:
    """Write n, d and the nonzero tensor entries as index tuples + value."""
    def sparse(arr):
        return [[*(int(i) for i in idx), float(arr[idx])]
                for idx in zip(*np.nonzero(arr))]
    doc = {"n": data.n, "d": data.d, "c": sparse(data.c),
           "e": sparse(data.e), "d3": sparse(data.d3)}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def variational_data_from_file(path) -> VariationalData:
    """Read the sparse entry list written by variational_data_to_file.

    Missing tensors default to zero; entries are literal, so symmetric
    partners must be listed explicitly (validation rejects the file
    otherwise rather than symmetrizing silently).
    """
    with open(path) as fh:
        doc = json.load(fh)
    known = {"n", "d", "c", "e", "d3"}
    extra = set(doc) - known
    if extra:
        raise ValueError(f"unknown keys in tensor file: {sorted(extra)}")
    try:
        n, d = int(doc["n"]), int(doc["d"])
    except KeyError as err:
        raise ValueError(f"tensor file must declare {err.args[0]!r}") from None
    shapes = {"c": (n, d, n, d), "e": (n, n, d, n, d), "d3": (n, d, n, d, n, d)}
    arrays = {}
    for key, shape in shapes.items():
        arr = np.zeros(shape)
        for entry in doc.get(key, []):
            if len(entry) != len(shape) + 1:
                raise ValueError(f"{key} entries need {len(shape)} indices + value")
            idx = tuple(int(i) for i in entry[:-1])
            for i, lim in zip(idx, shape):
                if not 0 <= i < lim:
                    raise ValueError(f"{key} index {idx} out of range for shape {shape}")
            arr[idx] = float(entry[-1])
        arrays[key] = arr
    return VariationalData(n=n, d=d, **arrays)


# ---------------------------------------------------------------------------
# contractions and convexity


def _pair_matrix(c, a, b):
    # A[alpha, beta] = c[alpha, j, beta, l] a_j b_l
    return np.einsum("ajbl,j,l->ab", c, a, b)


def acoustic_tensor(data: VariationalData, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return _pair_matrix(data.c, xi, xi)


def check_rank_one_convexity(data: VariationalData, n_dirs: int = 512,
                             seed: int = 0) -> BoundCertificate:
    """Sampled strict positivity of v.xi : c : v.xi over unit directions.

    Equivalent to positive-definiteness of the acoustic tensor on the
    xi-sphere, so the minimum eigenvalue over sampled directions is
    certified; a violating pair (v, xi) is recorded on failure.
    """
    d = data.d
    rng = np.random.default_rng(seed)
    dirs = [np.eye(d)[j] for j in range(d)]
    if d == 2:
        angles = np.linspace(0.0, np.pi, n_dirs, endpoint=False)
        dirs += [np.array([math.cos(t), math.sin(t)]) for t in angles]
    else:
        raw = rng.standard_normal((n_dirs, d))
        dirs += [x / np.linalg.norm(x) for x in raw if np.linalg.norm(x) > 1e-6]
    worst = math.inf
    worst_pair = ()
    for xi in dirs:
        vals, vecs = np.linalg.eigh(0.5 * (acoustic_tensor(data, xi)
                                           + acoustic_tensor(data, xi).T))
        if vals[0] < worst:
            worst = float(vals[0])
            worst_pair = (tuple(vecs[:, 0]), tuple(xi))
    return BoundCertificate(
        property_name="rank_one_convexity",
        constant=worst,
        samples_checked=len(dirs),
        worst_ratio=worst,
        passed=bool(worst > 0.0),
        worst_point=worst_pair,
        details={"n": data.n, "d": data.d},
    )


def min_acoustic_speed(data: VariationalData, n_dirs: int = 2048,
                       seed: int = 0) -> float:
    """Smallest sqrt(eigenvalue) of the acoustic tensor over unit directions.

    Sampled minimum polished by a local search; used to bound the elliptic
    band, so underestimating would only shrink the band while the polish
    guards against overestimating on anisotropic tensors.
    """
    def lam_min(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r == 0.0:
            return math.inf
        A = acoustic_tensor(data, x / r)
        return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])

    d = data.d
    if d == 2:
        angles = np.linspace(0.0, np.pi, n_dirs, endpoint=False)
        samples = [np.array([math.cos(t), math.sin(t)]) for t in angles]
    else:
        rng = np.random.default_rng(seed)
        samples = list(np.eye(d))
        raw = rng.standard_normal((n_dirs, d))
        samples += [x / np.linalg.norm(x) for x in raw]
    best = min(samples, key=lam_min)
    res = scipy.optimize.minimize(lam_min, best, method="Nelder-Mead",
                                  options={"xatol": 1e-12, "fatol": 1e-14})
    val = min(lam_min(best), float(res.fun))
    if val <= 0.0:
        raise ValueError("acoustic tensor is not positive definite; "
                         "run check_rank_one_convexity for the violating pair")
    return math.sqrt(val)


def elliptic_band(data: VariationalData, eta) -> float:
    """Upper endpoint of the tau band (0, min speed * |eta|)."""
    return min_acoustic_speed(data) * float(np.linalg.norm(np.asarray(eta, float)))


# ---------------------------------------------------------------------------
# stable modes of the quadratic eigenvalue problem


def _canonical_phase(v):
    i = int(np.argmax(np.abs(v)))
    ph = v[i] / abs(v[i])
    return v * np.conj(ph)


def _qep_matrices(data: VariationalData, geom: WaveGeometry):
    nu, eta = geom.nu, geom.eta
    M = _pair_matrix(data.c, nu, nu)
    S = _pair_matrix(data.c, nu, eta) + _pair_matrix(data.c, eta, nu)
    E = _pair_matrix(data.c, eta, eta)
    K = geom.tau ** 2 * np.eye(data.n) - E
    return M, -1j * S, K


def qep_residual(data: VariationalData, geom: WaveGeometry,
                 omega: complex, v) -> float:
    """Norm of tau^2 v + c:(-omega nu + i eta)^2 v, relative to |v|."""
    M, C, K = _qep_matrices(data, geom)
    v = np.asarray(v, dtype=complex)
    r = (omega ** 2 * M + omega * C + K) @ v
    return float(np.linalg.norm(r) / np.linalg.norm(v))


def stable_modes(data: VariationalData, geom: WaveGeometry):
    """Decaying normal modes exp(-omega z) v with Re omega > 0.

    Inserting the mode into tau^2 V = -c:(nu d_z + i eta)^2 V gives a
    quadratic eigenvalue problem in omega, linearized here to a companion
    eigenproblem of double size.  The 2n roots split evenly across the
    imaginary axis in the elliptic band; a root on the axis means a
    propagating normal mode and is refused, as is a stable family whose
    eigenvectors are close to rank deficient.
    """
    n = data.n
    M, C, K = _qep_matrices(data, geom)
    top = np.hstack([np.zeros((n, n)), np.eye(n)])
    bottom = np.hstack([-scipy.linalg.solve(M, K), -scipy.linalg.solve(M, C)])
    companion = np.vstack([top, bottom]).astype(complex)
    values, vectors = scipy.linalg.eig(companion)
    for w in values:
        if abs(w.real) <= NORMAL_MODE_TOL * abs(w):
            raise ValueError(
                f"normal mode present: root {w} of the quadratic eigenproblem "
                "sits on the imaginary axis (outside the elliptic band)")
    stable = [(complex(w), vectors[:n, i]) for i, w in enumerate(values) if w.real > 0.0]
    if len(stable) != n:
        raise ValueError(
            f"expected {n} decaying roots, found {len(stable)}")
    stable.sort(key=lambda p: (p[0].real, p[0].imag))
    modes = []
    for w, v in stable:
        v = _canonical_phase(v / np.linalg.norm(v))
        modes.append((w, v))
    vmat = np.stack([v for _, v in modes], axis=1)
    cond = float(np.linalg.cond(vmat))
    if cond > JORDAN_COND_MAX:
        raise ValueError(
            f"Jordan-like degeneracy: stable eigenvector matrix has condition "
            f"number {cond:.3e}")
    return modes


# ---------------------------------------------------------------------------
# Lopatinskii determinant, scan, refinement


def _lopatinskii_matrix(data: VariationalData, geom: WaveGeometry, modes):
    A_nn = _pair_matrix(data.c, geom.nu, geom.nu)
    A_ne = _pair_matrix(data.c, geom.nu, geom.eta)
    cols = []
    for w, v in modes:
        col = (-w * A_nn + 1j * A_ne) @ v
        cols.append(col / np.linalg.norm(v))
    return np.stack(cols, axis=1)


def lopatinskii_det(data: VariationalData, geom: WaveGeometry) -> complex:
    """Determinant of the boundary operator applied to the stable modes.

    Columns are divided by the mode-vector norms, so rescaling any
    eigenvector leaves the value unchanged; the phase is pinned by the
    canonical phase choice inside stable_modes.
    """
    modes = stable_modes(data, geom)
    return complex(np.linalg.det(_lopatinskii_matrix(data, geom, modes)))


def scan_and_refine_root(data: VariationalData, nu, eta, tau_range=None,
                         n_grid: int = 241) -> LopatinskiiScan:
    """Scan |Delta| over a tau grid and refine each local minimum to a root.

    The grid must sit strictly inside the elliptic band (mirrored for
    negative tau).  At each interior minimum of |Delta| a quadratic fit
    proposes a vertex, the finite-difference slope of Delta fixes a phase,
    and the real part of the rotated determinant is a transversal scalar
    whose sign change is bisected to machine precision.  A candidate is
    kept only if |Delta| lands below 1e-12 of the scan scale.
    """
    nu = np.asarray(nu, dtype=float)
    eta = np.asarray(eta, dtype=float)
    band = elliptic_band(data, eta)
    margin = BAND_MARGIN * band
    if tau_range is None:
        tau_range = (margin, band - margin)
    lo, hi = float(tau_range[0]), float(tau_range[1])
    if not lo < hi:
        raise ValueError(f"empty tau range ({lo}, {hi})")
    slack = 1e-12 * band   # the band estimate itself carries rounding
    if lo >= margin - slack and hi <= band - margin + slack:
        pass
    elif hi <= -(margin - slack) and lo >= -(band - margin + slack):
        pass
    else:
        raise ValueError(
            f"tau range ({lo}, {hi}) must sit inside the elliptic band "
            f"(magnitudes between {margin:.3e} and {band - margin:.6e})")

    def det_at(t):
        return lopatinskii_det(data, WaveGeometry(nu=nu, eta=eta, tau=float(t)))

    taus = np.linspace(lo, hi, n_grid)
    dets = np.array([det_at(t) for t in taus])
    mags = np.abs(dets)
    scale = float(np.max(mags))
    if scale == 0.0:
        raise ValueError("no root found: determinant vanishes identically on the grid")
    width = hi - lo

    roots = []
    for i in range(1, n_grid - 1):
        if not (mags[i] <= mags[i - 1] and mags[i] <= mags[i + 1]):
            continue
        a, b = taus[i - 1], taus[i + 1]
        # vertex of the parabola through the squared magnitudes
        y0, y1, y2 = mags[i - 1] ** 2, mags[i] ** 2, mags[i + 1] ** 2
        denom = y0 - 2.0 * y1 + y2
        t0 = taus[i] if denom <= 0.0 else taus[i] + 0.5 * (y0 - y2) / denom * (taus[i] - a)
        t0 = min(max(t0, a), b)
        h = 0.25 * (b - a)
        slope = (det_at(t0 + h) - det_at(t0 - h)) / (2.0 * h)
        root = None
        if slope != 0.0:
            phase = slope / abs(slope)

            def tracker(t):
                return (det_at(t) * np.conj(phase)).real

            sa, s0, sb = tracker(a), tracker(t0), tracker(b)
            bracket = None
            if sa == 0.0:
                root = a
            elif s0 == 0.0:
                root = t0
            elif np.sign(sa) != np.sign(s0):
                bracket = (a, t0)
            elif np.sign(s0) != np.sign(sb):
                bracket = (t0, b)
            if bracket is not None:
                root = scipy.optimize.brentq(
                    tracker, *bracket, xtol=4e-16 * (1.0 + abs(hi) + abs(lo)),
                    rtol=4 * np.finfo(float).eps)
        if root is None:
            # no transversal crossing: polish the modulus and let the
            # residual test decide
            res = scipy.optimize.minimize_scalar(
                lambda t: abs(det_at(t)) ** 2, bounds=(a, b), method="bounded",
                options={"xatol": 1e-13 * max(width, 1.0)})
            root = float(res.x)
        residual = abs(det_at(root))
        if residual > ROOT_TOL * scale:
            continue
        h2 = 1e-7 * width
        dd = (det_at(root + h2) - det_at(root - h2)) / (2.0 * h2)
        simple = bool(abs(dd) * width > 1e-4 * scale)
        if roots and abs(root - roots[-1][0]) < 1e-9 * max(width, 1.0):
            continue
        roots.append((float(root), float(residual), simple))

    if not roots:
        raise ValueError(
            f"no root found: smallest |Delta| on the grid is "
            f"{float(np.min(mags)):.3e} against scale {scale:.3e}")
    return LopatinskiiScan(tau_grid=tuple(float(t) for t in taus),
                           det_values=tuple(complex(v) for v in dets),
                           roots=tuple(roots))


# ---------------------------------------------------------------------------
# profile construction and normalization


def build_profile(data: VariationalData, geom: WaveGeometry) -> SurfaceWaveProfile:
    """Assemble and normalize the decaying profile at a determinant root.

    The coefficient vector is the right singular vector of the boundary
    matrix for its smallest singular value, so the boundary condition holds
    to the quality of the root.  The squared L2 norm of V has the closed
    form sum_ii' coeff_i conj(coeff_i') (v_i . conj v_i')/(omega_i + conj
    omega_i'); coefficients are rescaled by 1/sqrt(|tau| * that), which
    pins tau * integral |V|^2 to +-1.  The phase is fixed by making the
    largest-magnitude coefficient real positive (a convention, nothing
    more).
    """
    if geom.tau == 0.0:
        raise ValueError("a surface wave needs a nonzero time frequency")
    modes = stable_modes(data, geom)
    L = _lopatinskii_matrix(data, geom, modes)
    _, sing, vh = np.linalg.svd(L)
    if data.n >= 2 and sing[-2] < NULLSPACE_RATIO * sing[0]:
        raise ValueError(
            "non-simple surface wave space: second singular value "
            f"{sing[-2]:.3e} against largest {sing[0]:.3e}")
    if sing[-1] > AT_ROOT_RATIO * sing[0]:
        raise ValueError(
            "no surface wave attached at this frequency: smallest singular "
            f"value {sing[-1]:.3e} against largest {sing[0]:.3e}")
    coeffs = _canonical_phase(np.conj(vh[-1]))

    omegas = np.array([w for w, _ in modes])
    vmat = np.stack([v for _, v in modes], axis=0)
    gram = (vmat @ np.conj(vmat.T)) / (omegas[:, None] + np.conj(omegas)[None, :])
    c_int = geom.tau * np.einsum("i,k,ik->", coeffs, np.conj(coeffs), gram)
    if abs(c_int.imag) > 1e-12 * abs(c_int):
        raise ValueError(f"normalization integral is not real: {c_int}")
    coeffs = coeffs / math.sqrt(abs(c_int.real))
    norm_const = float(geom.tau
                       * np.einsum("i,k,ik->", coeffs, np.conj(coeffs), gram).real)

    profile = SurfaceWaveProfile(
        modes=tuple((w, v, complex(a)) for (w, v), a in zip(modes, coeffs)),
        geometry=geom,
        norm_const=norm_const)
    bres = profile_boundary_residual(data, profile)
    if bres > BOUNDARY_TOL:
        raise ValueError(f"boundary residual {bres:.3e} after normalization")
    return profile


def profile_eval(profile: SurfaceWaveProfile, z):
    """V(z); accepts scalars or arrays, returning shape z.shape + (n,)."""
    z = np.asarray(z, dtype=float)
    out = sum(a * np.exp(-w * z[..., None]) * v for w, v, a in profile.modes)
    return np.asarray(out, dtype=complex)


def profile_boundary_residual(data: VariationalData,
                              profile: SurfaceWaveProfile) -> float:
    """|boundary operator applied to V at z = 0| relative to |V(0)|."""
    geom = profile.geometry
    A_nn = _pair_matrix(data.c, geom.nu, geom.nu)
    A_ne = _pair_matrix(data.c, geom.nu, geom.eta)
    total = sum(a * ((-w * A_nn + 1j * A_ne) @ v) for w, v, a in profile.modes)
    v0 = profile_eval(profile, 0.0)
    return float(np.linalg.norm(total) / np.linalg.norm(v0))


def profile_interior_residual(data: VariationalData,
                              profile: SurfaceWaveProfile, z) -> float:
    """Relative defect of tau^2 V = -c:(nu d_z + i eta)^2 V at given depths."""
    geom = profile.geometry
    M, C, K = _qep_matrices(data, geom)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    worst = 0.0
    for zz in z:
        total = np.zeros(data.n, dtype=complex)
        size = 0.0
        for w, v, a in profile.modes:
            term = a * cmath.exp(-w * zz) * ((w ** 2 * M + w * C + K) @ v)
            total += term
            size += float(np.linalg.norm(a * cmath.exp(-w * zz)
                                         * (geom.tau ** 2) * v)) + 1e-300
        worst = max(worst, float(np.linalg.norm(total)) / size)
    return worst


def profile_squared_norm(profile: SurfaceWaveProfile) -> float:
    """Closed-form integral of |V|^2 over the half line."""
    omegas = np.array([w for w, _, _ in profile.modes])
    vmat = np.stack([v for _, v, _ in profile.modes], axis=0)
    coeffs = np.array([a for _, _, a in profile.modes])
    gram = (vmat @ np.conj(vmat.T)) / (omegas[:, None] + np.conj(omegas)[None, :])
    val = np.einsum("i,k,ik->", coeffs, np.conj(coeffs), gram)
    return float(val.real)


def coefficient_a(profile: SurfaceWaveProfile):
    """The nonlocal coefficient k -> i (+-1) sgn(k) from the recorded sign."""
    sign = 1.0 if profile.norm_const > 0.0 else -1.0

    def a(k):
        k = float(k)
        if k == 0.0:
            raise ExcludedSetError("coefficient a is undefined at k = 0")
        return complex(0.0, sign * math.copysign(1.0, k))

    return a


# ---------------------------------------------------------------------------
# closed-form kernel synthesis


def _leg_arrays(profile, xi, nu, eta):
    """Per-leg mode expansion of the profile at frequency xi.

    Returns (Om, P, G): decay rates (N, modes), undifferentiated factors
    (N, modes, n) and gradient factors (N, modes, n, d).  Negative
    frequencies use the conjugate expansion, keeping Re Om > 0.
    """
    omegas = np.array([w for w, _, _ in profile.modes])
    vmat = np.stack([v for _, v, _ in profile.modes], axis=0)
    coeffs = np.array([a for _, _, a in profile.modes])
    pos = xi > 0.0
    absxi = np.abs(xi)
    Om = np.where(pos[:, None], omegas[None, :], np.conj(omegas)[None, :]) \
        * absxi[:, None]
    W = np.where(pos[:, None, None], vmat[None, :, :], np.conj(vmat)[None, :, :])
    amp = np.where(pos[:, None], coeffs[None, :], np.conj(coeffs)[None, :])
    P = amp[:, :, None] * W
    factor = -Om[:, :, None] * nu[None, None, :] \
        + 1j * xi[:, None, None] * eta[None, None, :]
    G = P[:, :, :, None] * factor[:, :, None, :]
    return Om, P, G


def synthesize_components(data: VariationalData, profile: SurfaceWaveProfile):
    """Closed-form kernels (b1, b2) from the normalized profile.

    b1 carries the mixed third derivatives e: for each choice of the
    undifferentiated leg, contract e with that leg's profile factor and the
    two gradient factors of the remaining legs.  b2 contracts d3 with three
    gradient factors.  After the eigen-mode expansion every z-integral is
    1/(sum of the three decay rates), and the 1/(4 pi) prefactor makes the
    kernels match the quadratic terms of the amplitude equation.  Identically
    zero tensors short-circuit to exactly zero kernels.
    """
    geom = profile.geometry
    nu, eta = geom.nu, geom.eta
    e, d3 = data.e, data.d3
    has_e = bool(np.any(e))
    has_d3 = bool(np.any(d3))
    pref = 1.0 / (4.0 * math.pi)

    def evaluate(x1, x2, x3, want_e, want_d3):
        shape = np.broadcast_shapes(np.shape(x1), np.shape(x2), np.shape(x3))
        legs = [np.broadcast_to(np.asarray(x, dtype=float), shape).reshape(-1)
                for x in (x1, x2, x3)]
        arrays = [_leg_arrays(profile, xi, nu, eta) for xi in legs]
        (O1, P1, G1), (O2, P2, G2), (O3, P3, G3) = arrays
        denom = O1[:, :, None, None] + O2[:, None, :, None] + O3[:, None, None, :]
        total = np.zeros(legs[0].shape, dtype=complex)
        if want_e:
            num = (np.einsum("abjcl,nxa,nybj,nzcl->nxyz", e, P1, G2, G3)
                   + np.einsum("abjcl,nya,nxbj,nzcl->nxyz", e, P2, G1, G3)
                   + np.einsum("abjcl,nza,nxbj,nycl->nxyz", e, P3, G1, G2))
            total = total + np.sum(num / denom, axis=(1, 2, 3))
        if want_d3:
            num = np.einsum("ajblgm,nxaj,nybl,nzgm->nxyz", d3, G1, G2, G3)
            total = total + np.sum(num / denom, axis=(1, 2, 3))
        return pref * total.reshape(shape)

    def fn_b1(x1, x2, x3):
        if not has_e:
            shape = np.broadcast_shapes(np.shape(x1), np.shape(x2), np.shape(x3))
            return np.zeros(shape, dtype=complex)
        return evaluate(x1, x2, x3, True, False)

    def fn_b2(x1, x2, x3):
        if not has_d3:
            shape = np.broadcast_shapes(np.shape(x1), np.shape(x2), np.shape(x3))
            return np.zeros(shape, dtype=complex)
        return evaluate(x1, x2, x3, False, True)

    params = {"n_modes": len(profile.modes), "tau": geom.tau}
    b1 = Kernel("synthesized_b1", fn_b1, homogeneity_degree=1.0, params=dict(params))
    b2 = Kernel("synthesized_b2", fn_b2, homogeneity_degree=2.0, params=dict(params))
    return b1, b2


def synthesize_kernel(data: VariationalData, profile: SurfaceWaveProfile) -> Kernel:
    """Total interaction kernel b = b1 + b2.

    The sum mixes homogeneity degrees one and two, so no single degree is
    declared; use synthesize_components for the graded pieces.
    """
    b1, b2 = synthesize_components(data, profile)

    def fn(x1, x2, x3):
        return b1.fn(x1, x2, x3) + b2.fn(x1, x2, x3)

    return Kernel("synthesized_b", fn, homogeneity_degree=None,
                  params=dict(b1.params))
