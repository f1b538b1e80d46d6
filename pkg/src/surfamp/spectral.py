"""Pseudo-spectral evolution of the amplitude equation in its three forms.

Conventions, fixed once: periodic domain of length 2*pi, integer wavenumbers,
Fourier-series coefficients (so cos y has coefficient 1/2 at k = +1 and -1).
States store modes k = 1..K only; negative modes are implied by reality and
the mean is pinned to zero, so those constraints hold exactly at every step
by construction.  The continuous frequency integral becomes a plain sum over
integer m with all three interaction legs kept inside the resolved band; that
truncation maps zero-sum triples to zero-sum triples, which is what makes the
momentum and Hamiltonian functionals conserved up to time-discretization
error only.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from surfamp.kernels import Kernel, PairKernel

BLOWUP_THRESHOLD = 1e12
HSIGMA = 2.5

W_FORM = "W"
U_FORM = "U"
V_FORM = "V"


@dataclasses.dataclass
class SpectralState:
    """Coefficients for k = 1..K plus the slow time."""

    n_modes: int
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.n_modes,):
            raise ValueError(
                f"expected {self.n_modes} coefficients, got shape {self.coeffs.shape}")

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def copy(self) -> "SpectralState":
        return SpectralState(self.n_modes, self.coeffs.copy(), self.time)


def state_from_modes(n_modes: int, modes) -> SpectralState:
    """Build a state from (k, amplitude, phase) entries; w gets amp*cos(ky+phase)."""
    coeffs = np.zeros(n_modes, dtype=complex)
    for (k, amp, phase) in modes:
        k = int(k)
        if not 1 <= k <= n_modes:
            raise ValueError(f"mode {k} outside 1..{n_modes}")
        # amp*cos(ky+phase) = (amp/2) e^{i phase} e^{iky} + c.c.
        coeffs[k - 1] += 0.5 * amp * np.exp(1j * phase)
    return SpectralState(n_modes, coeffs)


def state_cosine(n_modes: int) -> SpectralState:
    return state_from_modes(n_modes, [(1, 1.0, 0.0)])


def state_gaussian_spectrum(n_modes: int, alpha: float) -> SpectralState:
    k = np.arange(1, n_modes + 1)
    return SpectralState(n_modes, np.exp(-alpha * k * k) + 0j)


def l2_norm(state: SpectralState) -> float:
    """Coefficient l2 norm over both signs of k (L2 up to a fixed sqrt(2*pi))."""
    return float(np.sqrt(2.0 * np.sum(np.abs(state.coeffs) ** 2)))


def hsigma_norm(state: SpectralState, sigma: float = HSIGMA) -> float:
    k = state.k.astype(float)
    return float(np.sqrt(2.0 * np.sum((1.0 + k * k) ** sigma
                                      * np.abs(state.coeffs) ** 2)))


def to_nodal_values(state: SpectralState, n_nodes: int | None = None):
    """Real-space samples w(y_j) on a uniform grid, for gradient checks."""
    K = state.n_modes
    N = n_nodes or (2 * K + 1)
    if N < 2 * K + 1:
        raise ValueError("grid too coarse to represent the band")
    y = 2.0 * np.pi * np.arange(N) / N
    w = np.zeros(N)
    for i, k in enumerate(range(1, K + 1)):
        w += 2.0 * (state.coeffs[i].real * np.cos(k * y)
                    - state.coeffs[i].imag * np.sin(k * y))
    return y, w


def state_from_nodal_values(n_modes: int, w_nodes: np.ndarray) -> SpectralState:
    N = len(w_nodes)
    if N < 2 * n_modes + 1:
        raise ValueError("grid too coarse to recover the band")
    spec = np.fft.fft(np.asarray(w_nodes, dtype=float)) / N
    return SpectralState(n_modes, spec[1:n_modes + 1])


def hilbert_transform(state: SpectralState) -> SpectralState:
    # multiplier -i sgn(k); stored modes all have k > 0
    return SpectralState(state.n_modes, -1j * state.coeffs, state.time)


# ---------------------------------------------------------------------------
# bilinear operators

# The interaction table holds f(i, j) at [i+K, j+K] for the triple
# (-(i+j), i, j); cells touching a zero leg are parked at 0 so that the 0
# from a vanishing mode factor never meets an inf.


def _table_values(fn3, K: int) -> np.ndarray:
    idx = np.arange(-K, K + 1)
    i, j = np.meshgrid(idx, idx, indexing="ij")
    valid = (i != 0) & (j != 0) & (i + j != 0)
    i_safe = np.where(valid, i, 1)
    j_safe = np.where(valid, j, 1)
    vals = np.asarray(fn3(-(i_safe + j_safe).astype(float), i_safe.astype(float),
                          j_safe.astype(float)), dtype=complex)
    vals[~valid] = 0.0
    return vals


def triple_table(kernel: Kernel, K: int) -> np.ndarray:
    """(2K+1) x (2K+1) values b(-(i+j), i, j), zero on invalid cells."""
    return _table_values(kernel.fn, K)


def pair_table(q: PairKernel, K: int) -> np.ndarray:
    idx = np.arange(-K, K + 1)
    i, j = np.meshgrid(idx, idx, indexing="ij")
    valid = (i != 0) & (j != 0) & (i + j != 0)
    i_safe = np.where(valid, i, 1).astype(float)
    j_safe = np.where(valid, j, 1).astype(float)
    vals = np.asarray(q.fn(i_safe, j_safe), dtype=complex)
    vals[~valid] = 0.0
    return vals


def _padded(coeffs: np.ndarray, K: int) -> np.ndarray:
    # index (k + K) for k in [-K, K]; extra K zeros on the right so k-m
    # gathers stay in range for k up to 2K
    wfull = np.zeros(3 * K + 1, dtype=complex)
    wfull[K + 1:2 * K + 1] = coeffs
    wfull[:K] = np.conj(coeffs[::-1])
    return wfull


def _gather_rows(table, ks, K):
    m = np.arange(-K, K + 1)
    i = ks[:, None] - m[None, :]
    valid = (np.abs(i) <= K) & (i != 0) & (m[None, :] != 0)
    rows = table[np.clip(i + K, 0, 2 * K), (m + K)[None, :]]
    return np.where(valid, rows, 0.0)


def _direct_rows(fn_pairstyle, ks, K, pair: bool):
    m = np.arange(-K, K + 1)
    i = ks[:, None] - m[None, :]
    mm = np.broadcast_to(m[None, :], i.shape)
    valid = (np.abs(i) <= K) & (i != 0) & (mm != 0)
    i_safe = np.where(valid, i, 1).astype(float)
    m_safe = np.where(valid, mm, 1).astype(float)
    if pair:
        vals = np.asarray(fn_pairstyle(i_safe, m_safe), dtype=complex)
    else:
        vals = np.asarray(fn_pairstyle(-(i_safe + m_safe), i_safe, m_safe),
                          dtype=complex)
    return np.where(valid, vals, 0.0)


def _contract(rows, coeffs, ks, K):
    wpad = _padded(coeffs, K)
    m = np.arange(-K, K + 1)
    w_im = wpad[np.clip(ks[:, None] - m[None, :] + K, 0, 3 * K)]
    return np.einsum("km,km,m->k", rows, w_im, wpad[:2 * K + 1])


def _convolve(state: SpectralState, fn, table, pair: bool, ks=None):
    K = state.n_modes
    if ks is None:
        ks = np.arange(1, K + 1)
    if table is not None:
        rows = _gather_rows(table, ks, K)
    else:
        rows = _direct_rows(fn, ks, K, pair)
    return _contract(rows, state.coeffs, ks, K)


def bilinear_B(state: SpectralState, kernel: Kernel,
               table: np.ndarray | None = None) -> np.ndarray:
    """B_hat(k) = sum_m b(-k, k-m, m) w_hat(k-m) w_hat(m), k = 1..K.

    All three legs are kept inside the resolved band.  With ``table`` the
    kernel values come from a precomputed grid; the result is bitwise equal
    to the direct path because both feed identical rows to one contraction.
    """
    return _convolve(state, kernel.fn, table, pair=False)


def bilinear_P(state: SpectralState, p: Kernel,
               table: np.ndarray | None = None) -> np.ndarray:
    return _convolve(state, p.fn, table, pair=False)


def bilinear_Q(state: SpectralState, q: PairKernel,
               table: np.ndarray | None = None) -> np.ndarray:
    """Q_hat(k) = sum_m q(k-m, m) v_hat(k-m) v_hat(m)."""
    return _convolve(state, q.fn, table, pair=True)


# ---------------------------------------------------------------------------
# functionals


def functional_M(state: SpectralState) -> float:
    """Momentum (1/2) sum over 0<|k|<=K of |k| |w_hat|^2."""
    return float(np.sum(state.k * np.abs(state.coeffs) ** 2))


def functional_T(state: SpectralState, kernel: Kernel | None = None,
                 table: np.ndarray | None = None) -> float:
    """Hamiltonian (1/3) sum of b(-k-m, k, m) w_hat(-k-m) w_hat(k) w_hat(m).

    Computed as (1/3) sum_k w_hat(-k) B_hat(k) over both signs of k; the
    imaginary part is a pure rounding residual for admissible kernels and is
    asserted small against the absolute mass of the sum, then dropped.
    Either the kernel or its precomputed table must be supplied.
    """
    if kernel is None and table is None:
        raise ValueError("functional_T needs a kernel or a table")
    K = state.n_modes
    ks = np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])
    B = _convolve(state, None if kernel is None else kernel.fn, table,
                  pair=False, ks=ks)
    w_minus_k = np.conj(_padded(state.coeffs, K)[ks + K])
    total = np.sum(w_minus_k * B) / 3.0
    scale = max(1.0, float(np.sum(np.abs(w_minus_k * B))) / 3.0)
    assert abs(total.imag) <= 1e-12 * scale, \
        f"functional_T lost reality: Im = {total.imag:.3e}"
    return float(total.real)


def variational_deltaT(state: SpectralState, kernel: Kernel,
                       table: np.ndarray | None = None) -> np.ndarray:
    """Variational derivative of T: deltaT_hat(k) = 2*pi*B_hat(k), k = 1..K."""
    return 2.0 * np.pi * bilinear_B(state, kernel, table)


def variational_deltaM(state: SpectralState) -> np.ndarray:
    return 2.0 * np.pi * state.k * state.coeffs


def check_momentum_identity(state: SpectralState) -> float:
    """Residual of  ik w_hat + (1/2pi) (-i sgn k) deltaM_hat  =  0."""
    lhs = 1j * state.k * state.coeffs
    rhs = (1.0 / (2.0 * np.pi)) * (-1j) * variational_deltaM(state)
    residual = float(np.max(np.abs(lhs + rhs))) if state.n_modes else 0.0
    assert residual <= 1e-13 * max(l2_norm(state), 1e-300) or residual == 0.0, \
        f"momentum identity residual {residual:.3e}"
    return residual


# ---------------------------------------------------------------------------
# evolution forms


@dataclasses.dataclass(frozen=True)
class EvolutionForm:
    """One of the three equivalent writings of the amplitude equation.

    W carries the trilinear b and evolves w; U carries p = b/|k l m|^(1/2)
    and evolves u = |d_y|^(1/2) w; V carries the degree-0 q and evolves
    v = |d_y| w.  sign_of_c is the sign left over after normalizing the
    quadratic-form coefficient to modulus one.
    """

    tag: str
    kernel: object
    sign_of_c: int = 1

    def __post_init__(self):
        if self.tag not in (W_FORM, U_FORM, V_FORM):
            raise ValueError(f"unknown form tag {self.tag!r}")
        if self.sign_of_c not in (1, -1):
            raise ValueError("sign_of_c must be +1 or -1")
        if self.tag == V_FORM and not isinstance(self.kernel, PairKernel):
            raise TypeError("V form needs a PairKernel")
        if self.tag in (W_FORM, U_FORM) and not isinstance(self.kernel, Kernel):
            raise TypeError(f"{self.tag} form needs a trilinear Kernel")

    def own_table(self, K: int) -> np.ndarray:
        if self.tag == V_FORM:
            return pair_table(self.kernel, K)
        return triple_table(self.kernel, K)

    def b_table(self, K: int) -> np.ndarray:
        """Table of the underlying trilinear b, reconstructed if needed."""
        t = self.own_table(K)
        if self.tag == W_FORM:
            return t
        idx = np.arange(-K, K + 1).astype(float)
        i, j = np.meshgrid(idx, idx, indexing="ij")
        if self.tag == U_FORM:
            return t * np.sqrt(np.abs((i + j) * i * j))
        return t * np.abs(i * j)

    def to_w(self, state: SpectralState) -> SpectralState:
        if self.tag == W_FORM:
            return state.copy()
        mult = np.sqrt(state.k.astype(float)) if self.tag == U_FORM \
            else state.k.astype(float)
        return SpectralState(state.n_modes, state.coeffs / mult, state.time)

    def from_w(self, state: SpectralState) -> SpectralState:
        if self.tag == W_FORM:
            return state.copy()
        mult = np.sqrt(state.k.astype(float)) if self.tag == U_FORM \
            else state.k.astype(float)
        return SpectralState(state.n_modes, state.coeffs * mult, state.time)


def w_form(b: Kernel, sign_of_c: int = 1) -> EvolutionForm:
    return EvolutionForm(W_FORM, b, sign_of_c)


def u_form(p: Kernel, sign_of_c: int = 1) -> EvolutionForm:
    return EvolutionForm(U_FORM, p, sign_of_c)


def v_form(q: PairKernel, sign_of_c: int = 1) -> EvolutionForm:
    return EvolutionForm(V_FORM, q, sign_of_c)


def rhs(form: EvolutionForm, state: SpectralState,
        table: np.ndarray | None = None) -> np.ndarray:
    """Time derivative of the stored coefficients for the chosen form.

    W:  w_s = -H(B[w]),  i.e.  w_hat_s(k) = sign_of_c * i sgn(k) * B_hat(k)
    U:  u_hat_s(k) = sign_of_c * i k * P_hat(k)
    V:  v_hat_s(k) = sign_of_c * i k * Q_hat(k)
    """
    conv = _convolve(state, form.kernel.fn, table, pair=form.tag == V_FORM)
    if form.tag == W_FORM:
        return form.sign_of_c * 1j * conv
    return form.sign_of_c * 1j * state.k * conv


# ---------------------------------------------------------------------------
# time integration


@dataclasses.dataclass
class ConservationLog:
    times: list = dataclasses.field(default_factory=list)
    M_values: list = dataclasses.field(default_factory=list)
    T_values: list = dataclasses.field(default_factory=list)
    L2_values: list = dataclasses.field(default_factory=list)
    Hsigma_values: list = dataclasses.field(default_factory=list)
    halted_reason: str | None = None

    def append(self, s, M, T, L2, Hs):
        self.times.append(s)
        self.M_values.append(M)
        self.T_values.append(T)
        self.L2_values.append(L2)
        self.Hsigma_values.append(Hs)


def cfl_limit(form: EvolutionForm, state: SpectralState,
              table: np.ndarray | None = None) -> float:
    t = form.own_table(state.n_modes) if table is None else table
    sup = float(np.max(np.abs(t)))
    return 0.5 / (state.n_modes * max(1.0, sup) * max(l2_norm(state), 1e-300))


def two_thirds_cutoff(n_modes: int) -> int:
    """Largest wavenumber the 2/3-rule variant keeps in the bilinear term."""
    return (2 * n_modes) // 3


def integrate(form: EvolutionForm, state0: SpectralState, dt: float,
              n_steps: int, log_every: int = 1,
              dealias_two_thirds: bool = False):
    """Classical fixed-step RK4; returns the final state and the log.

    Logged quantities are evaluated on the w-image of the state so that the
    same conserved pair (M, T) is reported whichever form is evolving; T uses
    the form's reconstructed trilinear table.  Any coefficient magnitude
    above 1e12 (or a non-finite value) halts with the partial log kept.

    ``dealias_two_thirds`` is an experimental variant for anti-aliasing
    studies: the bilinear term reads only the modes k <= floor(2K/3), so
    every product it can form lands alias-free inside the resolved band, and
    the top third acts as a one-way buffer that receives energy but never
    feeds back.  That one-way flow abandons the symmetric truncation the
    conservation argument rests on, so M and T are NOT conserved once the
    cascade reaches the cutoff; the default all-legs-in-band truncation is
    the conservative one.
    """
    if dt == 0:
        raise ValueError("dt must be nonzero")
    K = state0.n_modes
    cut = None
    if dealias_two_thirds:
        cut = two_thirds_cutoff(K)
        if cut < 1:
            raise ValueError("the 2/3 rule keeps no modes below K = 2")
        warnings.warn("2/3-rule dealiasing drops the symmetric truncation; "
                      "M and T conservation is not guaranteed on this run")
    own = form.own_table(K)
    bt = form.b_table(K)
    limit = cfl_limit(form, state0, own)
    if abs(dt) > limit:
        warnings.warn(f"dt = {dt:g} exceeds the stability guard {limit:g}; "
                      "drift may not show clean fourth-order scaling")

    log = ConservationLog()

    def record(state):
        w = form.to_w(state)
        log.append(state.time, functional_M(w), functional_T(w, table=bt),
                   l2_norm(w), hsigma_norm(w))

    def deriv(coeffs, time):
        if cut is not None:
            coeffs = coeffs.copy()
            coeffs[cut:] = 0.0
        return rhs(form, SpectralState(K, coeffs, time), own)

    state = state0.copy()
    record(state)
    for step in range(1, n_steps + 1):
        c = state.coeffs
        k1 = deriv(c, state.time)
        k2 = deriv(c + 0.5 * dt * k1, state.time)
        k3 = deriv(c + 0.5 * dt * k2, state.time)
        k4 = deriv(c + dt * k3, state.time)
        state = SpectralState(K, c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4),
                              state0.time + step * dt)
        if not state.is_finite() or np.max(np.abs(state.coeffs)) > BLOWUP_THRESHOLD:
            log.halted_reason = "blow-up"
            return state, log
        if step % log_every == 0 or step == n_steps:
            record(state)
    return state, log
