"""Subsonic phase boundaries of the isothermal Euler equations and the
coefficients of their surface-wave amplitude equation.

A planar discontinuity between two fluid states is *dynamical* when mass
crosses it (j != 0) and *reversible* when, on top of the usual mass and
momentum balance, the total energy flux is continuous as well.  For a
non-monotone pressure law these three jump conditions admit genuine
two-phase solutions; both states are then subsonic relative to the front
and the linearized problem carries surface waves.  This module solves for
the states (Newton on the three residuals, with an equal-area consistency
check), locates the surface-wave frequency tau from the dispersion
relation, fills in the decaying-mode coefficients, and evaluates the two
numbers alpha0 and alpha1 whose ratio

    gamma = alpha1 / (4 pi alpha0)

parametrises the six-sector pair kernel of the amplitude equation (see
``phase_boundary_pair_kernel`` in kernels.py).

Everything is computed in the front frame (sigma = 0) with both relative
normal velocities positive; this costs no generality.  The overall
normalization constant of the linearized problem is never needed: it
cancels in the ratio gamma, which is the only output the kernel consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

RESIDUAL_TOL = 1e-12
EQUAL_AREA_TOL = 1e-8
DISPERSION_TOL = 1e-12
CONSISTENCY_TOL = 1e-10
INTERIOR_TOL = 1e-10
NEWTON_MAX_ITER = 100


# ---------------------------------------------------------------------------
# pressure laws


@dataclass(frozen=True)
class PressureLaw:
    """A barotropic pressure law together with the derivatives the
    amplitude coefficients need.

    ``p`` is the pressure, ``dp`` its first derivative (the squared sound
    speed), ``d2p`` the second derivative.  ``F`` is a free energy density
    satisfying p = rho F' - F; it enters the energy jump condition.  F is
    only determined up to a term linear in rho, which drops out of the
    jump residuals on the mass-conserving manifold.  ``d2p`` must be exact
    (closed form or spline derivative): alpha1 is sensitive to it and no
    finite-difference fallback is attempted.

    ``domain`` is the open density interval on which the law is usable;
    branch scans stay inside it.
    """

    name: str
    p: Callable[[float], float]
    dp: Callable[[float], float]
    d2p: Callable[[float], float]
    F: Callable[[float], float]
    domain: tuple
    params: dict = field(default_factory=dict)

    def dF(self, rho: float) -> float:
        # exact given the defining relation, no quadrature or stencil
        return (self.p(rho) + self.F(rho)) / rho

    def consistency_defect(self, densities) -> float:
        """max |p - (rho F' - F)| / scale over the sample, with F' taken by
        a fourth-order central stencil so the check is independent of dF."""
        lo, hi = self.domain
        worst = 0.0
        for rho in np.asarray(densities, dtype=float):
            # the stencil must respect poles at the domain edges, not just
            # the origin
            h = 1e-3 * min(rho - lo, hi - rho, rho)
            dF = (
                self.F(rho - 2 * h)
                - 8.0 * self.F(rho - h)
                + 8.0 * self.F(rho + h)
                - self.F(rho + 2 * h)
            ) / (12.0 * h)
            p = self.p(rho)
            recon = rho * dF - self.F(rho)
            scale = max(1.0, abs(p), abs(rho * dF), abs(self.F(rho)))
            worst = max(worst, abs(p - recon) / scale)
        return worst


def _check_law(law: PressureLaw) -> PressureLaw:
    lo, hi = law.domain
    sample = lo + (hi - lo) * np.linspace(0.05, 0.95, 19)
    defect = law.consistency_defect(sample)
    if defect > CONSISTENCY_TOL:
        raise ValueError(
            f"free energy inconsistent with pressure law {law.name!r}: "
            f"defect {defect:.3e} exceeds {CONSISTENCY_TOL:g}"
        )
    return law


def vdw_pressure_law(theta: float = 0.85) -> PressureLaw:
    """Reduced van der Waals isotherm p = 8 theta rho / (3 - rho) - 3 rho^2.

    Non-monotone for theta below the critical value 1; the closed-form
    free energy is F = rho [ (8 theta / 3) ln(rho / (3 - rho)) - 3 rho ].
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    th = float(theta)

    def p(rho):
        return 8.0 * th * rho / (3.0 - rho) - 3.0 * rho**2

    def dp(rho):
        return 24.0 * th / (3.0 - rho) ** 2 - 6.0 * rho

    def d2p(rho):
        return 48.0 * th / (3.0 - rho) ** 3 - 6.0

    def F(rho):
        return rho * ((8.0 * th / 3.0) * np.log(rho / (3.0 - rho)) - 3.0 * rho)

    law = PressureLaw(
        name="vdw", p=p, dp=dp, d2p=d2p, F=F,
        domain=(1e-9, 3.0 - 1e-9), params={"theta": th},
    )
    return _check_law(law)


def cubic_pressure_law(a: float, b: float) -> PressureLaw:
    """Cubic law p = rho^3 - a rho^2 + b rho, non-monotone when a^2 > 3b.

    F = rho (rho^2/2 - a rho + b ln rho).
    """
    a = float(a)
    b = float(b)

    def p(rho):
        return rho**3 - a * rho**2 + b * rho

    def dp(rho):
        return 3.0 * rho**2 - 2.0 * a * rho + b

    def d2p(rho):
        return 6.0 * rho - 2.0 * a

    def F(rho):
        return rho * (0.5 * rho**2 - a * rho + b * np.log(rho))

    law = PressureLaw(
        name="cubic", p=p, dp=dp, d2p=d2p, F=F,
        domain=(1e-9, 2.0 * max(a, 1.0)), params={"a": a, "b": b},
    )
    return _check_law(law)


def table_pressure_law(densities, pressures, rho_ref: Optional[float] = None) -> PressureLaw:
    """Pressure law interpolated from tabulated (density, pressure) pairs.

    A cubic spline supplies p and its two derivatives.  The free energy is
    recovered as F(rho) = rho * integral_{rho_ref}^{rho} p(s)/s^2 ds by
    adaptive quadrature; rho_ref defaults to the first knot and only shifts
    F by a term linear in rho.
    """
    dens = np.asarray(densities, dtype=float)
    pres = np.asarray(pressures, dtype=float)
    if dens.ndim != 1 or dens.shape != pres.shape or dens.size < 4:
        raise ValueError("need matching 1-d arrays with at least 4 knots")
    if np.any(np.diff(dens) <= 0.0) or dens[0] <= 0.0:
        raise ValueError("densities must be positive and strictly increasing")
    ref = float(dens[0]) if rho_ref is None else float(rho_ref)
    if not dens[0] <= ref <= dens[-1]:
        raise ValueError("rho_ref must lie inside the tabulated range")

    spline = CubicSpline(dens, pres)
    dspline = spline.derivative(1)
    d2spline = spline.derivative(2)

    def F(rho):
        val, _ = quad(lambda s: spline(s) / s**2, ref, rho, limit=200)
        return rho * val

    law = PressureLaw(
        name="table",
        p=lambda rho: float(spline(rho)),
        dp=lambda rho: float(dspline(rho)),
        d2p=lambda rho: float(d2spline(rho)),
        F=F,
        domain=(float(dens[0]), float(dens[-1])),
        params={
            "densities": [float(x) for x in dens],
            "pressures": [float(x) for x in pres],
            "rho_ref": ref,
        },
    )
    return _check_law(law)


_LAW_BUILDERS = {
    "vdw": vdw_pressure_law,
    "cubic": cubic_pressure_law,
    "table": table_pressure_law,
}


def law_spec(law: PressureLaw) -> dict:
    """Serializable description; inverse of law_from_spec."""
    return {"name": law.name, "parameters": dict(law.params)}


def law_from_spec(spec: dict) -> PressureLaw:
    name = spec.get("name")
    if name not in _LAW_BUILDERS:
        known = ", ".join(sorted(_LAW_BUILDERS))
        raise ValueError(f"unknown pressure law {name!r}; known laws: {known}")
    return _LAW_BUILDERS[name](**spec.get("parameters", {}))


# ---------------------------------------------------------------------------
# states and jump conditions


@dataclass(frozen=True)
class PhaseBoundaryData:
    """States of a dynamical phase boundary in the front frame, plus the
    surface-wave quantities as they are filled in by the pipeline.

    The constructor enforces whatever is present: positive densities and
    velocities, mass-flux consistency j = rho_l u_l = rho_r u_r to 1e-12
    relative, subsonicity 0 < u < c on both sides, and, once tau is known,
    the ellipticity bound tau^2 < min(c^2 - u^2) |eta|^2 together with the
    sign convention a_l < 0 < a_r.
    """

    rho_l: float
    rho_r: float
    u_l: float
    u_r: float
    j: float
    c_l: float
    c_r: float
    eta_norm: Optional[float] = None
    tau: Optional[float] = None
    a_l: Optional[float] = None
    a_r: Optional[float] = None
    beta1: Optional[complex] = None
    beta2: Optional[complex] = None
    gamma1: Optional[complex] = None
    gamma2: Optional[complex] = None
    alpha0: Optional[float] = None
    alpha1: Optional[complex] = None
    gamma_kernel: Optional[complex] = None

    def __post_init__(self):
        for label in ("rho_l", "rho_r", "u_l", "u_r", "c_l", "c_r"):
            value = getattr(self, label)
            if not (np.isfinite(value) and value > 0.0):
                raise ValueError(f"{label} must be positive and finite, got {value!r}")
        if self.j == 0.0:
            raise ValueError("j must be nonzero for a dynamical phase boundary")
        for rho, u in ((self.rho_l, self.u_l), (self.rho_r, self.u_r)):
            if abs(rho * u - self.j) > 1e-12 * abs(self.j):
                raise ValueError(
                    f"mass flux mismatch: rho*u = {rho * u!r} vs j = {self.j!r}"
                )
        if not (self.u_l < self.c_l and self.u_r < self.c_r):
            raise ValueError("supersonic state: need 0 < u < c on both sides")
        if self.tau is not None:
            if self.eta_norm is None or self.eta_norm <= 0.0:
                raise ValueError("tau requires a positive eta_norm")
            bound = min(self.c_l**2 - self.u_l**2, self.c_r**2 - self.u_r**2)
            if not 0.0 < self.tau**2 < bound * self.eta_norm**2:
                raise ValueError("tau violates the ellipticity bound")
        if self.a_l is not None or self.a_r is not None:
            if not (self.a_l < 0.0 < self.a_r):
                raise ValueError("sign convention requires a_l < 0 < a_r")


def jump_residuals(law: PressureLaw, rho_l, rho_r, u_l, u_r) -> np.ndarray:
    """Mass, momentum, and energy jump residuals (right minus left) in the
    frame where the front is at rest.

    r1 = [rho u],  r2 = [rho u^2 + p],  r3 = [u (rho u^2 / 2 + F) + p u].
    All three vanish simultaneously only on a reversible discontinuity.
    """
    for label, value in (("rho_l", rho_l), ("rho_r", rho_r), ("u_l", u_l), ("u_r", u_r)):
        if not value > 0.0:
            raise ValueError(f"{label} must be positive, got {value!r}")
    p_l, p_r = law.p(rho_l), law.p(rho_r)
    F_l, F_r = law.F(rho_l), law.F(rho_r)
    r1 = rho_r * u_r - rho_l * u_l
    r2 = (rho_r * u_r**2 + p_r) - (rho_l * u_l**2 + p_l)
    r3 = (u_r * (0.5 * rho_r * u_r**2 + F_r) + p_r * u_r) - (
        u_l * (0.5 * rho_l * u_l**2 + F_l) + p_l * u_l
    )
    return np.array([r1, r2, r3])


def _jump_jacobian(law: PressureLaw, rho_l, rho_r, u_l, u_r) -> np.ndarray:
    """Derivatives of jump_residuals with respect to (rho_r, u_l, u_r)."""
    p_l, p_r = law.p(rho_l), law.p(rho_r)
    F_l, F_r = law.F(rho_l), law.F(rho_r)
    c2_r = law.dp(rho_r)
    dF_r = (p_r + F_r) / rho_r
    return np.array(
        [
            [u_r, -rho_l, rho_r],
            [u_r**2 + c2_r, -2.0 * rho_l * u_l, 2.0 * rho_r * u_r],
            [
                u_r * (0.5 * u_r**2 + dF_r + c2_r),
                -(1.5 * rho_l * u_l**2 + F_l + p_l),
                1.5 * rho_r * u_r**2 + F_r + p_r,
            ],
        ]
    )


def _residual_scale(law: PressureLaw, rho_l, rho_r, u_l, u_r) -> float:
    # size of the fluxes the residuals subtract, so the tolerance is relative
    p_l, p_r = law.p(rho_l), law.p(rho_r)
    F_l, F_r = law.F(rho_l), law.F(rho_r)
    return max(
        1.0,
        abs(rho_l * u_l), abs(rho_r * u_r),
        abs(rho_l * u_l**2 + p_l), abs(rho_r * u_r**2 + p_r),
        abs(u_l * (0.5 * rho_l * u_l**2 + F_l) + p_l * u_l),
        abs(u_r * (0.5 * rho_r * u_r**2 + F_r) + p_r * u_r),
    )


def _rankine_hugoniot_state(law: PressureLaw, rho_l, rho_r):
    """Velocities solving the mass and momentum jumps for a given density
    pair, or None when no positive mass flux exists there."""
    dp = law.p(rho_r) - law.p(rho_l)
    dv = 1.0 / rho_l - 1.0 / rho_r
    if dv == 0.0:
        return None
    j2 = dp / dv
    if not (np.isfinite(j2) and j2 > 0.0):
        return None
    j = math.sqrt(j2)
    return j / rho_l, j / rho_r


def _increasing_runs(law: PressureLaw):
    """Maximal density intervals on which the pressure increases."""
    lo, hi = law.domain
    grid = np.linspace(lo, hi, 2001)[1:-1]
    runs = []
    start = None
    prev = grid[0]
    for rho in grid:
        if law.dp(rho) > 0.0:
            if start is None:
                start = rho
        elif start is not None:
            runs.append((start, prev))
            start = None
        prev = rho
    if start is not None:
        runs.append((start, grid[-1]))
    return runs


def _branch_guess(law: PressureLaw, rho_l: float):
    """Locate a density on another increasing branch at which the energy
    residual changes sign along the mass/momentum manifold.

    A phase boundary connects distinct increasing branches, so the scan
    skips the branch holding rho_l outright; that also discards the weak
    near-sonic artifacts living next to the fixed state.  Within a branch
    the admissible window opens where the pressure crosses p(rho_l) (the
    mass flux vanishes there), and the genuine solution can sit arbitrarily
    close to that edge, so the sign at the edge is taken from the Gibbs
    jump (r3 ~ j * [dF] as j -> 0) and the samples are packed toward it.
    Crossings with supersonic velocities are rejected.  Returns a
    (rho_r, u_l, u_r) starting point for Newton, or None.
    """
    p_l = law.p(rho_l)
    g_l = law.dF(rho_l)
    c2_l = law.dp(rho_l)

    def energy_residual(rho_r):
        vel = _rankine_hugoniot_state(law, rho_l, rho_r)
        if vel is None:
            return None
        r3 = jump_residuals(law, rho_l, rho_r, vel[0], vel[1])[2]
        return r3 if np.isfinite(r3) else None

    for run in _increasing_runs(law):
        r0, r1 = run
        if r0 <= rho_l <= r1:
            continue
        if r0 > rho_l:
            # admissible where p > p_l; the window opens at the lower edge
            if law.p(r1) <= p_l:
                continue
            if law.p(r0) >= p_l:
                edge, far, anchored = r0, r1, False
            else:
                edge, far, anchored = _pressure_match(law, r0, r1, p_l), r1, True
        else:
            if law.p(r0) >= p_l:
                continue
            if law.p(r1) <= p_l:
                edge, far, anchored = r1, r0, False
            else:
                edge, far, anchored = _pressure_match(law, r0, r1, p_l), r0, True

        prev_rho = edge
        prev_sign = np.sign(law.dF(edge) - g_l) if anchored else 0.0
        # quadratic spacing reaches within 1e-8 of the edge
        for t in np.linspace(1e-4, 1.0, 240):
            rho = edge + (far - edge) * t**2
            r3 = energy_residual(rho)
            if r3 is None:
                continue
            sign = np.sign(r3)
            if prev_sign != 0.0 and sign != 0.0 and sign != prev_sign:
                rho_r = _bisect_crossing(energy_residual, prev_rho, rho, prev_sign)
                vel = _rankine_hugoniot_state(law, rho_l, rho_r)
                if vel is not None:
                    u_l, u_r = vel
                    if u_l**2 < c2_l and u_r**2 < law.dp(rho_r):
                        return (rho_r, u_l, u_r)
            prev_rho, prev_sign = rho, sign
    return None


def _pressure_match(law: PressureLaw, r0: float, r1: float, target: float) -> float:
    """Density in (r0, r1) where the (increasing) pressure meets target."""
    a, b = r0, r1
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        if law.p(mid) < target:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _bisect_crossing(f, a: float, b: float, fa_sign: float) -> float:
    # f(a) may be unavailable right at the window edge; its sign is given
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        fm = f(mid)
        if fm is None or np.sign(fm) == fa_sign:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _equal_area_defect(law: PressureLaw, rho_l, rho_r) -> float:
    """Normalized quadrature defect of the equal-area rule in the specific
    volume v = 1/rho: the isotherm and the chord between the two states
    must enclose zero signed area."""
    v_l, v_r = 1.0 / rho_l, 1.0 / rho_r
    p_bar = 0.5 * (law.p(rho_l) + law.p(rho_r))
    integral, _ = quad(lambda v: law.p(1.0 / v) - p_bar, v_r, v_l, limit=200)
    scale = max(1.0, abs(p_bar)) * abs(v_l - v_r)
    return abs(integral) / scale


def solve_states(law: PressureLaw, rho_l: float, guess=None) -> PhaseBoundaryData:
    """Solve the three jump conditions for (rho_r, u_l, u_r) at fixed rho_l.

    Damped Newton iteration (at most 100 steps, step halved while the
    residual grows) down to 1e-12 relative to the flux scale, followed by a
    subsonicity check and an equal-area consistency check.  Raises
    ValueError("no dynamical phase boundary ...") when no sign change of
    the energy residual exists or Newton fails, and
    ValueError("supersonic state ...") when a converged state is sonic or
    faster.
    """
    lo, hi = law.domain
    if not lo < rho_l < hi:
        raise ValueError(f"rho_l = {rho_l!r} outside the law's domain {law.domain}")
    if law.dp(rho_l) <= 0.0:
        raise ValueError("rho_l must lie on an increasing pressure branch")

    if guess is None:
        guess = _branch_guess(law, rho_l)
        if guess is None:
            raise ValueError(
                "no dynamical phase boundary: energy residual has no sign "
                "change along the mass/momentum manifold"
            )
    x = np.array(guess, dtype=float)
    if x.shape != (3,) or np.any(x <= 0.0):
        raise ValueError("guess must be three positive numbers (rho_r, u_l, u_r)")

    def norm_at(y):
        r = jump_residuals(law, rho_l, y[0], y[1], y[2])
        return r, float(np.max(np.abs(r)))

    r, rnorm = norm_at(x)
    converged = False
    for _ in range(NEWTON_MAX_ITER):
        scale = _residual_scale(law, rho_l, x[0], x[1], x[2])
        if rnorm <= RESIDUAL_TOL * scale:
            converged = True
            break
        J = _jump_jacobian(law, rho_l, x[0], x[1], x[2])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        factor = 1.0
        while factor > 2.0**-30:
            candidate = x + factor * step
            if np.all(candidate > 0.0) and candidate[0] < hi:
                try:
                    rc, rcnorm = norm_at(candidate)
                except ValueError:
                    rc = None
                if rc is not None and np.all(np.isfinite(rc)) and rcnorm < rnorm:
                    x, r, rnorm = candidate, rc, rcnorm
                    break
            factor *= 0.5
        else:
            break
    else:
        scale = _residual_scale(law, rho_l, x[0], x[1], x[2])
        converged = rnorm <= RESIDUAL_TOL * scale

    if not converged:
        raise ValueError(
            f"no dynamical phase boundary: Newton stalled with residual {rnorm:.3e}"
        )
    # two polishing steps push the residuals to rounding level, so the
    # 1e-12 *relative* mass-flux invariant holds even though j is small
    for _ in range(2):
        J = _jump_jacobian(law, rho_l, x[0], x[1], x[2])
        r, rnorm_new = norm_at(x)
        try:
            candidate = x + np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        rc, rcnorm = norm_at(candidate)
        if rcnorm <= rnorm_new:
            x = candidate
    rho_r, u_l, u_r = (float(v) for v in x)

    j = rho_l * u_l
    if abs(rho_r - rho_l) < 1e-6 * rho_l or j == 0.0:
        raise ValueError("no dynamical phase boundary: Newton collapsed onto rho_l")
    c2_l, c2_r = law.dp(rho_l), law.dp(rho_r)
    if not (c2_l > u_l**2 and c2_r > u_r**2):
        raise ValueError(
            f"supersonic state: u_l^2 = {u_l**2:.6g} vs c_l^2 = {c2_l:.6g}, "
            f"u_r^2 = {u_r**2:.6g} vs c_r^2 = {c2_r:.6g}"
        )

    defect = _equal_area_defect(law, rho_l, rho_r)
    if defect > EQUAL_AREA_TOL:
        raise ValueError(
            f"converged states violate the equal-area rule: defect {defect:.3e}"
        )

    return PhaseBoundaryData(
        rho_l=float(rho_l), rho_r=rho_r, u_l=u_l, u_r=u_r, j=float(j),
        c_l=math.sqrt(c2_l), c_r=math.sqrt(c2_r),
    )


# ---------------------------------------------------------------------------
# dispersion relation and linear surface-wave coefficients


def dispersion_lhs(data: PhaseBoundaryData, tau: float, eta_norm: float) -> float:
    """u_l u_r a_l a_r + c_l^2 c_r^2 tau^2 with the signed roots
    a_l = -c_l sqrt(X_l), a_r = +c_r sqrt(X_r)."""
    X_l = (data.c_l**2 - data.u_l**2) * eta_norm**2 - tau**2
    X_r = (data.c_r**2 - data.u_r**2) * eta_norm**2 - tau**2
    a_l = -data.c_l * math.sqrt(X_l)
    a_r = data.c_r * math.sqrt(X_r)
    return data.u_l * data.u_r * a_l * a_r + data.c_l**2 * data.c_r**2 * tau**2


def dispersion_root(data: PhaseBoundaryData, eta_norm: float) -> float:
    """Positive frequency tau at which the phase boundary carries a surface
    wave.

    The dispersion relation is rearranged as

        g(tau) = u_l u_r c_l c_r sqrt(X_l X_r) - c_l^2 c_r^2 tau^2 = 0,

    which is strictly decreasing on (0, tau_max) with g(0) > 0, so plain
    bisection is exact and needs no derivative.  Raises
    ValueError("no root ...") if the bracket fails to change sign.
    """
    if not eta_norm > 0.0:
        raise ValueError("eta_norm must be positive")
    u_l, u_r, c_l, c_r = data.u_l, data.u_r, data.c_l, data.c_r
    tau_max = eta_norm * math.sqrt(min(c_l**2 - u_l**2, c_r**2 - u_r**2))

    def g(tau):
        # X vanishes at tau_max analytically; clamp the rounding residue
        X_l = max((c_l**2 - u_l**2) * eta_norm**2 - tau**2, 0.0)
        X_r = max((c_r**2 - u_r**2) * eta_norm**2 - tau**2, 0.0)
        return u_l * u_r * c_l * c_r * math.sqrt(X_l * X_r) - c_l**2 * c_r**2 * tau**2

    lo, hi = 0.0, tau_max
    if not (g(lo) > 0.0 and g(hi) < 0.0):
        raise ValueError("no root: dispersion bracket does not change sign")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)

    scale = c_l**2 * c_r**2 * tau_max**2
    residual = abs(dispersion_lhs(data, tau, eta_norm))
    if residual > DISPERSION_TOL * scale:
        raise ValueError(
            f"no root: bisection left residual {residual:.3e} above tolerance"
        )
    return tau


def linear_coefficients(data: PhaseBoundaryData) -> PhaseBoundaryData:
    """Fill in the decaying-mode data (a_l, a_r, beta1, beta2, gamma1,
    gamma2) for the frequency stored in ``data``.

    The mode on either side is an exponential in the normal coordinate;
    Re beta1 < 0 < -Re beta2 makes it decay away from the front.  The
    gamma normalization ties the mode amplitude to the derivative of the
    front perturbation.  Before returning, the mode is substituted into
    the linearized interior equations at a few heights as a self-check.
    """
    if data.tau is None or data.eta_norm is None:
        raise ValueError("linear_coefficients needs tau and eta_norm")
    tau, eta = data.tau, data.eta_norm
    u_l, u_r, c_l, c_r = data.u_l, data.u_r, data.c_l, data.c_r

    X_l = (c_l**2 - u_l**2) * eta**2 - tau**2
    X_r = (c_r**2 - u_r**2) * eta**2 - tau**2
    a_l = -c_l * math.sqrt(X_l)
    a_r = c_r * math.sqrt(X_r)

    beta1 = (a_l - 1j * u_l * tau) / (c_l**2 - u_l**2)
    beta2 = (-a_r + 1j * u_r * tau) / (c_r**2 - u_r**2)

    drho = data.rho_r - data.rho_l
    gamma1 = drho * u_r * tau / (u_r * a_l - 1j * c_l**2 * tau)
    gamma2 = -drho * u_l * tau / (u_l * a_r - 1j * c_r**2 * tau)

    out = replace(
        data,
        a_l=float(a_l), a_r=float(a_r),
        beta1=complex(beta1), beta2=complex(beta2),
        gamma1=complex(gamma1), gamma2=complex(gamma2),
    )
    worst = max(interior_residual(out, z) for z in (-2.0, -0.5, 0.5, 2.0))
    if worst > INTERIOR_TOL:
        raise AssertionError(
            f"surface-wave mode fails the interior equations: residual {worst:.3e}"
        )
    return out


def interior_residual(data: PhaseBoundaryData, z: float) -> float:
    """Normalized residual of the linearized interior equations when the
    explicit surface-wave mode is substituted at height z (z < 0 is the
    left state).

    The mode carries (density, momentum) perturbations proportional to
    exp(-beta1 z) on the left and exp(beta2 z) on the right.  Each of the
    three equations (continuity, tangential and normal momentum) is
    normalized by the sum of the magnitudes of its terms.
    """
    if data.beta1 is None:
        raise ValueError("interior_residual needs the linear coefficients")
    if z == 0.0:
        raise ValueError("z = 0 is the front itself; sample the interior")
    tau, eta = data.tau, data.eta_norm
    if z < 0.0:
        u0, c = data.u_l, data.c_l
        D = -data.beta1
        amp = data.gamma1 * np.exp(-data.beta1 * z)
        R = -1j * tau + data.u_l * data.beta1
        UT = 1j * c**2 * eta
        UN = -data.a_l
    else:
        u0, c = data.u_r, data.c_r
        D = data.beta2
        amp = data.gamma2 * np.exp(data.beta2 * z)
        R = -1j * tau - data.u_r * data.beta2
        UT = 1j * c**2 * eta
        UN = -data.a_r
    R, UT, UN = amp * R, amp * UT, amp * UN

    worst = 0.0
    for terms in (
        (1j * tau * R, 1j * eta * UT, D * UN),
        (1j * tau * UT, u0 * D * UT, 1j * c**2 * eta * R),
        (
            1j * tau * UN,
            u0 * (1j * eta * UT + D * UN),
            u0 * D * UN,
            -u0**2 * D * R,
            c**2 * D * R,
        ),
    ):
        residual = abs(sum(terms))
        norm = sum(abs(t) for t in terms)
        if norm > 0.0:
            worst = max(worst, residual / norm)
    return worst


def amplitude_coefficients(law: PressureLaw, data: PhaseBoundaryData):
    """Evaluate (alpha0, alpha1, gamma) for a phase boundary with completed
    linear coefficients.

    alpha0 is real and never vanishes: it is -1/tau times a sum of
    positive terms, and it matches the tau-derivative of the dispersion
    relation up to sign (the derivative itself is -alpha0 on the root).
    alpha1 collects the three interaction terms, the first weighted by the
    velocity jump, the other two by p''/2 + c^2/rho on either side.  The
    kernel constant is gamma = alpha1 / (4 pi alpha0).
    """
    if data.gamma1 is None or data.tau is None:
        raise ValueError("amplitude_coefficients needs the linear coefficients")
    tau, eta = data.tau, data.eta_norm
    rho_l, rho_r, u_l, u_r = data.rho_l, data.rho_r, data.u_l, data.u_r
    c_l, c_r, a_l, a_r = data.c_l, data.c_r, data.a_l, data.a_r
    g1, g2 = data.gamma1, data.gamma2
    if u_r == u_l:
        raise ValueError("degenerate boundary: equal relative velocities")

    alpha0 = -(
        u_l**2 * u_r**2 * (a_l**2 / c_l**2 + a_r**2 / c_r**2)
        + 2.0 * c_l**2 * c_r**2 * tau**2
    ) / tau

    velocity_term = (
        (2.0 / (u_r - u_l))
        * (tau**2 + u_l * u_r * eta**2)
        * 1j * c_l**2 * c_r**2 * tau
        * (c_r**2 * g2 / (rho_r * u_r) - c_l**2 * g1 / (rho_l * u_l))
    )
    left_term = (
        (0.5 * law.d2p(rho_l) + c_l**2 / rho_l)
        * u_l * u_r * (a_r / a_l)
        * (tau**2 + u_l**2 * eta**2)
        * g1 * (1j * tau - u_l * data.beta1)
    )
    right_term = (
        (0.5 * law.d2p(rho_r) + c_r**2 / rho_r)
        * u_l * u_r * (a_l / a_r)
        * (tau**2 + u_r**2 * eta**2)
        * g2 * (1j * tau + u_r * data.beta2)
    )
    alpha1 = velocity_term + left_term + right_term
    gamma = alpha1 / (4.0 * math.pi * alpha0)
    return float(alpha0), complex(alpha1), complex(gamma)


# ---------------------------------------------------------------------------
# end-to-end pipeline


def phase_boundary_pipeline(
    law: PressureLaw, rho_l: float, eta_norm: float = 1.0, guess=None
) -> PhaseBoundaryData:
    """States -> dispersion root -> linear coefficients -> amplitude
    coefficients, returning a fully populated PhaseBoundaryData."""
    data = solve_states(law, rho_l, guess=guess)
    tau = dispersion_root(data, eta_norm)
    data = replace(data, eta_norm=float(eta_norm), tau=float(tau))
    data = linear_coefficients(data)
    alpha0, alpha1, gamma = amplitude_coefficients(law, data)
    return replace(data, alpha0=alpha0, alpha1=alpha1, gamma_kernel=gamma)


def report_dict(data: PhaseBoundaryData) -> dict:
    """JSON-ready summary of a completed pipeline run.

    Complex numbers are encoded as [real, imag] pairs to match the kernel
    serialization format.
    """
    if data.gamma_kernel is None:
        raise ValueError("report_dict needs a fully populated PhaseBoundaryData")

    def pair(zvalue):
        return [float(zvalue.real), float(zvalue.imag)]

    return {
        "states": {
            "rho_l": data.rho_l, "u_l": data.u_l, "c_l": data.c_l,
            "rho_r": data.rho_r, "u_r": data.u_r, "c_r": data.c_r,
        },
        "j": data.j,
        "eta_norm": data.eta_norm,
        "tau_over_eta": data.tau / data.eta_norm,
        "beta1": pair(data.beta1),
        "beta2": pair(data.beta2),
        "gamma1": pair(data.gamma1),
        "gamma2": pair(data.gamma2),
        "alpha0": data.alpha0,
        "alpha1": pair(data.alpha1),
        "gamma": pair(data.gamma_kernel),
    }
