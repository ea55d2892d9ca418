"""Eigenvalue counting coefficients from boundary symbols.

The normalized cluster symbol m_hat at a spectral root has real
eigenvalues (up to measurement error); the two-sided counting
functions of the operator cluster at that root obey

    n_pm(tau) ~ C_pm tau^(-d),    d = boundary dimension = 2,

with

    C_pm = d^-1 (2 pi)^-d int_Gamma int_{|xi|=1}
           Tr[ (m_hat(x, xi))_pm^d ]  dcirc(xi) dS(x),

where (.)_pm are the positive/negative spectral parts and dcirc is
arclength on the unit frequency circle.
"""

import math
from dataclasses import dataclass, field

import numpy as np


def signed_power_trace(mat, d, sign, imag_tol=1e-6, zero_tol=1e-12, scale=None):
    """Tr of the d-th power of the positive or negative part of mat.

    mat must have a real spectrum up to imag_tol relative to its
    spectral radius (error otherwise).  Eigenvalues within zero_tol
    relative of zero belong to neither part.  sign is +1 or -1; the
    negative part uses |lambda|^d, so both traces are nonnegative.
    scale, when given, is an external magnitude reference: both
    tolerance tests are relative to max(radius, scale), so matrices
    negligible against it pass with a negligible contribution.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    vals = np.linalg.eigvals(np.asarray(mat))
    rho = np.abs(vals).max()
    ref = max(rho, scale if scale is not None else 0.0, 1e-300)
    worst = np.abs(vals.imag).max()
    if worst > imag_tol * ref:
        raise ValueError(
            "spectrum not real: max imaginary part %.3e vs radius %.3e"
            % (worst, rho)
        )
    re = vals.real
    keep = re > zero_tol * ref if sign > 0 else re < -zero_tol * ref
    return float(np.sum(np.abs(re[keep]) ** d))


def coefficient_integral(field, iota, d=2, angles=None, imag_tol=1e-4):
    """Two-sided counting coefficients (C_plus, C_minus) at one root.

    field is an extracted SymbolField; iota indexes its spectral
    roots.  The frequency integral runs over `angles` equispaced unit
    directions (default: the field's native angular resolution) and
    the surface integral over the field's quadrature weights.  The
    returned info dict reports the drift when the angle count is
    halved, an internal convergence check.
    """
    roots = field.roots.roots
    if not 0 <= iota < len(roots):
        raise IndexError("root index out of range")
    if angles is None:
        angles = 64
    if angles % 4:
        raise ValueError("angle count must be divisible by 4")

    def run(m_angles):
        thetas = 2.0 * np.pi * np.arange(m_angles) / m_angles
        xis = np.column_stack([np.cos(thetas), np.sin(thetas)])
        c_plus = 0.0
        c_minus = 0.0
        for i in range(field.node_count):
            m_eval = field.m_hat[i][iota]
            mats = [m_eval(xi) for xi in xis]
            ref = max(np.abs(m).max() for m in mats)
            tp = 0.0
            tm = 0.0
            for mm in mats:
                tp += signed_power_trace(mm, d, +1, imag_tol=imag_tol, scale=ref)
                tm += signed_power_trace(mm, d, -1, imag_tol=imag_tol, scale=ref)
            w = field.weights[i] * (2.0 * np.pi / m_angles)
            c_plus += w * tp
            c_minus += w * tm
        norm = (2.0 * np.pi) ** (-d) / d
        return norm * c_plus, norm * c_minus

    cp, cm = run(angles)
    cp_h, cm_h = run(angles // 2)
    scale = max(abs(cp), abs(cm), 1e-30)
    info = {
        "angle_drift": max(abs(cp - cp_h), abs(cm - cm_h)) / scale,
        "angles": angles,
    }
    return cp, cm, info


@dataclass(frozen=True)
class SequenceModel:
    """Eigenvalue sequence model lambda_n = omega +/- (C / n)^(1/d)."""

    c: float
    d: float
    side: int
    omega: float
    empty: bool

    def eigenvalue(self, n):
        n = np.asarray(n, dtype=float)
        if self.empty:
            return np.full_like(n, self.omega)
        return self.omega + self.side * (self.c / n) ** (1.0 / self.d)

    def count(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.empty:
            return np.zeros_like(tau)
        return self.c * tau ** (-self.d)


def counting_to_sequence(c, d, side, omega):
    """Counting coefficient to eigenvalue sequence model.

    C <= 0 flags an empty (degenerate) branch: no eigenvalue sequence
    converges to omega from that side at this order.
    """
    if side not in (+1, -1):
        raise ValueError("side must be +1 or -1")
    if d <= 0:
        raise ValueError("d must be positive")
    return SequenceModel(
        c=float(max(c, 0.0)), d=float(d), side=side, omega=float(omega),
        empty=not (c > 0.0),
    )


@dataclass(frozen=True)
class AsymptoticReport:
    """One counting-asymptotics record.

    route is "symbol" (coefficient integral of the extracted symbol)
    or "counting" (power-law fit of a measured or exact counting
    function); err_estimate is the route's internal convergence
    measure, not a rigorous bound.
    """

    root: float
    side: str
    c: float
    d: float
    route: str
    err_estimate: float
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "root": self.root,
            "side": self.side,
            "C": self.c,
            "d": self.d,
            "route": self.route,
            "err_estimate": self.err_estimate,
        }
        out.update(self.extra)
        return out
