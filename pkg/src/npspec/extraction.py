"""Boundary symbol extraction from the double layer kernel.

Pipeline per surface node: localize the kernel in a curvature-aligned
chart, split the chart kernel into homogeneous parts of degree -2 and
-1 by a radial extrapolation ladder, map each part to its planar
symbol through the angular Fourier multiplier of the kernel transform
a(x, xi) = int exp(+i z.xi) k(x, z) dz, then assemble the normalized
cluster symbols that drive the eigenvalue counting coefficients.

The degree -2 part must be odd (its even part has no classical
symbol); the resulting degree 0 symbol is checked against the closed
flat-boundary form at every node.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .elasticity import np_kernel, np_principal_symbol
from .surfaces import c_chart, consistent_chart
from .symbols import (
    SpectralPolynomial,
    TwoTermSymbol,
    build_bi_symbol,
    root_derivative_scale,
)


def chart_kernel(params, chart, z):
    """Double layer kernel in chart coordinates, with area factor.

    For planar offset z (the chart coordinates of x minus those of y,
    x fixed at the chart origin), evaluates K(x, y(-z)) nu-contracted
    as a 3x3 matrix in the chart frame times the chart area element
    sqrt(1 + |grad F|^2), so that integrals against chart coordinates
    reproduce surface integrals.
    """
    z = np.asarray(z, dtype=float)
    w = -z
    surface = chart.surface
    q = chart.surface_point(w)
    g = surface.implicit_gradient(q)
    gn = g @ chart.n
    if gn <= 0.0:
        raise ValueError("chart point beyond the horizon of the chart")
    nu = g / np.linalg.norm(g)
    area = np.linalg.norm(g) / gn
    k_lab = np_kernel(params, chart.origin, q, nu)
    frame = np.column_stack([chart.e1, chart.e2, chart.n])
    return area * (frame.T @ k_lab @ frame)


@dataclass(frozen=True)
class HomogeneousKernelPart:
    """Angular samples of one homogeneous kernel component.

    samples[j] is the 3x3 coefficient at direction angle
    2 pi j / M, so the kernel contribution is
    samples(theta) |z|^degree.  Evaluation between grid angles uses
    trigonometric interpolation; the sampled function is band limited
    to |n| < M/2 for the kernels handled here.
    """

    degree: int
    samples: np.ndarray

    @property
    def angle_count(self):
        return self.samples.shape[0]

    @property
    def angles(self):
        m = self.angle_count
        return 2.0 * np.pi * np.arange(m) / m

    def fourier(self, n):
        """Two-sided angular Fourier coefficient c_n (3x3 complex)."""
        m = self.angle_count
        ph = np.exp(-1j * n * self.angles)
        return np.tensordot(ph, self.samples, axes=(0, 0)) / m

    def __call__(self, theta):
        return _trig_interp(self.samples, theta).real


def _trig_interp(samples, theta):
    """Evaluate equispaced angular samples at theta by trig interpolation."""
    m = samples.shape[0]
    coeffs = np.fft.fft(samples, axis=0) / m
    ns = np.fft.fftfreq(m, 1.0 / m)
    val = np.zeros(samples.shape[1:], dtype=complex)
    for k in range(m):
        n = ns[k]
        if abs(n) == m / 2:
            val += coeffs[k] * math.cos(n * theta)
        else:
            val += coeffs[k] * np.exp(1j * n * theta)
    return val


def _default_ladder():
    return np.geomspace(1.0e-3, 1.0e-2, 8)


def homogeneous_parts(kernel_fn, angles=64, eps_ladder=None, odd_tol=1e-5):
    """Split a chart kernel into degree -2 and -1 homogeneous parts.

    kernel_fn maps a planar offset z (2,) to a 3x3 matrix.  Along each
    of `angles` equispaced directions the scaled values
    eps^2 kernel_fn(eps u) are fitted by a polynomial in eps over the
    extrapolation ladder; the constant and linear coefficients are the
    degree -2 and -1 angular samples.  The degree -2 part must be odd
    under u -> -u to the relative tolerance odd_tol.

    Returns (part_m2, part_m1, diagnostics).
    """
    if angles < 64 or angles % 2:
        raise ValueError("need an even direction count of at least 64")
    ladder = _default_ladder() if eps_ladder is None else np.asarray(eps_ladder, float)
    if ladder.size < 4 or ladder.min() < 1e-5 or ladder.max() > 1e-2:
        raise ValueError("ladder needs >= 4 radii inside [1e-5, 1e-2]")
    ladder = np.sort(ladder)
    deg = min(4, ladder.size - 2)
    s = ladder.max()
    design = np.vander(ladder / s, deg + 1, increasing=True)
    thetas = 2.0 * np.pi * np.arange(angles) / angles
    k0 = np.empty((angles, 3, 3))
    k1 = np.empty((angles, 3, 3))
    resid = 0.0
    drift = 0.0
    for j, th in enumerate(thetas):
        u = np.array([math.cos(th), math.sin(th)])
        vals = np.array([e**2 * kernel_fn(e * u) for e in ladder])
        flat = vals.reshape(ladder.size, 9)
        coef, res, _, _ = np.linalg.lstsq(design, flat, rcond=None)
        k0[j] = coef[0].reshape(3, 3)
        k1[j] = (coef[1] / s).reshape(3, 3)
        if res.size:
            resid = max(resid, math.sqrt(res.max() / ladder.size))
        short = np.linalg.lstsq(design[:-2], flat[:-2], rcond=None)[0]
        drift = max(drift, np.abs(short[0] - coef[0]).max())
    scale = max(np.abs(k0).max(), 1e-30)
    half = angles // 2
    odd_defect = np.abs(k0 + np.roll(k0, half, axis=0)).max()
    if odd_defect > odd_tol * scale:
        raise ValueError(
            "degree -2 kernel part is not odd: defect %.3e (scale %.3e)"
            % (odd_defect, scale)
        )
    k0 = 0.5 * (k0 - np.roll(k0, half, axis=0))
    diagnostics = {
        "fit_residual": resid,
        "ladder_drift": drift,
        "odd_defect": odd_defect / scale,
    }
    return (
        HomogeneousKernelPart(degree=-2, samples=k0),
        HomogeneousKernelPart(degree=-1, samples=k1),
        diagnostics,
    )


def fourier_multiplier(n, a):
    """Angular multiplier of the planar kernel transform.

    For a kernel f(direction angle) |z|^(-a) with angular mode
    exp(i n theta), the symbol is multiplier(n, a) exp(i n phi)
    |xi|^(a-2) with

        multiplier = 2^(2-a) pi i^|n| Gamma((|n|-a+2)/2) / Gamma((|n|+a)/2)

    valid for a in (0, 2) and, for odd n, at a = 2.
    """
    n = abs(int(n))
    if a == 2 and n % 2 == 0:
        raise ValueError("even modes of degree -2 kernels have no multiplier")
    lg = math.lgamma((n - a + 2) / 2.0) - math.lgamma((n + a) / 2.0)
    return 2.0 ** (2.0 - a) * math.pi * (1j) ** n * math.exp(lg)


@dataclass(frozen=True)
class AngularSymbol:
    """Homogeneous matrix symbol stored by angular Fourier modes.

    Evaluates sum_n modes[n] exp(i n phi(xi)) |xi|^degree at nonzero
    planar frequencies xi.
    """

    degree: int
    modes: dict

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        r = np.linalg.norm(xi)
        if r == 0.0:
            raise ValueError("xi = 0 rejected")
        phi = math.atan2(xi[1], xi[0])
        val = np.zeros((3, 3), dtype=complex)
        for n, c in self.modes.items():
            val += c * np.exp(1j * n * phi)
        return val * r**self.degree


def angular_fourier_symbol(part, even_tol=1e-8):
    """Planar symbol of a homogeneous kernel part.

    part.degree = -2 gives a degree 0 symbol (odd modes only; even
    mode content beyond even_tol relative is an error), part.degree =
    -1 gives a degree -1 symbol.
    """
    a = -part.degree
    m = part.angle_count
    scale = max(np.abs(part.samples).max(), 1e-30)
    modes = {}
    bad_even = 0.0
    for n in range(-(m // 2 - 1), m // 2):
        c = part.fourier(n)
        mag = np.abs(c).max()
        if a == 2 and n % 2 == 0:
            bad_even = max(bad_even, mag)
            continue
        if mag < 1e-13 * scale:
            continue
        modes[n] = fourier_multiplier(n, a) * c
    if a == 2 and bad_even > even_tol * scale:
        raise ValueError(
            "even angular content %.3e in a degree -2 kernel part" % (bad_even / scale)
        )
    return AngularSymbol(degree=a - 2, modes=modes)


def _principal_xi_derivative(params, xi):
    """Analytic xi gradient of the flat principal symbol."""
    xi = np.asarray(xi, dtype=float)
    r = np.linalg.norm(xi)
    c = 1j * np.pi * params.mu * (params.lam_prime - params.mu_prime)
    base = np.array(
        [
            [0.0, 0.0, -xi[0]],
            [0.0, 0.0, -xi[1]],
            [xi[0], xi[1], 0.0],
        ]
    )
    out = np.empty((2, 3, 3), dtype=complex)
    for al in range(2):
        e = np.zeros(3)
        e[al] = 1.0
        unit = np.array(
            [
                [0.0, 0.0, -e[0]],
                [0.0, 0.0, -e[1]],
                [e[0], e[1], 0.0],
            ]
        )
        out[al] = c * (unit / r - xi[al] * base / r**3)
    return out


class _TableEvaluator:
    """Trigonometric interpolation of matrices tabulated over angles.

    samples has shape (M, ...) over equispaced angles; evaluation at
    the direction angle of xi interpolates each trailing entry.
    """

    def __init__(self, samples):
        self.samples = np.asarray(samples)
        m = self.samples.shape[0]
        self._coeffs = np.fft.fft(self.samples, axis=0) / m
        self._ns = np.fft.fftfreq(m, 1.0 / m)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        theta = math.atan2(xi[1], xi[0])
        m = self.samples.shape[0]
        val = np.zeros(self.samples.shape[1:], dtype=complex)
        for k in range(m):
            n = self._ns[k]
            if abs(n) == m / 2:
                val += self._coeffs[k] * math.cos(n * theta)
            else:
                val += self._coeffs[k] * np.exp(1j * n * theta)
        return val


@dataclass(frozen=True)
class SymbolField:
    """Extracted two-term boundary symbol data over surface nodes.

    Per node: the curvature-aligned chart, degree 0 and -1 symbol
    evaluators, the tangential x-derivative of the degree 0 symbol
    (indexed by chart direction), and per spectral root the normalized
    cluster symbol evaluator m_hat whose signed d-th power traces feed
    the counting coefficient integral.
    """

    surface: object
    params: object
    node_params: np.ndarray
    weights: np.ndarray
    roots: SpectralPolynomial
    charts: list
    k0: list
    km1: list
    dxk0: list
    m_hat: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def node_count(self):
        return self.node_params.shape[0]


def _transported_k0(params, surface, chart, w):
    """Degree 0 symbol at the nearby point, pulled back to the base chart."""
    near, dz, u = consistent_chart(surface, chart, w)
    dzi_t = np.linalg.inv(dz).T

    def value(xi):
        eta = dzi_t @ np.asarray(xi, dtype=float)
        return u @ np_principal_symbol(params, eta) @ u.T

    return value


def _dxk0_table(params, surface, chart, angles, offsets):
    """Central difference with Richardson step halving, per direction."""
    h1, h2 = offsets
    if not math.isclose(h2, 2.0 * h1, rel_tol=1e-9):
        raise ValueError("offsets must be (h, 2h) for the step refinement")
    thetas = 2.0 * np.pi * np.arange(angles) / angles
    xis = np.column_stack([np.cos(thetas), np.sin(thetas)])
    table = np.zeros((2, angles, 3, 3), dtype=complex)
    for al in range(2):
        w = np.zeros(2)
        diffs = []
        for h in (h1, h2):
            w_plus, w_minus = w.copy(), w.copy()
            w_plus[al] = h
            w_minus[al] = -h
            up = _transported_k0(params, surface, chart, w_plus)
            dn = _transported_k0(params, surface, chart, w_minus)
            diffs.append(
                np.array([(up(xi) - dn(xi)) / (2.0 * h) for xi in xis])
            )
        table[al] = (4.0 * diffs[0] - diffs[1]) / 3.0
    return table


def np_symbol_field(
    surface,
    params,
    quad,
    roots=None,
    angles=64,
    eps_ladder=None,
    offsets=(1e-3, 2e-3),
    k0_tol=1e-4,
):
    """Extract the two-term boundary symbol at every quadrature node.

    quad is a SurfaceQuadrature (nodes, weights, parameters).  roots
    defaults to the essential spectrum of the material.  The measured
    degree 0 symbol is compared with the closed flat-boundary form at
    every node and direction; disagreement beyond k0_tol aborts.
    """
    from .elasticity import essential_spectrum

    if roots is None:
        roots = essential_spectrum(params)
    elif not isinstance(roots, SpectralPolynomial):
        roots = SpectralPolynomial(roots=tuple(roots))
    charts, k0s, km1s, dxk0s, m_hats = [], [], [], [], []
    k0_err = 0.0
    fit_resid = 0.0
    thetas = 2.0 * np.pi * np.arange(angles) / angles
    xis = np.column_stack([np.cos(thetas), np.sin(thetas)])
    for i in range(quad.size):
        th, ph = quad.params[i]
        chart = c_chart(surface, th, ph)
        kfun = lambda z: chart_kernel(params, chart, z)
        p2, p1, diag = homogeneous_parts(kfun, angles=angles, eps_ladder=eps_ladder)
        fit_resid = max(fit_resid, diag["ladder_drift"])
        k0 = angular_fourier_symbol(p2)
        km1 = angular_fourier_symbol(p1)
        err = max(
            np.abs(k0(xi) - np_principal_symbol(params, xi)).max() for xi in xis
        )
        k0_err = max(k0_err, err)
        if err > k0_tol:
            raise ValueError(
                "extracted degree 0 symbol off closed form by %.3e at node %d"
                % (err, i)
            )
        dx_table = _dxk0_table(params, surface, chart, angles, offsets)
        dx_eval = _TableEvaluator(samples=np.transpose(dx_table, (1, 0, 2, 3)))
        two_term = TwoTermSymbol(
            dim=3,
            a0=lambda x, xi: np_principal_symbol(params, xi),
            a_m1=lambda x, xi, f=km1: f(xi),
            dx_a0=lambda x, xi, f=dx_eval: np.asarray(f(xi)),
            dxi_a0=lambda x, xi: _principal_xi_derivative(params, xi),
        )
        node_m = []
        for idx in range(len(roots.roots)):
            b = build_bi_symbol(two_term, roots, idx)
            scale = root_derivative_scale(roots, idx)
            node_m.append(
                lambda xi, bm=b.a_m1, s=scale: bm(np.zeros(2), xi) / s
            )
        charts.append(chart)
        k0s.append(k0)
        km1s.append(km1)
        dxk0s.append(dx_eval)
        m_hats.append(node_m)
    return SymbolField(
        surface=surface,
        params=params,
        node_params=np.array(quad.params),
        weights=np.array(quad.weights),
        roots=roots,
        charts=charts,
        k0=k0s,
        km1=km1s,
        dxk0=dxk0s,
        m_hat=m_hats,
        diagnostics={"k0_max_err": k0_err, "ladder_drift": fit_resid},
    )
