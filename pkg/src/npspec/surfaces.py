"""Closed star-shaped surfaces and curvature-aligned boundary charts.

Every supported surface is a radial graph over the unit sphere,
X(theta, phi) = rho(theta, phi) u(theta, phi) with u the unit radial
direction, so points, normals, fundamental forms and ray intersections
all reduce to the scalar field rho and its first two angular
derivatives.  Supported kinds:

    sphere        rho = R
    ellipsoid     rho = (sum_i (u_i / a_i)^2)^(-1/2)
    radial_graph  rho = 1 + sum c_lm Y_lm(theta, phi)

Charts: a curvature-aligned tangent chart at a surface point carries
an orthonormal frame (e1, e2, n) with e1, e2 principal directions
(kappa1 <= kappa2) and n the outward normal; the surface is locally
the graph q = origin + w1 e1 + w2 e2 + F(w) n with F(0) = 0,
grad F(0) = 0 and Hess F(0) = diag(kappa1, kappa2).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh
from scipy.optimize import brentq
from scipy.special import assoc_legendre_p_all

_POLE_EPS = 1e-12


def _real_sph_harm_jet(l, m, theta, phi):
    """Real spherical harmonic Y_lm and its theta/phi derivatives.

    Returns (Y, Yt, Yp, Ytt, Ytp, Ypp).  Real convention: m > 0 pairs
    with cos(m phi), m < 0 with sin(|m| phi), Condon-Shortley phase as
    in scipy's associated Legendre functions.
    """
    am = abs(m)
    t = math.cos(theta)
    st = math.sin(theta)
    table = assoc_legendre_p_all(l, am, t, diff_n=1)
    p = table[0][l, am]
    p1 = table[1][l, am]
    one_mt2 = max(1.0 - t * t, _POLE_EPS)
    # associated Legendre equation gives the second x-derivative
    p2 = (2.0 * t * p1 - (l * (l + 1) - am * am / one_mt2) * p) / one_mt2
    pt = -st * p1
    ptt = -t * p1 + st * st * p2
    nrm = math.sqrt(
        (2 * l + 1) / (4.0 * math.pi) * math.factorial(l - am) / math.factorial(l + am)
    )
    if m == 0:
        f, fp, fpp = 1.0, 0.0, 0.0
        nrm_f = nrm
    elif m > 0:
        f, fp, fpp = math.cos(m * phi), -m * math.sin(m * phi), -m * m * math.cos(m * phi)
        nrm_f = nrm * math.sqrt(2.0)
    else:
        f, fp, fpp = math.sin(am * phi), am * math.cos(am * phi), -am * am * math.sin(am * phi)
        nrm_f = nrm * math.sqrt(2.0)
    return (
        nrm_f * p * f,
        nrm_f * pt * f,
        nrm_f * p * fp,
        nrm_f * ptt * f,
        nrm_f * pt * fp,
        nrm_f * p * fpp,
    )


def _radial_direction_jet(theta, phi):
    """Unit direction u(theta, phi) with first and second derivatives."""
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    u = np.array([st * cp, st * sp, ct])
    ut = np.array([ct * cp, ct * sp, -st])
    up = np.array([-st * sp, st * cp, 0.0])
    utt = -u
    utp = np.array([-ct * sp, ct * cp, 0.0])
    upp = np.array([-st * cp, -st * sp, 0.0])
    return u, ut, up, utt, utp, upp


@dataclass(frozen=True)
class ParametrizedSurface:
    """Closed surface given as a radial graph over the unit sphere."""

    kind: str
    params: dict = field(default_factory=dict)

    def rho_jet(self, theta, phi):
        """rho and its angular derivatives (r, rt, rp, rtt, rtp, rpp)."""
        if self.kind == "sphere":
            r = float(self.params.get("radius", 1.0))
            return r, 0.0, 0.0, 0.0, 0.0, 0.0
        if self.kind == "ellipsoid":
            a, b, c = (float(self.params[k]) for k in ("a", "b", "c"))
            st, ct = math.sin(theta), math.cos(theta)
            sp, cp = math.sin(phi), math.cos(phi)
            ia2, ib2, ic2 = 1.0 / a**2, 1.0 / b**2, 1.0 / c**2
            aa = cp * cp * ia2 + sp * sp * ib2
            aa_p = math.sin(2.0 * phi) * (ib2 - ia2)
            aa_pp = 2.0 * math.cos(2.0 * phi) * (ib2 - ia2)
            g = st * st * aa + ct * ct * ic2
            g_t = math.sin(2.0 * theta) * (aa - ic2)
            g_p = st * st * aa_p
            g_tt = 2.0 * math.cos(2.0 * theta) * (aa - ic2)
            g_tp = math.sin(2.0 * theta) * aa_p
            g_pp = st * st * aa_pp
            return _inverse_sqrt_jet(g, g_t, g_p, g_tt, g_tp, g_pp)
        if self.kind == "radial_graph":
            r, rt, rp, rtt, rtp, rpp = 1.0, 0.0, 0.0, 0.0, 0.0, 0.0
            for (l, m), c in self._harmonics():
                y = _real_sph_harm_jet(l, m, theta, phi)
                r += c * y[0]
                rt += c * y[1]
                rp += c * y[2]
                rtt += c * y[3]
                rtp += c * y[4]
                rpp += c * y[5]
            if r <= 0.0:
                raise ValueError("radial graph not star shaped at this point")
            return r, rt, rp, rtt, rtp, rpp
        raise ValueError("unknown surface kind: %r" % self.kind)

    def _harmonics(self):
        h = self.params.get("harmonics", {})
        if isinstance(h, dict):
            return [((int(l), int(m)), float(c)) for (l, m), c in h.items()]
        return [((int(l), int(m)), float(c)) for l, m, c in h]

    def position(self, theta, phi):
        r = self.rho_jet(theta, phi)[0]
        u = _radial_direction_jet(theta, phi)[0]
        return r * u

    def jet(self, theta, phi):
        """Position, tangent and second derivative vectors, normal, I, II.

        II uses the outward normal, so the unit sphere has
        kappa1 = kappa2 = -1 in this convention.
        """
        r, rt, rp, rtt, rtp, rpp = self.rho_jet(theta, phi)
        u, ut, up, utt, utp, upp = _radial_direction_jet(theta, phi)
        x = r * u
        xt = rt * u + r * ut
        xp = rp * u + r * up
        xtt = rtt * u + 2.0 * rt * ut + r * utt
        xtp = rtp * u + rt * up + rp * ut + r * utp
        xpp = rpp * u + 2.0 * rp * up + r * upp
        nv = np.cross(xt, xp)
        nn = np.linalg.norm(nv)
        if nn == 0.0:
            raise ValueError("degenerate parametrization point")
        normal = nv / nn
        first = np.array([[xt @ xt, xt @ xp], [xt @ xp, xp @ xp]])
        second = np.array(
            [[normal @ xtt, normal @ xtp], [normal @ xtp, normal @ xpp]]
        )
        return {
            "x": x,
            "xt": xt,
            "xp": xp,
            "normal": normal,
            "area": nn,
            "I": first,
            "II": second,
        }

    def implicit_value(self, point):
        """g(p) = |p| - rho(p direction); zero exactly on the surface."""
        p = np.asarray(point, dtype=float)
        r = np.linalg.norm(p)
        if r == 0.0:
            raise ValueError("origin has no radial direction")
        theta = math.acos(max(-1.0, min(1.0, p[2] / r)))
        phi = math.atan2(p[1], p[0])
        return r - self.rho_jet(theta, phi)[0]

    def implicit_gradient(self, point):
        """Gradient of g; points outward, normalizes to the unit normal."""
        p = np.asarray(point, dtype=float)
        r = np.linalg.norm(p)
        theta = math.acos(max(-1.0, min(1.0, p[2] / r)))
        phi = math.atan2(p[1], p[0])
        _, rt, rp, _, _, _ = self.rho_jet(theta, phi)
        st = max(math.sin(theta), _POLE_EPS)
        s = p / r
        that = np.array(
            [math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -st]
        )
        phat = np.array([-math.sin(phi), math.cos(phi), 0.0])
        grad_s2 = rt * that + (rp / st) * phat
        return s - grad_s2 / r

    def normal(self, point):
        g = self.implicit_gradient(point)
        return g / np.linalg.norm(g)


def _inverse_sqrt_jet(g, gt, gp, gtt, gtp, gpp):
    """Jet of g^(-1/2) from the jet of g."""
    r = g ** (-0.5)
    c1 = -0.5 * g ** (-1.5)
    c2 = 0.75 * g ** (-2.5)
    return (
        r,
        c1 * gt,
        c1 * gp,
        c2 * gt * gt + c1 * gtt,
        c2 * gt * gp + c1 * gtp,
        c2 * gp * gp + c1 * gpp,
    )


def make_surface(kind, **params):
    """Factory for the supported surface kinds.

    sphere(radius=1), ellipsoid(a, b, c),
    radial_graph(harmonics={(l, m): coeff} or [[l, m, coeff], ...]).
    """
    if kind == "sphere":
        params.setdefault("radius", 1.0)
    elif kind == "ellipsoid":
        for k in ("a", "b", "c"):
            if k not in params:
                raise ValueError("ellipsoid needs semi-axes a, b, c")
    elif kind == "radial_graph":
        params.setdefault("harmonics", {})
    else:
        raise ValueError("unknown surface kind: %r" % kind)
    return ParametrizedSurface(kind=kind, params=params)


def principal_curvatures(surface, theta, phi):
    """Principal curvatures and directions at a parameter point.

    Returns (kappa1, kappa2, e1, e2, normal) with kappa1 <= kappa2,
    e1, e2 orthonormal tangent vectors along the principal directions
    and (e1, e2, normal) right handed.  Curvature sign follows the
    outward normal: the unit sphere gives kappa = -1.
    """
    jet = surface.jet(theta, phi)
    vals, vecs = eigh(jet["II"], jet["I"])
    e1 = vecs[0, 0] * jet["xt"] + vecs[1, 0] * jet["xp"]
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(jet["normal"], e1)
    return vals[0], vals[1], e1, e2, jet["normal"]


@dataclass(frozen=True)
class CCoordinateChart:
    """Tangent-plane graph chart with an orthonormal frame.

    origin is on the surface, (e1, e2, n) orthonormal right handed
    with n outward.  aligned=True means e1, e2 are principal
    directions (kappa1 <= kappa2); consistent charts transported from
    a neighbour are generally not aligned.  The height F(w) solves the
    ray intersection origin + w1 e1 + w2 e2 + F n on the surface and
    is defined for |w| <= radius.
    """

    surface: ParametrizedSurface
    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    n: np.ndarray
    kappa1: float
    kappa2: float
    radius: float
    aligned: bool = True

    def height(self, w):
        w = np.asarray(w, dtype=float)
        if np.linalg.norm(w) > self.radius:
            raise ValueError("chart coordinates outside chart radius")
        base = self.origin + w[0] * self.e1 + w[1] * self.e2
        t = -0.5 * (self.kappa1 * w[0] ** 2 + self.kappa2 * w[1] ** 2)
        scale = np.linalg.norm(self.origin)
        for _ in range(60):
            p = base + t * self.n
            g = self.surface.implicit_value(p)
            if abs(g) < 1e-14 * max(1.0, scale):
                return t
            dg = self.surface.implicit_gradient(p) @ self.n
            if dg <= 0.0:
                break
            t -= g / dg
        return self._height_bisect(base, scale)

    def _height_bisect(self, base, scale):
        span = 0.9 * max(1.0, scale)
        f = lambda t: self.surface.implicit_value(base + t * self.n)
        lo, hi = -span, span
        if f(lo) * f(hi) > 0.0:
            raise ValueError("chart ray does not cross the surface")
        return brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)

    def surface_point(self, w):
        w = np.asarray(w, dtype=float)
        return self.origin + w[0] * self.e1 + w[1] * self.e2 + self.height(w) * self.n

    def height_gradient(self, w):
        """grad F(w) from the implicit surface function."""
        q = self.surface_point(w)
        g = self.surface.implicit_gradient(q)
        gn = g @ self.n
        return -np.array([g @ self.e1, g @ self.e2]) / gn

    def normal_at(self, w):
        return self.surface.normal(self.surface_point(w))


def c_chart(surface, theta, phi, radius=None):
    """Curvature-aligned chart at the parameter point (theta, phi)."""
    k1, k2, e1, e2, n = principal_curvatures(surface, theta, phi)
    origin = surface.position(theta, phi)
    if radius is None:
        kmax = max(abs(k1), abs(k2), 1.0 / max(np.linalg.norm(origin), 1e-12))
        radius = 0.45 / kmax
    chart = CCoordinateChart(
        surface=surface,
        origin=origin,
        e1=e1,
        e2=e2,
        n=n,
        kappa1=float(k1),
        kappa2=float(k2),
        radius=float(radius),
        aligned=True,
    )
    if abs(chart.height(np.zeros(2))) > 1e-10 * max(1.0, np.linalg.norm(origin)):
        raise ValueError("chart origin is off the surface")
    return chart


def _loewdin_frame(e1, e2, n_new):
    """Symmetric orthonormalization of the projections of e1, e2 onto
    the plane orthogonal to n_new; unique and frame covariant."""
    p1 = e1 - (e1 @ n_new) * n_new
    p2 = e2 - (e2 @ n_new) * n_new
    m = np.array([[p1 @ p1, p1 @ p2], [p1 @ p2, p2 @ p2]])
    vals, vecs = np.linalg.eigh(m)
    if vals[0] <= 1e-12:
        raise ValueError("frame transport degenerate: normals nearly opposite")
    inv_sqrt = vecs @ np.diag(vals ** -0.5) @ vecs.T
    f1 = inv_sqrt[0, 0] * p1 + inv_sqrt[1, 0] * p2
    f2 = inv_sqrt[0, 1] * p1 + inv_sqrt[1, 1] * p2
    return f1, f2


def consistent_chart(surface, base, w):
    """Chart at the nearby point with chart coordinates w in base.

    The frame at the new point is the Loewdin orthonormalization of
    the parallel-projected base frame, which agrees with the base
    frame to second order in |w|.  Returns (chart, dz, u) where dz is
    the 2x2 Jacobian of the coordinate change (rows: new frame,
    columns: base coordinates) and u the 3x3 orthogonal frame change
    matrix u_ij = base_i . new_j.
    """
    w = np.asarray(w, dtype=float)
    q = base.surface_point(w)
    n_new = surface.normal(q)
    f1, f2 = _loewdin_frame(base.e1, base.e2, n_new)
    grad_f = base.height_gradient(w)
    d1 = base.e1 + grad_f[0] * base.n
    d2 = base.e2 + grad_f[1] * base.n
    dz = np.array([[f1 @ d1, f1 @ d2], [f2 @ d1, f2 @ d2]])
    r_base = np.column_stack([base.e1, base.e2, base.n])
    r_new = np.column_stack([f1, f2, n_new])
    u = r_base.T @ r_new
    theta = math.acos(max(-1.0, min(1.0, q[2] / np.linalg.norm(q))))
    phi = math.atan2(q[1], q[0])
    k1, k2, _, _, _ = principal_curvatures(surface, theta, phi)
    chart = CCoordinateChart(
        surface=surface,
        origin=q,
        e1=f1,
        e2=f2,
        n=n_new,
        kappa1=float(k1),
        kappa2=float(k2),
        radius=base.radius,
        aligned=False,
    )
    return chart, dz, u


@dataclass(frozen=True)
class SurfaceQuadrature:
    """Nodes, weights, normals and parameters of a product rule."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    params: np.ndarray

    @property
    def size(self):
        return self.points.shape[0]


def surface_quadrature(surface, n):
    """Gauss-Legendre (cos theta) x trapezoid (phi) surface rule.

    n Gauss nodes in cos theta and 2n equispaced phi nodes; exact for
    smooth integrands to spectral accuracy on the supported kinds.
    Weights include the area element, so weights.sum() approximates
    the total surface area.
    """
    if n < 4:
        raise ValueError("need at least 4 latitude nodes")
    xs, ws = leggauss(n)
    phis = 2.0 * np.pi * np.arange(2 * n) / (2 * n)
    wphi = 2.0 * np.pi / (2 * n)
    pts, wts, nrms, prms = [], [], [], []
    for x, wg in zip(xs, ws):
        theta = math.acos(x)
        st = math.sin(theta)
        for phi in phis:
            jet = surface.jet(theta, phi)
            pts.append(jet["x"])
            wts.append(wg * wphi * jet["area"] / st)
            nrms.append(jet["normal"])
            prms.append((theta, phi))
    return SurfaceQuadrature(
        points=np.array(pts),
        weights=np.array(wts),
        normals=np.array(nrms),
        params=np.array(prms),
    )
