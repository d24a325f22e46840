"""Airy function, Airy kernels and the GUE Tracy–Widom distribution.

Ai and Ai' are evaluated in two regimes.  For ``|x| < 8`` a Taylor series of
the Airy equation is re-expanded around tabulated centres spaced 0.25 apart;
the centre values come from the Maclaurin series summed in 50-digit decimal
arithmetic at import, so no cancellation reaches double precision.  For
``|x| >= 8`` the classical asymptotic expansions are summed to their smallest
term.  Both regimes are accurate to about 1e-14 absolute at the switchover.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext
from functools import lru_cache

import numpy as np

from .errors import RangeError

AIRY_RANGE = 200.0
SWITCH = 8.0
_CENTRE_STEP = 0.25
_TAYLOR_ORDER = 24
_ASYMPTOTIC_TERMS = 40

# Ai(0), Ai'(0) to 45 digits.
_AI0 = "0.355028053887817239260063186004183176397979174"
_AIP0 = "-0.258819403792806798405183560189203963479091138"

KAPPA = (1.5 * math.pi) ** (2.0 / 3.0)


def _maclaurin_decimal(x: float, digits: int = 50) -> tuple[float, float]:
    """Ai(x), Ai'(x) from the Maclaurin series in high-precision decimal."""
    with localcontext() as ctx:
        ctx.prec = digits
        X = Decimal(x)
        a0, a1 = Decimal(_AI0), Decimal(_AIP0)
        # y = sum c_n x^n with c_{n+3} = c_n / ((n+2)(n+3)); c_2 = 0 so every
        # third coefficient vanishes and convergence is judged over 3 terms
        c = [a0, a1, Decimal(0)]
        xp = [Decimal(1), X, X * X]
        y = a0 + a1 * X
        dy = a1
        tiny = Decimal(10) ** (-digits + 5)
        recent = []
        m = 3
        while True:
            cm = c[m - 3] / ((m - 1) * m)
            c.append(cm)
            xp.append(xp[-1] * X)
            term = cm * xp[m]
            dterm = m * cm * xp[m - 1]
            y += term
            dy += dterm
            recent = (recent + [max(abs(term), abs(dterm))])[-3:]
            if m > 30 and max(recent) < tiny:
                break
            m += 1
        return float(y), float(dy)


@lru_cache(maxsize=None)
def _centre_table():
    centres = np.arange(-SWITCH - _CENTRE_STEP, SWITCH + 2 * _CENTRE_STEP, _CENTRE_STEP)
    vals = np.array([_maclaurin_decimal(float(c)) for c in centres])
    return centres, vals[:, 0], vals[:, 1]


def _taylor(x):
    centres, ai_c, aip_c = _centre_table()
    idx = np.rint((x - centres[0]) / _CENTRE_STEP).astype(int)
    c = centres[idx]
    h = x - c
    # Taylor coefficients of the Airy equation y'' = x y around c
    a = [ai_c[idx], aip_c[idx], 0.5 * c * ai_c[idx]]
    for n in range(1, _TAYLOR_ORDER - 1):
        a.append((c * a[n] + a[n - 1]) / ((n + 2) * (n + 1)))
    y = np.zeros_like(x)
    dy = np.zeros_like(x)
    for n in range(_TAYLOR_ORDER, 0, -1):
        y = y * h + a[n]
        dy = dy * h + n * a[n]
    y = y * h + a[0]
    return y, dy


@lru_cache(maxsize=None)
def _asymptotic_coefficients():
    u = [1.0]
    for k in range(1, 2 * _ASYMPTOTIC_TERMS + 2):
        # u_k = u_{k-1} (6k-5)(6k-3)(6k-1) / ((2k-1) 216 k)
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    u = np.array(u)
    k = np.arange(u.size)
    v = u.copy()
    v[1:] = -(6 * k[1:] + 1) / (6 * k[1:] - 1) * u[1:]
    return u, v


def _series_to_smallest(coef, zeta_inv, signs):
    """Sum ``signs_k coef_k zeta^-k`` stopping before terms start growing."""
    total = np.zeros_like(zeta_inv)
    term_prev = np.full_like(zeta_inv, np.inf)
    active = np.ones(zeta_inv.shape, dtype=bool)
    power = np.ones_like(zeta_inv)
    for k in range(coef.size):
        term = coef[k] * power
        active &= np.abs(term) < np.abs(term_prev)
        total = np.where(active, total + signs[k] * term, total)
        term_prev = term
        power = power * zeta_inv
    return total


def _asymptotic_positive(x):
    u, v = _asymptotic_coefficients()
    zeta = 2.0 / 3.0 * x ** 1.5
    alt = (-1.0) ** np.arange(u.size)
    su = _series_to_smallest(u, 1.0 / zeta, alt)
    sv = _series_to_smallest(v, 1.0 / zeta, alt)
    pre = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    return pre * x ** -0.25 * su, -pre * x ** 0.25 * sv


def _asymptotic_negative(x):
    """Ai(-x), Ai'(-x) for x >= SWITCH."""
    u, v = _asymptotic_coefficients()
    zeta = 2.0 / 3.0 * x ** 1.5
    zi2 = zeta ** -2.0
    kk = np.arange(u.size // 2)
    alt = (-1.0) ** kk
    ue, uo = u[0::2][: kk.size], u[1::2][: kk.size]
    ve, vo = v[0::2][: kk.size], v[1::2][: kk.size]
    # even/odd subseries in zeta^-2, odd ones carry one extra zeta^-1
    s_ue = _series_to_smallest(ue, zi2, alt)
    s_uo = _series_to_smallest(uo, zi2, alt) / zeta
    s_ve = _series_to_smallest(ve, zi2, alt)
    s_vo = _series_to_smallest(vo, zi2, alt) / zeta
    # phase in extended precision: zeta reaches ~1900 on the supported range
    xl = x.astype(np.longdouble)
    phase = np.longdouble(2) / 3 * xl * np.sqrt(xl) - np.pi / np.longdouble(4)
    cph, sph = np.cos(phase).astype(float), np.sin(phase).astype(float)
    ai = (cph * s_ue + sph * s_uo) / (math.sqrt(math.pi) * x ** 0.25)
    aip = x ** 0.25 * (sph * s_ve - cph * s_vo) / math.sqrt(math.pi)
    return ai, aip


def airy_pair(x):
    """Return ``(Ai(x), Ai'(x))`` elementwise for ``|x| <= 200``."""
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if not np.all(np.abs(xa) <= AIRY_RANGE):
        bad = xa[~(np.abs(xa) <= AIRY_RANGE)][0]
        raise RangeError(f"Airy evaluation outside [-{AIRY_RANGE}, {AIRY_RANGE}]: {bad}")
    ai = np.empty_like(xa)
    aip = np.empty_like(xa)
    mid = np.abs(xa) < SWITCH
    if mid.any():
        ai[mid], aip[mid] = _taylor(xa[mid])
    pos = xa >= SWITCH
    if pos.any():
        ai[pos], aip[pos] = _asymptotic_positive(xa[pos])
    neg = xa <= -SWITCH
    if neg.any():
        ai[neg], aip[neg] = _asymptotic_negative(-xa[neg])
    if scalar:
        return float(ai[0]), float(aip[0])
    return ai, aip


def airy_ai(x):
    return airy_pair(x)[0]


def airy_ai_prime(x):
    return airy_pair(x)[1]


# ---------------------------------------------------------------- kernels

_NEAR_DIAGONAL = 1e-5


def kernel_eval(x, y):
    """Equal-time Airy kernel ``K(x, y) = int_0^inf Ai(x+l) Ai(y+l) dl``.

    Uses the Christoffel–Darboux form, switching to the diagonal value at the
    midpoint when ``|x - y| < 1e-5`` to avoid the 0/0 cancellation.
    """
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    scalar = xa.ndim == 0
    xa, ya = np.atleast_1d(xa).ravel(), np.atleast_1d(ya).ravel()
    ax, apx = airy_pair(xa)
    ay, apy = airy_pair(ya)
    d = xa - ya
    near = np.abs(d) < _NEAR_DIAGONAL
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (ax * apy - apx * ay) / d
    if near.any():
        m = 0.5 * (xa[near] + ya[near])
        am, apm = airy_pair(m)
        out[near] = apm * apm - m * am * am
    out = out.reshape(np.shape(np.broadcast_arrays(np.asarray(x), np.asarray(y))[0]))
    return float(out) if scalar else out


def kernel_diagonal(x):
    a, ap = airy_pair(x)
    return ap * ap - np.asarray(x) * a * a


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def composite_gauss(a: float, b: float, panel: float, order: int = 20):
    """Nodes and weights of panel-wise Gauss–Legendre on ``[a, b]``."""
    n_panels = max(1, int(math.ceil((b - a) / panel)))
    edges = np.linspace(a, b, n_panels + 1)
    g, w = _gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# Ai(u) < 1e-19 for u >= 14; the products below are negligible past this.
_DECAY_EDGE = 14.0


def kernel_quadrature(x, y, panel: float = 0.25, order: int = 20, tail: float = _DECAY_EDGE):
    """``K(x, y)`` by direct quadrature of ``int_0^inf Ai(x+l) Ai(y+l) dl``."""
    xa, ya = np.broadcast_arrays(np.atleast_1d(np.asarray(x, dtype=float)),
                                 np.atleast_1d(np.asarray(y, dtype=float)))
    out = np.empty(xa.shape)
    for idx in np.ndindex(xa.shape):
        xi, yi = xa[idx], ya[idx]
        upper = max(tail - min(xi, yi), 1.0)
        lam, w = composite_gauss(0.0, upper, panel, order)
        out[idx] = np.dot(w, airy_ai(xi + lam) * airy_ai(yi + lam))
    return out if np.ndim(x) or np.ndim(y) else float(out[0])


def extended_kernel_eval(x: float, s: float, y: float, t: float, tol: float = 1e-10,
                         panel: float = 0.25, order: int = 20, tail_scale: float = 1.0) -> float:
    """Extended Airy kernel ``K((x, s); (y, t))`` by quadrature.

    For ``s >= t`` the integrand decays super-exponentially past
    ``lambda = 14 - min(x, y)``.  For ``s < t`` it only decays like
    ``exp(-mu (t - s)) / sqrt(mu)``; the truncation point is chosen so the
    neglected tail is below ``tol``, and a :class:`RangeError` is raised when
    that would require Airy arguments below -200 (``t - s`` too small for the
    given ``x, y``).  ``tail_scale > 1`` lengthens the truncation, which is
    how self-consistency is checked.
    """
    tau = s - t
    if tau >= 0:
        upper = max(_DECAY_EDGE - min(x, y), 1.0) * tail_scale
        if tau > 0:
            upper = min(upper, max(-math.log(tol) / tau, 1.0) * tail_scale)
        lam, w = composite_gauss(0.0, upper, panel, order)
        return float(np.dot(w, np.exp(-lam * tau) * airy_ai(x + lam) * airy_ai(y + lam)))
    tau = -tau
    # tail bound: int_M^inf e^{-mu tau} / (pi sqrt(mu)) dmu <= e^{-M tau} / (pi tau sqrt(M))
    upper = 1.0
    while math.exp(-upper * tau) / (math.pi * tau * math.sqrt(upper)) > tol:
        upper *= 1.25
    upper *= tail_scale
    if max(x, y) - upper < -AIRY_RANGE:
        raise RangeError(
            f"extended kernel with t - s = {tau:g} needs Airy arguments down to "
            f"{max(x, y) - upper:.1f}; supported range is >= -{AIRY_RANGE:g}")
    upper = min(upper, AIRY_RANGE + min(x, y))
    mu, w = composite_gauss(0.0, upper, panel, order)
    return float(-np.dot(w, np.exp(-mu * tau) * airy_ai(x - mu) * airy_ai(y - mu)))


# ---------------------------------------------------------------- Tracy–Widom

TW_RANGE = (-10.0, 6.0)


class KernelEvaluator:
    """Nyström discretisation of the Airy kernel on ``(s, cutoff)``.

    ``det(I - K)`` restricted to ``(s, inf)`` is the GUE Tracy–Widom CDF.  The
    half-line is truncated at ``domain_cutoff``; past it the kernel is below
    1e-40.  Airy values at the quadrature nodes are cached per ``s``.
    """

    def __init__(self, quadrature_order: int = 64, domain_cutoff: float = 16.0):
        self.quadrature_order = int(quadrature_order)
        self.domain_cutoff = float(domain_cutoff)
        self._cache: dict[float, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def nodes(self, s: float):
        s = float(s)
        hit = self._cache.get(s)
        if hit is None:
            g, w = _gauss_legendre(self.quadrature_order)
            half = 0.5 * (self.domain_cutoff - s)
            x = s + half * (g + 1.0)
            sw = np.sqrt(half * w)
            ai, aip = airy_pair(x)
            hit = (x, sw, np.stack([ai, aip]))
            if len(self._cache) < 4096:
                self._cache[s] = hit
        return hit

    def operator(self, s: float) -> np.ndarray:
        x, sw, (ai, aip) = self.nodes(s)
        d = x[:, None] - x[None, :]
        np.fill_diagonal(d, 1.0)
        k = (ai[:, None] * aip[None, :] - aip[:, None] * ai[None, :]) / d
        np.fill_diagonal(k, aip * aip - x * ai * ai)
        return sw[:, None] * k * sw[None, :]

    def fredholm_det(self, s: float) -> float:
        if not self.domain_cutoff > s:
            return 1.0
        m = np.eye(self.quadrature_order) - self.operator(s)
        return float(np.linalg.det(m))


_DEFAULT_EVALUATOR = KernelEvaluator()


def tracy_widom_cdf(s, evaluator: KernelEvaluator | None = None):
    """GUE Tracy–Widom distribution function ``F_2(s)`` for ``s`` in [-10, 6]."""
    ev = evaluator or _DEFAULT_EVALUATOR
    sa = np.asarray(s, dtype=float)
    lo, hi = TW_RANGE
    if not np.all((sa >= lo) & (sa <= hi)):
        raise RangeError(f"tracy_widom_cdf supports s in [{lo}, {hi}]")
    out = np.array([ev.fredholm_det(v) for v in np.atleast_1d(sa).ravel()])
    out = np.clip(out, 0.0, 1.0).reshape(np.shape(sa))
    return float(out) if sa.ndim == 0 else out


def tracy_widom_cdf_clipped(s, evaluator: KernelEvaluator | None = None):
    """``F_2`` extended by 0 below -10 and by 1 above 6, where it is within 1e-6 of those values."""
    sa = np.atleast_1d(np.asarray(s, dtype=float))
    lo, hi = TW_RANGE
    out = np.where(sa > hi, 1.0, 0.0)
    inside = (sa >= lo) & (sa <= hi)
    if inside.any():
        out[inside] = tracy_widom_cdf(sa[inside], evaluator)
    return out if np.ndim(s) else float(out[0])


@lru_cache(maxsize=8)
def _tw_table(step: float, order: int):
    n = int(round((TW_RANGE[1] - TW_RANGE[0]) / step))
    grid = np.linspace(TW_RANGE[0], TW_RANGE[1], n + 1)
    return grid, tracy_widom_cdf(grid, KernelEvaluator(order))


def tracy_widom_interp(s, step: float = 0.01, order: int = 64):
    """Fast ``F_2`` for bulk use: linear interpolation of a tabulated grid.

    Interpolation error is below 1e-5, far under Monte Carlo resolution.  Values
    outside [-10, 6] clip to 0 and 1.
    """
    grid, f = _tw_table(step, order)
    return np.interp(s, grid, f, left=0.0, right=1.0)


def tracy_widom_moments(evaluator: KernelEvaluator | None = None, panels: int = 32,
                        order: int = 16) -> tuple[float, float]:
    """Mean and variance of ``F_2`` from ``E X = int (1[s>0] - F)`` and its square analogue."""
    ev = evaluator or KernelEvaluator()
    lo, hi = TW_RANGE
    neg, wn = composite_gauss(lo, 0.0, -lo / panels, order)
    pos, wp = composite_gauss(0.0, hi, hi / panels, order)
    fn = np.array([ev.fredholm_det(v) for v in neg])
    sf = 1.0 - np.array([ev.fredholm_det(v) for v in pos])
    mean = np.dot(wp, sf) - np.dot(wn, fn)
    second = 2.0 * np.dot(wp, pos * sf) + 2.0 * np.dot(wn, -neg * fn)
    return float(mean), float(second - mean * mean)


# ---------------------------------------------------------------- counting

def expected_count(a):
    """Leading-order mean number of Airy points above ``-a``: ``2 a_+^{3/2} / (3 pi)``."""
    ap = np.maximum(np.asarray(a, dtype=float), 0.0)
    out = 2.0 * ap ** 1.5 / (3.0 * math.pi)
    return float(out) if out.ndim == 0 else out


def expected_count_exact(a: float, cutoff: float = 16.0, panel: float = 0.25) -> float:
    """``int_{-a}^{cutoff} K(x, x) dx``: the exact Airy-process mean of ``N_a``."""
    x, w = composite_gauss(-float(a), cutoff, panel)
    return float(np.dot(w, kernel_diagonal(x)))


def pair_correlation(x, y):
    """Two-point density ``K(x,x)K(y,y) - K(x,y)^2`` of the Airy point process."""
    return kernel_diagonal(x) * kernel_diagonal(y) - kernel_eval(x, y) ** 2


def expected_close_pairs(a: float, ell: float, delta: float, panel: float = 0.25,
                         order: int = 12) -> float:
    """Mean number of point pairs inside ``[-a, -a + ell]`` at distance ``<= delta``.

    Each such pair contributes two jammed points, so for small ``delta`` twice
    this is the mean jammed count up to boundary effects of order ``delta``.
    """
    if delta <= 0:
        return 0.0
    lo = -float(a)
    u, wu = composite_gauss(0.0, float(delta), delta, order)
    total = 0.0
    for ui, wi in zip(u, wu):
        x, wx = composite_gauss(lo, lo + ell - ui, panel, order)
        total += wi * np.dot(wx, pair_correlation(x, x + ui))
    return float(total)
