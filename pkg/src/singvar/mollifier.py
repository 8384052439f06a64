"""Compactly supported even kernels with vanishing moments, and the
convolution embeddings of Heaviside / Dirac / piecewise data they induce.

The kernel is psi(x) = p(x) * bump(x) with p an even polynomial fixed by the
linear moment system int x^{2k} psi = delta_{k0}, k = 0..j/2, and
bump(x) = exp(-1/(1-x^2)) on (-1, 1).  Scaling psi by b_eps = rho_eps^{-a}
turns a jump or a point mass into a smooth profile of width 2/b_eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, ConstructionError, ValidationError
from .gauge import Gauge

# Number of panels in the precomputed primitive table of psi.
_PRIMITIVE_PANELS = 4096
# Gauss-Legendre order used for moment integrals and per-panel quadrature.
_GL_ORDER = 64


def bump(x):
    """exp(-1/(1-x^2)) inside (-1, 1), exactly zero outside."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out[0] if scalar else out


def _gl_nodes(a: float, b: float, order: int = _GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


@dataclass(frozen=True)
class MollifierSpec:
    """An even vanishing-moment kernel plus the gauge scaling b_eps = rho_eps^-a."""

    moment_order: int
    poly_coeffs: np.ndarray          # coefficients of p(x) = sum c_k x^(2k)
    scale_exponent: float = 0.5
    support_radius: float = 1.0      # fixed by construction
    left_mass: float = 0.5           # int_{-inf}^0 psi, forced by evenness
    # primitive table: _grid (panel edges on [-1,1]) and _cum (= int_{-1}^t psi)
    _grid: np.ndarray = field(repr=False, default=None)
    _cum: np.ndarray = field(repr=False, default=None)
    _rev_coeffs: tuple = field(repr=False, default=())

    def psi(self, x):
        """Kernel profile on the unscaled variable."""
        x = np.asarray(x, dtype=float)
        p = np.zeros_like(x)
        for c in self.poly_coeffs[::-1]:
            p = p * x * x + c
        return p * bump(x)

    def psi_scalar(self, x: float) -> float:
        """Float-only kernel evaluation for tight inner loops."""
        if x <= -1.0 or x >= 1.0:
            return 0.0
        x2 = x * x
        p = 0.0
        for c in self._rev_coeffs:
            p = p * x2 + c
        return p * math.exp(-1.0 / (1.0 - x2))

    def primitive_scalar(self, t: float) -> float:
        """Float-only primitive lookup (cubic Hermite on the table)."""
        if t <= -1.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        grid = self._grid
        h = grid[1] - grid[0]
        idx = int((t - grid[0]) / h)
        if idx < 0:
            idx = 0
        elif idx > len(grid) - 2:
            idx = len(grid) - 2
        t0 = grid[idx]
        s = (t - t0) / h
        y0 = self._cum[idx]
        y1 = self._cum[idx + 1]
        d0 = self.psi_scalar(t0) * h
        d1 = self.psi_scalar(t0 + h) * h
        s2 = s * s
        h00 = (1 + 2 * s) * (1 - s) * (1 - s)
        h10 = s * (1 - s) * (1 - s)
        h01 = s2 * (3 - 2 * s)
        h11 = s2 * (s - 1)
        return h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1

    def psi_at_zero(self) -> float:
        return float(self.poly_coeffs[0] * math.exp(-1.0))

    def b(self, gauge: Gauge, eps: float) -> float:
        """Layer sharpness b_eps = rho_eps^{-scale_exponent}."""
        return float(gauge.rho(eps)) ** (-self.scale_exponent)

    def primitive(self, t):
        """int_{-1}^t psi(s) ds via the precomputed table (cubic Hermite)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.empty_like(t)
        below = t <= -1.0
        above = t >= 1.0
        out[below] = 0.0
        out[above] = 1.0
        mid = ~(below | above)
        if np.any(mid):
            tm = t[mid]
            h = self._grid[1] - self._grid[0]
            idx = np.clip(((tm - self._grid[0]) / h).astype(int), 0,
                          len(self._grid) - 2)
            t0 = self._grid[idx]
            s = (tm - t0) / h
            y0, y1 = self._cum[idx], self._cum[idx + 1]
            d0, d1 = self.psi(t0) * h, self.psi(t0 + h) * h
            h00 = (1 + 2 * s) * (1 - s) ** 2
            h10 = s * (1 - s) ** 2
            h01 = s * s * (3 - 2 * s)
            h11 = s * s * (s - 1)
            out[mid] = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
        return float(out[0]) if scalar else out


def build_mollifier(j: int, scale_exponent: float = 0.5) -> MollifierSpec:
    """Solve the even moment system for the kernel of vanishing order j.

    j must be even with 2 <= j <= 12; odd moments vanish identically by
    evenness, so only int x^{2k} psi = delta_{k0} for k = 0..j/2 is imposed.
    """
    if j % 2 != 0 or not (2 <= j <= 12):
        raise ValidationError("moment order j must be even with 2 <= j <= 12")
    if scale_exponent <= 0.0:
        raise ValidationError("scale exponent must be positive")
    n = j // 2 + 1
    # mu[m] = int_{-1}^{1} x^{2m} bump(x) dx, by symmetry twice the half integral
    xs, ws = _gl_nodes(0.0, 1.0, 2 * _GL_ORDER)
    bx = bump(xs)
    mu = np.array([2.0 * np.sum(ws * xs ** (2 * m) * bx) for m in range(2 * n - 1)])
    M = np.array([[mu[k + l] for l in range(n)] for k in range(n)])
    rhs = np.zeros(n)
    rhs[0] = 1.0
    try:
        coeffs = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError(f"moment matrix singular for j={j}") from exc
    residual = np.max(np.abs(M @ coeffs - rhs))
    if residual > 1e-9:
        raise ConstructionError(
            f"moment system solved poorly for j={j} (residual {residual:.2e})")
    spec = MollifierSpec(moment_order=j, poly_coeffs=coeffs,
                         scale_exponent=scale_exponent)
    object.__setattr__(spec, "_rev_coeffs", tuple(float(c) for c in coeffs[::-1]))
    grid, cum = _build_primitive_table(spec)
    object.__setattr__(spec, "_grid", grid)
    object.__setattr__(spec, "_cum", cum)
    return spec


def _build_primitive_table(spec: MollifierSpec):
    edges = np.linspace(-1.0, 1.0, _PRIMITIVE_PANELS + 1)
    panel = np.zeros(_PRIMITIVE_PANELS)
    gx, gw = np.polynomial.legendre.leggauss(10)
    for i in range(_PRIMITIVE_PANELS):
        a, b = edges[i], edges[i + 1]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        panel[i] = half * np.sum(gw * spec.psi(mid + half * gx))
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    return edges, cum


def delta_at(m: MollifierSpec, gauge: Gauge, eps: float, x: float) -> float:
    """Point-mass profile b * psi(b x)."""
    b = m.b(gauge, eps)
    return b * m.psi_scalar(b * x)


def heaviside_at(m: MollifierSpec, gauge: Gauge, eps: float, x: float) -> float:
    """Smoothed jump int_{-1}^{b x} psi, exactly 0/1 outside the layer."""
    b = m.b(gauge, eps)
    return m.primitive_scalar(b * x)


def delta_compose_delta(m: MollifierSpec, gauge: Gauge, eps: float, x: float) -> float:
    """Self-composition b * psi(b^2 psi(b x)); stays closed in the calculus."""
    b = m.b(gauge, eps)
    inner = m.psi_scalar(b * x)
    return b * m.psi_scalar(b * b * inner)


@dataclass(frozen=True)
class PiecewisePoly:
    """1-D piecewise-polynomial data: breakpoints plus a callable evaluator."""

    breakpoints: tuple[float, ...]
    fn: callable

    def __call__(self, x):
        return self.fn(x)


def embed_piecewise(m: MollifierSpec, f, gauge: Gauge, eps: float, x: float,
                    tol: float = 1e-10) -> float:
    """(f * psi_eps^b)(x) = int_{-1}^{1} f(x - u/b) psi(u) du.

    f may be a plain callable (treated as smooth) or a PiecewisePoly, whose
    breakpoints force panel splits so Gauss panels never straddle a kink.
    The Gauss value is cross-checked against a refined panel split; failure
    to agree within tol raises AccuracyError with the achieved estimate.
    """
    b = m.b(gauge, eps)
    splits = [-1.0, 1.0]
    if isinstance(f, PiecewisePoly):
        for t in f.breakpoints:
            u = b * (x - t)
            if -1.0 < u < 1.0:
                splits.append(u)
    splits = sorted(set(splits))

    def gauss(n_sub):
        total = 0.0
        for lo, hi in zip(splits[:-1], splits[1:]):
            sub = np.linspace(lo, hi, n_sub + 1)
            for a2, b2 in zip(sub[:-1], sub[1:]):
                us, ws = _gl_nodes(a2, b2, 32)
                vals = np.array([float(f(x - u / b)) for u in us])
                total += float(np.sum(ws * vals * m.psi(us)))
        return total

    coarse = gauss(4)
    fine = gauss(8)
    err = abs(fine - coarse)
    if err > max(tol, 1e-13 * max(1.0, abs(fine))):
        raise AccuracyError(
            f"convolution quadrature stalled at error {err:.2e}", achieved=err)
    return fine
