"""Linearized stability of constant-speed wavefront profiles.

Linearizing the delayed pair along a constant-speed profile gives the
characteristic function

    chi(lambda) = lambda^2 + alpha*lambda + beta*(1 - exp(-lambda)),

with ``alpha = -h`` and ``beta = h^2 V'(c)``.  Zero is always a root (the
model is invariant under position shifts).  In the (alpha, beta) quadrant
``alpha <= 0 <= beta`` there is a region S where every other root has
negative real part; its boundary consists of the segment on the beta axis
up to pi^2/2, the diagonal ``beta = -alpha`` down to (-2, 2), and the curve
C1 parametrized by ``nu in (0, pi)``:

    alpha = -nu / tan(nu/2),   beta = nu^2 / (tan(nu/2)^2 (1 + cos nu)),

on which a simple pure imaginary pair ``+-i nu`` exists (the oscillatory,
Hopf-type boundary).  Branch-2 profiles always satisfy ``beta < -alpha``
and are unstable; branch-1 profiles are stable inside S and unstable
outside its closure.

Root counts are certified with the argument principle: the logarithmic
derivative of the zero-deflated function ``chi(lambda)/lambda`` is
integrated around rectangle boundaries with adaptively refined trapezoid
sums, cross-checked against the accumulated phase; rectangles are then
subdivided until each cell isolates one root, which Newton refinement
pins down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._scalar import bisect
from .errors import (
    BracketError,
    ConsistencyError,
    DomainError,
    NumericalError,
    ParameterError,
    RootFinderError,
)
from .ovf import OvfSpec
from .waves import BRANCH1, BRANCH2, DEGENERATE, WavefrontPoint, branch_eval

__all__ = [
    "INSIDE_S",
    "BOUNDARY_C1",
    "BOUNDARY_OTHER",
    "OUTSIDE_S",
    "STABLE",
    "UNSTABLE",
    "MARGINAL_HOPF",
    "UNDETERMINED",
    "StabilityParams",
    "StabilityVerdict",
    "char_eval",
    "char_deriv",
    "stability_params",
    "c1_boundary_beta",
    "c1_curve",
    "region_classify",
    "region_boundary_samples",
    "rightmost_roots",
    "classify_wavefront",
    "hopf_crossing",
]

INSIDE_S = "inside_S"
BOUNDARY_C1 = "boundary_C1"
BOUNDARY_OTHER = "boundary_other"
OUTSIDE_S = "outside_S"

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL_HOPF = "marginal_hopf"
UNDETERMINED = "undetermined"

_BETA_AXIS_TOP = math.pi * math.pi / 2.0
_BOUNDARY_TOL = 1e-9
_DEFAULT_RECT = (-0.5, 5.0, -30.0, 30.0)
_CHI_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class StabilityParams:
    """Characteristic-function parameters (alpha, beta) of one profile."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha > 0:
            raise DomainError(f"alpha must be <= 0, got {self.alpha}")
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class StabilityVerdict:
    """Region membership, rightmost roots, and the resulting classification."""

    params: StabilityParams
    region: str
    rightmost_roots: tuple
    classification: str


def char_eval(params: StabilityParams, lam):
    """chi(lambda) = lambda^2 + alpha*lambda + beta*(1 - exp(-lambda))."""
    lam = np.asarray(lam)
    out = lam * lam + params.alpha * lam + params.beta * (1.0 - np.exp(-lam))
    return out.item() if out.ndim == 0 else out


def char_deriv(params: StabilityParams, lam):
    """chi'(lambda) = 2*lambda + alpha + beta*exp(-lambda)."""
    lam = np.asarray(lam)
    out = 2.0 * lam + params.alpha + params.beta * np.exp(-lam)
    return out.item() if out.ndim == 0 else out


def stability_params(spec: OvfSpec, point: WavefrontPoint) -> StabilityParams:
    """Parameters (-h, h^2 V'(c)) of the linearization along a profile."""
    return StabilityParams(alpha=-point.h, beta=point.h**2 * float(spec.deriv(point.c)))


# -- the oscillatory boundary curve ---------------------------------------


def _c1_alpha(nu: float) -> float:
    # -nu/tan(nu/2), written with sin/cos so both endpoints stay accurate
    return -nu * math.cos(0.5 * nu) / math.sin(0.5 * nu)


def _c1_beta(nu: float) -> float:
    # nu^2/(tan^2(nu/2)*(1+cos nu)) simplifies to nu^2/(2 sin^2(nu/2))
    s = math.sin(0.5 * nu)
    return nu * nu / (2.0 * s * s)


def c1_curve(nu: float) -> tuple[float, float]:
    """The boundary-curve point (alpha, beta) at parameter ``nu`` in (0, pi)."""
    if not 0.0 < nu < math.pi:
        raise ParameterError(f"nu must lie in (0, pi), got {nu}")
    return _c1_alpha(nu), _c1_beta(nu)


def _c1_nu_from_alpha(alpha: float) -> float:
    """Invert the alpha coordinate; monotone increasing from -2 to 0."""
    return bisect(lambda nu: _c1_alpha(nu) - alpha, 1e-9, math.pi - 1e-9,
                  xtol=1e-15 * math.pi)


def c1_boundary_beta(alpha: float):
    """Beta coordinate of the oscillatory boundary above ``alpha``.

    Defined for alpha in [-2, 0] with limit values 2 at -2 and pi^2/2 at 0;
    returns None outside that interval.
    """
    if alpha < -2.0 or alpha > 0.0:
        return None
    # endpoint snaps: the curve parameter degenerates there and the limits
    # are exact; the curve's slope against alpha is 2 at the left end and
    # bounded at the right, so the snap error is far below any tolerance
    if alpha > -1e-11:
        return _BETA_AXIS_TOP
    if alpha < -2.0 + 1e-13:
        return 2.0
    return _c1_beta(_c1_nu_from_alpha(alpha))


def region_classify(params: StabilityParams, boundary_tol: float = _BOUNDARY_TOL) -> str:
    """Locate (alpha, beta) relative to the stability region.

    ``inside_S`` requires ``-2 < alpha < 0`` and ``-alpha < beta`` below the
    oscillatory boundary; points within ``boundary_tol`` of that curve are
    ``boundary_C1``; the two straight edges and their corners report
    ``boundary_other``; everything else is ``outside_S``.  Classification
    within the boundary tolerance is numerically meaningless, so callers
    near the curve should consult :func:`rightmost_roots` instead.
    """
    a, bt = params.alpha, params.beta
    if -2.0 - boundary_tol <= a <= 0.0:
        beta_c1 = c1_boundary_beta(min(0.0, max(-2.0, a)))
        if abs(bt - beta_c1) <= boundary_tol:
            return BOUNDARY_C1
    else:
        beta_c1 = None
    if abs(a) <= boundary_tol:
        return BOUNDARY_OTHER if bt <= _BETA_AXIS_TOP + boundary_tol else OUTSIDE_S
    if abs(bt + a) <= boundary_tol and a >= -2.0 - boundary_tol:
        return BOUNDARY_OTHER
    if -2.0 < a < 0.0 and -a < bt < beta_c1:
        return INSIDE_S
    return OUTSIDE_S


def region_boundary_samples(n: int = 200) -> list[tuple[str, float, float, float]]:
    """Labeled samples of the three boundary pieces: (curve, param, alpha, beta)."""
    if n < 2:
        raise ParameterError("n must be at least 2")
    rows = []
    for b in np.linspace(0.0, _BETA_AXIS_TOP, n):
        rows.append(("G0", float(b), 0.0, float(b)))
    for a in np.linspace(-2.0, 0.0, n):
        rows.append(("G1", float(a), float(a), float(-a)))
    for nu in np.linspace(1e-6, math.pi - 1e-6, n):
        rows.append(("C1", float(nu), _c1_alpha(nu), _c1_beta(nu)))
    return rows


# -- deflated characteristic function and winding counts -------------------


def _d_pair(alpha: float, beta: float, z):
    """Zero-deflated function D = chi/lambda and its derivative.

    ``D(z) = z + alpha + beta*(1 - exp(-z))/z`` with the removable
    singularity filled by series (D(0) = alpha + beta).
    """
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    ez = np.exp(-zs)
    e_ratio = (1.0 - ez) / zs
    e_ratio_d = (ez * (1.0 + zs) - 1.0) / (zs * zs)
    t = np.where(small, z, 0.0)
    series = 1.0 - t / 2.0 + t**2 / 6.0 - t**3 / 24.0 + t**4 / 120.0 - t**5 / 720.0
    series_d = -0.5 + t / 3.0 - t**2 / 8.0 + t**3 / 30.0 - t**4 / 144.0
    e_ratio = np.where(small, series, e_ratio)
    e_ratio_d = np.where(small, series_d, e_ratio_d)
    d = z + alpha + beta * e_ratio
    dp = 1.0 + beta * e_ratio_d
    return d, dp


def _rect_boundary(rect, m: int):
    a, b, c, d = rect
    corners = [complex(a, c), complex(b, c), complex(b, d), complex(a, d)]
    parts = []
    frac = np.arange(m) / m
    for p, q in zip(corners, corners[1:] + corners[:1]):
        parts.append(p + (q - p) * frac)
    parts.append(np.array([corners[0]]))
    return np.concatenate(parts)


def _winding(alpha: float, beta: float, rect, m_max: int = 8192) -> int:
    """Number of deflated roots inside a rectangle, certified two ways.

    The trapezoid sum of D'/D around the boundary must come out integer to
    1e-3 and agree with the accumulated phase of D, whose steps must all
    stay well below pi.  Raises :class:`RootFinderError` when a root sits
    too close to the contour for the count to converge.
    """
    m = 64
    while m <= m_max:
        poly = _rect_boundary(rect, m)
        dvals, dpvals = _d_pair(alpha, beta, poly)
        if np.min(np.abs(dvals)) == 0.0:
            raise RootFinderError("root on the counting contour")
        g = dpvals / dvals
        dz = np.diff(poly)
        quad = np.sum(0.5 * (g[:-1] + g[1:]) * dz) / (2j * math.pi)
        dphi = np.angle(dvals[1:] / dvals[:-1])
        n_phase = float(np.sum(dphi)) / (2.0 * math.pi)
        n_round = int(round(n_phase))
        if (
            np.max(np.abs(dphi)) < 1.4
            and abs(n_phase - n_round) < 1e-3
            and abs(quad.real - n_round) < 1e-3
            and abs(quad.imag) < 1e-3
        ):
            return n_round
        m *= 2
    raise RootFinderError(
        f"winding count did not converge on rectangle {rect}; "
        "a root may lie on the boundary"
    )


def _count_with_nudge(alpha: float, beta: float, rect):
    """Count roots, growing the rectangle slightly if the contour hits one."""
    a, b, c, d = rect
    w, hgt = b - a, d - c
    for bump in (0.0, 3.7e-3, 8.1e-3, 1.73e-2):
        r = (a - bump * w, b + bump * w, c - bump * hgt, d + bump * hgt)
        try:
            return _winding(alpha, beta, r), r
        except RootFinderError:
            continue
    raise RootFinderError(
        f"could not obtain a stable winding count near rectangle {rect}"
    )


def _newton_root(alpha: float, beta: float, rect):
    a, b, c, d = rect
    seeds = [
        complex(0.5 * (a + b), 0.5 * (c + d)),
        complex(0.65 * a + 0.35 * b, 0.5 * (c + d)),
        complex(0.35 * a + 0.65 * b, 0.5 * (c + d)),
        complex(0.5 * (a + b), 0.65 * c + 0.35 * d),
        complex(0.5 * (a + b), 0.35 * c + 0.65 * d),
    ]
    slack_re = 1e-9 * (1.0 + b - a)
    slack_im = 1e-9 * (1.0 + d - c)
    for z in seeds:
        polish = 0
        for _ in range(60):
            dval, dpval = _d_pair(alpha, beta, z)
            dval, dpval = dval.item(), dpval.item()
            if dpval == 0.0:
                break
            step = dval / dpval
            z = z - step
            if not (abs(z.real) < 1e6 and abs(z.imag) < 1e6):
                break
            if abs(step) <= 1e-13 * (1.0 + abs(z)):
                # two extra iterations push the residual to the rounding
                # floor, which the caller's |chi| check relies on
                polish += 1
                if polish >= 3:
                    if (a - slack_re <= z.real <= b + slack_re
                            and c - slack_im <= z.imag <= d + slack_im):
                        return z
                    break
    return None


def _split(rect, frac: float):
    a, b, c, d = rect
    if (b - a) >= (d - c):
        mid = a + (b - a) * frac
        return (a, mid, c, d), (mid, b, c, d)
    mid = c + (d - c) * frac
    return (a, b, c, mid), (a, b, mid, d)


def _locate(alpha: float, beta: float, rect, count: int, depth: int = 0) -> list[complex]:
    if count == 0:
        return []
    if depth > 64:
        raise RootFinderError("root subdivision exceeded maximum depth")
    if count == 1:
        root = _newton_root(alpha, beta, rect)
        if root is not None:
            return [root]
    # split, shifting the cut line if it lands on a root
    for frac in (0.5, 0.46, 0.57, 0.42, 0.61, 0.53):
        r1, r2 = _split(rect, frac)
        try:
            n1 = _winding(alpha, beta, r1)
            n2 = _winding(alpha, beta, r2)
        except RootFinderError:
            continue
        if n1 + n2 != count:
            continue
        return (
            _locate(alpha, beta, r1, n1, depth + 1)
            + _locate(alpha, beta, r2, n2, depth + 1)
        )
    raise RootFinderError(f"could not isolate roots in rectangle {rect}")


def rightmost_roots(params: StabilityParams, rect=None, max_roots: int = 64) -> list[complex]:
    """All characteristic roots in a rectangle, count-certified.

    The ever-present zero root is handled by deflation so it cannot
    contaminate counts of nearby roots; it is reported whenever the
    rectangle contains the origin.  Each returned root satisfies
    ``|chi(root)| <= 1e-10`` and non-real roots come in conjugate pairs.
    Roots are sorted by descending real part.

    Raises
    ------
    ParameterError
        For a malformed rectangle or a left edge at or below -20.
    RootFinderError
        When located roots cannot be reconciled with the winding count.
    """
    if rect is None:
        rect = _DEFAULT_RECT
    a, b, c, d = (float(x) for x in rect)
    if not (a < b and c < d):
        raise ParameterError(f"malformed search rectangle {rect}")
    if a <= -20.0:
        raise ParameterError("rectangle left edge must exceed -20")
    alpha, beta = params.alpha, params.beta

    count, used = _count_with_nudge(alpha, beta, (a, b, c, d))
    include_zero = a < 0.0 < b and c < 0.0 < d
    if count + (1 if include_zero else 0) > max_roots:
        raise RootFinderError(f"{count} roots exceed max_roots={max_roots}")
    roots = _locate(alpha, beta, used, count)
    if len(roots) != count:
        raise RootFinderError(
            f"located {len(roots)} roots but the winding count is {count}"
        )

    cleaned = []
    for z in roots:
        if abs(z.imag) <= 1e-9 * (1.0 + abs(z)):
            z = complex(z.real, 0.0)
        if abs(z) <= 1e-9:
            z = complex(0.0, 0.0)
        cleaned.append(z)
    if include_zero:
        cleaned.append(complex(0.0, 0.0))

    # keep roots inside the requested rectangle, restore missing conjugates
    slack_re = 1e-9 * (1.0 + b - a)
    slack_im = 1e-9 * (1.0 + d - c)

    def _inside(z):
        return (a - slack_re <= z.real <= b + slack_re
                and c - slack_im <= z.imag <= d + slack_im)

    final: list[complex] = []

    def _push(z):
        for w in final:
            if abs(z - w) <= 1e-9 * (1.0 + abs(z)):
                return
        final.append(z)

    for z in cleaned:
        if _inside(z):
            _push(z)
            if z.imag != 0.0 and _inside(z.conjugate()):
                _push(z.conjugate())

    for z in final:
        if z != 0.0:
            resid = abs(char_eval(params, z))
            if resid > _CHI_RESIDUAL_TOL:
                raise RootFinderError(
                    f"root {z} has characteristic residual {resid}"
                )
    final.sort(key=lambda z: (-z.real, abs(z.imag), z.imag))
    return final


# -- classification ---------------------------------------------------------


def classify_wavefront(spec: OvfSpec, point: WavefrontPoint) -> StabilityVerdict:
    """Stability verdict for one constant-speed profile.

    Branch-2 profiles are always unstable.  Branch-1 profiles follow the
    region: stable inside, unstable outside, marginal on the oscillatory
    boundary.  Degenerate (tangency) points are reported as undetermined:
    the zero root is then multiple and neither verdict can be justified.
    The verdict is cross-checked against the computed roots; disagreement
    raises :class:`ConsistencyError`.
    """
    params = stability_params(spec, point)
    region = region_classify(params)
    roots = rightmost_roots(params)
    has_unstable = any(z.real > 1e-8 for z in roots)

    if point.branch == DEGENERATE:
        classification = UNDETERMINED
    elif point.branch == BRANCH2:
        classification = UNSTABLE
        if region != OUTSIDE_S:
            raise ConsistencyError(
                f"branch-2 point classified {region}; expected outside_S"
            )
    else:
        classification = {
            INSIDE_S: STABLE,
            OUTSIDE_S: UNSTABLE,
            BOUNDARY_C1: MARGINAL_HOPF,
            BOUNDARY_OTHER: UNDETERMINED,
        }[region]

    if classification == STABLE and has_unstable:
        raise ConsistencyError(
            f"region says stable but roots {roots} contain an unstable one"
        )
    if classification == UNSTABLE and not has_unstable:
        raise ConsistencyError(
            "region says unstable but no root with positive real part was found"
        )
    return StabilityVerdict(
        params=params,
        region=region,
        rightmost_roots=tuple(roots),
        classification=classification,
    )


def hopf_crossing(spec: OvfSpec, h_lo: float, h_hi: float) -> tuple[float, float]:
    """Locate the oscillatory-boundary crossing of branch 1 on [h_lo, h_hi].

    Bisects the signed offset of ``beta(h)`` from the boundary curve.  The
    endpoints must straddle the boundary, otherwise :class:`BracketError`
    is raised.  Returns ``(h_H, omega)`` with ``|chi(i omega)| <= 1e-8`` at
    the crossing parameters.
    """
    if not (0 < h_lo < h_hi):
        raise ParameterError(f"need 0 < h_lo < h_hi, got ({h_lo}, {h_hi})")

    def signed_offset(h: float) -> float:
        pt = branch_eval(spec, h, BRANCH1)
        if pt is None:
            raise ParameterError(f"branch 1 undefined at h={h}")
        beta = h * h * float(spec.deriv(pt.c))
        bc = c1_boundary_beta(-h)
        if bc is None:
            return math.inf  # alpha below -2: everything there is outside
        return beta - bc

    s_lo = signed_offset(h_lo)
    s_hi = signed_offset(h_hi)
    if s_lo == 0.0 or s_hi == 0.0:
        h_H = h_lo if s_lo == 0.0 else h_hi
    elif (s_lo > 0) == (s_hi > 0):
        raise BracketError(
            f"no boundary crossing in [{h_lo}, {h_hi}]: offsets {s_lo}, {s_hi}"
        )
    else:
        h_H = bisect(signed_offset, h_lo, h_hi, f_lo=s_lo, f_hi=s_hi,
                     xtol=1e-13 * max(1.0, h_hi))

    omega = _c1_nu_from_alpha(-h_H)
    pt = branch_eval(spec, h_H, "branch1")
    params = StabilityParams(alpha=-h_H, beta=h_H * h_H * float(spec.deriv(pt.c)))
    resid = abs(char_eval(params, 1j * omega))
    if resid > 1e-8:
        raise NumericalError(
            f"crossing residual |chi(i omega)| = {resid} exceeds 1e-8"
        )
    return float(h_H), float(omega)
