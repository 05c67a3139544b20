"""Adaptive Gauss-Kronrod quadrature, in linear and in log space.

All integrands must be numpy-vectorized (ndarray in, ndarray out).  Panels
are refined by bisection with the classical G7/K15 nested pair; the error
estimate of a panel is |K15 - G7|.  Semi-infinite integrals are handled by
truncation plus geometrically growing extension chunks, never by variable
changes, so the error accounting stays uniform.

The log-space twin accumulates log-integrals of exp(g) integrands with
per-panel log-sum-exp, which keeps criterion scans usable out to potential
values of several hundred thousand where exp(V) is far beyond float range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DepthExhaustedError, DomainValidationError, NonIntegrableError

# 15-point Kronrod nodes on [-1, 1]; the 7 Gauss nodes sit at odd indices.
_GK_NODES = np.array(
    [
        -0.991455371120813,
        -0.949107912342759,
        -0.864864423359769,
        -0.741531185599394,
        -0.586087235467691,
        -0.405845151377397,
        -0.207784955007898,
        0.0,
        0.207784955007898,
        0.405845151377397,
        0.586087235467691,
        0.741531185599394,
        0.864864423359769,
        0.949107912342759,
        0.991455371120813,
    ]
)
_K15_WEIGHTS = np.array(
    [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
        0.204432940075298,
        0.190350578064785,
        0.169004726639267,
        0.140653259715525,
        0.104790010322250,
        0.063092092629979,
        0.022935322010529,
    ]
)
_G7_WEIGHTS = np.array(
    [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
        0.381830050505119,
        0.279705391489277,
        0.129484966168870,
    ]
)
_LOG_WK = np.log(_K15_WEIGHTS)
_LOG_WG = np.log(_G7_WEIGHTS)

_NEGLIGIBLE_NATS = 55.0  # panels below exp(-55) of their segment total are accepted


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and refinement limits for one adaptive integration."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_depth: int = 48
    panel_rule: str = "gk15"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainValidationError("rel_tol and abs_tol must be positive")
        if self.max_depth < 10:
            raise DomainValidationError("max_depth must be >= 10")
        if self.panel_rule != "gk15":
            raise DomainValidationError(f"unknown panel rule {self.panel_rule!r}")


DEFAULT_QUAD = QuadConfig()


@dataclass(frozen=True)
class Integral:
    value: float
    error_estimate: float
    panels_used: int
    log_value: float | None = None


def _logsumexp_rows(a):
    m = np.max(a, axis=1)
    finite = np.isfinite(m)
    out = np.full(a.shape[0], -np.inf)
    if np.any(finite):
        af = a[finite]
        mf = m[finite][:, None]
        out[finite] = m[finite] + np.log(np.sum(np.exp(af - mf), axis=1))
    return out


def _gk_linear(f, a, b):
    """Vectorized K15/G7 values on panels [a_i, b_i]."""
    mid = 0.5 * (a + b)
    hw = 0.5 * (b - a)
    xs = mid[:, None] + hw[:, None] * _GK_NODES
    fx = np.asarray(f(xs), dtype=float)
    k = hw * (fx @ _K15_WEIGHTS)
    g = hw * (fx[:, 1::2] @ _G7_WEIGHTS)
    return k, np.abs(k - g), fx


def _gk_log(logf, a, b):
    """Log-space K15/G7: log integral of exp(logf) on each panel."""
    mid = 0.5 * (a + b)
    hw = 0.5 * (b - a)
    xs = mid[:, None] + hw[:, None] * _GK_NODES
    gx = np.asarray(logf(xs), dtype=float)
    logk = _logsumexp_rows(gx + _LOG_WK) + np.log(hw)
    logg = _logsumexp_rows(gx[:, 1::2] + _LOG_WG) + np.log(hw)
    # |log K - log G| ~ relative discrepancy of the two rules
    err = np.abs(logk - logg)
    err = np.where(np.isnan(err), np.inf, err)
    both_ninf = np.isneginf(logk) & np.isneginf(logg)
    err = np.where(both_ninf, 0.0, err)
    return logk, err


def _initial_edges(a, b, breakpoints):
    edges = [a, b]
    if breakpoints is not None:
        edges.extend(t for t in np.atleast_1d(breakpoints) if a < t < b)
    return np.unique(np.asarray(edges, dtype=float))


def integrate(f, a, b, cfg=DEFAULT_QUAD, breakpoints=None):
    """Adaptive integral of ``f`` over [a, b].

    Panels whose |K15 - G7| exceeds a width-proportional share of the global
    allowance max(abs_tol, rel_tol*|I|) are bisected, up to ``cfg.max_depth``
    generations, after which a DepthExhaustedError reports the worst panel.
    """
    if not a < b:
        raise DomainValidationError(f"need a < b, got [{a}, {b}]")
    edges = _initial_edges(a, b, breakpoints)
    pa, pb = edges[:-1].copy(), edges[1:].copy()
    depth = np.zeros(len(pa), dtype=np.int32)
    width = b - a

    done_val = 0.0
    done_err = 0.0
    done_width = 0.0
    panels_used = 0
    while len(pa):
        k, err, fx = _gk_linear(f, pa, pb)
        if not np.all(np.isfinite(fx)):
            bad = np.argwhere(~np.isfinite(fx))
            i, j = bad[0]
            raise DomainValidationError(
                f"integrand not finite near x={pa[i] + (pb[i] - pa[i]) * 0.5 * (1 + _GK_NODES[j]):.6g}"
            )
        panels_used += len(pa)
        total_est = done_val + float(np.sum(k))
        allow = max(cfg.abs_tol, cfg.rel_tol * abs(total_est))
        # width-proportional allowance, with an absolute negligibility floor so
        # integrable kinks cannot force unbounded refinement of vanishing panels
        ok = err <= allow * np.maximum((pb - pa) / width, 1e-6)
        exhausted = ~ok & (depth >= cfg.max_depth)
        if np.any(exhausted):
            worst = int(np.argmax(np.where(exhausted, err, -np.inf)))
            raise DepthExhaustedError(
                "adaptive refinement exhausted max_depth",
                (float(pa[worst]), float(pb[worst]), float(err[worst])),
            )
        done_val += float(np.sum(k[ok]))
        done_err += float(np.sum(err[ok]))
        done_width += float(np.sum((pb - pa)[ok]))
        pa, pb, depth = pa[~ok], pb[~ok], depth[~ok]
        if len(pa):
            mid = 0.5 * (pa + pb)
            pa = np.concatenate([pa, mid])
            pb = np.concatenate([mid, pb])
            depth = np.concatenate([depth + 1, depth + 1])
    return Integral(done_val, done_err, panels_used)


def refine_log_panels(logf, edges, ptol, max_depth, strict=True):
    """Per-interval log integrals of exp(logf) between consecutive edges.

    Returns (seg_logs, seg_errs, panels_used).  seg_errs is a per-segment
    bound on the relative error, estimated from accepted |logK - logG|.
    """
    nseg = len(edges) - 1
    pa, pb = edges[:-1].copy(), edges[1:].copy()
    seg = np.arange(nseg, dtype=np.int64)
    depth = np.zeros(nseg, dtype=np.int32)
    acc = np.full(nseg, -np.inf)  # accepted log mass per segment
    accerr = np.full(nseg, -np.inf)  # log of accepted absolute-in-log error mass
    panels_used = 0
    while len(pa):
        logk, err = _gk_log(logf, pa, pb)
        panels_used += len(pa)
        # current segment totals = accepted + pending (ufunc.at is unbuffered,
        # so duplicate segment indices accumulate correctly)
        seg_tot = acc.copy()
        np.logaddexp.at(seg_tot, seg, logk)
        negligible = logk <= seg_tot[seg] - _NEGLIGIBLE_NATS
        ok = (err <= ptol) | negligible
        exhausted = ~ok & (depth >= max_depth)
        if np.any(exhausted):
            if strict:
                worst = int(np.argmax(np.where(exhausted, err, -np.inf)))
                raise DepthExhaustedError(
                    "log-space adaptive refinement exhausted max_depth",
                    (float(pa[worst]), float(pb[worst]), float(err[worst])),
                )
            ok = ok | exhausted
        take = ok
        np.logaddexp.at(acc, seg[take], logk[take])
        np.logaddexp.at(accerr, seg[take], logk[take] + np.log(np.maximum(err[take], 1e-300)))
        pa, pb, seg, depth = pa[~take], pb[~take], seg[~take], depth[~take]
        if len(pa):
            mid = 0.5 * (pa + pb)
            pa = np.concatenate([pa, mid])
            pb = np.concatenate([mid, pb])
            seg = np.concatenate([seg, seg])
            depth = np.concatenate([depth + 1, depth + 1])
    seg_errs = np.exp(accerr - np.where(np.isneginf(acc), 0.0, acc))
    seg_errs[np.isneginf(acc)] = 0.0
    return acc, seg_errs, panels_used


def integrate_log(log_f, a, b, cfg=DEFAULT_QUAD, breakpoints=None):
    """Log-space integral: returns log of the integral of exp(log_f) on [a, b].

    ``value`` is filled whenever exp(log_value) is representable; the error
    estimate is then in value units (relative error times value).
    """
    if not a < b:
        raise DomainValidationError(f"need a < b, got [{a}, {b}]")
    edges = _initial_edges(a, b, breakpoints)
    ptol = max(cfg.rel_tol * 0.1, 1e-14)
    seg_logs, seg_errs, panels = refine_log_panels(log_f, edges, ptol, cfg.max_depth)
    total = float(np.logaddexp.reduce(seg_logs))
    if np.isneginf(total):
        rel = 0.0
    else:
        rel = float(np.sum(np.exp(seg_logs - total) * seg_errs))
    value = math.exp(total) if total < 709.0 else math.inf
    if total < -745.0:
        value = 0.0
    err = rel * value if math.isfinite(value) else math.inf
    return Integral(value, err, panels, log_value=total)


def log_extension(logf, start, initial_width, ptol=1e-11, max_depth=48, max_chunks=400):
    """Log integral of exp(logf) over [start, +inf) by doubling chunks.

    Stops once a chunk falls 55 nats below the running total, i.e. the
    remainder is a negligible relative correction.  Raises NonIntegrableError
    if no convergence after ``max_chunks`` doublings.
    """
    total = -np.inf
    lo = start
    w = initial_width
    for _ in range(max_chunks):
        hi = lo + w
        seg_logs, _, _ = refine_log_panels(logf, np.array([lo, hi]), ptol, max_depth, strict=False)
        chunk = float(seg_logs[0])
        total = float(np.logaddexp(total, chunk))
        if chunk < total - _NEGLIGIBLE_NATS:
            return total
        lo = hi
        w *= 2.0
    raise NonIntegrableError(
        f"tail integral starting at {start:.3g} did not converge by x={lo:.3g}"
    )


def panel_log_prefix(logf, edges, ptol=1e-11, max_depth=60):
    """Cumulative log integrals of exp(logf): prefix[i] = log int(edges[0]..edges[i]).

    prefix[0] = -inf.  The accumulation order is the ascending edge order, so
    results are deterministic.
    """
    seg_logs, seg_errs, _ = refine_log_panels(logf, np.asarray(edges, dtype=float), ptol, max_depth, strict=False)
    prefix = np.empty(len(edges))
    prefix[0] = -np.inf
    prefix[1:] = np.logaddexp.accumulate(seg_logs)
    return prefix, seg_logs, float(np.max(seg_errs, initial=0.0))


def panel_log_suffix(logf, edges, tail_log=-np.inf, ptol=1e-11, max_depth=60):
    """Suffix log integrals: suffix[i] = log int(edges[i]..edges[-1]) + tail beyond.

    ``tail_log`` is the (already computed) log integral over [edges[-1], inf).
    """
    seg_logs, seg_errs, _ = refine_log_panels(logf, np.asarray(edges, dtype=float), ptol, max_depth, strict=False)
    suffix = np.empty(len(edges))
    suffix[-1] = tail_log
    rev = np.logaddexp.accumulate(seg_logs[::-1])
    suffix[:-1] = np.logaddexp(rev[::-1], tail_log)
    return suffix, seg_logs, float(np.max(seg_errs, initial=0.0))


def truncation_point(potential, eps, cfg=DEFAULT_QUAD):
    """Smallest X with int_X^inf exp(-V) <= eps * int_0^X exp(-V), per side.

    The one-sided predicate is located by doubling then refined by bisection;
    for uneven potentials the maximum over the two sides is returned.  Raises
    NonIntegrableError when the predicate never holds by X = 1e6.
    """
    if not 0.0 < eps < 1.0:
        raise DomainValidationError("eps must be in (0, 1)")

    def one_side(sign):
        def neg_v(x):
            return -potential.value(sign * x)

        def core_log(x):
            bp = potential.breakpoints(0.0, x) if sign > 0 else [-t for t in potential.breakpoints(-x, 0.0)]
            prefix, _, _ = panel_log_prefix(neg_v, _initial_edges(0.0, x, bp), ptol=1e-9)
            return float(prefix[-1])

        def tail_log(x):
            return log_extension(neg_v, x, initial_width=max(1.0, 0.05 * x), ptol=1e-9)

        def ok(x):
            return tail_log(x) <= math.log(eps) + core_log(x)

        x = 1.0
        while not ok(x):
            x *= 2.0
            if x > 1e6:
                raise NonIntegrableError(
                    f"truncation search failed by X=1e6; exp(-V) at X is "
                    f"{math.exp(-potential.value(sign * x / 2)):.3g}"
                )
        lo, hi = x / 2.0, x
        if x == 1.0:
            lo = 1e-3
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
        return hi

    xr = one_side(+1.0)
    if potential.is_even:
        return xr
    return max(xr, one_side(-1.0))


def euler_gamma_integral(a, cfg=DEFAULT_QUAD):
    """Gamma(a) for a >= 1 by direct quadrature of the Euler integral."""
    if a < 1.0:
        raise DomainValidationError("euler_gamma_integral requires a >= 1")
    upper = 750.0 + 10.0 * a

    def f(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            logt = np.where(t > 0, np.log(np.maximum(t, 1e-300)), -np.inf)
        out = np.exp((a - 1.0) * logt - t)
        return np.where(t > 0, out, 0.0 if a > 1 else 1.0)

    return integrate(f, 0.0, upper, cfg, breakpoints=[1.0, 10.0, 100.0]).value
