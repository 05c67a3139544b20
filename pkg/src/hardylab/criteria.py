"""Hardy-type criterion scans for one-dimensional measures.

Each criterion is a supremum, over x on one side of the median m, of

    tail-mass factor  x  growing-weight integral from m to x,

with the density n = exp(-V)/Z entering through 1/n or a power of it:

    bp         mu([x,oo)) * int_m^x 1/n                        (Poincare)
    bls        mu([x,oo)) log(1/mu([x,oo))) * int_m^x 1/n       (log-Sobolev)
    blo(r)     mu([x,oo)) log^(2/r')(1 + 1/(2 mu([x,oo)))) * int_m^x 1/n
    bmls(r)    mu([x,oo)) log(1/mu([x,oo))) * (int_m^x n^-(r-1))^(1/(r-1))
    bweighted(r)  mu((x,oo)) log(1/mu) * int_0^x exp(V - log(1+|t|^(2-r)))

All tail masses and weight integrals are accumulated in log space with
per-panel log-sum-exp, so the scans stay meaningful far beyond the range
where exp(V) or exp(-V) is representable.  Partial suprema are recorded at
each requested horizon; on a grid of step pi/8 (which resolves period-2pi
oscillations of the potentials) plus golden-section refinement around the
running argmax.  A bounded criterion yields a constant bracket where the
theory provides one: [S, 4S] for bp, and an upper constant
235 * C_P + 2^(r'+1) * S for bmls when a bp result is supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quad as quad_mod
from .errors import DomainValidationError

DEFAULT_HORIZONS = (25.0, 50.0, 100.0, 200.0, 400.0, 800.0)
GRID_STEP = math.pi / 8.0
PLATEAU_TOL = 0.05
SLOPE_FLOOR = 0.02
_PANEL_PTOL = 1e-9
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

# two-sided 95% Student quantiles by degrees of freedom
_T95 = {1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365, 8: 2.306}


@dataclass(frozen=True)
class BoundednessVerdict:
    """Decision layer over a partial-supremum scan."""

    label: str  # bounded | divergent | inconclusive
    plateau_ratio: float
    growth_exponent: tuple | None  # (slope, lo95, hi95) of log S vs log X


@dataclass(frozen=True)
class CriterionResult:
    kind: str
    side: str  # plus | minus | max
    horizons: tuple
    partial_sups: tuple  # exp of log_partial_sups; inf when beyond float range
    log_partial_sups: tuple
    argmax: tuple  # x location of the running sup per horizon
    verdict: BoundednessVerdict
    bracket: tuple | None = None
    r: float | None = None
    sides: dict | None = None

    @property
    def sup(self):
        return self.partial_sups[-1]

    @property
    def final_argmax(self):
        return self.argmax[-1]


def _t95(dof):
    if dof < 1:
        return math.inf
    return _T95.get(dof, 1.96 + 2.0 / dof)


def growth_fit(xs, log_ys):
    """OLS slope of log y vs log x with a 95% confidence interval.

    ``log_ys`` is already on the log scale so that double-exponentially
    divergent scans (values beyond float range) still classify.
    """
    lx, ly = np.log(xs), np.asarray(log_ys, dtype=float)
    n = len(lx)
    if n < 2:
        return None
    mx = lx.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    slope = float(np.sum((lx - mx) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * mx)
    resid = ly - (intercept + slope * lx)
    dof = n - 2
    if dof <= 0:
        return (slope, -math.inf, math.inf)
    se = math.sqrt(float(np.sum(resid**2)) / dof / sxx)
    t = _t95(dof)
    return (slope, slope - t * se, slope + t * se)


def classify(horizons, log_sups, plateau_tol=PLATEAU_TOL, slope_floor=SLOPE_FLOOR):
    """bounded when the sups plateau; divergent when the fitted log-log slope
    over the last half of horizons is positive with 95% confidence; otherwise
    inconclusive."""
    log_sups = np.asarray(log_sups, dtype=float)
    horizons = np.asarray(horizons, dtype=float)
    k = len(horizons)
    mid = (k - 1) // 2
    with np.errstate(over="ignore"):
        plateau_ratio = float(np.exp(log_sups[-1] - log_sups[mid]))
    fit = growth_fit(horizons[k // 2 :], log_sups[k // 2 :])
    if plateau_ratio <= 1.0 + plateau_tol:
        label = "bounded"
    elif fit is not None and fit[1] > slope_floor:
        label = "divergent"
    else:
        label = "inconclusive"
    return BoundednessVerdict(label=label, plateau_ratio=plateau_ratio, growth_exponent=fit)


def _validate_horizons(horizons, median):
    horizons = tuple(float(x) for x in horizons)
    if len(horizons) < 2 or any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise DomainValidationError("horizons must be increasing with >= 2 entries")
    if horizons[0] <= abs(median) + 1.0:
        raise DomainValidationError("first horizon must clear the median")
    return horizons


def _chunked_log_panels(g, edges, ptol=_PANEL_PTOL, block=192):
    """Per-interval log integrals of exp(g) between consecutive edges, chunked
    to bound the memory of the adaptive refinement."""
    out = np.empty(len(edges) - 1)
    for start in range(0, len(edges) - 1, block):
        sub = edges[start : start + block + 1]
        logs, _, _ = quad_mod.refine_log_panels(g, sub, ptol, max_depth=60, strict=False)
        out[start : start + len(logs)] = logs
    return out


class _SideScan:
    """One-sided scan state: s is the distance from the median."""

    def __init__(self, measure, sign, s_end, extra_s):
        self.measure = measure
        self.sign = sign
        m = measure.median
        pot = measure.potential
        grid = list(np.arange(0.0, s_end, GRID_STEP))
        grid.extend(extra_s)
        grid.append(s_end)
        if sign > 0:
            bps = [b - m for b in pot.breakpoints(m, m + s_end)]
        else:
            bps = [m - b for b in pot.breakpoints(m - s_end, m)]
        grid.extend(bps)
        self.grid = np.unique(np.asarray(grid))
        self.x = lambda s: m + sign * np.asarray(s, dtype=float)
        self.neg_v_s = lambda s: -pot.value(self.x(s))
        # suffix tail in s: log int_s^(s_end) exp(-V) + extension beyond
        beyond = quad_mod.log_extension(self.neg_v_s, s_end, initial_width=max(1.0, GRID_STEP))
        seg_tail = _chunked_log_panels(self.neg_v_s, self.grid)
        self.tail_logs = np.empty(len(self.grid))
        self.tail_logs[-1] = beyond
        rev = np.logaddexp.accumulate(seg_tail[::-1])
        self.tail_logs[:-1] = np.logaddexp(rev[::-1], beyond)

    def weight_prefix(self, g):
        seg = _chunked_log_panels(g, self.grid)
        prefix = np.empty(len(self.grid))
        prefix[0] = -np.inf
        prefix[1:] = np.logaddexp.accumulate(seg)
        return prefix

    def tail_at(self, s):
        j = int(np.searchsorted(self.grid, s, side="right") - 1)
        j = min(j, len(self.grid) - 2)
        partial = -np.inf
        if s < self.grid[j + 1]:
            logs, _, _ = quad_mod.refine_log_panels(
                self.neg_v_s, np.array([s, self.grid[j + 1]]), _PANEL_PTOL, 60, strict=False
            )
            partial = float(logs[0])
        return float(np.logaddexp(partial, self.tail_logs[j + 1]))

    def weight_at(self, g, prefix, s):
        j = int(np.searchsorted(self.grid, s, side="right") - 1)
        j = min(j, len(self.grid) - 2)
        partial = -np.inf
        if s > self.grid[j]:
            logs, _, _ = quad_mod.refine_log_panels(
                g, np.array([self.grid[j], s]), _PANEL_PTOL, 60, strict=False
            )
            partial = float(logs[0])
        return float(np.logaddexp(prefix[j], partial))


def _golden_max(f, a, b, iters=40):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _criterion_parts(kind, r, measure):
    """Weight log-integrand tag, inner transform, and log of the tail post-factor.

    The post-factor is the slowly varying piece multiplying
    exp(tail log + transformed weight log): 1 for bp, log(1/tail) for bls,
    bmls and bweighted, and log^(2/r')(1 + 1/(2 tail)) for blo.  It is
    returned in log form so scans survive criterion values beyond float
    range (doubly exponential divergences).
    """
    log_z = measure.log_z

    def log_post_bp(l_abs):
        return 0.0

    def log_post_log(l_abs):
        return math.log(max(-(l_abs - log_z), 1e-300))

    if kind == "bp":
        return "v", lambda j: j, log_post_bp
    if kind == "bls":
        return "v", lambda j: j, log_post_log
    if kind == "blo":
        rp = r / (r - 1.0)

        def log_post_blo(l_abs):
            l_norm = l_abs - log_z
            return (2.0 / rp) * math.log(np.logaddexp(0.0, -(l_norm + math.log(2.0))))

        return "v", lambda j: j, log_post_blo
    if kind == "bmls":
        return "rv", lambda j: j / (r - 1.0), log_post_log
    if kind == "bweighted":
        return "w", lambda j: j, log_post_log
    raise DomainValidationError(f"unknown criterion kind {kind!r}")


def _weight_logf(scan, which, r):
    if which == "v":
        return lambda s: -scan.neg_v_s(s)
    if which == "rv":
        return lambda s: -(r - 1.0) * scan.neg_v_s(s)
    # weighted: V(x) - log(1 + |x|^(2-r))
    def g(s):
        x = scan.x(s)
        return -scan.neg_v_s(s) - np.log1p(np.power(np.abs(x), 2.0 - r))

    return g


def _scan_side(measure, kind, r, horizons, sign, refine=True):
    m = measure.median
    s_h = [h - m if sign > 0 else h + m for h in horizons]
    scan = _SideScan(measure, sign, s_h[-1], extra_s=s_h)
    which, transform, log_post = _criterion_parts(kind, r, measure)
    g = _weight_logf(scan, which, r)
    prefix = scan.weight_prefix(g)

    lvals = scan.tail_logs + transform(prefix)
    lvals[0] = -np.inf
    for i in range(1, len(lvals)):
        if np.isfinite(lvals[i]):
            lvals[i] += log_post(scan.tail_logs[i])

    def log_value_at(s):
        l_abs = scan.tail_at(s)
        j = scan.weight_at(g, prefix, s)
        return l_abs + transform(j) + log_post(l_abs)

    log_sups, argmaxes = [], []
    best, best_s = -np.inf, float("nan")
    lo_idx = 1
    grid = scan.grid
    for s_hzn in s_h:
        hi_idx = int(np.searchsorted(grid, s_hzn, side="right"))
        if hi_idx > lo_idx:
            j = int(np.argmax(lvals[lo_idx:hi_idx])) + lo_idx
            if lvals[j] > best:
                best, best_s = float(lvals[j]), float(grid[j])
                if refine:
                    a = grid[max(j - 1, 1)]
                    # the sup runs over (m, X]: never refine past the horizon
                    b = min(grid[min(j + 1, len(grid) - 1)], s_hzn)
                    if b > a:
                        s_ref, v_ref = _golden_max(log_value_at, a, b)
                        if v_ref > best:
                            best, best_s = float(v_ref), float(s_ref)
            lo_idx = hi_idx
        log_sups.append(best)
        argmaxes.append(m + sign * best_s)
    verdict = classify(horizons, log_sups)
    with np.errstate(over="ignore"):
        sups = tuple(float(np.exp(v)) for v in log_sups)
    return CriterionResult(
        kind=kind,
        side="plus" if sign > 0 else "minus",
        horizons=tuple(horizons),
        partial_sups=sups,
        log_partial_sups=tuple(log_sups),
        argmax=tuple(argmaxes),
        verdict=verdict,
        r=r,
    )


def _combine(measure, kind, r, horizons, mirror_even=True, refine=True, bracket_fn=None):
    horizons = _validate_horizons(horizons, measure.median)
    plus = _scan_side(measure, kind, r, horizons, +1, refine)
    if mirror_even and measure.is_even:
        minus = CriterionResult(
            kind=kind,
            side="minus",
            horizons=plus.horizons,
            partial_sups=plus.partial_sups,
            log_partial_sups=plus.log_partial_sups,
            argmax=tuple(-a for a in plus.argmax),
            verdict=plus.verdict,
            r=r,
        )
    else:
        minus = _scan_side(measure, kind, r, horizons, -1, refine)
    log_sups = tuple(
        max(a, b) for a, b in zip(plus.log_partial_sups, minus.log_partial_sups)
    )
    argmax = tuple(
        pa if sa >= sb else ma
        for sa, sb, pa, ma in zip(
            plus.log_partial_sups, minus.log_partial_sups, plus.argmax, minus.argmax
        )
    )
    verdict = classify(horizons, log_sups)
    with np.errstate(over="ignore"):
        sups = tuple(float(np.exp(v)) for v in log_sups)
    bracket = bracket_fn(sups[-1], verdict) if bracket_fn is not None else None
    return CriterionResult(
        kind=kind,
        side="max",
        horizons=horizons,
        partial_sups=sups,
        log_partial_sups=log_sups,
        argmax=argmax,
        verdict=verdict,
        bracket=bracket,
        r=r,
        sides={"plus": plus, "minus": minus},
    )


# ---------------------------------------------------------------------------
# public criterion scans
# ---------------------------------------------------------------------------


def bp(measure, horizons=DEFAULT_HORIZONS, mirror_even=True, refine=True):
    """Poincare criterion scan; bounded verdicts carry the bracket [S, 4S]
    for the Poincare constant."""

    def bracket_fn(s, verdict):
        return (s, 4.0 * s) if verdict.label == "bounded" else None

    return _combine(measure, "bp", None, horizons, mirror_even, refine, bracket_fn)


def bls(measure, horizons=DEFAULT_HORIZONS, mirror_even=True, refine=True):
    """Log-Sobolev criterion scan.  The two-sided comparability constants are
    not pinned by the theory, so no bracket is attached."""
    return _combine(measure, "bls", None, horizons, mirror_even, refine)


def blo(measure, r, horizons=DEFAULT_HORIZONS, mirror_even=True, refine=True):
    """Interpolation-family criterion with tail weight log^(2/r')(1 + 1/(2 tail)).

    The exact 1/(2 tail) argument is kept (not the simplified 1/tail); the two
    differ by bounded factors only but the scan matches the sharp form.
    """
    _check_r(r)
    return _combine(measure, "blo", r, horizons, mirror_even, refine)


def bmls(measure, r, horizons=DEFAULT_HORIZONS, mirror_even=True, refine=True, bp_result=None):
    """Two-level criterion with density power n^-(r-1).

    When a bp scan of the same measure is supplied and both verdicts are
    bounded, the bracket carries the constructive upper constant
    235 * (4 S_bp) + 2^(r'+1) * S.
    """
    _check_r(r)
    rp = r / (r - 1.0)

    def bracket_fn(s, verdict):
        if verdict.label != "bounded" or bp_result is None:
            return None
        if bp_result.bracket is None:
            return None
        cp_upper = bp_result.bracket[1]
        return (0.0, 235.0 * cp_upper + math.pow(2.0, rp + 1.0) * s)

    return _combine(measure, "bmls", r, horizons, mirror_even, refine, bracket_fn)


def bweighted(measure, r, horizons=DEFAULT_HORIZONS, mirror_even=True, refine=True):
    """Criterion for the weighted log-Sobolev inequality with weight
    (1 + |x|^(2-r)); requires an even measure."""
    _check_r(r)
    if not measure.is_even:
        raise DomainValidationError("bweighted requires an even measure")
    return _combine(measure, "bweighted", r, horizons, mirror_even, refine)


def _check_r(r):
    if not 1.0 < r < 2.0:
        raise DomainValidationError("r must lie in (1, 2)")


@dataclass(frozen=True)
class HypMlsResult:
    holds: bool
    worst_ratio: float
    arg: float
    eps: float


def hyp_mls_check(measure, r, eps, horizons=DEFAULT_HORIZONS):
    """Check n(x)^-(r-1) >= eps * int_m^x n^-(r-1) on the scan grid.

    Returns the smallest observed ratio and where it occurs.  For piecewise
    potentials the dips sit just before the jump points, so those points are
    added to the grid.
    """
    _check_r(r)
    if eps <= 0:
        raise DomainValidationError("eps must be positive")
    horizons = _validate_horizons(horizons, measure.median)
    m = measure.median
    worst, arg = math.inf, math.nan
    for sign in (+1.0, -1.0):
        s_end = horizons[-1] - m if sign > 0 else horizons[-1] + m
        pot = measure.potential
        if sign > 0:
            bps = [b - m for b in pot.breakpoints(m, m + s_end)]
        else:
            bps = [m - b for b in pot.breakpoints(m - s_end, m)]
        scan = _SideScan(measure, sign, s_end, extra_s=[b - 1e-9 for b in bps if b > 1e-9])
        g = lambda s: -(r - 1.0) * scan.neg_v_s(s)
        prefix = scan.weight_prefix(g)
        svals = scan.grid[1:]
        num = (r - 1.0) * (-scan.neg_v_s(svals))
        ratio = np.exp(num - prefix[1:])
        j = int(np.argmin(ratio))
        if ratio[j] < worst:
            worst, arg = float(ratio[j]), float(m + sign * svals[j])
        if measure.is_even:
            break
    return HypMlsResult(holds=bool(worst >= eps), worst_ratio=worst, arg=arg, eps=eps)


@dataclass(frozen=True)
class AsymptoticScans:
    x: np.ndarray
    br_ratio: np.ndarray  # V / V'^(r')
    weighted_ratio: np.ndarray  # V / (|x|^(2-r) V'^2)
    vpp_ratio: np.ndarray  # V'' / V'^2 with finite-difference V''
    br_tail_max: float
    weighted_tail_max: float
    vpp_tail_max: float


def asymptotic_conditions(measure, r, horizons=DEFAULT_HORIZONS):
    """Derivative-based sufficient-condition diagnostics along the scan grid.

    Requires a potential with a derivative field; the three scans are the
    growth ratio V/V'^(r'), the weighted ratio V/(|x|^(2-r) V'^2), and the
    curvature ratio V''/V'^2, each with the maximum over the tail window
    [X_end/2, X_end].
    """
    _check_r(r)
    pot = measure.potential
    if pot.derivative is None:
        raise DomainValidationError("asymptotic_conditions requires a derivative field")
    horizons = _validate_horizons(horizons, measure.median)
    x_end = horizons[-1]
    x = np.unique(
        np.concatenate([np.arange(max(measure.median + GRID_STEP, GRID_STEP), x_end, GRID_STEP), [x_end]])
    )
    rp = r / (r - 1.0)
    V = pot.value(x)
    Vp = pot.derivative(x)
    h = 1e-5 * np.maximum(1.0, np.abs(x))
    Vpp = (pot.derivative(x + h) - pot.derivative(x - h)) / (2.0 * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        br = V / np.power(np.abs(Vp), rp)
        wr = V / (np.power(np.abs(x), 2.0 - r) * Vp * Vp)
        vr = Vpp / (Vp * Vp)
    tail_mask = x >= 0.5 * x_end
    return AsymptoticScans(
        x=x,
        br_ratio=br,
        weighted_ratio=wr,
        vpp_ratio=vr,
        br_tail_max=float(np.nanmax(np.where(np.isfinite(br[tail_mask]), br[tail_mask], np.nan))),
        weighted_tail_max=float(np.max(wr[tail_mask])),
        vpp_tail_max=float(np.nanmax(np.abs(np.where(np.isfinite(vr[tail_mask]), vr[tail_mask], np.nan)))),
    )


@dataclass(frozen=True)
class TailScaleTable:
    x: np.ndarray
    theta: np.ndarray  # inf{h > 0 : V(x+h) >= V(x) + 1}, capped at 10
    capped: np.ndarray
    ratio_theta: np.ndarray  # int_x^inf exp(-V) / (theta exp(-V(x)))
    ratio_deriv: np.ndarray  # int_x^inf exp(-V) / (exp(-V(x)) / V'(x)); nan if V' <= 0


def _theta_scale(pot, x, cap=10.0):
    v0 = float(pot.value(np.array([x]))[0]) + 1.0
    hs = np.linspace(0.0, cap, 2001)[1:]
    vals = pot.value(x + hs)
    idx = np.argmax(vals >= v0)
    if vals[idx] < v0:
        return cap, True
    lo = hs[idx - 1] if idx > 0 else 0.0
    hi = hs[idx]
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if float(pot.value(np.array([x + mid]))[0]) >= v0:
            hi = mid
        else:
            lo = mid
    return hi, False


def tail_asymptotics(measure, x_grid):
    """theta(x) tail-scale diagnostics for an even measure.

    theta is the distance over which V climbs by 1 (capped at 10 with a
    flag); the two ratios compare the true unnormalized tail with the
    theta-scale and the 1/V' approximations.
    """
    if not measure.is_even:
        raise DomainValidationError("tail_asymptotics requires an even measure")
    from .measure import log_tail  # local import to avoid a cycle

    pot = measure.potential
    x = np.asarray(x_grid, dtype=float)
    theta = np.empty(len(x))
    capped = np.zeros(len(x), dtype=bool)
    r_theta = np.empty(len(x))
    r_deriv = np.full(len(x), np.nan)
    for i, xi in enumerate(x):
        theta[i], capped[i] = _theta_scale(pot, float(xi))
        l_abs = log_tail(measure, float(xi)) + measure.log_z
        v = float(pot.value(np.array([xi]))[0])
        r_theta[i] = math.exp(l_abs + v) / theta[i]
        if pot.derivative is not None:
            vp = float(pot.derivative(np.array([xi]))[0])
            if vp > 0:
                r_deriv[i] = math.exp(l_abs + v) * vp
    return TailScaleTable(x=x, theta=theta, capped=capped, ratio_theta=r_theta, ratio_deriv=r_deriv)
