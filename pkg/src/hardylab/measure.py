"""Potentials V and the line measures dmu = exp(-V) dx / Z they induce.

Built-in potential families (all even, evaluated at |x|):

    exp              V(x) = |x|                      symmetric exponential
    gaussian         V(x) = x^2 / 2                  standard normal
    power(r)         V(x) = |x|^r,       r >= 1
    sinpower(a, l)   V(x) = |x + l sin x|^a,  a > 1, l >= 0
    cattiaux(r, b)   V(x) = |x|^(r+1) + (r+1)|x|^r sin^2 x + |x|^b,
                     r in (1,2), max(r/2, r - 1/r) < b - 1 < r - 1/2
    floor            V(x) = floor(|x|)               no derivative

Potentials can also be given as expression strings (see expr) or as
tabulated grids (linear interpolation, last-slope extrapolation with an
extrapolation flag per query).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as expr_mod
from . import quad as quad_mod
from .errors import BracketError, DomainValidationError
from .quad import DEFAULT_QUAD, QuadConfig

UNDERFLOW_FLOOR = 1e-300
DEFAULT_EPS_TRUNC = 1e-12

_FAMILY_ARITY = {"exp": 0, "gaussian": 0, "power": 1, "sinpower": 2, "cattiaux": 2, "floor": 0}


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative description of a potential; validated at construction."""

    kind: str  # "builtin" | "expression" | "tabulated"
    family: str | None = None
    params: tuple = ()
    expression: str | None = None
    grid_x: tuple = ()
    grid_v: tuple = ()
    even: bool = True

    def __post_init__(self):
        if self.kind == "builtin":
            self._validate_builtin()
        elif self.kind == "expression":
            expr_mod.parse(self.expression)  # raises ParseError with position
        elif self.kind == "tabulated":
            xs = np.asarray(self.grid_x, dtype=float)
            if len(xs) < 2 or np.any(np.diff(xs) <= 0):
                raise DomainValidationError("tabulated grid needs >= 2 strictly increasing nodes")
            if len(self.grid_v) != len(xs):
                raise DomainValidationError("grid_x and grid_v lengths differ")
        else:
            raise DomainValidationError(f"unknown potential kind {self.kind!r}")

    def _validate_builtin(self):
        fam = self.family
        if fam not in _FAMILY_ARITY:
            raise DomainValidationError(f"unknown builtin family {fam!r}")
        if len(self.params) != _FAMILY_ARITY[fam]:
            raise DomainValidationError(
                f"{fam} takes {_FAMILY_ARITY[fam]} parameter(s), got {len(self.params)}"
            )
        if fam == "power":
            (r,) = self.params
            if not r >= 1.0:
                raise DomainValidationError("power(r) needs r >= 1")
        elif fam == "sinpower":
            alpha, lam = self.params
            if not (alpha > 1.0 and lam >= 0.0):
                raise DomainValidationError("sinpower(alpha, lam) needs alpha > 1 and lam >= 0")
        elif fam == "cattiaux":
            r, beta = self.params
            if not (1.0 < r < 2.0):
                raise DomainValidationError("cattiaux(r, beta) needs r in (1, 2)")
            lo = max(r / 2.0, r - 1.0 / r)
            if not (lo < beta - 1.0 < r - 0.5):
                raise DomainValidationError(
                    f"cattiaux(r, beta) needs {lo:.4f} < beta - 1 < {r - 0.5:.4f}"
                )

    # -- convenience constructors ------------------------------------------

    @staticmethod
    def builtin(family, *params):
        return PotentialSpec(kind="builtin", family=family, params=tuple(float(p) for p in params))

    @staticmethod
    def from_expression(text, even=False):
        return PotentialSpec(kind="expression", expression=text, even=even)

    @staticmethod
    def tabulated(xs, vs, even=False):
        return PotentialSpec(
            kind="tabulated", grid_x=tuple(map(float, xs)), grid_v=tuple(map(float, vs)), even=even
        )

    @staticmethod
    def from_string(token):
        """CLI syntax: ``family``, ``family:p1,p2`` or ``expr:<expression>``."""
        if token.startswith("expr:"):
            return PotentialSpec.from_expression(token[5:], even=False)
        name, _, rest = token.partition(":")
        params = [float(p) for p in rest.split(",") if p] if rest else []
        return PotentialSpec.builtin(name, *params)

    @property
    def oscillation_halfperiod(self):
        """Half oscillation period for panel splitting, or None."""
        if self.kind == "builtin":
            if self.family == "sinpower":
                return math.pi
            if self.family == "cattiaux":
                return math.pi / 2.0  # sin^2 has period pi
        if self.kind == "expression":
            fns = expr_mod.functions_used(expr_mod.parse(self.expression))
            if fns & {"sin", "cos"}:
                return math.pi
        return None

    @property
    def unit_breakpoints(self):
        """True when the potential jumps on the integer lattice."""
        if self.kind == "builtin" and self.family == "floor":
            return True
        if self.kind == "expression":
            return "floor" in expr_mod.functions_used(expr_mod.parse(self.expression))
        return False


@dataclass(frozen=True)
class Potential:
    """Pointwise evaluator for V, with optional almost-everywhere derivative."""

    value: object  # callable ndarray -> ndarray
    derivative: object | None
    spec: PotentialSpec
    kinks: tuple = ()

    @property
    def is_even(self):
        return self.spec.even

    def breakpoints(self, a, b):
        """Interior panel-split points in (a, b): oscillation and jump lattices."""
        pts = []
        half = self.spec.oscillation_halfperiod
        if half is not None:
            k0 = math.floor(a / half) + 1
            k1 = math.ceil(b / half) - 1
            if k1 >= k0:
                pts.extend(np.arange(k0, k1 + 1) * half)
        if self.spec.unit_breakpoints:
            k0 = math.floor(a) + 1
            k1 = math.ceil(b) - 1
            if k1 >= k0:
                pts.extend(float(k) for k in range(int(k0), int(k1) + 1))
        return sorted(p for p in pts if a < p < b)


def _even_wrap(f):
    return lambda x: f(np.abs(np.asarray(x, dtype=float)))


def _odd_wrap(df):
    """Derivative of x -> f(|x|) is sign(x) f'(|x|)."""

    def d(x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * df(np.abs(x))

    return d


def _builtin_potential(spec):
    fam, p = spec.family, spec.params
    if fam == "exp":
        value = lambda t: t
        deriv = lambda t: np.ones_like(np.asarray(t, dtype=float))
        kinks = (0.0,)
    elif fam == "gaussian":
        return Potential(
            value=lambda x: 0.5 * np.square(np.asarray(x, dtype=float)),
            derivative=lambda x: np.asarray(x, dtype=float),
            spec=spec,
            kinks=(),
        )
    elif fam == "power":
        (r,) = p
        value = lambda t: np.power(t, r)
        deriv = lambda t: r * np.power(t, r - 1.0, where=t > 0, out=np.zeros_like(t))
        kinks = (0.0,)
    elif fam == "sinpower":
        alpha, lam = p

        def value(t):
            return np.power(np.abs(t + lam * np.sin(t)), alpha)

        def deriv(t):
            u = t + lam * np.sin(t)
            return alpha * np.power(np.abs(u), alpha - 1.0) * np.sign(u) * (1.0 + lam * np.cos(t))

        kinks = (0.0,)
    elif fam == "cattiaux":
        r, beta = p

        def value(t):
            return np.power(t, r + 1.0) + (r + 1.0) * np.power(t, r) * np.square(np.sin(t)) + np.power(t, beta)

        def deriv(t):
            return (
                (r + 1.0) * (1.0 + np.sin(2.0 * t)) * np.power(t, r)
                + r * (r + 1.0) * np.power(t, r - 1.0, where=t > 0, out=np.zeros_like(t)) * np.square(np.sin(t))
                + beta * np.power(t, beta - 1.0, where=t > 0, out=np.zeros_like(t))
            )

        kinks = (0.0,)
    elif fam == "floor":
        return Potential(
            value=_even_wrap(lambda t: np.floor(t)), derivative=None, spec=spec, kinks=()
        )
    else:  # pragma: no cover - guarded by spec validation
        raise AssertionError(fam)
    return Potential(
        value=_even_wrap(value), derivative=_odd_wrap(deriv), spec=spec, kinks=kinks
    )


def _expression_potential(spec):
    ast = expr_mod.parse(spec.expression)
    base = lambda t: np.asarray(expr_mod.evaluate(ast, t), dtype=float)
    if "floor" in expr_mod.functions_used(ast):
        dbase = None
    else:
        dast = expr_mod.diff(ast)
        dbase = lambda t: np.asarray(expr_mod.evaluate(dast, t), dtype=float)
    if spec.even:
        value = _even_wrap(base)
        deriv = _odd_wrap(dbase) if dbase is not None else None
        kinks = (0.0,)
    else:
        value, deriv, kinks = base, dbase, (0.0,)
    return Potential(value=value, derivative=deriv, spec=spec, kinks=kinks)


class _Table:
    """Linear interpolation with last-slope extrapolation on both ends."""

    def __init__(self, xs, vs):
        self.xs = np.asarray(xs, dtype=float)
        self.vs = np.asarray(vs, dtype=float)
        self.slope_lo = (self.vs[1] - self.vs[0]) / (self.xs[1] - self.xs[0])
        self.slope_hi = (self.vs[-1] - self.vs[-2]) / (self.xs[-1] - self.xs[-2])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inner = np.interp(x, self.xs, self.vs)
        lo = self.vs[0] + (x - self.xs[0]) * self.slope_lo
        hi = self.vs[-1] + (x - self.xs[-1]) * self.slope_hi
        return np.where(x < self.xs[0], lo, np.where(x > self.xs[-1], hi, inner))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)
        slopes = (self.vs[idx + 1] - self.vs[idx]) / (self.xs[idx + 1] - self.xs[idx])
        slopes = np.where(x < self.xs[0], self.slope_lo, slopes)
        return np.where(x > self.xs[-1], self.slope_hi, slopes)

    def extrapolated(self, x):
        x = np.asarray(x, dtype=float)
        return (x < self.xs[0]) | (x > self.xs[-1])


@dataclass(frozen=True)
class TabulatedPotential(Potential):
    table: object = None

    def extrapolated(self, x):
        """Flag queries outside the tabulated grid (per-point mask)."""
        x = np.asarray(x, dtype=float)
        return self.table.extrapolated(np.abs(x) if self.is_even else x)

    def value_with_flag(self, x):
        return self.value(x), self.extrapolated(x)


def _tabulated_potential(spec):
    table = _Table(spec.grid_x, spec.grid_v)
    if spec.even:
        value = _even_wrap(table)
        deriv = _odd_wrap(table.deriv)
    else:
        value, deriv = table, table.deriv
    return TabulatedPotential(
        value=value, derivative=deriv, spec=spec, kinks=tuple(spec.grid_x), table=table
    )


def make_potential(spec):
    """Build the evaluator for a validated PotentialSpec.

    Built-in families come with analytic derivatives where smooth (floor has
    none); expression potentials get the symbolic a.e. derivative unless they
    contain floor.  A coarse finiteness check rejects potentials that are not
    locally bounded.
    """
    if spec.kind == "builtin":
        pot = _builtin_potential(spec)
    elif spec.kind == "expression":
        pot = _expression_potential(spec)
    else:
        pot = _tabulated_potential(spec)
    probe = np.array([-97.3, -31.7, -9.1, -1.3, -0.21, 0.17, 0.93, 7.7, 23.9, 88.1])
    vals = pot.value(probe)
    if not np.all(np.isfinite(vals)):
        bad = probe[~np.isfinite(np.asarray(vals))][0]
        raise DomainValidationError(f"potential is not finite at x={bad}")
    return pot


def check_derivative(potential, n_points=100, rel_tol=1e-5, seed=20240229, span=50.0):
    """Max relative discrepancy between the derivative and central differences.

    Points are drawn uniformly in [-span, span], discarding any closer than
    0.05 to a declared kink (and, for floor-bearing potentials, to integers).
    """
    if potential.derivative is None:
        raise DomainValidationError("potential has no derivative field")
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = []
    while len(pts) < n_points:
        x = float(rng.uniform(-span, span))
        if any(abs(x - k) < 0.05 for k in potential.kinks):
            continue
        if potential.spec.unit_breakpoints and abs(x - round(x)) < 0.05:
            continue
        pts.append(x)
    x = np.array(pts)
    h = 1e-6 * np.maximum(1.0, np.abs(x))
    fd = (potential.value(x + h) - potential.value(x - h)) / (2.0 * h)
    d = potential.derivative(x)
    scale = np.maximum(np.abs(d), np.maximum(np.abs(fd), 1e-8))
    return float(np.max(np.abs(fd - d) / scale))


# ---------------------------------------------------------------------------
# Normalized measures
# ---------------------------------------------------------------------------


@dataclass
class Measure1D:
    """A probability measure exp(-V)/Z dx with cached tail machinery."""

    potential: Potential
    log_z: float
    median: float
    truncation: float
    cfg: QuadConfig = field(default_factory=lambda: DEFAULT_QUAD)
    eps_trunc: float = DEFAULT_EPS_TRUNC
    label: str = ""
    _right: tuple | None = field(default=None, repr=False)
    _left: tuple | None = field(default=None, repr=False)
    _sampler: tuple | None = field(default=None, repr=False)

    @property
    def is_even(self):
        return self.potential.is_even

    def neg_v(self, x):
        return -self.potential.value(x)

    # tail ladders: edges plus suffix (right) / prefix (left) log integrals
    # of exp(-V), unnormalized.

    def _ladder_edges(self, a, b):
        n = max(64, int(math.ceil((b - a) / (math.pi / 8.0))))
        edges = list(np.linspace(a, b, n + 1))
        edges.extend(self.potential.breakpoints(a, b))
        return np.unique(np.asarray(edges))

    def right_ladder(self):
        if self._right is None:
            hi = self.truncation + 5.0
            edges = self._ladder_edges(self.median, hi)
            beyond = quad_mod.log_extension(self.neg_v, hi, initial_width=1.0)
            suffix, _, _ = quad_mod.panel_log_suffix(self.neg_v, edges, tail_log=beyond)
            self._right = (edges, suffix)
        return self._right

    def left_ladder(self):
        if self._left is None:
            lo = -self.truncation - 5.0
            edges = self._ladder_edges(lo, self.median)
            beyond = quad_mod.log_extension(lambda x: self.neg_v(-x), -lo, initial_width=1.0)
            prefix, _, _ = quad_mod.panel_log_prefix(self.neg_v, edges)
            self._left = (edges, np.logaddexp(prefix, beyond))
        return self._left


def normalize(potential, cfg=DEFAULT_QUAD, eps_trunc=DEFAULT_EPS_TRUNC, label=""):
    """Build the normalized measure for ``potential``.

    log Z includes the doubling-chunk tails beyond the truncation point, the
    median is found by a monotone root find on the CDF (0 exactly for even
    potentials), and non-integrable potentials raise NonIntegrableError.
    """
    trunc = quad_mod.truncation_point(potential, eps_trunc, cfg)
    neg_v = lambda x: -potential.value(x)
    core = quad_mod.integrate_log(
        neg_v, -trunc, trunc, cfg, breakpoints=potential.breakpoints(-trunc, trunc)
    ).log_value
    tail_r = quad_mod.log_extension(neg_v, trunc, initial_width=1.0)
    tail_l = quad_mod.log_extension(lambda x: neg_v(-x), trunc, initial_width=1.0)
    log_z = float(np.logaddexp(np.logaddexp(core, tail_r), tail_l))
    m = Measure1D(
        potential=potential,
        log_z=log_z,
        median=0.0,
        truncation=trunc,
        cfg=cfg,
        eps_trunc=eps_trunc,
        label=label or _default_label(potential.spec),
    )
    if not potential.is_even:
        m.median = _find_median(m)
    return m


def _default_label(spec):
    if spec.kind == "builtin":
        name = spec.family
        if spec.params:
            name += "(" + ",".join(f"{p:g}" for p in spec.params) + ")"
        return name
    if spec.kind == "expression":
        return spec.expression
    return "tabulated"


def _find_median(measure):
    lo, hi = -measure.truncation, measure.truncation
    f = lambda x: cdf(measure, x) - 0.5
    flo, fhi = f(lo), f(hi)
    if not flo < 0 < fhi:
        raise BracketError("median bracket failed inside [-truncation, truncation]")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < 1e-13:
            return mid
        if fm < 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def log_tail(measure, x):
    """log of mu([x, inf)), exact in log space far beyond float underflow."""
    x = float(x)
    edges, suffix = measure.right_ladder()
    if x < measure.median:
        # 1 - left mass, via the left CDF ladder
        return float(np.log1p(-math.exp(min(log_cdf(measure, x), -1e-18))))
    if x >= edges[-1]:
        val = quad_mod.log_extension(measure.neg_v, x, initial_width=1.0)
        return float(val - measure.log_z)
    i = int(np.searchsorted(edges, x, side="right") - 1)
    partial = -np.inf
    if x < edges[i + 1]:
        bp = measure.potential.breakpoints(x, edges[i + 1])
        partial = quad_mod.integrate_log(
            measure.neg_v, x, float(edges[i + 1]), measure.cfg, breakpoints=bp
        ).log_value
    return float(np.logaddexp(partial, suffix[i + 1]) - measure.log_z)


def log_cdf(measure, x):
    """log of mu((-inf, x])."""
    x = float(x)
    edges, cdf_log = measure.left_ladder()
    if x > measure.median:
        return float(np.log1p(-math.exp(min(log_tail(measure, x), -1e-18))))
    if x <= edges[0]:
        val = quad_mod.log_extension(lambda t: measure.neg_v(-t), -x, initial_width=1.0)
        return float(val - measure.log_z)
    i = int(np.searchsorted(edges, x, side="right") - 1)
    partial = -np.inf
    if x > edges[i]:
        bp = measure.potential.breakpoints(edges[i], x)
        partial = quad_mod.integrate_log(
            measure.neg_v, float(edges[i]), x, measure.cfg, breakpoints=bp
        ).log_value
    return float(np.logaddexp(cdf_log[i], partial) - measure.log_z)


def tail(measure, x):
    """mu([x, inf)) by adaptive quadrature; values below 1e-300 report as 0."""
    lt = log_tail(measure, x)
    if lt < math.log(UNDERFLOW_FLOOR):
        return 0.0
    return math.exp(lt)


def cdf(measure, x):
    lc = log_cdf(measure, x)
    if lc < math.log(UNDERFLOW_FLOOR):
        return 0.0
    return math.exp(lc)


def quantile(measure, p):
    """x with CDF(x) = p to 1e-10 absolute in p (bisection + secant polish)."""
    if not 0.0 < p < 1.0:
        raise DomainValidationError("quantile requires p in (0, 1)")
    if measure.is_even and p == 0.5:
        return 0.0
    # bracket
    lo, hi = measure.median - 1.0, measure.median + 1.0
    while cdf(measure, lo) > p:
        lo = measure.median - 2.0 * (measure.median - lo)
        if measure.median - lo > 1e7:
            raise BracketError("quantile bracket expansion failed (left)")
    while cdf(measure, hi) < p:
        hi = measure.median + 2.0 * (hi - measure.median)
        if hi - measure.median > 1e7:
            raise BracketError("quantile bracket expansion failed (right)")
    flo, fhi = cdf(measure, lo) - p, cdf(measure, hi) - p
    x = 0.5 * (lo + hi)
    for it in range(200):
        fx = cdf(measure, x) - p
        if abs(fx) <= 1e-11 or hi - lo <= 1e-15 * max(1.0, abs(x)):
            return x
        if fx < 0:
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        # alternate secant and bisection so a stale endpoint cannot stall
        if it % 2 == 0 and fhi != flo:
            xs = hi - fhi * (hi - lo) / (fhi - flo)
        else:
            xs = 0.5 * (lo + hi)
        x = xs if lo < xs < hi else 0.5 * (lo + hi)
    return x


def _build_sampler(measure, nodes=32769):
    """Dense Simpson CDF table on [-T, T] used for vectorized inverse sampling."""
    T = measure.truncation
    xs = np.linspace(-T, T, nodes)
    mids = 0.5 * (xs[:-1] + xs[1:])
    h = xs[1] - xs[0]
    dens = lambda t: np.exp(measure.neg_v(t) - measure.log_z)
    fa, fm, fb = dens(xs[:-1]), dens(mids), dens(xs[1:])
    seg = (fa + 4.0 * fm + fb) * (h / 6.0)
    cdf_nodes = cdf(measure, -T) + np.concatenate([[0.0], np.cumsum(seg)])
    return xs, cdf_nodes


def sample(measure, seed, count, _batch_index=0):
    """``count`` i.i.d. draws: inverse CDF applied to a Philox uniform stream.

    Philox is counter-based, so disjoint jumped sub-streams reproduce the same
    values regardless of scheduling; identical (seed, count) give identical
    output.  Draws beyond the truncation interval (total mass <= 2 eps_trunc)
    clamp to its endpoints.
    """
    if count < 1:
        raise DomainValidationError("count must be >= 1")
    if measure._sampler is None:
        measure._sampler = _build_sampler(measure)
    xs, cdf_nodes = measure._sampler
    bitgen = np.random.Philox(key=np.uint64(seed))
    if _batch_index:
        bitgen = bitgen.jumped(_batch_index)
    u = np.random.Generator(bitgen).random(count)
    u = np.clip(u, cdf_nodes[0], cdf_nodes[-1])
    return np.interp(u, cdf_nodes, xs)


def n_profile(measure, t):
    """N(t) = -log((2/Z) int_t^inf exp(-V)); requires an even measure.

    N(0) = 0, N is nondecreasing, and N(t) >= V(t) - O(log) for growing
    potentials; it is the exponential-quantile reparameterization used by the
    transport check.
    """
    if not measure.is_even:
        raise DomainValidationError("n_profile requires an even measure")
    if t < 0:
        raise DomainValidationError("n_profile requires t >= 0")
    return -(math.log(2.0) + log_tail(measure, float(t)))
