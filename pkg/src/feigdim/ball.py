"""Function balls: a polynomial center in ``u = (|x|/rho)**d`` plus an l1 radius.

Every function in the ball is ``h(x) = sum_k e_k u**k`` with ``e_k`` inside the
stored coefficient intervals up to an extra l1 perturbation of size ``radius``.
Writing ``v = |x|/rho`` the derivatives are

    g'(x)  = sign(x) (d/rho)   v**(d-1) sum_{k>=1} k c_k u**(k-1)
    g''(x) =         (d/rho**2) v**(d-2) sum_{k>=1} k (dk-1) c_k u**(k-1)

which have no singularity at the origin, so no case split at x = 0 is needed
beyond the sign of ``x``.  The perturbation is bounded termwise with
``max_k k t**(k-1)`` and ``max_k dk(dk-1) t**(k-1)`` (``t = u.hi``), both
unimodal in ``k`` and therefore found by a short scan.
"""

from __future__ import annotations

import functools
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, DomainExceeded, ParseError
from .interval import (
    Interval,
    IntervalArray,
    _down,
    _up,
    div_rd,
    div_ru,
    fast_mul_bounds,
    hexf,
    mul_rd,
    mul_ru,
)

FORMAT_VERSION = 1
DEFAULT_T_MAX = 0.999
SOURCES = ("newton_computed", "loaded_from_file")


@dataclass(frozen=True)
class BallProvenance:
    source: str = "newton_computed"
    residual_l1: float = math.nan
    assumed_rigorous: bool = False
    tail_mass: float = math.nan  # l1 mass apply_R pushes past the truncation

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown provenance source {self.source!r}")


# ---------------------------------------------------------------------------
# tail factors
# ---------------------------------------------------------------------------

def _scan_max(term, ratio_le_one, kmax=10**7):
    """Max of a unimodal positive sequence term(1), term(2), ..."""
    best = 0.0
    k = 1
    while k <= kmax:
        val = term(k)
        best = max(best, val)
        if ratio_le_one(k):
            # one more step for safety: the sequence is nonincreasing from here
            return max(best, term(k + 1))
        k += 1
    raise DomainExceeded("tail factor scan did not terminate; t too close to 1")


def k1_factor(t: float) -> float:
    """Upper bound on max_{k>=1} k * t**k (0 <= t < 1)."""
    if not 0.0 <= t < 1.0:
        raise DomainExceeded(f"tail factor needs 0 <= t < 1, got {t!r}")
    if t == 0.0:
        return 0.0
    return _up(t * k1_shift_factor(t))


def k1_shift_factor(t: float) -> float:
    """Upper bound on max_{k>=1} k * t**(k-1)."""
    if not 0.0 <= t < 1.0:
        raise DomainExceeded(f"tail factor needs 0 <= t < 1, got {t!r}")
    if t == 0.0:
        return 1.0
    # ratio of consecutive terms is t (k+1)/k, decreasing in k
    return _scan_max(lambda k: _up(k * _upow(t, k - 1)),
                     lambda k: t * (k + 1) <= k * (1 - 2**-40))


def k2_shift_factor(t: float, d: int) -> float:
    """Upper bound on max_{k>=1} dk(dk-1) * t**(k-1)."""
    if not 0.0 <= t < 1.0:
        raise DomainExceeded(f"tail factor needs 0 <= t < 1, got {t!r}")
    if t == 0.0:
        return float(d * (d - 1))

    def ratio_small(k):
        r = t * (k + 1) * (d * k + d - 1) / (k * (d * k - 1))
        return r <= 1 - 2**-40

    return _scan_max(lambda k: _up(float(d * k * (d * k - 1)) * _upow(t, k - 1)), ratio_small)


_GRID = 2**16


@functools.lru_cache(maxsize=None)
def _k1_cached(t: float) -> float:
    return k1_shift_factor(t)


@functools.lru_cache(maxsize=None)
def _k2_cached(t: float, d: int) -> float:
    return k2_shift_factor(t, d)


def _tail_factors(u_hi, factor):
    """Per-element tail factor at a dyadic grid point >= u_hi.

    The factors increase with t, so rounding t up to the grid is sound, and
    each element's bound depends on its own argument only.
    """
    u_hi = np.asarray(u_hi, dtype=np.float64)
    t = np.ceil(u_hi * _GRID) / _GRID  # exact: power-of-two scaling
    t = np.where(t < 1.0, t, u_hi)
    keys, inv = np.unique(t, return_inverse=True)
    vals = np.array([factor(float(k)) for k in keys])
    return vals[inv].reshape(u_hi.shape)


def _upow(t, n):
    r = 1.0
    b = t
    while n:
        if n & 1:
            r = _up(r * b)
        n >>= 1
        if n:
            b = _up(b * b)
    return float(r)


# ---------------------------------------------------------------------------
# the ball
# ---------------------------------------------------------------------------

def _interval_horner(clo, chi, ulo, uhi):
    """Enclose sum c_k u**k for u >= 0 (arrays ulo, uhi)."""
    plo = np.full_like(ulo, clo[-1])
    phi = np.full_like(uhi, chi[-1])
    with np.errstate(all="ignore"):
        for k in range(len(clo) - 2, -1, -1):
            lo = np.minimum(plo * ulo, plo * uhi)
            hi = np.maximum(phi * ulo, phi * uhi)
            plo = _down(_down(lo) + clo[k])
            phi = _up(_up(hi) + chi[k])
    return plo, phi


def _const(fr_num, fr_den):
    return float(div_rd(fr_num, fr_den)), float(div_ru(fr_num, fr_den))


@dataclass(frozen=True, eq=False)
class FunctionBall:
    degree_d: int
    rho: float
    coeff_lo: np.ndarray
    coeff_hi: np.ndarray
    radius: float
    t_max: float = DEFAULT_T_MAX
    provenance: BallProvenance = field(default_factory=BallProvenance)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lo = np.array(self.coeff_lo, dtype=np.float64)
        hi = np.array(self.coeff_hi, dtype=np.float64)
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "coeff_lo", lo)
        object.__setattr__(self, "coeff_hi", hi)
        if self.degree_d < 2:
            raise ValueError("degree_d must be >= 2")
        if not self.rho > 1.0:
            raise ValueError("rho must exceed 1")
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError("radius must be finite and nonnegative")
        if not 0 < self.t_max < 1:
            raise ValueError("t_max must lie in (0, 1)")
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size < 2:
            raise ValueError("need at least two coefficient intervals")
        if np.any(lo > hi) or not np.all(np.isfinite(lo) & np.isfinite(hi)):
            raise ValueError("malformed coefficient intervals")
        if not lo[0] <= 1.0 <= hi[0]:
            raise ValueError("constant coefficient must enclose 1 (g(0) = 1)")
        self._prepare()

    # -- construction helpers ------------------------------------------------
    @classmethod
    def from_center(cls, degree_d, rho, center, radius, **kw):
        c = np.asarray(center, dtype=np.float64)
        return cls(degree_d, float(rho), c, c.copy(), float(radius), **kw)

    def replace(self, **changes):
        kw = dict(degree_d=self.degree_d, rho=self.rho, coeff_lo=self.coeff_lo,
                  coeff_hi=self.coeff_hi, radius=self.radius, t_max=self.t_max,
                  provenance=self.provenance)
        kw.update(changes)
        return FunctionBall(**kw)

    def _prepare(self):
        d = self.degree_d
        k = np.arange(self.coeff_lo.size, dtype=np.float64)
        lo, hi = self.coeff_lo, self.coeff_hi
        # k*c_k and k(dk-1)*c_k, k >= 1
        f1 = k[1:]
        f2 = k[1:] * (d * k[1:] - 1)
        c = self._cache
        c["d1"] = (np.minimum(mul_rd(f1, lo[1:]), mul_rd(f1, hi[1:])),
                   np.maximum(mul_ru(f1, lo[1:]), mul_ru(f1, hi[1:])))
        c["d2"] = (np.minimum(mul_rd(f2, lo[1:]), mul_rd(f2, hi[1:])),
                   np.maximum(mul_ru(f2, lo[1:]), mul_ru(f2, hi[1:])))
        c["inv_rho"] = _const(1.0, self.rho)
        c["d_over_rho"] = _const(float(d), self.rho)
        rho2 = (float(mul_rd(self.rho, self.rho)), float(mul_ru(self.rho, self.rho)))
        c["d_over_rho2"] = (float(div_rd(float(d), rho2[1])), float(div_ru(float(d), rho2[0])))
        c["inv_rho2"] = (float(div_rd(1.0, rho2[1])), float(div_ru(1.0, rho2[0])))

    # -- properties ----------------------------------------------------------
    @property
    def truncation_N(self) -> int:
        return self.coeff_lo.size - 1

    @property
    def coeffs(self) -> IntervalArray:
        return IntervalArray(self.coeff_lo, self.coeff_hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * self.coeff_lo + 0.5 * self.coeff_hi

    @property
    def domain_bound(self) -> float:
        """Largest |x| accepted by the evaluators."""
        return float(_down(self.rho * self.t_max))

    @property
    def checksum(self) -> str:
        if "checksum" not in self._cache:
            self._cache["checksum"] = hashlib.sha256(
                _body_text(self).encode("ascii")).hexdigest()
        return self._cache["checksum"]

    # -- shared argument reduction -----------------------------------------
    def _reduce(self, X):
        """Return (sign info, v bounds, u bounds) for interval input X."""
        xlo = np.atleast_1d(np.asarray(X.lo, dtype=np.float64))
        xhi = np.atleast_1d(np.asarray(X.hi, dtype=np.float64))
        alo = np.where(xlo > 0, xlo, np.where(xhi < 0, -xhi, 0.0))
        ahi = np.maximum(np.abs(xlo), np.abs(xhi))
        ir_lo, ir_hi = self._cache["inv_rho"]
        with np.errstate(all="ignore"):
            vlo = np.maximum(_down(alo * ir_lo), 0.0)
            vhi = _up(ahi * ir_hi)
        vlo = np.where(alo == 0, 0.0, vlo)
        if np.any(vhi > self.t_max) or not np.all(np.isfinite(vhi)):
            bad = float(np.max(ahi))
            raise DomainExceeded(
                f"|x| up to {bad!r} exceeds rho*t_max = {self.rho * self.t_max!r}")
        ulo, uhi = _pow_pair(vlo, vhi, self.degree_d)
        return xlo, xhi, vlo, vhi, ulo, uhi

    def _wrap(self, X, lo, hi):
        if isinstance(X, IntervalArray):
            return IntervalArray(lo, hi, check=False)
        return Interval(float(lo[0]), float(hi[0]))

    # -- evaluators ----------------------------------------------------------
    def eval_bounds(self, X):
        _, _, _, _, ulo, uhi = self._reduce(X)
        plo, phi = _interval_horner(self.coeff_lo, self.coeff_hi, ulo, uhi)
        if self.radius:
            plo = _down(plo - self.radius)
            phi = _up(phi + self.radius)
        return plo, phi

    def eval(self, X):
        X = _as_interval(X)
        return self._wrap(X, *self.eval_bounds(X))

    def eval_deriv(self, X):
        X = _as_interval(X)
        xlo, xhi, vlo, vhi, ulo, uhi = self._reduce(X)
        d = self.degree_d
        slo, shi = _interval_horner(*self._cache["d1"], ulo, uhi)
        if self.radius:
            m = _tail_factors(uhi, _k1_cached)
            tail = _up(self.radius * m)
            slo, shi = _down(slo - tail), _up(shi + tail)
        wlo, whi = _pow_pair(vlo, vhi, d - 1)
        plo, phi = fast_mul_bounds(wlo, whi, slo, shi)
        clo, chi = self._cache["d_over_rho"]
        plo, phi = fast_mul_bounds(plo, phi, clo, chi)
        # odd in x: flip for negative arguments, hull across zero
        neg = xhi <= 0
        mixed = (xlo < 0) & (xhi > 0)
        lo = np.where(neg, -phi, np.where(mixed, np.minimum(plo, -phi), plo))
        hi = np.where(neg, -plo, np.where(mixed, np.maximum(phi, -plo), phi))
        return self._wrap(X, lo, hi)

    def eval_second_deriv(self, X):
        X = _as_interval(X)
        _, _, vlo, vhi, ulo, uhi = self._reduce(X)
        d = self.degree_d
        slo, shi = _interval_horner(*self._cache["d2"], ulo, uhi)
        clo, chi = self._cache["d_over_rho2"]
        plo, phi = fast_mul_bounds(slo, shi, clo, chi)
        if self.radius:
            m = _tail_factors(uhi, lambda t: _k2_cached(t, d))
            tail = _up(_up(self.radius * m) * self._cache["inv_rho2"][1])
            plo, phi = _down(plo - tail), _up(phi + tail)
        wlo, whi = _pow_pair(vlo, vhi, d - 2)
        lo, hi = fast_mul_bounds(wlo, whi, plo, phi)
        return self._wrap(X, lo, hi)

    # -- float helpers (non-rigorous, for seeding searches) ------------------
    def center_value(self, x):
        u = (np.abs(np.asarray(x, dtype=np.float64)) / self.rho) ** self.degree_d
        return np.polynomial.polynomial.polyval(u, self.center)

    def center_deriv(self, x):
        x = np.asarray(x, dtype=np.float64)
        d = self.degree_d
        v = np.abs(x) / self.rho
        k = np.arange(1, self.truncation_N + 1)
        s = np.polynomial.polynomial.polyval(v**d, k * self.center[1:])
        return np.sign(x) * (d / self.rho) * v ** (d - 1) * s


def _pow_pair(lo, hi, k):
    """[lo,hi]**k for 0 <= lo <= hi, widened by one ulp per product."""
    if k == 0:
        return np.ones_like(lo), np.ones_like(hi)
    rlo, rhi = lo, hi
    with np.errstate(all="ignore"):
        for _ in range(k - 1):
            rlo = np.maximum(_down(rlo * lo), 0.0)
            rhi = _up(rhi * hi)
    if k > 1:
        rlo = np.where(lo == 0, 0.0, rlo)
    return rlo, rhi


def _as_interval(X):
    if isinstance(X, (Interval, IntervalArray)):
        return X
    return Interval.from_value(X)


# ---------------------------------------------------------------------------
# identity check
# ---------------------------------------------------------------------------

def deriv_identity_check(ball: FunctionBall, alpha: Interval, X):
    """Both sides of g'(x) = g'(g(x/alpha)) g'(x/alpha), as a consistency test.

    For odd degree the inner scale is -1/alpha and differentiating
    alpha*g(g(s x)) picks up alpha*s = -1.
    """
    X = _as_interval(X)
    lhs = ball.eval_deriv(X)
    s = Interval(1.0, 1.0) / alpha
    sign = 1.0
    if ball.degree_d % 2:
        s, sign = -s, -1.0
    inner = s * X
    rhs = ball.eval_deriv(ball.eval(inner)) * ball.eval_deriv(inner)
    return lhs, rhs * sign


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_HEADER_KEYS = ("format_version", "degree_d", "rho", "radius", "truncation_N",
                "t_max", "source", "residual_l1", "tail_mass", "assumed_rigorous")


def _body_text(ball: FunctionBall) -> str:
    p = ball.provenance
    lines = [
        f"format_version = {FORMAT_VERSION}",
        f"degree_d = {ball.degree_d}",
        f"rho = {hexf(ball.rho)}",
        f"radius = {hexf(ball.radius)}",
        f"truncation_N = {ball.truncation_N}",
        f"t_max = {hexf(ball.t_max)}",
        f"residual_l1 = {hexf(p.residual_l1)}",
        f"tail_mass = {hexf(p.tail_mass)}",
        f"assumed_rigorous = {'true' if p.assumed_rigorous else 'false'}",
    ]
    for k, (lo, hi) in enumerate(zip(ball.coeff_lo, ball.coeff_hi)):
        lines.append(f"c {k} {hexf(lo)} {hexf(hi)}")
    return "\n".join(lines) + "\n"


def save_ball(ball: FunctionBall, path) -> str:
    """Write ``ball`` as text; returns the checksum line value."""
    body = _body_text(ball)
    digest = hashlib.sha256(body.encode("ascii")).hexdigest()
    text = "# function ball: g(x) = sum c_k ((|x|/rho)**d)**k, l1 radius\n"
    text += f"source = {ball.provenance.source}\n" + body
    text += f"checksum = {digest}\n"
    Path(path).write_text(text, encoding="ascii")
    return digest


def _parse_float(text, line, key):
    try:
        if "0x" in text.lower() or text.strip().lower() in ("nan", "inf", "-inf"):
            return float.fromhex(text)
        return float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line, key) from None


def _parse_int(text, line, key):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"not an integer: {text!r}", line, key) from None


def load_ball(path) -> FunctionBall:
    raw = Path(path).read_text(encoding="ascii").splitlines()
    header: dict = {}
    coeffs: dict = {}
    checksum = None
    body_lines = []
    for lineno, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("c "):
            parts = stripped.split()
            if len(parts) != 4:
                raise ParseError("coefficient line needs index, lo, hi", lineno, "c")
            k = _parse_int(parts[1], lineno, "c")
            lo = _parse_float(parts[2], lineno, f"c{k}.lo")
            hi = _parse_float(parts[3], lineno, f"c{k}.hi")
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ParseError("coefficient interval malformed", lineno, f"c{k}")
            if k in coeffs:
                raise ParseError("duplicate coefficient", lineno, f"c{k}")
            coeffs[k] = (lo, hi)
            body_lines.append(stripped)
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key == "checksum":
            checksum = (value, lineno)
            continue
        if key not in _HEADER_KEYS:
            raise ParseError("unknown header key", lineno, key)
        header[key] = (value, lineno)
        if key != "source":  # how the ball was obtained is not part of its content
            body_lines.append(f"{key} = {value}")

    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(f"missing header fields {missing}", None, missing[0])
    if checksum is None:
        raise ParseError("missing checksum", None, "checksum")

    def get(key, conv):
        value, ln = header[key]
        return conv(value, ln, key)

    version = get("format_version", _parse_int)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version}", header["format_version"][1],
                         "format_version")
    d = get("degree_d", _parse_int)
    if d < 2:
        raise ParseError("degree_d must be >= 2", header["degree_d"][1], "degree_d")
    rho = get("rho", _parse_float)
    if not (math.isfinite(rho) and rho > 1.0):
        raise ParseError("rho must be a finite number > 1", header["rho"][1], "rho")
    radius = get("radius", _parse_float)
    if not (math.isfinite(radius) and radius >= 0):
        raise ParseError("radius must be finite and nonnegative", header["radius"][1], "radius")
    n = get("truncation_N", _parse_int)
    if n < 1:
        raise ParseError("truncation_N must be positive", header["truncation_N"][1],
                         "truncation_N")
    t_max = get("t_max", _parse_float)
    if not 0 < t_max < 1:
        raise ParseError("t_max must lie in (0, 1)", header["t_max"][1], "t_max")
    source = header["source"][0]
    if source not in SOURCES:
        raise ParseError(f"unknown source {source!r}", header["source"][1], "source")
    residual = get("residual_l1", _parse_float)
    tail = get("tail_mass", _parse_float)
    rig_text, rig_line = header["assumed_rigorous"]
    if rig_text not in ("true", "false"):
        raise ParseError("assumed_rigorous must be true or false", rig_line, "assumed_rigorous")
    rigorous = rig_text == "true"
    if rigorous and radius <= 0:
        raise ParseError("assumed_rigorous needs a positive radius", rig_line, "assumed_rigorous")
    if sorted(coeffs) != list(range(n + 1)):
        raise ParseError(f"expected coefficients 0..{n}, found {len(coeffs)}", None, "c")

    lo = np.array([coeffs[k][0] for k in range(n + 1)])
    hi = np.array([coeffs[k][1] for k in range(n + 1)])
    prov = BallProvenance(source="loaded_from_file", residual_l1=residual,
                          assumed_rigorous=rigorous, tail_mass=tail)
    try:
        ball = FunctionBall(d, rho, lo, hi, radius, t_max=t_max, provenance=prov)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    # checksum covers the body text as written and the canonical re-rendering
    digest = hashlib.sha256(("\n".join(body_lines) + "\n").encode("ascii")).hexdigest()
    if digest != checksum[0] or ball.checksum != checksum[0]:
        raise ChecksumMismatch(f"{path}: checksum does not match contents")
    return ball
