"""Sign certificates for g' and g'' on J = [g(g(1)), 1], orbit enclosures and cover rectangles.

A certificate is an adaptive bisection cover of a slightly widened copy of J
on which every leaf enclosure of g'' (and of g') has a negative upper
endpoint.  It is bound to one ball through the ball checksum.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ball import FunctionBall
from .errors import CertificateError, Inconclusive, PositiveSignWitness
from .interval import Interval, IntervalArray, _down, _up, hexf
from .renorm import RenormConstants, alpha_of

DEFAULT_MARGIN = 1e-6
DEFAULT_MAX_DEPTH = {2: 24, 3: 24, 4: 30}
CERT_VERSION = 1

_EVALUATORS = {
    "g": FunctionBall.eval,
    "g'": FunctionBall.eval_deriv,
    "g''": FunctionBall.eval_second_deriv,
}


@dataclass(frozen=True)
class SignCover:
    """Leaves of an adaptive cover on which ``f`` was shown negative."""
    which: str
    leaves: tuple  # of (Interval, Interval) pairs sorted by subinterval
    max_depth_used: int

    @property
    def union(self) -> Interval:
        return Interval(self.leaves[0][0].lo, self.leaves[-1][0].hi)


@dataclass(frozen=True)
class MonotonicityCertificate:
    degree_d: int
    J: Interval
    domain: Interval          # J widened by the margin; the inversion bracket
    gprime_negative: bool
    gsecond_negative: bool
    cover: tuple              # g'' leaves: (subinterval, enclosure)
    max_depth_used: int
    min_abs_gprime: float     # lower bound for |g'| on the domain
    alpha: Interval
    alpha_inv: Interval
    g_range: Interval         # enclosure of g(domain)
    ball_checksum: str
    gprime_leaves: int = 0

    @property
    def valid(self) -> bool:
        return self.gprime_negative and self.gsecond_negative

    def check_ball(self, ball: FunctionBall):
        if ball.checksum != self.ball_checksum:
            raise CertificateError("certificate was issued for a different ball")
        if not self.valid:
            raise CertificateError("certificate does not establish g' < 0 and g'' < 0")

    def constants(self) -> RenormConstants:
        return RenormConstants(self.alpha, self.alpha_inv, self.degree_d)


@dataclass(frozen=True)
class OrbitEnclosure:
    points: tuple


# ---------------------------------------------------------------------------
# adaptive sign verification
# ---------------------------------------------------------------------------

def verify_sign_on(f: str, ball: FunctionBall, K: Interval, max_depth: int) -> SignCover:
    """Bisect ``K`` until the enclosure of ``f`` is negative on every piece.

    Pieces are processed breadth first; the first undecided piece at
    ``max_depth`` (lowest left endpoint) is reported.
    """
    if f not in ("g'", "g''"):
        raise ValueError("f must be \"g'\" or \"g''\"")
    evaluate = _EVALUATORS[f]
    lo = np.array([K.lo])
    hi = np.array([K.hi])
    leaves_lo, leaves_hi, enc_lo, enc_hi = [], [], [], []
    depth = 0
    used = 0
    while lo.size:
        enc = evaluate(ball, IntervalArray(lo, hi, check=False))
        neg = enc.hi < 0
        if np.any(neg):
            leaves_lo.append(lo[neg])
            leaves_hi.append(hi[neg])
            enc_lo.append(enc.lo[neg])
            enc_hi.append(enc.hi[neg])
            used = depth
        pos = enc.lo > 0
        if np.any(pos):
            i = int(np.flatnonzero(pos)[0])
            raise PositiveSignWitness(
                f"{f} is positive on [{float(lo[i])!r}, {float(hi[i])!r}]",
                subinterval=Interval(float(lo[i]), float(hi[i])),
                enclosure=Interval(float(enc.lo[i]), float(enc.hi[i])))
        rest = ~neg
        if not np.any(rest):
            break
        lo, hi = lo[rest], hi[rest]
        if depth >= max_depth:
            order = np.argsort(lo, kind="stable")
            i = int(order[0])
            sub = Interval(float(lo[i]), float(hi[i]))
            raise Inconclusive(
                f"sign of {f} undetermined on {sub} at depth {depth} "
                f"({lo.size} piece(s) left)", subinterval=sub, depth=depth)
        mid = 0.5 * lo + 0.5 * hi
        if np.any((mid <= lo) | (mid >= hi)):
            raise Inconclusive(f"cannot split further for {f}", depth=depth)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        depth += 1
    alo = np.concatenate(leaves_lo)
    order = np.argsort(alo, kind="stable")
    alo = alo[order]
    ahi = np.concatenate(leaves_hi)[order]
    elo = np.concatenate(enc_lo)[order]
    ehi = np.concatenate(enc_hi)[order]
    # leaves must tile K without gaps
    if alo[0] != K.lo or ahi[-1] != K.hi or np.any(ahi[:-1] != alo[1:]):
        raise CertificateError("internal error: cover leaves do not tile the interval")
    leaves = tuple((Interval(a, b), Interval(c, e)) for a, b, c, e in zip(alo, ahi, elo, ehi))
    return SignCover(f, leaves, used)


# ---------------------------------------------------------------------------
# J, orbit, certificate assembly
# ---------------------------------------------------------------------------

def compute_J(ball: FunctionBall) -> Interval:
    """Enclosure of [g(g(1)), 1]; the upper end is exactly 1."""
    g1 = ball.eval(Interval(1.0, 1.0))
    gg1 = ball.eval(g1)
    if not gg1.hi < 1.0:
        raise CertificateError(f"g(g(1)) enclosure {gg1} does not lie below 1")
    return Interval(gg1.lo, 1.0)


def alpha_gJ_consistent(ball: FunctionBall, consts: RenormConstants) -> bool:
    """alpha*g maps the endpoints of J onto those of I = [1/alpha, 1].

    Uses the enclosure of g(g(1)) rather than the rounded endpoint of J so the
    check carries the same slack as the enclosures themselves.
    """
    g1 = ball.eval(Interval(1.0, 1.0))
    left = consts.alpha * ball.eval(ball.eval(g1))
    right = consts.alpha * g1
    return left.overlaps(consts.alpha_inv) and right.contains(1.0)


def orbit_enclosures(ball: FunctionBall, count: int) -> OrbitEnclosure:
    """Interval iterates of g from 0: (0, 1, 1/alpha, g(1/alpha), 1/alpha**2, ...)."""
    if count < 2:
        raise ValueError("count must be at least 2")
    # g(0) = 1 holds exactly by normalization, so iterate on from [1, 1]
    pts = [Interval(0.0, 0.0), ball.eval(Interval(0.0, 0.0))]
    x = Interval(1.0, 1.0)
    while len(pts) < count:
        x = ball.eval(x)
        pts.append(x)
    return OrbitEnclosure(tuple(pts))


def certify(ball: FunctionBall, max_depth: int | None = None,
            margin: float = DEFAULT_MARGIN) -> MonotonicityCertificate:
    """Certify g'' < 0 and g' < 0 on J widened by ``margin``."""
    if max_depth is None:
        max_depth = DEFAULT_MAX_DEPTH.get(ball.degree_d, 30)
    consts = alpha_of(ball)
    J = compute_J(ball)
    domain = Interval(_down(J.lo - margin), _up(J.hi + margin))
    second = verify_sign_on("g''", ball, domain, max_depth)
    first = verify_sign_on("g'", ball, domain, max_depth)
    min_abs = min(-enc.hi for _, enc in first.leaves)
    g_hi = ball.eval(Interval(domain.lo, domain.lo))  # g decreasing: largest value on the left
    g_lo = ball.eval(Interval(domain.hi, domain.hi))
    return MonotonicityCertificate(
        degree_d=ball.degree_d, J=J, domain=domain,
        gprime_negative=True, gsecond_negative=True,
        cover=second.leaves, max_depth_used=max(second.max_depth_used, first.max_depth_used),
        min_abs_gprime=float(_down(min_abs)),
        alpha=consts.alpha, alpha_inv=consts.alpha_inv,
        g_range=Interval(g_lo.lo, g_hi.hi),
        ball_checksum=ball.checksum, gprime_leaves=len(first.leaves))


# ---------------------------------------------------------------------------
# rectangles for figures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rect:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    tag: str
    degree: int


PANELS = ("g", "g'", "g''", "psi0", "psi1", "psi0'", "psi1'")


def panel_domain(which: str, cert: MonotonicityCertificate) -> Interval:
    if which in ("g", "g'"):
        return Interval(0.0, 1.0)
    if which == "g''":
        return cert.J
    return Interval(cert.alpha_inv.lo, 1.0)


def _grid(K: Interval, grid: int):
    edges = np.linspace(K.lo, K.hi, grid + 1)
    edges[0], edges[-1] = K.lo, K.hi
    return edges[:-1], edges[1:]


def emit_cover_rectangles(ball: FunctionBall, which: str, grid: int,
                          cert: MonotonicityCertificate | None = None,
                          domain: Interval | None = None) -> list:
    """Rectangles X x f(X) over a uniform grid of the panel domain."""
    if grid < 1:
        raise ValueError("grid must be >= 1")
    if which not in PANELS:
        raise ValueError(f"unknown panel {which!r}; choose from {PANELS}")
    if cert is None:
        cert = certify(ball)
    K = domain if domain is not None else panel_domain(which, cert)
    xlo, xhi = _grid(K, grid)
    X = IntervalArray(xlo, xhi, check=False)
    d = ball.degree_d
    if which in _EVALUATORS:
        Y = _EVALUATORS[which](ball, X)
    else:
        from . import ifs
        Y = ifs.panel_enclosure(which, X, ball, cert)
    return [Rect(float(a), float(b), float(c), float(e), which, d)
            for a, b, c, e in zip(xlo, xhi, Y.lo, Y.hi)]


def cover_rectangles_from_certificate(cert: MonotonicityCertificate) -> list:
    """The certified g'' leaves as rectangles (the refined cover)."""
    return [Rect(x.lo, x.hi, y.lo, y.hi, "g''-cert", cert.degree_d) for x, y in cert.cover]


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _iv(x: Interval):
    return [hexf(x.lo), hexf(x.hi)]


def _vi(pair) -> Interval:
    return Interval(float.fromhex(pair[0]), float.fromhex(pair[1]))


def certificate_to_dict(cert: MonotonicityCertificate) -> dict:
    return {
        "format_version": CERT_VERSION,
        "degree_d": cert.degree_d,
        "ball_checksum": cert.ball_checksum,
        "J": _iv(cert.J),
        "domain": _iv(cert.domain),
        "gprime_negative": cert.gprime_negative,
        "gsecond_negative": cert.gsecond_negative,
        "max_depth_used": cert.max_depth_used,
        "min_abs_gprime": hexf(cert.min_abs_gprime),
        "alpha": _iv(cert.alpha),
        "alpha_inv": _iv(cert.alpha_inv),
        "g_range": _iv(cert.g_range),
        "gprime_leaves": cert.gprime_leaves,
        "cover": [_iv(x) + _iv(y) for x, y in cert.cover],
    }


def save_certificate(cert: MonotonicityCertificate, path) -> None:
    body = certificate_to_dict(cert)
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    body["checksum"] = hashlib.sha256(text.encode("ascii")).hexdigest()
    Path(path).write_text(json.dumps(body, sort_keys=True, indent=1) + "\n", encoding="ascii")


def load_certificate(path, ball: FunctionBall | None = None) -> MonotonicityCertificate:
    try:
        body = json.loads(Path(path).read_text(encoding="ascii"))
    except (OSError, ValueError) as exc:
        raise CertificateError(f"cannot read certificate {path}: {exc}") from None
    stored = body.pop("checksum", None)
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    if stored != hashlib.sha256(text.encode("ascii")).hexdigest():
        raise CertificateError(f"certificate {path} fails its own checksum")
    try:
        if body["format_version"] != CERT_VERSION:
            raise CertificateError("unsupported certificate version")
        cert = MonotonicityCertificate(
            degree_d=int(body["degree_d"]), J=_vi(body["J"]), domain=_vi(body["domain"]),
            gprime_negative=bool(body["gprime_negative"]),
            gsecond_negative=bool(body["gsecond_negative"]),
            cover=tuple((_vi(r[:2]), _vi(r[2:])) for r in body["cover"]),
            max_depth_used=int(body["max_depth_used"]),
            min_abs_gprime=float.fromhex(body["min_abs_gprime"]),
            alpha=_vi(body["alpha"]), alpha_inv=_vi(body["alpha_inv"]),
            g_range=_vi(body["g_range"]), ball_checksum=str(body["ball_checksum"]),
            gprime_leaves=int(body.get("gprime_leaves", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateError(f"malformed certificate {path}: {exc}") from None
    if ball is not None:
        cert.check_ball(ball)
    return cert
