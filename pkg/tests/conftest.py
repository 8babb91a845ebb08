"""Shared fixtures: one Newton-computed ball and certificate per degree, built once."""

from __future__ import annotations

import pytest

from feigdim.config import PROFILES, RunConfig
from feigdim.monotonicity import certify
from feigdim.renorm import RenormConfig, make_ball, newton_fixpoint

DEGREES = (2, 3, 4)

# reference values used across suites
REF_DIM = {2: 0.538045143580549911671415567, 3: 0.606, 4: 0.642575065}


def renorm_config(d: int) -> RenormConfig:
    cfg = RunConfig(**PROFILES[d])
    return RenormConfig(degree_d=d, truncation_N=cfg.truncation_N, newton_tol=cfg.newton_tol,
                        seed_coeffs=(cfg.seed,), rho=cfg.rho)


_CACHE: dict = {}


def _build(d):
    if d not in _CACHE:
        rc = renorm_config(d)
        coeffs, res = newton_fixpoint(rc)
        ball = make_ball(rc, coeffs, 1e-9, res, radius_supplied=True)
        _CACHE[d] = (rc, coeffs, res, ball, certify(ball))
    return _CACHE[d]


@pytest.fixture(scope="session")
def fixpoints():
    """degree -> (RenormConfig, center coefficients, residual)."""
    return {d: _build(d)[:3] for d in DEGREES}


@pytest.fixture(scope="session")
def balls():
    return {d: _build(d)[3] for d in DEGREES}


@pytest.fixture(scope="session")
def certs():
    return {d: _build(d)[4] for d in DEGREES}


@pytest.fixture(scope="session")
def ball2(balls):
    return balls[2]


@pytest.fixture(scope="session")
def cert2(certs):
    return certs[2]
