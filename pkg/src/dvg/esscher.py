"""Conditional Esscher change of measure for the dynamic VG model.

The one-period m.g.f. under the historical measure is

    M_t(c) = exp(c r) D(c)^(-a h_t),   D(c) = 1 - c lam - c^2 sigma^2 / 2.

The Esscher parameter solves M_t(theta + 1) / M_t(theta) = e^r, i.e.
D(theta + 1) = D(theta), giving theta* = -(lam / sigma^2 + 1/2) for every t.
Tilting by exp(theta* Y_t) turns the mixing variable into Gamma(a h_t, D(theta*))
and the return into a VG with

    sigma_Q^2 = sigma^2 / D(theta*),   lam_Q = (lam + theta* sigma^2) / D(theta*) = -sigma_Q^2 / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DVGParams, QParams
from .errors import DomainError, MeasureChangeError
from .mixture import VGParams, vg_log_mgf

__all__ = [
    "EsscherMap",
    "esscher_parameter",
    "esscher_map",
    "to_risk_neutral",
    "radon_nikodym_weight",
    "lambda_q_closed_form",
    "one_step_mgf",
]


@dataclass(frozen=True)
class EsscherMap:
    theta_star: float
    denominator: float
    lambdaQ: float
    sigmaQ: float
    scale: float

    def as_dict(self) -> dict:
        return {"theta_star": self.theta_star, "denominator": self.denominator,
                "lambdaQ": self.lambdaQ, "sigmaQ": self.sigmaQ, "scale": self.scale}


def _mgf_params(p: DVGParams, h: float) -> VGParams:
    # conditional law of Y_t given h_t: VG(mu0=r, mu=lam, sigma, shape a h, rate 1)
    return VGParams(mu0=p.r, mu=p.lam, sigma=p.sigma, a=p.a * h, b=1.0)


def one_step_mgf(p: DVGParams, c, h=None):
    """M_t(c) = E_{t-1}[exp(c Y_t)] given h_t (defaults to ``p.h1``)."""
    h = p.h1 if h is None else h
    return np.exp(vg_log_mgf(_mgf_params(p, h), c))


def esscher_parameter(p: DVGParams, h=None, rtol: float = 1e-10) -> float:
    """theta* = -(lam / sigma^2 + 1/2), verified against the m.g.f. ratio."""
    if not p.sigma > 0:
        raise MeasureChangeError("the Esscher parameter needs sigma > 0")
    theta = -(p.lam / p.sigma ** 2 + 0.5)
    denom = 1 - theta * p.lam - theta ** 2 * p.sigma ** 2 / 2
    vg = _mgf_params(p, p.h1 if h is None else h)
    try:
        log_ratio = vg_log_mgf(vg, theta + 1) - vg_log_mgf(vg, theta)
    except DomainError as exc:
        raise MeasureChangeError(
            f"m.g.f. undefined at the Esscher parameter {theta}: D(theta*) = {denom}") from exc
    if abs(math.expm1(log_ratio - p.r)) > rtol:
        raise MeasureChangeError(
            f"Esscher equation not satisfied: M(theta+1)/M(theta) = {math.exp(log_ratio)!r}, "
            f"e^r = {math.exp(p.r)!r}, D(theta*) = {denom}")
    return theta


def lambda_q_closed_form(lam: float, sigma: float) -> float:
    """lam_Q written directly in the historical parameters: 4 s^4 / (s^4 - 4 lam^2 - 8 s^2)."""
    s2 = sigma ** 2
    return 4 * s2 ** 2 / (s2 ** 2 - 4 * lam ** 2 - 8 * s2)


def esscher_map(p: DVGParams) -> EsscherMap:
    theta = esscher_parameter(p)
    denom = 1 - theta * p.lam - theta ** 2 * p.sigma ** 2 / 2
    if not denom > 0:
        raise MeasureChangeError(f"measure change fails: D(theta*) = {denom} <= 0")
    sigma_q2 = p.sigma ** 2 / denom
    lam_q = -sigma_q2 / 2
    # the tilted drift must agree with the martingale restriction
    tilted = (p.lam + theta * p.sigma ** 2) / denom
    if not math.isclose(tilted, lam_q, rel_tol=1e-12, abs_tol=1e-300):
        raise MeasureChangeError(f"tilted drift {tilted} differs from -sigma_Q^2/2 = {lam_q}")
    scale = p.a * (sigma_q2 + lam_q ** 2)
    return EsscherMap(theta_star=theta, denominator=denom, lambdaQ=lam_q,
                      sigmaQ=math.sqrt(sigma_q2), scale=scale)


def to_risk_neutral(p: DVGParams, identify: bool = True, tilt_state: bool = True) -> QParams:
    """Map historical parameters to the Esscher risk-neutral model.

    With ``identify`` the state is rescaled to the risk-neutral conditional
    variance h^Q = a (sigma_Q^2 + lam_Q^2) h, so a^Q = 1 / (sigma_Q^2 + lam_Q^2);
    otherwise ``a`` and the state keep their historical scale.  Both choices
    describe the same law.

    ``tilt_state`` accounts for the tilt of the mixing variable: a unit-rate
    Gamma draw under Q equals D(theta*) V, so the loading on it becomes
    alpha1 / D(theta*).  Setting it to False keeps alpha1 untouched, which
    is only exact when D(theta*) = 1.
    """
    m = esscher_map(p)
    alpha1 = p.alpha1 / m.denominator if tilt_state else p.alpha1
    if identify:
        s = m.scale
        return QParams(r=p.r, sigma=m.sigmaQ, a=1.0 / (m.sigmaQ ** 2 + m.lambdaQ ** 2),
                       alpha0=s * p.alpha0, alpha1=s * alpha1, beta1=p.beta1, h1=s * p.h1)
    return QParams(r=p.r, sigma=m.sigmaQ, a=p.a, alpha0=p.alpha0, alpha1=alpha1,
                   beta1=p.beta1, h1=p.h1)


def radon_nikodym_weight(p: DVGParams, Y, h):
    """Local density Lambda_t = exp(theta* Y_t) / M_t(theta*) given the state h_t."""
    theta = esscher_parameter(p)
    h = np.asarray(h, dtype=float)
    denom = 1 - theta * p.lam - theta ** 2 * p.sigma ** 2 / 2
    log_m = theta * p.r - p.a * h * math.log(denom)
    return np.exp(theta * np.asarray(Y) - log_m)
