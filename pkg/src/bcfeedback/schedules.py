"""The three concrete parameter schedules.

All schedules are data independent: the coefficients for step n never look at
channel outputs, only at deterministically propagated second moments.  A
schedule can therefore be unrolled once per configuration and shared across
Monte Carlo trials.

Shared bookkeeping is the normalised source covariance R = E[s s^T] / p_share
with p_share = P / M.  One channel use with StepParams (alpha, beta, a, b)
updates it exactly:

    R' = D^-1 (R - beta (b w^T + w b^T)
               + b b^T (beta^2 q + sigma^2 / p_share)
               + diag(b^2 * private_vars) / p_share) D^-1

with w = R alpha, q = alpha^T R alpha, D = diag(a).  ``covariance_update``
implements this and each schedule leans on it rather than carrying its own
specialised recursion, so the simulated second moments and the scheduled
coefficients can never drift apart silently.

* OzarowSchedule (two receivers): tracks the scalar source correlation rho.
  In ``tracked`` mode rho follows the exact recursion from rho_1 = 0; in
  ``pinned`` mode it alternates between +rho* and -rho*, the stationary pair.
* DegradedSchedule: every receiver sees the same output (private variances
  zero); coefficients are the minimum-mean-square ones computed from R, which
  keeps R's diagonal exactly 1 while its eigenvalues cycle toward the
  sum-rate fixed point.
* SymmetricSchedule: private noises only, constant (a, b, gamma) from the
  warmup plan; Hadamard columns stay eigenvectors of G = R - gamma I while
  the eigenvalue assignment rotates one column per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelConfig
from .core import StepParams
from .fixedpoint import (
    WarmupPlan,
    build_warmup_plan,
    rho_map,
    solve_lambda_bc,
    solve_rho,
)
from .numerics import sylvester_hadamard

__all__ = [
    "ScheduleInvariantError",
    "ScheduleStep",
    "covariance_update",
    "OzarowSchedule",
    "DegradedSchedule",
    "SymmetricSchedule",
    "make_schedule",
    "SCHEME_IDS",
    "hadamard_eigen_profile",
]

SCHEME_IDS = ("ozarow2", "degraded", "symmetric")


class ScheduleInvariantError(RuntimeError):
    """A tracked second-moment invariant failed; indicates an implementation bug."""


@dataclass(frozen=True)
class ScheduleStep:
    """One unrolled step: coefficients plus the analytic transmit power E[x_n^2]."""

    params: StepParams
    expected_power: float


def covariance_update(R: np.ndarray, params: StepParams, channel: ChannelConfig,
                      p_share: float) -> np.ndarray:
    """Exact one-step update of the normalised source covariance."""
    R = np.asarray(R, dtype=float)
    m = channel.num_receivers
    if R.shape != (m, m):
        raise ValueError(f"R must be {m}x{m}")
    if not p_share > 0.0:
        raise ValueError("p_share must be positive")
    alpha, beta, a, b = params.alpha, params.beta, params.a, params.b
    if alpha.shape != (m,):
        raise ValueError("params width does not match the channel")
    w = R @ alpha
    q = float(alpha @ w)
    cross = beta * (np.outer(b, w) + np.outer(w, b))
    out_var = beta * beta * q + channel.common_noise_var / p_share
    noise_diag = np.diag(b * b * np.asarray(channel.private_noise_vars)) / p_share
    new = (R - cross + np.outer(b, b) * out_var + noise_diag) / np.outer(a, a)
    return 0.5 * (new + new.T)


def hadamard_eigen_profile(G: np.ndarray, columns: np.ndarray):
    """Rayleigh quotients of G along each Hadamard column and the residual norms.

    columns is the (M, M) array of +-1 columns; returns (values, residuals)
    where values[j] = h_j^T G h_j / M and residuals[j] = ||G h_j - values[j] h_j||.
    """
    m = G.shape[0]
    vals = np.einsum("im,ij,jm->m", columns, G, columns) / m
    resid = np.linalg.norm(G @ columns - columns * vals, axis=0)
    return vals, resid


# ----------------------------------------------------------------------------
# two-user correlation-tracking schedule
# ----------------------------------------------------------------------------


class OzarowSchedule:
    """Two-receiver schedule driven by the alternating source correlation.

    mode="tracked" follows the exact correlation recursion from rho = 0 (the
    sources start independent), so the analytic transmit power is the budget P
    at every single step.  mode="pinned" generates coefficients from the
    stationary pair (-1)^(n+1) rho*; the true second moments then approach the
    assumed ones only as the transient decays.
    """

    def __init__(self, channel: ChannelConfig, g: float = 1.0, mode: str = "tracked"):
        if channel.num_receivers != 2:
            raise ValueError("this schedule is defined for exactly 2 receivers")
        if mode not in ("tracked", "pinned"):
            raise ValueError(f"unknown mode {mode!r}")
        self.channel = channel
        self.g = float(g)
        self.mode = mode
        self.p0 = channel.power_budget / 2.0
        self.fixed_point = solve_rho(
            channel.power_budget,
            channel.common_noise_var,
            channel.private_noise_vars[0],
            channel.private_noise_vars[1],
            self.g,
        )
        self.rho = 0.0 if mode == "tracked" else self.fixed_point.rho
        self.step_index = 1

    def rate_limits(self) -> np.ndarray:
        fp = self.fixed_point
        return np.array([-math.log2(fp.a1_star), -math.log2(fp.a2_star)])

    def step(self) -> ScheduleStep:
        ch = self.channel
        p = ch.power_budget
        g = self.g
        sigma2 = ch.common_noise_var
        s1, s2 = ch.private_noise_vars
        rho = self.rho
        sign = 1.0 if rho >= 0.0 else -1.0
        r = abs(rho)
        dd = 1.0 + g * g + 2.0 * g * r
        one_m = 1.0 - rho * rho
        v1 = p + sigma2 + s1
        v2 = p + sigma2 + s2
        beta = math.sqrt(2.0 / dd)
        a1 = math.sqrt((sigma2 + s1 + p * g * g * one_m / dd) / v1)
        a2 = math.sqrt((sigma2 + s2 + p * one_m / dd) / v2)
        b1 = (p / 2.0) * beta * (1.0 + g * r) / v1
        b2 = (p / 2.0) * beta * sign * (g + r) / v2
        params = StepParams(
            alpha=np.array([1.0, g * sign]),
            beta=beta,
            a=np.array([a1, a2]),
            b=np.array([b1, b2]),
        )
        # beta normalises the mixture variance at the current correlation, so
        # under tracked moments E[x^2] equals the budget exactly.
        expected_power = p
        if self.mode == "tracked":
            self.rho = rho_map(rho, p, sigma2, s1, s2, g)
        else:
            self.rho = -rho
        self.step_index += 1
        return ScheduleStep(params=params, expected_power=expected_power)


# ----------------------------------------------------------------------------
# degraded (common output) schedule
# ----------------------------------------------------------------------------


class DegradedSchedule:
    """All receivers share one output; coefficients are minimum-mean-square from R.

    The normalised covariance keeps a unit diagonal exactly, while the
    Hadamard eigenvalue of the column in use converges to the sum-rate fixed
    point lambda.  The per-step transmit power is P times the current
    eigenvalue, so the budget is met in the running average rather than
    pointwise.
    """

    def __init__(self, channel: ChannelConfig):
        if any(v != 0.0 for v in channel.private_noise_vars):
            raise ValueError("degraded schedule needs zero private noise variances")
        if channel.common_noise_var <= 0.0:
            raise ValueError("degraded schedule needs positive common noise variance")
        m = channel.num_receivers
        if m & (m - 1):
            raise ValueError("number of receivers must be a power of two")
        self.channel = channel
        self.hadamard = sylvester_hadamard(m.bit_length() - 1)
        self.columns = self.hadamard.entries.astype(float)
        self.R = np.eye(m)
        self.p_share = channel.power_budget / m
        self.p0 = self.p_share
        self.solution = solve_lambda_bc(
            m, channel.power_budget / channel.common_noise_var
        )
        self.step_index = 1

    def rate_limits(self) -> np.ndarray:
        m = self.channel.num_receivers
        p_eff = self.channel.power_budget / self.channel.common_noise_var
        lam = self.solution.lam
        r = 0.5 * math.log2((1.0 + p_eff * lam) / (1.0 + (p_eff / m) * lam * (m - lam)))
        return np.full(m, r)

    def step(self) -> ScheduleStep:
        ch = self.channel
        m = ch.num_receivers
        n = self.step_index
        alpha = self.columns[:, (n - 1) % m]
        w = self.R @ alpha
        q = float(alpha @ w)
        out_var = q + ch.common_noise_var / self.p_share
        b = w / out_var
        a_sq = np.diag(self.R) - b * w
        if np.any(a_sq <= 0.0):
            raise ScheduleInvariantError("residual source variance lost positivity")
        params = StepParams(alpha=alpha, beta=1.0, a=np.sqrt(a_sq), b=b)
        expected_power = self.p_share * q
        self.R = covariance_update(self.R, params, ch, self.p_share)
        self.step_index += 1
        return ScheduleStep(params=params, expected_power=expected_power)


# ----------------------------------------------------------------------------
# symmetric (private noises only) schedule
# ----------------------------------------------------------------------------


class SymmetricSchedule:
    """Equal private noises, zero common noise, constant steady coefficients.

    All rate-determining quantities depend on the noise scale s only through
    the effective power P/s, so the plan is built at that power and the
    resulting a, b, beta, gamma apply to the physical channel unchanged; only
    the embedding variance carries the scale s back in.

    Every step verifies that the Hadamard columns remain eigenvectors of
    G = R - gamma I, that G stays positive definite, and (once warmup
    completes) that the eigenvalue multiset matches the planned profile; a
    failure means the covariance propagation and the plan disagree, which is
    a bug, never an expected runtime event.
    """

    def __init__(self, channel: ChannelConfig, check_invariants: bool = True,
                 check_tol: float = 1e-9):
        if channel.common_noise_var != 0.0:
            raise ValueError("symmetric schedule needs zero common noise variance")
        if len(set(channel.private_noise_vars)) != 1 or channel.private_noise_vars[0] <= 0.0:
            raise ValueError("symmetric schedule needs equal positive private noise variances")
        m = channel.num_receivers
        if m & (m - 1):
            raise ValueError("number of receivers must be a power of two")
        self.channel = channel
        noise_scale = channel.private_noise_vars[0]
        self.plan: WarmupPlan = build_warmup_plan(m, channel.power_budget / noise_scale)
        self.hadamard = sylvester_hadamard(m.bit_length() - 1)
        self.columns = self.hadamard.entries.astype(float)
        self.gamma = self.plan.bgamma.gamma
        self.R = (self.plan.lambda0 + self.gamma) * np.eye(m)
        self.p_share = channel.power_budget / m
        self.p0 = self.p_share * (self.plan.lambda0 + self.gamma)
        self.check_invariants = check_invariants
        self.check_tol = check_tol
        self.step_index = 1
        if check_invariants:
            self._verify()

    @property
    def G(self) -> np.ndarray:
        return self.R - self.gamma * np.eye(self.channel.num_receivers)

    @property
    def phase(self) -> str:
        return "warmup" if self.step_index < self.plan.M else "steady"

    def rate_limits(self) -> np.ndarray:
        m = self.channel.num_receivers
        plan = self.plan
        r = 0.5 * math.log2(
            (1.0 + plan.P * plan.lam)
            / (1.0 + (plan.P / m) * plan.lam * (m - plan.lam))
        )
        return np.full(m, r)

    def step(self) -> ScheduleStep:
        ch = self.channel
        m = ch.num_receivers
        plan = self.plan
        n = self.step_index
        alpha = self.columns[:, (n - 1) % m]
        b = plan.bgamma.b
        if n <= m - 1:
            beta = plan.beta_b[n - 1] / b
            lam_n = plan.warmup_lambda[n - 1]
        else:
            beta = plan.steady_beta
            lam_n = plan.lam
        params = StepParams(
            alpha=alpha,
            beta=beta,
            a=np.full(m, plan.steady_a),
            b=b * alpha,
        )
        expected_power = ch.power_budget * beta * beta * (lam_n + self.gamma)
        self.R = covariance_update(self.R, params, ch, self.p_share)
        self.step_index += 1
        if self.check_invariants:
            self._verify()
        return ScheduleStep(params=params, expected_power=expected_power)

    def _verify(self) -> None:
        G = self.G
        scale = np.linalg.norm(G)
        if not np.all(np.isfinite(G)):
            raise ScheduleInvariantError("covariance lost finiteness")
        vals, resid = hadamard_eigen_profile(G, self.columns)
        if np.max(resid) > self.check_tol * scale:
            raise ScheduleInvariantError(
                f"Hadamard columns stopped being eigenvectors at step {self.step_index}: "
                f"max residual {np.max(resid):.3g} vs scale {scale:.3g}"
            )
        if np.min(np.linalg.eigvalsh(G)) <= 0.0:
            raise ScheduleInvariantError(
                f"G lost positive definiteness at step {self.step_index}"
            )
        if self.phase == "steady":
            # once warmup completes, the eigenvalues must be exactly the
            # planned profile (rotating through the columns), so any drift
            # of the multiset is corruption even when the eigenbasis is intact
            want = np.sort(self.plan.lambda_seq)
            drift = np.max(np.abs(np.sort(vals) - want))
            if drift > self.check_tol * max(1.0, float(want[-1])):
                raise ScheduleInvariantError(
                    f"eigenvalue profile drifted by {drift:.3g} "
                    f"at step {self.step_index}"
                )


def make_schedule(scheme: str, channel: ChannelConfig, *, g: float = 1.0,
                  rho_mode: str = "tracked", check_invariants: bool = True):
    """Construct the schedule named by ``scheme`` (one of SCHEME_IDS)."""
    if scheme == "ozarow2":
        return OzarowSchedule(channel, g=g, mode=rho_mode)
    if scheme == "degraded":
        return DegradedSchedule(channel)
    if scheme == "symmetric":
        return SymmetricSchedule(channel, check_invariants=check_invariants)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEME_IDS}")
