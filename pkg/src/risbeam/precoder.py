"""Transmit beamformer update from the KKT system of the power-constrained
quadratic subproblem, with a bisection search for the power multiplier.

One eigendecomposition of the Gram matrix sum_k H_k^H G_k^H G_k H_k makes
every multiplier probe O(n_tx): the transmit power at multiplier mu is
sum_i R_ii / (lambda_i + mu)^2, strictly decreasing in mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import cascaded_channel
from .types import BeamformingState, ChannelSet

# relative eigenvalue floor below which the unshifted Gram solve is refused
_SINGULAR_RATIO = 1e-10
# regularization floor used instead of mu = 0 on rank-deficient Gram matrices
_MU_FLOOR_RATIO = 1e-12
# eigenvalues below this multiple of lambda_max are decomposition noise: the
# right-hand sides lie in the Gram range, so those components are exactly zero
# in exact arithmetic and are snapped to zero to keep F and the power formula
# consistent
_NOISE_RATIO = 100 * np.finfo(float).eps
_BISECT_MAX_ITERS = 200
_POWER_MATCH_RTOL = 1e-8   # contract tolerance on |power(mu) - P|
_POWER_STOP_RTOL = 1e-12   # internal stop, tighter to keep slackness small


class SingularGramError(RuntimeError):
    """The unshifted KKT system is numerically singular; use mu > 0."""


@dataclass
class KktContext:
    """Eigendecomposed Gram matrix and right-hand sides of the KKT system."""

    gram: np.ndarray                 # sum_k H_k^H G_k^H G_k H_k, Hermitian PSD
    eigvecs: np.ndarray              # U with gram = U diag(eigvals) U^H
    eigvals: np.ndarray              # clamped to >= 0
    r_matrix: np.ndarray             # U^H gram U
    rhs: list[np.ndarray]            # H_k^H G_k^H per user
    rhs_stacked: np.ndarray          # columns concatenated, (n_tx, N)


def build_kkt_context(h_list: list[np.ndarray],
                      equalizers: list[np.ndarray]) -> KktContext:
    n_tx = h_list[0].shape[1]
    gram = np.zeros((n_tx, n_tx), dtype=complex)
    rhs = []
    for h_k, g_k in zip(h_list, equalizers):
        gh = g_k @ h_k
        gram += gh.conj().T @ gh
        rhs.append(h_k.conj().T @ g_k.conj().T)
    gram = (gram + gram.conj().T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(gram)
    eigvals = np.clip(eigvals, 0.0, None)
    if eigvals.size:
        eigvals[eigvals <= _NOISE_RATIO * eigvals[-1]] = 0.0
    r_matrix = eigvecs.conj().T @ gram @ eigvecs
    return KktContext(gram=gram, eigvecs=eigvecs, eigvals=eigvals,
                      r_matrix=r_matrix, rhs=rhs,
                      rhs_stacked=np.concatenate(rhs, axis=1))


def precoder_for_mu(ctx: KktContext, mu: float) -> np.ndarray:
    """F = (gram + mu I)^{-1} [rhs_1, ..., rhs_K] through the eigenbasis."""
    lam_max = float(ctx.eigvals[-1]) if ctx.eigvals.size else 0.0
    if mu == 0.0:
        lam_min = float(ctx.eigvals[0]) if ctx.eigvals.size else 0.0
        if lam_max == 0.0 or lam_min <= _SINGULAR_RATIO * lam_max:
            raise SingularGramError(
                f"Gram matrix numerically singular (lambda_min/lambda_max = "
                f"{0.0 if lam_max == 0.0 else lam_min / lam_max:.3e}); use mu > 0")
    proj = ctx.eigvecs.conj().T @ ctx.rhs_stacked
    # components along null eigendirections are exactly zero in exact
    # arithmetic (the right-hand sides span the Gram range); drop their noise
    keep = (ctx.eigvals > 0.0)[:, None]
    scaled = np.where(keep, proj / (ctx.eigvals + mu)[:, None], 0.0)
    return ctx.eigvecs @ scaled


def transmit_power(ctx: KktContext, mu: float) -> float:
    """tr(F F^H) at multiplier mu, without re-forming F."""
    r_diag = np.real(np.diagonal(ctx.r_matrix))
    denom = ctx.eigvals + mu
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(ctx.eigvals > 0.0, r_diag / denom ** 2, 0.0)
    return float(np.sum(terms))


def solve_power_constrained(ctx: KktContext, tx_power: float) -> tuple[np.ndarray, float]:
    """Optimal (F, mu) for the power-constrained quadratic subproblem.

    Takes the unconstrained solution when feasible; otherwise bisects mu on a
    doubling bracket until the transmit power matches the budget.
    """
    lam_max = float(ctx.eigvals[-1]) if ctx.eigvals.size else 0.0
    if lam_max == 0.0:
        # no effective receive dimensions: objective is flat, F = 0 is optimal
        return np.zeros_like(ctx.rhs_stacked), 0.0
    lam_min = float(ctx.eigvals[0])
    invertible = lam_min > _SINGULAR_RATIO * lam_max
    mu_lo = 0.0 if invertible else _MU_FLOOR_RATIO * lam_max
    if transmit_power(ctx, mu_lo) <= tx_power:
        return precoder_for_mu(ctx, mu_lo), mu_lo

    mu_hi = 1.0
    while transmit_power(ctx, mu_hi) >= tx_power:
        mu_hi *= 2.0
        if not np.isfinite(mu_hi):
            raise RuntimeError("power bracket search diverged")
    mu = mu_hi
    for _ in range(_BISECT_MAX_ITERS):
        mu = 0.5 * (mu_lo + mu_hi)
        power = transmit_power(ctx, mu)
        if abs(power - tx_power) <= _POWER_STOP_RTOL * tx_power:
            break
        if power > tx_power:
            mu_lo = mu
        else:
            mu_hi = mu
        if (mu_hi - mu_lo) <= np.finfo(float).eps * mu_hi:
            mu = 0.5 * (mu_lo + mu_hi)
            power = transmit_power(ctx, mu)
            break
    else:
        power = transmit_power(ctx, mu)
    if abs(power - tx_power) > _POWER_MATCH_RTOL * tx_power:
        raise RuntimeError(
            f"bisection failed to match the power budget: got {power:.6e}, "
            f"target {tx_power:.6e}")
    return precoder_for_mu(ctx, mu), mu


def precoder_update_from_channels(h_list: list[np.ndarray],
                                  equalizers: list[np.ndarray],
                                  tx_power: float) -> tuple[np.ndarray, float]:
    ctx = build_kkt_context(h_list, equalizers)
    return solve_power_constrained(ctx, tx_power)


def update_precoder(ch: ChannelSet, state: BeamformingState,
                    tx_power: float) -> np.ndarray:
    """KKT precoder update with {G_k} and theta fixed."""
    h_list = [cascaded_channel(ch, state.theta, k) for k in range(ch.n_users)]
    precoder, _ = precoder_update_from_channels(h_list, state.equalizers, tx_power)
    return precoder
