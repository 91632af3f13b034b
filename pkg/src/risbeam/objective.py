"""Per-user MSE matrices and the sum-MSE objective, in two independent forms.

The direct form evaluates the MSE matrix from the effective channels; the
vectorized form evaluates the constant-free theta parametrization through a
ReflectionWorkspace. The two differ by a theta-independent constant and serve
as mutual oracles.
"""

from __future__ import annotations

import numpy as np

from .channel import cascaded_channel
from .reflection import ReflectionWorkspace
from .types import BeamformingState, ChannelSet, DimensionMismatchError, MseReport


def user_precoder(precoder: np.ndarray, k: int, n_streams: int) -> np.ndarray:
    """Column block of user k inside the stacked precoder."""
    return precoder[:, k * n_streams:(k + 1) * n_streams]


def mse_matrix_from_channel(h_k: np.ndarray, precoder: np.ndarray, g_k: np.ndarray,
                            k: int, noise_power: float) -> np.ndarray:
    """MSE matrix E[(x_k - xhat_k)(x_k - xhat_k)^H] for one user.

    Equals G H F (G H F)^H - G H F_k - (G H F_k)^H + sigma^2 G G^H + I; the
    cross term is kept in its Hermitian pair form so the result is Hermitian.
    """
    n_k = g_k.shape[0]
    if g_k.shape[1] != h_k.shape[0]:
        raise DimensionMismatchError(
            f"equalizer {g_k.shape} does not match channel rows {h_k.shape[0]}")
    if h_k.shape[1] != precoder.shape[0]:
        raise DimensionMismatchError(
            f"channel columns {h_k.shape[1]} do not match precoder rows {precoder.shape[0]}")
    ghf = g_k @ h_k @ precoder
    cross = g_k @ h_k @ user_precoder(precoder, k, n_k)
    return (ghf @ ghf.conj().T - cross - cross.conj().T
            + noise_power * (g_k @ g_k.conj().T) + np.eye(n_k))


def mse_matrix(ch: ChannelSet, state: BeamformingState, k: int,
               noise_power: float) -> np.ndarray:
    h_k = cascaded_channel(ch, state.theta, k)
    return mse_matrix_from_channel(h_k, state.precoder, state.equalizers[k], k, noise_power)


def sum_mse_from_channels(h_list: list[np.ndarray], precoder: np.ndarray,
                          equalizers: list[np.ndarray], noise_power: float,
                          return_matrices: bool = False) -> MseReport:
    per_user = []
    mats = [] if return_matrices else None
    for k, (h_k, g_k) in enumerate(zip(h_list, equalizers)):
        psi = mse_matrix_from_channel(h_k, precoder, g_k, k, noise_power)
        per_user.append(float(np.real(np.trace(psi))))
        if mats is not None:
            mats.append(psi)
    return MseReport(per_user_mse=per_user, sum_mse=sum(per_user), per_user_matrices=mats)


def sum_mse(ch: ChannelSet, state: BeamformingState, noise_power: float,
            return_matrices: bool = False) -> MseReport:
    """Aggregate MSE report over all users for a common-reflection state."""
    h_list = [cascaded_channel(ch, state.theta, k) for k in range(ch.n_users)]
    return sum_mse_from_channels(h_list, state.precoder, state.equalizers,
                                 noise_power, return_matrices)


def vectorized_theta_objective(ws: ReflectionWorkspace, theta: np.ndarray) -> float:
    """Constant-free objective in theta via the workspace coefficient objects.

    Differs from sum_mse by the dropped theta-independent terms, so
    cross-checks against the direct form compare objective differences.
    """
    if theta.shape != (ws.m,):
        raise DimensionMismatchError(f"theta has shape {theta.shape}, expected ({ws.m},)")
    tt = np.kron(theta, theta)
    tc = theta.conj()
    quad = np.real(np.vdot(theta, ws.a0 @ theta))
    cubic = 2.0 * np.real(np.vdot(theta, ws.apply_b_tilde(tt)))
    quartic = np.real(np.vdot(tt, ws.apply_c_tilde(tt)))
    linear = 2.0 * np.real(tc @ ws.p.conj() + tc @ (ws.d0.conj() @ tc))
    return float(quad + cubic + quartic - linear)
