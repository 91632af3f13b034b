"""Closed-form LMMSE receive equalizer update with precoder and reflections fixed."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import cascaded_channel
from .objective import user_precoder
from .types import BeamformingState, ChannelSet


def lmmse_equalizers(h_list: list[np.ndarray], precoder: np.ndarray,
                     noise_power: float) -> list[np.ndarray]:
    """G_k = F_k^H H_k^H (H_k F F^H H_k^H + sigma^2 I)^{-1} for every user.

    The inverse always exists for sigma^2 > 0 and is applied through a
    Hermitian positive-definite factorization, never formed explicitly.
    """
    n_streams = precoder.shape[1] // len(h_list)
    out = []
    for k, h_k in enumerate(h_list):
        hf = h_k @ precoder
        cov = hf @ hf.conj().T + noise_power * np.eye(h_k.shape[0])
        rhs = h_k @ user_precoder(precoder, k, n_streams)
        g_k = cho_solve(cho_factor(cov, lower=True), rhs).conj().T
        out.append(g_k)
    return out


def update_equalizers(ch: ChannelSet, state: BeamformingState,
                      noise_power: float) -> list[np.ndarray]:
    h_list = [cascaded_channel(ch, state.theta, k) for k in range(ch.n_users)]
    return lmmse_equalizers(h_list, state.precoder, noise_power)
