"""Common-reflection-pattern update: quartic coefficient workspace, two-stage
majorization-minimization, and the closed-form phase rule.

With the precoder F and equalizers {G_k} fixed, the sum-MSE objective as a
function of the shared reflection vector theta collapses (after dropping
theta-independent constants) to

    f(theta) = theta^H A0 theta + 2 Re(theta^H Bt (theta (x) theta))
             + (theta (x) theta)^H Ct (theta (x) theta)
             - 2 Re(theta^H p* + theta^H D0* theta*),

where (x) is the Kronecker product. A0 and D0 are M x M extractions of the
big Kronecker-structured coefficient matrices at the sparse support of
vec(diag(theta)); Bt and Ct are never materialized: they act on length-M^2
vectors through their Kronecker factors

    Q_ij = T_i F F^H T_j^H,    E_ij = sum_k R_ik^H G_k^H G_k R_jk,

plus the inter-surface channel S, at O(M^3) per application.

The quartic objective is majorized twice: first to a quadratic form in
(theta, theta*) by shifting with a diagonal dominator (trace of the stacked
coefficient matrix by default, its largest eigenvalue on request), then to a
linear form via a second-order expansion of the real lift. The linear problem
min 2 Re(theta^H f_t) over unit-modulus vectors is solved entrywise by
theta_i = -exp(j arg(f_t,i)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .types import BeamformingState, ChannelSet, DimensionMismatchError

MAJORIZER_VARIANTS = ("trace", "max_eig")


def _unvec(w: np.ndarray, m: int) -> np.ndarray:
    return w.reshape(m, m, order="F")


def _vec(a: np.ndarray) -> np.ndarray:
    return a.flatten(order="F")


@dataclass
class ReflectionWorkspace:
    """Coefficient objects of the theta subproblem for one fixed (F, {G_k}).

    q[(i, j)] holds Q_ij, e[(i, j)] holds E_ij (1-based link indices as dict
    keys). a0 and d0 are the dense M x M extractions; p the linear-term vector.
    """

    m: int
    s: np.ndarray
    q: dict[tuple[int, int], np.ndarray]
    e: dict[tuple[int, int], np.ndarray]
    a0: np.ndarray
    d0: np.ndarray
    p: np.ndarray
    trace_a0: float
    trace_c_tilde: float

    def apply_b_tilde(self, w: np.ndarray) -> np.ndarray:
        """Bt @ w for a length-M^2 vector w, in O(M^3)."""
        sw = self.s * _unvec(w, self.m)
        out = np.zeros(self.m, dtype=complex)
        for i in (1, 2):
            out += np.einsum("qr,rq->q", self.e[(i, 2)] @ sw, self.q[(1, i)])
        return out

    def apply_b_tilde_adjoint(self, u: np.ndarray) -> np.ndarray:
        """Bt^H @ u for a length-M vector u, in O(M^3)."""
        x = np.zeros((self.m, self.m), dtype=complex)
        for i in (1, 2):
            x += self.q[(1, i)] @ (u.conj()[:, None] * self.e[(i, 2)])
        return _vec(x.conj().T * self.s.conj())

    def apply_c_tilde(self, w: np.ndarray) -> np.ndarray:
        """Ct @ w for a length-M^2 vector w, in O(M^3); Ct is self-adjoint PSD."""
        sw = self.s * _unvec(w, self.m)
        return _vec(self.s.conj() * (self.e[(2, 2)] @ sw @ self.q[(1, 1)]))

    def debug_summary(self) -> dict:
        """Small regression-pinning payload (dense extractions and traces)."""
        return {"a0": self.a0, "d0": self.d0, "p": self.p,
                "trace_a0": self.trace_a0, "trace_c_tilde": self.trace_c_tilde}


def build_workspace(ch: ChannelSet, precoder: np.ndarray,
                    equalizers: list[np.ndarray]) -> ReflectionWorkspace:
    """Assemble all coefficient objects without forming any M^2 x M^2 matrix."""
    m = ch.n_elements
    if precoder.shape[0] != ch.t1.shape[1]:
        raise DimensionMismatchError(
            f"precoder rows {precoder.shape[0]} != n_tx {ch.t1.shape[1]}")
    if len(equalizers) != ch.n_users:
        raise DimensionMismatchError(
            f"{len(equalizers)} equalizers for {ch.n_users} users")

    t = {1: ch.t1, 2: ch.t2}
    r = {1: ch.r1, 2: ch.r2}
    tf = {i: t[i] @ precoder for i in (1, 2)}          # (M, N)
    q = {(i, j): tf[i] @ tf[j].conj().T for i in (1, 2) for j in (1, 2)}

    n_k = equalizers[0].shape[0] if equalizers else 0
    gr = {i: [equalizers[k] @ r[i][k] for k in range(ch.n_users)] for i in (1, 2)}
    e = {}
    for i in (1, 2):
        for j in (1, 2):
            acc = np.zeros((m, m), dtype=complex)
            for k in range(ch.n_users):
                acc += gr[i][k].conj().T @ gr[j][k]
            e[(i, j)] = acc

    a0 = np.zeros((m, m), dtype=complex)
    for i in (1, 2):
        for j in (1, 2):
            a0 += q[(i, j)].T * e[(j, i)]

    d_factor = np.zeros((m, m), dtype=complex)
    p_mat = np.zeros((m, m), dtype=complex)
    for k in range(ch.n_users):
        f_k = precoder[:, k * n_k:(k + 1) * n_k]
        for i in (1, 2):
            p_mat += (t[i] @ f_k) @ gr[i][k]
        d_factor += (t[1] @ f_k) @ gr[2][k]
    d0 = d_factor.T * ch.s
    p = np.diagonal(p_mat).copy()

    trace_a0 = float(np.real(np.trace(a0)))
    # tr(Ct) = sum_j Q11[j,j] * sum_r |S[r,j]|^2 E22[r,r], an O(M^2) contraction
    col_w = (np.abs(ch.s) ** 2 * np.real(np.diagonal(e[(2, 2)]))[:, None]).sum(axis=0)
    trace_c_tilde = float(np.real(np.diagonal(q[(1, 1)])) @ col_w)

    return ReflectionWorkspace(m=m, s=ch.s, q=q, e=e, a0=a0, d0=d0, p=p,
                               trace_a0=trace_a0, trace_c_tilde=trace_c_tilde)


def quartic_quadform(ws: ReflectionWorkspace, theta: np.ndarray) -> float:
    """Value of the stacked quadratic form [theta; theta(x)theta]^H W [ . ]."""
    tt = np.kron(theta, theta)
    val = (np.vdot(theta, ws.a0 @ theta)
           + np.vdot(theta, ws.apply_b_tilde(tt))
           + np.vdot(tt, ws.apply_b_tilde_adjoint(theta))
           + np.vdot(tt, ws.apply_c_tilde(tt)))
    return float(np.real(val))


def _linear_terms(ws: ReflectionWorkspace, theta: np.ndarray) -> float:
    """2 Re(theta^H p* + theta^H D0* theta*), the sign-flipped linear block."""
    tc = theta.conj()
    return float(2.0 * np.real(tc @ ws.p.conj() + tc @ (ws.d0.conj() @ tc)))


def quartic_objective(ws: ReflectionWorkspace, theta: np.ndarray) -> float:
    """Constant-free theta objective evaluated through the workspace operators."""
    return quartic_quadform(ws, theta) - _linear_terms(ws, theta)


def _lanczos_top_eigenvalue(matvec, n: int, max_iters: int = 400,
                            rel_tol: float = 1e-13) -> float:
    """Largest eigenvalue of a Hermitian operator by Lanczos iteration.

    Deterministic start, full reorthogonalization; stops once the top Ritz
    value is stationary to rel_tol or an invariant subspace is hit.
    """
    q = np.full(n, 1.0 / np.sqrt(n), dtype=complex)
    basis = [q]
    alphas: list[float] = []
    betas: list[float] = []
    ritz = 0.0
    scale = 0.0
    for _ in range(min(max_iters, n)):
        w = matvec(q)
        alpha = float(np.real(np.vdot(q, w)))
        alphas.append(alpha)
        mat = np.array(basis)
        w = w - mat.T @ (mat.conj() @ w)        # full reorthogonalization
        beta = float(np.linalg.norm(w))
        prev = ritz
        ritz = float(eigvalsh_tridiagonal(alphas, betas)[-1])
        scale = max(scale, abs(ritz), beta)
        if beta <= 1e-14 * max(scale, 1e-300):  # exact invariant subspace
            return ritz
        if len(alphas) >= 3 and abs(ritz - prev) <= rel_tol * max(abs(ritz), 1e-300):
            return ritz
        betas.append(beta)
        q = w / beta
        basis.append(q)
    return ritz


def lambda_max_w(ws: ReflectionWorkspace) -> float:
    """Largest eigenvalue of the stacked coefficient matrix W (Hermitian PSD).

    Computed matrix-free through the operator applications; small problems are
    densified from the operators instead so tiny edge cases stay exact.
    """
    m = ws.m
    n = m + m * m
    if ws.trace_a0 <= 0.0 and ws.trace_c_tilde <= 0.0:
        # PSD diagonal blocks with zero trace force W = 0
        return 0.0

    def matvec(z):
        u, w = z[:m], z[m:]
        top = ws.a0 @ u + ws.apply_b_tilde(w)
        bot = ws.apply_b_tilde_adjoint(u) + ws.apply_c_tilde(w)
        return np.concatenate([top, bot])

    if n <= 30:
        dense = np.empty((n, n), dtype=complex)
        eye = np.eye(n)
        for j in range(n):
            dense[:, j] = matvec(eye[:, j].astype(complex))
        return float(np.linalg.eigvalsh((dense + dense.conj().T) / 2.0)[-1])
    return _lanczos_top_eigenvalue(matvec, n)


def majorizer_shifts(ws: ReflectionWorkspace, variant: str = "trace") -> tuple[float, float]:
    """Diagonal shifts (for the M block and the M^2 block) dominating W."""
    if variant == "trace":
        return ws.trace_a0, ws.trace_c_tilde
    if variant == "max_eig":
        lam = lambda_max_w(ws)
        return lam, lam
    raise ValueError(f"unknown majorizer variant {variant!r}; use one of {MAJORIZER_VARIANTS}")


@dataclass
class SurrogateState:
    """Intermediate quantities of one MM step around the expansion point theta_t."""

    theta_t: np.ndarray
    u_t: np.ndarray                 # linear coefficient after the first majorization
    v_t: np.ndarray                 # length-M^2 coefficient of the (theta, theta) block
    v_hat_t: np.ndarray             # v_t reshaped to M x M
    v_tilde_t: np.ndarray           # v_hat_t - D0*
    lambda_a: float
    lambda_c: float
    lift_lambda: float | None = None   # lambda_max of the symmetrized real lift
    v_bar_t: np.ndarray | None = None  # (Vbar + Vbar^T - lift_lambda I) theta_bar_t
    f_t: np.ndarray | None = None


def mm_stage1(ws: ReflectionWorkspace, theta_t: np.ndarray,
              variant: str = "trace") -> SurrogateState:
    """First majorization: quartic -> quadratic-in-(theta, theta*) surrogate."""
    lam_a, lam_c = majorizer_shifts(ws, variant)
    tt = np.kron(theta_t, theta_t)
    u_t = ws.a0 @ theta_t - lam_a * theta_t + ws.apply_b_tilde(tt) - ws.p.conj()
    v_t = ws.apply_b_tilde_adjoint(theta_t) + ws.apply_c_tilde(tt) - lam_c * tt
    v_hat = _unvec(v_t, ws.m)
    v_tilde = v_hat - ws.d0.conj()
    return SurrogateState(theta_t=theta_t.copy(), u_t=u_t, v_t=v_t,
                          v_hat_t=v_hat, v_tilde_t=v_tilde,
                          lambda_a=lam_a, lambda_c=lam_c)


def real_lift(v_tilde: np.ndarray) -> np.ndarray:
    """Real 2M x 2M matrix Vbar with Re(theta^H Vt theta*) = theta_bar^T Vbar theta_bar."""
    re, im = np.real(v_tilde), np.imag(v_tilde)
    return np.block([[re, im], [im, -re]])


def mm_stage2(surr: SurrogateState, theta_t: np.ndarray) -> np.ndarray:
    """Second majorization: quadratic surrogate -> linear coefficient f_t."""
    m = theta_t.shape[0]
    v_bar = real_lift(surr.v_tilde_t)
    sym = v_bar + v_bar.T
    lam = float(np.linalg.eigvalsh(sym)[-1])
    theta_bar = np.concatenate([np.real(theta_t), np.imag(theta_t)])
    v_bar_t = (sym - lam * np.eye(2 * m)) @ theta_bar
    f_t = surr.u_t + (v_bar_t[:m] + 1j * v_bar_t[m:])
    surr.lift_lambda = lam
    surr.v_bar_t = v_bar_t
    surr.f_t = f_t
    return f_t


def phase_update(f_t: np.ndarray, theta_prev: np.ndarray | None = None) -> np.ndarray:
    """Entrywise minimizer of 2 Re(theta^H f_t) over unit-modulus vectors.

    Zero entries of f_t leave the corresponding phase free; they keep the
    previous value when one is supplied (preserves fixed points) and fall back
    to -1 otherwise.
    """
    theta = -np.exp(1j * np.angle(f_t))
    if theta_prev is not None:
        theta = np.where(f_t == 0, theta_prev, theta)
    return theta


def update_reflection(ch: ChannelSet, state: BeamformingState,
                      inner_iters: int = 1, variant: str = "trace") -> np.ndarray:
    """One reflection-pattern update with (F, {G_k}) fixed.

    The coefficient workspace depends only on (F, {G_k}) and is built once;
    each inner iteration re-expands both surrogates around the current theta.
    """
    ws = build_workspace(ch, state.precoder, state.equalizers)
    theta = state.theta
    for _ in range(max(1, inner_iters)):
        surr = mm_stage1(ws, theta, variant)
        f_t = mm_stage2(surr, theta)
        theta = phase_update(f_t, theta_prev=theta)
    return theta


# ---------------------------------------------------------------------------
# Surrogate values (used for descent-chain verification, not by the update)
# ---------------------------------------------------------------------------

def stage1_surrogate_value(ws: ReflectionWorkspace, surr: SurrogateState,
                           theta: np.ndarray) -> float:
    """First-stage surrogate evaluated at theta; touches the quartic objective
    from above and matches it at theta = theta_t."""
    m = ws.m
    shift_const = surr.lambda_a * m + surr.lambda_c * m * m
    tt = np.kron(theta, theta)
    cross = 2.0 * np.real(np.vdot(theta, surr.u_t + ws.p.conj()) + np.vdot(tt, surr.v_t))
    anchor = shift_const - quartic_quadform(ws, surr.theta_t)
    return shift_const + cross + anchor - _linear_terms(ws, theta)


def stage2_surrogate_value(ws: ReflectionWorkspace, surr: SurrogateState,
                           theta: np.ndarray) -> float:
    """Second-stage surrogate (after the real-lift expansion) evaluated at theta."""
    if surr.lift_lambda is None:
        raise ValueError("run mm_stage2 before evaluating the second surrogate")
    m = ws.m
    v_bar = real_lift(surr.v_tilde_t)
    sym = v_bar + v_bar.T
    tb = np.concatenate([np.real(theta), np.imag(theta)])
    tb_t = np.concatenate([np.real(surr.theta_t), np.imag(surr.theta_t)])
    diff = tb - tb_t
    taylor = (tb_t @ v_bar @ tb_t + tb_t @ sym @ diff
              + 0.5 * surr.lift_lambda * (diff @ diff))
    shift_const = surr.lambda_a * m + surr.lambda_c * m * m
    anchor = shift_const - quartic_quadform(ws, surr.theta_t)
    return (2.0 * np.real(np.vdot(theta, surr.u_t)) + 2.0 * taylor
            + shift_const + anchor)


# ---------------------------------------------------------------------------
# Quadratic special case (single-bounce objectives, per-surface updates)
# ---------------------------------------------------------------------------

def quadratic_phase_step(a0: np.ndarray, p_lin: np.ndarray, theta_t: np.ndarray,
                         variant: str = "trace") -> np.ndarray:
    """MM step for min theta^H A0 theta - 2 Re(theta^H p*), |theta_i| = 1.

    A0 must be Hermitian PSD, so both its trace and its largest eigenvalue are
    valid diagonal dominators.
    """
    if variant == "trace":
        shift = float(np.real(np.trace(a0)))
    elif variant == "max_eig":
        shift = float(np.linalg.eigvalsh((a0 + a0.conj().T) / 2.0)[-1])
    else:
        raise ValueError(f"unknown majorizer variant {variant!r}; use one of {MAJORIZER_VARIANTS}")
    f_t = a0 @ theta_t - shift * theta_t - p_lin.conj()
    return phase_update(f_t, theta_prev=theta_t)
