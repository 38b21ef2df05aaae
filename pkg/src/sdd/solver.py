"""Proximal alternating minimization for the low-rank plus sparse model.

The sequence cube ``Y`` (n1 x n2 x n3) is split as ``Y = B x3 A + T + N``
with a spatial factor ``B`` (n1 x n2 x r), a temporal factor ``A``
(n3 x r) and a sparse target cube ``T``.  The objective is::

    1/2 |Y - B x3 A - T|_F^2
        + |B x1 D1|_{2,1,W1} + |B x2 D2|_{1,W2}
        + lambda |D3 A|_F^2
        + gamma |W_ASCE * T|_{1,W_S}

Each outer iteration updates ``A`` (a Sylvester equation solved in the
eigen/Fourier basis), ``B`` (an ADMM inner loop whose quadratic step is
diagonalized by an eigendecomposition and a 2-D FFT) and ``T`` (reweighted
soft thresholding), every block carrying a proximal term.
"""

import logging
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .diff import apply_diff, apply_diff_adjoint, diff_gram_spectrum
from .errors import ArgumentError, NumericIntegrityError, SolverFailure
from .prox import group_shrink_fibers, reweight, soft_threshold
from .tensor import mode_product

__all__ = [
    "SolverConfig",
    "DecompositionState",
    "IterationRecord",
    "SolveTrace",
    "AdmmResult",
    "solve_A",
    "solve_B_quadratic",
    "admm_B",
    "update_T",
    "objective_terms",
    "decompose",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Model and optimizer knobs.

    ``lam`` is the temporal-continuity weight (``lambda`` in config files).
    ``t_prox`` is the proximal constant of the target update; set
    ``t_prox_from_rho`` to use ``rho`` there instead.  ``data_scale``
    multiplies the input before solving and divides it out of ``F`` and
    ``T`` afterwards; the weights of the reweighted norms are not scale
    invariant, so this moves the operating point of ``gamma`` and ``beta``.
    """

    r: int = 10
    lam: float = 1.0
    gamma: float = 0.015
    beta: float = 15000.0
    rho: float = 0.05
    t_prox: float = 0.01
    t_prox_from_rho: bool = False
    epsilon: float = 0.01
    k_max: int = 50
    l_max: int = 10
    tol_outer: float = 1e-5
    tol_inner: float = 1e-5
    seed: int = 0
    data_scale: float = 1.0

    def __post_init__(self):
        if int(self.r) < 1:
            raise ArgumentError(f"rank r must be >= 1, got {self.r}")
        for name in ("lam", "gamma", "beta", "rho", "t_prox", "epsilon",
                     "tol_outer", "tol_inner", "data_scale"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be positive, got {getattr(self, name)}")
        if int(self.k_max) < 1 or int(self.l_max) < 1:
            raise ArgumentError("iteration caps must be >= 1")

    @property
    def target_prox(self):
        return self.rho if self.t_prox_from_rho else self.t_prox

    def replace(self, **changes):
        return replace(self, **changes)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class DecompositionState:
    a: np.ndarray
    b: np.ndarray
    t: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray


@dataclass
class IterationRecord:
    iteration: int
    rel_change: float
    residual: float
    group_term: float
    l1_term: float
    temporal_term: float
    target_term: float
    inner_iters: int


@dataclass
class SolveTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def rel_changes(self):
        return np.array([rec.rel_change for rec in self.records])

    @property
    def residuals(self):
        return np.array([rec.residual for rec in self.records])

    def append(self, rec):
        self.records.append(rec)


@dataclass
class AdmmResult:
    """Output of the spatial-factor inner loop."""

    b: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    inner_iters: int
    changes: list
    gaps: list


def _finite(name, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericIntegrityError(f"{name}: non-finite input")


def _rel_change(new, old):
    num = np.linalg.norm(new - old)
    den = np.linalg.norm(old)
    if den > 0:
        return float(num / den)
    return 0.0 if num == 0 else float("inf")


def _gram_eigh(m):
    """Eigendecomposition of a symmetric Gram matrix, eigenvalues clamped >= 0."""
    m = 0.5 * (m + m.T)
    w, v = np.linalg.eigh(m)
    return np.maximum(w, 0.0), v


def solve_A(y, t, b, a_prev, lam, rho):
    """Temporal-factor update.

    Solves ``A M + 2 lam D3'D3 A + rho A = R`` with ``M = B(3) B(3)'`` and
    ``R = (Y(3) - T(3)) B(3)' + rho A_prev``.  ``M = U S U'`` turns the
    columns of ``A U`` into independent circulant systems, which the DFT
    along the frame axis diagonalizes.
    """
    _finite("solve_A", y, t, b, a_prev)
    if not (lam >= 0 and rho > 0):
        raise ArgumentError("solve_A needs lam >= 0 and rho > 0")
    n3, r = a_prev.shape
    if b.shape[2] != r or y.shape[2] != n3:
        raise ArgumentError("inconsistent shapes in solve_A")
    # B(3) B(3)' and (Y(3) - T(3)) B(3)' written as contractions over pixels
    m = np.tensordot(b, b, axes=([0, 1], [0, 1]))
    rhs = np.tensordot(y - t, b, axes=([0, 1], [0, 1])) + rho * a_prev
    sig, u = _gram_eigh(m)
    spec = diff_gram_spectrum(n3)
    rhs_hat = np.fft.fft(rhs @ u, axis=0)
    denom = sig[None, :] + 2.0 * lam * spec[:, None] + rho
    a_rot = np.real(np.fft.ifft(rhs_hat / denom, axis=0))
    return a_rot @ u.T


def solve_B_quadratic(k_rhs, a, beta, rho):
    """Quadratic step of the spatial-factor ADMM.

    Solves ``B x3 (A'A) + rho B + beta (B x1 D1'D1 + B x2 D2'D2) = K``.
    ``A'A = V L V'`` decouples the rank slices; each slice is then a 2-D
    circulant system diagonalized by ``fft2``.
    """
    _finite("solve_B_quadratic", k_rhs, a)
    if not (beta >= 0 and rho > 0):
        raise ArgumentError("solve_B_quadratic needs beta >= 0 and rho > 0")
    n1, n2, r = k_rhs.shape
    if a.shape[1] != r:
        raise ArgumentError("inconsistent shapes in solve_B_quadratic")
    lam_a, v = _gram_eigh(a.T @ a)
    spec = diff_gram_spectrum(n1)[:, None] + diff_gram_spectrum(n2)[None, :]
    k_hat = np.fft.fft2(k_rhs @ v, axes=(0, 1))
    denom = lam_a[None, None, :] + rho + beta * spec[:, :, None]
    b_rot = np.real(np.fft.ifft2(k_hat / denom, axes=(0, 1)))
    return b_rot @ v.T


def admm_B(y, t, a, b_prev, cfg):
    """Spatial-factor update by ADMM.

    Splits ``Z1 = B x1 D1`` and ``Z2 = B x2 D2`` and runs, from zero
    auxiliaries and multipliers, the sequence B, Z1, Z2, P1, P2 until the
    relative change of ``B`` drops below ``cfg.tol_inner`` or ``cfg.l_max``
    steps have been taken.  The weights are recomputed from the current
    ``Z_hat`` at every step.
    """
    beta, eps = cfg.beta, cfg.epsilon
    shape = b_prev.shape
    z1 = np.zeros(shape)
    z2 = np.zeros(shape)
    p1 = np.zeros(shape)
    p2 = np.zeros(shape)
    w1 = w2 = None
    base = mode_product(y - t, a.T, 3) + cfg.rho * b_prev
    b_old = b_prev
    changes, gaps = [], []
    for step in range(1, cfg.l_max + 1):
        k_rhs = (base + beta * apply_diff_adjoint(z1 - p1 / beta, 1)
                 + beta * apply_diff_adjoint(z2 - p2 / beta, 2))
        b = solve_B_quadratic(k_rhs, a, beta, cfg.rho)
        d1b = apply_diff(b, 1)
        d2b = apply_diff(b, 2)
        z1_hat = d1b + p1 / beta
        w1 = reweight(z1_hat, "group", eps)
        z1 = group_shrink_fibers(z1_hat, w1 / beta)
        z2_hat = d2b + p2 / beta
        w2 = reweight(z2_hat, "elementwise", eps)
        z2 = soft_threshold(z2_hat, w2 / beta)
        p1 = p1 + beta * (d1b - z1)
        p2 = p2 + beta * (d2b - z2)
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))):
            raise SolverFailure(f"non-finite spatial factor at inner step {step}")
        gaps.append(float(np.linalg.norm(d1b - z1)))
        changes.append(_rel_change(b, b_old))
        b_old = b
        if changes[-1] < cfg.tol_inner:
            break
    return AdmmResult(b=b, z1=z1, z2=z2, p1=p1, p2=p2, w1=w1, w2=w2,
                      inner_iters=step, changes=changes, gaps=gaps)


def update_T(y, a, b, t_prev, w_asce, cfg):
    """Target update: reweighted soft threshold of the enhanced residual.

    ``T_hat = (Y - B x3 A + c T_prev) / (1 + c)`` with ``c`` the target
    proximal constant, ``W_S = 1 / (|T_hat| + eps)`` and
    ``T = shrink(W_ASCE * T_hat, gamma W_S / (1 + c))``.
    """
    c = cfg.target_prox
    t_hat = (y - mode_product(b, a, 3) + c * t_prev) / (1.0 + c)
    w_s = reweight(t_hat, "target", cfg.epsilon)
    return soft_threshold(w_asce * t_hat, cfg.gamma * w_s / (1.0 + c))


def objective_terms(y, a, b, t, w_asce, cfg, w1=None, w2=None):
    """Regularizer values of the model at ``(A, B, T)``.

    Weights not supplied are derived from the current differences, as the
    solver would derive them.
    """
    eps = cfg.epsilon
    d1b = apply_diff(b, 1)
    d2b = apply_diff(b, 2)
    if w1 is None:
        w1 = reweight(d1b, "group", eps)
    if w2 is None:
        w2 = reweight(d2b, "elementwise", eps)
    w_s = reweight(t, "target", eps)
    return {
        "group_term": float(np.sum(w1 * np.sqrt(np.sum(d1b * d1b, axis=2)))),
        "l1_term": float(np.sum(w2 * np.abs(d2b))),
        "temporal_term": float(cfg.lam * np.sum(apply_diff(a, 1) ** 2)),
        "target_term": float(cfg.gamma * np.sum(w_s * np.abs(w_asce * t))),
    }


def _init_factors(dims, cfg):
    n1, n2, n3 = dims
    rng = np.random.default_rng(cfg.seed)
    a = rng.random((n3, cfg.r))
    b = rng.random((n1, n2, cfg.r))
    return a, b


def decompose(y, w_asce, cfg=None, return_state=False):
    """Separate a sequence cube into background and target components.

    Parameters
    ----------
    y : ndarray, shape (n1, n2, n3)
        Frames stacked along the last axis, ``n3 >= 2``.
    w_asce : ndarray, shape (n1, n2, n3)
        Enhancement factor with entries in [0, 2).
    cfg : SolverConfig, optional

    Returns
    -------
    f : ndarray
        Background ``B x3 A``.
    t : ndarray
        Target component.
    trace : SolveTrace
        One record per outer iteration.

    Raises
    ------
    SolverFailure
        If an iterate becomes non-finite; ``exc.trace`` holds the records
        gathered so far.

    Notes
    -----
    ``A`` and ``B`` start from uniform [0, 1) draws of
    ``numpy.random.default_rng(cfg.seed)`` (PCG64), ``T`` from zero.  The
    loop stops when the relative change of ``B x3 A`` falls below
    ``cfg.tol_outer`` or after ``cfg.k_max`` iterations.
    """
    cfg = cfg or SolverConfig()
    y = np.asarray(y, dtype=np.float64)
    w_asce = np.asarray(w_asce, dtype=np.float64)
    if y.ndim != 3 or y.shape[2] < 2:
        raise ArgumentError(f"y must be n1 x n2 x n3 with n3 >= 2, got {y.shape}")
    if w_asce.shape != y.shape:
        raise ArgumentError(f"w_asce shape {w_asce.shape} differs from y {y.shape}")
    _finite("decompose", y, w_asce)
    if np.any(w_asce < 0) or np.any(w_asce >= 2):
        raise ArgumentError("w_asce entries must lie in [0, 2)")

    y = y * cfg.data_scale
    a, b = _init_factors(y.shape, cfg)
    t = np.zeros_like(y)
    f_prev = mode_product(b, a, 3)
    trace = SolveTrace()
    inner = None
    for k in range(1, cfg.k_max + 1):
        try:
            a = solve_A(y, t, b, a, cfg.lam, cfg.rho)
            if not np.all(np.isfinite(a)):
                raise SolverFailure(f"non-finite temporal factor at iteration {k}")
            inner = admm_B(y, t, a, b, cfg)
            b = inner.b
            t = update_T(y, a, b, t, w_asce, cfg)
            if not np.all(np.isfinite(t)):
                raise SolverFailure(f"non-finite target at iteration {k}")
        except (SolverFailure, NumericIntegrityError) as exc:
            raise SolverFailure(f"decomposition failed at outer iteration {k}: {exc}",
                                trace) from exc
        f = mode_product(b, a, 3)
        change = _rel_change(f, f_prev)
        terms = objective_terms(y, a, b, t, w_asce, cfg, inner.w1, inner.w2)
        trace.append(IterationRecord(
            iteration=k,
            rel_change=change,
            residual=float(np.linalg.norm(y - f - t)),
            inner_iters=inner.inner_iters,
            **terms,
        ))
        log.debug("outer %d: rel change %.3e, %d inner", k, change, inner.inner_iters)
        f_prev = f
        if change < cfg.tol_outer:
            break
    f_prev = f_prev / cfg.data_scale
    t = t / cfg.data_scale
    if return_state:
        state = DecompositionState(a=a, b=b, t=t, z1=inner.z1, z2=inner.z2,
                                   p1=inner.p1, p2=inner.p2)
        return f_prev, t, trace, state
    return f_prev, t, trace
