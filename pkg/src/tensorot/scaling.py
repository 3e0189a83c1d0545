"""Greedy Sinkhorn scaling of nonnegative tensors to prescribed marginals.

Each step rescales the single mode whose marginal deviates most, measured
by the l1 norm of the marginal after the component along the target has
been projected out.  For strictly positive tensors that projected
residual is used directly; for tensors with zeros the residual is first
pushed through the support-aware subspace decomposition, which ignores
directions along which the scaling cannot move.

Iterates are rematerialized from the normalized input and the accumulated
log-domain exponents on every step, so the returned exponents reproduce
the final iterate exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import null_space, orth

from .errors import ContractViolation, DegenerateSliceError, NonConvergenceError
from .tensor import MarginalFamily, Tensor, _fsum, marginal

__all__ = [
    "SinkhornConfig",
    "SinkhornTrace",
    "IterationRecord",
    "SubspaceBases",
    "sinkhorn_scale",
    "log_marginal_fit",
    "residual",
    "select_mode",
    "kl_divergence",
    "support_subspaces",
    "iteration_bound",
]

_RCOND = 1e-10
VARIANTS = ("positive", "support")


@dataclass(frozen=True)
class SinkhornConfig:
    """Stopping threshold, safety cap, and variant switch for one run."""

    epsilon: float
    max_iter: Optional[int] = None
    variant: str = "positive"

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ContractViolation("epsilon must lie in (0, 1/2)")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


@dataclass(frozen=True)
class IterationRecord:
    """State of one scaling step, taken before the update is applied."""

    k: int
    mode: Optional[int]  # None on the final (stopping) record
    residual_l1: float  # max over modes; the selection/stopping quantity
    residual_l2: float  # Euclidean norm of the selected mode's residual
    kl: Optional[float]  # K(p_mode || marginal) for the applied update
    g_value: float
    fingerprint: str


@dataclass
class SinkhornTrace:
    """Per-iteration records plus the run's certificate quantities."""

    epsilon: float
    variant: str
    records: list[IterationRecord] = field(default_factory=list)
    k_stop: Optional[int] = None
    bound: Optional[float] = None
    eta: Optional[float] = None
    mass: Optional[float] = None

    @property
    def g_values(self) -> np.ndarray:
        return np.array([r.g_value for r in self.records])

    @property
    def kl_values(self) -> np.ndarray:
        return np.array([math.nan if r.kl is None else r.kl for r in self.records])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual_l1 for r in self.records])

    @property
    def modes(self) -> list[Optional[int]]:
        return [r.mode for r in self.records]

    def write_jsonl(self, path) -> None:
        """One JSON line per iteration, then a closing certificate line."""
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps({
                    "k": r.k,
                    "mode": r.mode,
                    "residual_l1": r.residual_l1,
                    "kl": r.kl,
                    "g_value": r.g_value,
                }))
                fh.write("\n")
            fh.write(json.dumps({
                "k_stop": self.k_stop,
                "bound": self.bound,
                "eta": self.eta,
                "mass": self.mass,
            }))
            fh.write("\n")


@dataclass(frozen=True)
class SubspaceBases:
    """Orthonormal bases of the subspaces steering the support variant.

    All live in the stacked (d*n)-dimensional space of per-mode exponent
    vectors: ``marginal_orth`` collects every direction orthogonal to its
    mode's target marginal; ``degenerate`` the directions that leave the
    scaling unchanged on the support; ``complement`` the orthogonal
    complement of the latter inside the former; ``mode_blocks[j]`` the
    projection of mode j's orthogonal directions into the complement.
    """

    marginal_orth: np.ndarray
    degenerate: np.ndarray
    complement: np.ndarray
    mode_blocks: list[np.ndarray]

    @property
    def dim_degenerate(self) -> int:
        return self.degenerate.shape[1]

    @property
    def dim_complement(self) -> int:
        return self.complement.shape[1]


def kl_divergence(p, q) -> float:
    """Kullback-Leibler divergence sum p_i (log p_i - log q_i).

    Returns +inf when q vanishes somewhere p does not.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must have one common length")
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    pm = p[mask]
    return math.fsum((pm * (np.log(pm) - np.log(q[mask]))).tolist())


def log_marginal_fit(A: Tensor, p, mode: int) -> np.ndarray:
    """Log-domain update log(p) - log(marginal) that fits mode ``mode`` to p."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ContractViolation("target marginal must be strictly positive")
    s = marginal(A, mode)
    if np.any(s <= 0):
        raise DegenerateSliceError(f"mode {mode} has a slice with zero mass")
    return np.log(p) - np.log(s)


def _line_residual(s: np.ndarray, p: np.ndarray) -> np.ndarray:
    return s - (float(s @ p) / float(p @ p)) * p


def residual(A: Tensor, p, mode: int) -> tuple[np.ndarray, float]:
    """Marginal minus its projection onto the target direction, plus its l1 norm."""
    p = np.asarray(p, dtype=float)
    if not np.any(p):
        raise ValueError("target marginal must be nonzero")
    r = _line_residual(marginal(A, mode), p)
    return r, float(np.abs(r).sum())


def select_mode(A: Tensor, P: MarginalFamily, bases: Optional[SubspaceBases] = None) -> int:
    """Mode with the largest residual norm; ties break to the smallest index."""
    norms = _residual_norms(np.stack([marginal(A, j) for j in range(A.d)]),
                            P, bases)[0]
    return int(np.argmax(norms))


def _residual_norms(S: np.ndarray, P: MarginalFamily, bases: Optional[SubspaceBases]):
    """l1 residual norms per mode, plus the per-mode l2 norms.

    With ``bases`` the marginals are embedded into their mode block and
    projected onto the support-aware blocks; without, the plain projected
    line residual is used.
    """
    d, n = P.d, P.n
    if bases is None:
        coef = (S * P.p).sum(axis=1) / (P.p * P.p).sum(axis=1)
        R = S - coef[:, None] * P.p
        return np.abs(R).sum(axis=1), np.linalg.norm(R, axis=1)
    l1 = np.empty(d)
    l2 = np.empty(d)
    for j in range(d):
        Q = bases.mode_blocks[j]
        coords = Q[j * n:(j + 1) * n, :].T @ S[j]
        proj = Q @ coords
        l1[j] = np.abs(proj).sum()
        l2[j] = np.linalg.norm(coords)
    return l1, l2


def support_subspaces(A: Tensor, P: MarginalFamily) -> SubspaceBases:
    """Decompose the exponent space according to the support pattern of A.

    The degenerate part collects exponent combinations that cancel on
    every positive entry (so the scaling cannot see them); its complement
    inside the marginal-orthogonal space is where the iteration actually
    moves.  For strictly positive A the degenerate part is trivial.
    """
    d, n = A.d, A.n
    if P.d != d or P.n != n:
        raise ValueError("marginal family shape does not match the tensor")
    dn = d * n
    # rows <p_j, y_j> = 0, one per mode
    p_rows = np.zeros((d, dn))
    for j in range(d):
        p_rows[j, j * n:(j + 1) * n] = P.p[j]
    marginal_orth = null_space(p_rows, rcond=_RCOND)

    support = np.argwhere(A.data > 0)
    if support.size == 0:
        raise ContractViolation("tensor has empty support")
    pattern = np.zeros((support.shape[0], dn))
    rows = np.arange(support.shape[0])
    for j in range(d):
        pattern[rows, j * n + support[:, j]] = 1.0
    degenerate = null_space(np.vstack([pattern, p_rows]), rcond=_RCOND)

    if degenerate.shape[1] == 0:
        complement = marginal_orth
    else:
        residual_basis = marginal_orth - degenerate @ (degenerate.T @ marginal_orth)
        complement = orth(residual_basis, rcond=_RCOND)

    mode_blocks = []
    for j in range(d):
        base = null_space(P.p[j][None, :], rcond=_RCOND)  # (n, n-1)
        emb = np.zeros((dn, base.shape[1]))
        emb[j * n:(j + 1) * n, :] = base
        projected = complement @ (complement.T @ emb)
        mode_blocks.append(orth(projected, rcond=_RCOND))

    return SubspaceBases(marginal_orth=marginal_orth, degenerate=degenerate,
                         complement=complement, mode_blocks=mode_blocks)


def iteration_bound(n: int, epsilon: float, mass: float, eta: float) -> float:
    """Certified ceiling on the number of scaling steps before stopping."""
    return 2.0 * (math.sqrt(n) + 1.0) ** 2 / epsilon**2 * math.log(mass / eta)


def _fingerprint(arr: np.ndarray) -> str:
    return hashlib.sha1(arr.tobytes()).hexdigest()[:16]


def sinkhorn_scale(
    A: Tensor,
    P: MarginalFamily,
    cfg: SinkhornConfig,
    bases: Optional[SubspaceBases] = None,
) -> tuple[Tensor, np.ndarray, SinkhornTrace]:
    """Scale A toward the transport polytope of P, one greedy mode at a time.

    Returns the stopped iterate (a probability tensor whose marginals are
    all within 2*epsilon of their targets in l1), the accumulated (d, n)
    log-domain exponents X with ``apply_scaling(A/||A||_1, X)`` equal to
    the stopped iterate, and the full trace.

    Raises :class:`NonConvergenceError` (carrying the trace) if the cap on
    iterations is hit; for the support variant that usually means the
    input is not scalable to the polytope.
    """
    P.require_probability()
    d, n = A.d, A.n
    if (P.d, P.n) != (d, n):
        raise ValueError("marginal family shape does not match the tensor")
    data = A.data
    if cfg.variant == "positive":
        if np.any(data <= 0):
            raise ContractViolation(
                "positive variant requires a strictly positive tensor; "
                "use variant='support' for tensors with zeros"
            )
        eta = float(data.min())
    else:
        A.require_nonnegative("scaling input")
        if bases is None:
            bases = support_subspaces(A, P)
        eta = A.min_positive()
    mass = _fsum(data)
    for j in range(d):
        if np.any(marginal(A, j) <= 0):
            raise DegenerateSliceError(f"mode {j} has a slice with zero mass")

    bound = iteration_bound(n, cfg.epsilon, mass, eta)
    max_iter = cfg.max_iter if cfg.max_iter is not None else max(16, math.ceil(4 * bound))

    data0 = data / mass
    zero_mask = data0 == 0.0 if cfg.variant == "support" else None
    shapes = [tuple(n if ax == j else 1 for ax in range(d)) for j in range(d)]
    sum_axes = [tuple(ax for ax in range(d) if ax != j) for j in range(d)]
    log_p = np.log(P.p)
    sel_bases = bases if cfg.variant == "support" else None

    X = np.zeros((d, n))
    trace = SinkhornTrace(epsilon=cfg.epsilon, variant=cfg.variant,
                          bound=bound, eta=eta, mass=mass)

    k = 0
    while True:
        E = X[0].reshape(shapes[0])
        for j in range(1, d):
            E = E + X[j].reshape(shapes[j])
        if zero_mask is None:
            current = data0 * np.exp(E)
        else:
            # exponents are unconstrained on zero cells and may overflow
            with np.errstate(over="ignore", invalid="ignore"):
                current = np.where(zero_mask, 0.0, data0 * np.exp(E))
        S = np.stack([current.sum(axis=sum_axes[j]) for j in range(d)])
        norms_l1, norms_l2 = _residual_norms(S, P, sel_bases)
        worst = float(norms_l1.max())
        mode = int(np.argmax(norms_l1))
        g_val = float(S[0].sum()) - float(np.sum(P.p * X))
        fp = _fingerprint(current)
        if worst < cfg.epsilon:
            trace.records.append(IterationRecord(
                k=k, mode=None, residual_l1=worst,
                residual_l2=float(norms_l2[mode]), kl=None,
                g_value=g_val, fingerprint=fp))
            trace.k_stop = k
            break
        if k >= max_iter:
            raise NonConvergenceError(
                f"no convergence after {k} scaling steps (epsilon={cfg.epsilon}); "
                "the input may not be scalable to the target polytope",
                trace=trace)
        s_mode = S[mode]
        if np.any(s_mode <= 0):
            raise DegenerateSliceError(f"mode {mode} marginal vanished at step {k}")
        kl = kl_divergence(P.p[mode], s_mode)
        trace.records.append(IterationRecord(
            k=k, mode=mode, residual_l1=worst,
            residual_l2=float(norms_l2[mode]), kl=kl,
            g_value=g_val, fingerprint=fp))
        X[mode] += log_p[mode] - np.log(s_mode)
        k += 1

    return Tensor(current), X, trace
