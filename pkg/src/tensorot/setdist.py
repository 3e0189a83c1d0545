"""Distances between ordered and unordered sets of discrete measures.

An even-order cost tensor is read as a square matrix over index tuples;
when that matricization is a distance matrix, the transport value between
the stacked marginal lists is itself a distance on ordered tuples of
measures.  Minimizing over simultaneous permutations of both lists makes
it order-free, provided the cost is at least weakly symmetric under those
permutations.  The gluing construction composes two feasible plans that
share their middle marginals, which is what the triangle inequality tests
exercise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation
from .lp import solve_exact_tot
from .tensor import MarginalFamily, Tensor
from .transport import approx_tot

__all__ = [
    "DistanceCheck",
    "CostTensorProfile",
    "SetDistanceResult",
    "matricize",
    "check_distance_matrix",
    "check_multiset_distance",
    "check_bisymmetric",
    "cost_profile",
    "lift_ground_metric",
    "pair_distance",
    "glue",
    "contract_middle",
    "set_distance",
]

_ATOL = 1e-12
MAX_HALF_ORDER = 6  # permutation search is factorial in d/2


@dataclass(frozen=True)
class DistanceCheck:
    ok: bool
    violation: Optional[str]

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class CostTensorProfile:
    """Verified structural flags of a cost tensor (set by the validators only).

    ``distance_matrix`` is the strict axiom check on the matricization;
    ``multiset_distance`` is the weaker multiset-style variant where zeros
    are required exactly on equal index multisets (what matching-style
    costs provide, giving a semimetric on measure lists).
    """

    distance_matrix: bool
    multiset_distance: bool
    bisymmetric: bool
    weak_bisymmetric: bool
    violation: Optional[str] = None


@dataclass(frozen=True)
class SetDistanceResult:
    distance: float
    best_permutation: tuple[int, ...]
    profile: CostTensorProfile
    multisets_equal: bool


def _half(C: Tensor) -> int:
    if C.d % 2 != 0:
        raise ValueError(f"need an even tensor order, got {C.d}")
    return C.d // 2


def matricize(C: Tensor) -> np.ndarray:
    """Square matrix over [n]^(d/2) index tuples, row-major on both sides."""
    half = _half(C)
    side = C.n**half
    return C.data.reshape(side, side)


def check_distance_matrix(D, tol: float = _ATOL) -> DistanceCheck:
    """Zero diagonal, symmetry, positive off-diagonal, all triangle inequalities."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("expected a square matrix")
    size = D.shape[0]
    diag = np.abs(np.diag(D))
    if diag.max(initial=0.0) > tol:
        i = int(np.argmax(diag))
        return DistanceCheck(False, f"nonzero self-distance at index {i}: {D[i, i]!r}")
    asym = np.abs(D - D.T)
    if asym.max(initial=0.0) > tol:
        i, j = np.unravel_index(np.argmax(asym), D.shape)
        return DistanceCheck(False, f"asymmetry at ({i}, {j}): {D[i, j]!r} vs {D[j, i]!r}")
    off = ~np.eye(size, dtype=bool)
    if size > 1 and D[off].min() <= tol:
        flat = np.where(off, D, np.inf)
        i, j = np.unravel_index(np.argmin(flat), D.shape)
        return DistanceCheck(False, f"nonpositive off-diagonal at ({i}, {j}): {D[i, j]!r}")
    # d(i,j) <= d(i,k) + d(k,j) for every triple
    slack = (D[:, None, :] + D[None, :, :]).min(axis=2) - D
    if slack.min() < -tol:
        i, j = np.unravel_index(np.argmin(slack), D.shape)
        k = int(np.argmin(D[i] + D[j]))
        return DistanceCheck(
            False,
            f"triangle violation: d({i},{j}) > d({i},{k}) + d({k},{j})",
        )
    return DistanceCheck(True, None)


def check_multiset_distance(C: Tensor, tol: float = _ATOL) -> DistanceCheck:
    """Multiset-style distance axioms: zero exactly on equal index
    multisets, positive otherwise, symmetric, all triangle inequalities.

    This is what matching-style costs satisfy; their matricizations fail
    the strict check because distinct tuples with equal multisets sit off
    the diagonal at zero.
    """
    half = _half(C)
    D = matricize(C)
    size = D.shape[0]
    tuples = [np.unravel_index(i, (C.n,) * half) for i in range(size)]
    same = np.array([[sorted(a) == sorted(b) for b in tuples] for a in tuples])
    if np.abs(D[same]).max(initial=0.0) > tol:
        flat = np.where(same, np.abs(D), -np.inf)
        i, j = np.unravel_index(np.argmax(flat), D.shape)
        return DistanceCheck(False, f"nonzero cost on equal multisets at ({i}, {j})")
    if size > 1 and np.any(D[~same] <= tol):
        flat = np.where(~same, D, np.inf)
        i, j = np.unravel_index(np.argmin(flat), D.shape)
        return DistanceCheck(False, f"nonpositive cost on distinct multisets at ({i}, {j})")
    asym = np.abs(D - D.T)
    if asym.max(initial=0.0) > tol:
        i, j = np.unravel_index(np.argmax(asym), D.shape)
        return DistanceCheck(False, f"asymmetry at ({i}, {j})")
    slack = (D[:, None, :] + D[None, :, :]).min(axis=2) - D
    if slack.min() < -tol:
        i, j = np.unravel_index(np.argmin(slack), D.shape)
        return DistanceCheck(False, f"triangle violation between tuples {i} and {j}")
    return DistanceCheck(True, None)


def check_bisymmetric(C: Tensor, tol: float = _ATOL) -> tuple[bool, bool]:
    """(fully bisymmetric, weakly bisymmetric) flags of an even-order tensor.

    Fully: invariant under independent permutations inside each index half
    and under swapping the halves.  Weakly: the two halves must share the
    permutation.
    """
    half = _half(C)
    data = C.data
    front = list(range(half))
    back = list(range(half, 2 * half))
    swapped = np.transpose(data, back + front)
    if not np.allclose(data, swapped, rtol=0.0, atol=tol):
        return False, False
    weak = True
    full = True
    for perm in itertools.permutations(range(half)):
        if perm == tuple(range(half)):
            continue
        perm_front = [perm[i] for i in range(half)] + back
        perm_back = front + [half + perm[i] for i in range(half)]
        front_ok = np.allclose(data, np.transpose(data, perm_front), rtol=0.0, atol=tol)
        back_ok = np.allclose(data, np.transpose(data, perm_back), rtol=0.0, atol=tol)
        if not (front_ok and back_ok):
            full = False
        both = [perm[i] for i in range(half)] + [half + perm[i] for i in range(half)]
        if not np.allclose(data, np.transpose(data, both), rtol=0.0, atol=tol):
            weak = False
            break
    weak = weak or full
    return full, weak


def cost_profile(C: Tensor, tol: float = _ATOL) -> CostTensorProfile:
    """Run every validator once and collect the verified flags."""
    full, weak = check_bisymmetric(C, tol=tol)
    check = check_distance_matrix(matricize(C), tol=tol)
    multiset = check_multiset_distance(C, tol=tol)
    return CostTensorProfile(distance_matrix=check.ok, multiset_distance=multiset.ok,
                             bisymmetric=full, weak_bisymmetric=weak,
                             violation=check.violation)


def lift_ground_metric(delta, order: int, mode: str = "sum") -> Tensor:
    """Cost tensor over [n]^order built from an n-point ground metric.

    ``sum`` pairs the k-th front index with the k-th back index and adds
    the ground distances (the l1 product metric on tuples, weakly
    bisymmetric).  ``matching`` takes the cheapest pairing over all
    permutations, vanishing exactly on equal index multisets (fully
    bisymmetric).
    """
    delta = np.asarray(delta, dtype=float)
    check = check_distance_matrix(delta)
    if not check.ok:
        raise ValueError(f"ground metric is invalid: {check.violation}")
    if order % 2 != 0 or order < 2:
        raise ValueError("order must be a positive even number")
    if mode not in ("sum", "matching"):
        raise ValueError("mode must be 'sum' or 'matching'")
    half = order // 2
    n = delta.shape[0]
    idx = np.indices((n,) * order)

    def pairing_cost(perm):
        total = np.zeros((n,) * order)
        for k in range(half):
            total = total + delta[idx[k], idx[half + perm[k]]]
        return total

    if mode == "sum":
        return Tensor(pairing_cost(tuple(range(half))))
    best = None
    for perm in itertools.permutations(range(half)):
        cost = pairing_cost(perm)
        best = cost if best is None else np.minimum(best, cost)
    return Tensor(best)


def _as_measure_list(vectors, n: int, half: int, what: str) -> np.ndarray:
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape != (half, n):
        raise ValueError(f"{what} must hold {half} vectors of length {n}")
    return arr


def pair_distance(
    C: Tensor,
    left,
    right,
    solver: str = "exact",
    delta: Optional[float] = None,
    cap: Optional[int] = None,
) -> float:
    """Transport value between two ordered lists of d/2 measures."""
    half = _half(C)
    left = _as_measure_list(left, C.n, half, "left measures")
    right = _as_measure_list(right, C.n, half, "right measures")
    family = MarginalFamily(np.vstack([left, right]))
    family.require_probability()
    if solver == "exact":
        return solve_exact_tot(C, family, cap=cap).value
    if solver == "entropic":
        if delta is None:
            raise ValueError("the entropic solver needs a delta target")
        _, cert = approx_tot(C, family, delta)
        return cert.value
    raise ValueError("solver must be 'exact' or 'entropic'")


def glue(U: Tensor, V: Tensor, tol: float = 1e-8) -> Tensor:
    """Compose two plans sharing their middle marginals into one joint plan.

    U couples blocks (front, middle) and V couples (middle, back); the
    result couples (front, middle, back) with 0/0 read as 0.  Contracting
    away the back block recovers U, the front block recovers V, and the
    middle block yields a feasible coupling of (front, back).
    """
    half = _half(U)
    if V.d != U.d or V.n != U.n:
        raise ValueError("both plans must share order and side length")
    n = U.n
    side = n**half
    u_mat = U.data.reshape(side, side)
    v_mat = V.data.reshape(side, side)
    mid_u = u_mat.sum(axis=0)
    mid_v = v_mat.sum(axis=1)
    gap = float(np.abs(mid_u - mid_v).sum())
    if gap > tol:
        raise ValueError(
            f"middle marginals of the two plans disagree (l1 gap {gap:.3e})"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        w = u_mat[:, :, None] * v_mat[None, :, :] / mid_u[None, :, None]
    w = np.where(mid_u[None, :, None] > 0, w, 0.0)
    return Tensor(w.reshape((n,) * (3 * half)))


def contract_middle(W: Tensor, half: int) -> Tensor:
    """Sum a glued plan over its middle block, coupling front with back."""
    if W.d != 3 * half:
        raise ValueError(f"expected an order-{3 * half} glued plan, got order {W.d}")
    axes = tuple(range(half, 2 * half))
    return Tensor(W.data.sum(axis=axes))


def _multisets_equal(left: np.ndarray, right: np.ndarray, tol: float = 1e-12) -> bool:
    for perm in itertools.permutations(range(left.shape[0])):
        if all(np.allclose(left[i], right[perm[i]], rtol=0.0, atol=tol)
               for i in range(left.shape[0])):
            return True
    return False


def set_distance(
    C: Tensor,
    left,
    right,
    solver: str = "exact",
    delta: Optional[float] = None,
    cap: Optional[int] = None,
) -> SetDistanceResult:
    """Order-free distance: minimum over simultaneous list permutations.

    Requires a (at least weakly) bisymmetric cost; the positivity caveat
    for multiset-style costs is surfaced through ``multisets_equal``
    rather than patched into the value.
    """
    half = _half(C)
    if half > MAX_HALF_ORDER:
        raise ValueError(
            f"permutation enumeration supports d/2 <= {MAX_HALF_ORDER}, got {half}"
        )
    profile = cost_profile(C)
    if not profile.weak_bisymmetric:
        raise ContractViolation(
            "set distance needs a weakly bisymmetric cost tensor"
        )
    left = _as_measure_list(left, C.n, half, "left measures")
    right = _as_measure_list(right, C.n, half, "right measures")
    best_value = None
    best_perm = None
    for perm in itertools.permutations(range(half)):
        order = list(perm)
        value = pair_distance(C, left[order], right[order],
                              solver=solver, delta=delta, cap=cap)
        if best_value is None or value < best_value:
            best_value = value
            best_perm = perm
    return SetDistanceResult(
        distance=best_value,
        best_permutation=best_perm,
        profile=profile,
        multisets_equal=_multisets_equal(left, right),
    )
