"""Subshift-of-finite-type machinery for the affine models.

Admissible words, geometric cylinders, separated sets, Birkhoff sums and
partition sums, the spectral pressure oracle, and Markov/Bernoulli
measure statistics.  Potentials here are locally constant (one value per
symbol), so Birkhoff sums and partition sums are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CapExceededError,
    DeltaTooLargeError,
    IncompatibleStochasticsError,
    NotMixingError,
)
from .models import AffineBranch, ModelSystem, Potential

# Enumeration stays desk-scale: no more than ~16.7M admissible words.
WORD_CAP = 1 << 24

SPECTRAL_TOL = 1e-14
SPECTRAL_MAX_ITER = 100_000


def _as_transition(obj) -> np.ndarray:
    a = obj.transition if isinstance(obj, ModelSystem) else np.asarray(obj)
    a = (np.asarray(a) != 0).astype(np.int8)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("transition matrix must be square")
    return a


def is_primitive(transition) -> bool:
    """True iff some power of the 0/1 matrix is entrywise positive.

    Wielandt's bound: for a primitive m x m matrix the power (m-1)^2 + 1
    is already positive, so only that many powers need checking.
    """
    a = _as_transition(transition)
    m = a.shape[0]
    power = a.astype(bool)
    for _ in range((m - 1) ** 2 + 1):
        if power.all():
            return True
        power = (power @ a.astype(bool))
    return bool(power.all())


def count_admissible_words(transition, k: int) -> float:
    """Number of admissible length-k words (float; saturates, never raises)."""
    a = _as_transition(transition).astype(float)
    vec = np.ones(a.shape[0])
    for _ in range(k - 1):
        vec = a.T @ vec
        if vec.sum() > 1e18:
            return math.inf
    return float(vec.sum())


def _check_cap(transition, k: int) -> None:
    if k < 1:
        raise ValueError("word length k must be >= 1")
    count = count_admissible_words(transition, k)
    if count > WORD_CAP:
        raise CapExceededError(
            f"{count:.3g} admissible words of length {k} exceed the cap {WORD_CAP}"
        )


def _successor_table(a: np.ndarray):
    """Padded successor lists: (table, counts) with -1 padding at row ends."""
    m = a.shape[0]
    succ = [np.flatnonzero(a[s]).astype(np.int64) for s in range(m)]
    counts = np.array([len(s) for s in succ], dtype=np.int64)
    width = int(counts.max())
    table = np.full((m, width), -1, dtype=np.int64)
    for s in range(m):
        table[s, : counts[s]] = succ[s]
    return table, counts


def admissible_words(transition, k: int) -> np.ndarray:
    """All admissible length-k words, one per row, lexicographic order."""
    a = _as_transition(transition)
    _check_cap(a, k)
    m = a.shape[0]
    words = np.arange(m, dtype=np.int64)[:, None]
    table, counts = _successor_table(a)
    for _ in range(k - 1):
        last = words[:, -1]
        nxt = table[last]
        keep = nxt >= 0
        repeated = np.repeat(words, counts[last], axis=0)
        words = np.concatenate([repeated, nxt[keep][:, None]], axis=1)
    return words


def birkhoff_sum(pot: Potential, word) -> float:
    """Sum of per-symbol potential values along a word (exact here)."""
    return float(np.asarray(pot.values)[np.asarray(word, dtype=np.int64)].sum())


# -- geometric cylinders ---------------------------------------------------


def _pullback_rect(branch: AffineBranch, lo: np.ndarray, hi: np.ndarray):
    """Bounding box of the branch preimage of [lo, hi], cut to the domain.

    Exact when the linear part is diagonal; otherwise an interval
    arithmetic overestimate, which keeps cylinder covers supersets of
    the invariant set.
    """
    inv = np.linalg.inv(branch.linear)
    shifted_lo = lo - branch.offset
    shifted_hi = hi - branch.offset
    low = np.where(inv > 0, inv * shifted_lo, inv * shifted_hi).sum(axis=1)
    high = np.where(inv > 0, inv * shifted_hi, inv * shifted_lo).sum(axis=1)
    return np.maximum(low, branch.lo), np.minimum(high, branch.hi)


def cylinders(model: ModelSystem, k: int):
    """Depth-k cylinder rectangles.

    Returns (words, rects): words is (N, k) in lexicographic order and
    rects is (N, 2, n) holding [lo, hi] per cylinder.  A cylinder is the
    set of points whose first k symbols equal the word; for diagonal
    branch matrices the rectangles are exact.
    """
    _check_cap(model, k)
    n = model.n

    def level(depth):
        if depth == 1:
            return (
                [(b.symbol,) for b in model.branches],
                [(b.lo.copy(), b.hi.copy()) for b in model.branches],
            )
        sub_words, sub_rects = level(depth - 1)
        words, rects = [], []
        for b in model.branches:
            allowed = model.transition[b.symbol]
            for w, (lo, hi) in zip(sub_words, sub_rects):
                if not allowed[w[0]]:
                    continue
                plo, phi = _pullback_rect(b, lo, hi)
                if np.any(plo > phi + 1e-15):
                    continue  # admissible word without geometric mass
                words.append((b.symbol,) + w)
                rects.append((plo, np.maximum(phi, plo)))
        return words, rects

    words, rects = level(k)
    word_arr = np.asarray(words, dtype=np.int64)
    rect_arr = np.stack([np.stack(r) for r in rects])
    return word_arr, rect_arr


@dataclass(frozen=True)
class SeparatedSet:
    """Representative points, one per admissible word, pairwise separated."""

    k: int
    delta: float
    points: np.ndarray
    words: np.ndarray


def default_delta(model: ModelSystem) -> float:
    """Half the scale at which distinct cylinder representatives separate.

    Uses the larger of the domain gap and the inverse-branch separation;
    zero when the geometry is degenerate (identical branches), in which
    case only symbolic (delta=None) partition sums are meaningful.
    """
    return 0.5 * max(model.min_branch_gap, model.branch_separation)


def _check_delta(model: ModelSystem, delta) -> float | None:
    if delta is None:
        return None
    allowed = max(model.min_branch_gap, model.branch_separation)
    if delta > allowed:
        raise DeltaTooLargeError(
            f"delta {delta} exceeds the separation {allowed} this geometry guarantees"
        )
    return float(delta)


def separated_set(model: ModelSystem, k: int, delta: float | None = None) -> SeparatedSet:
    """Centers of the depth-k cylinders as a (k, delta)-separated set."""
    if delta is None:
        delta = default_delta(model)
    else:
        _check_delta(model, delta)
    words, rects = cylinders(model, k)
    centers = 0.5 * (rects[:, 0, :] + rects[:, 1, :])
    return SeparatedSet(k=k, delta=float(delta), points=centers, words=words)


# -- partition sums --------------------------------------------------------


def partition_sums_through(
    model: ModelSystem, pot: Potential, k_max: int, delta: float | None = None
) -> np.ndarray:
    """Z_k for k = 1..k_max in one sweep.

    Z_k sums exp(S_k phi) over one representative per admissible word;
    for locally constant potentials the value does not depend on the
    representatives, so the sweep works on (last symbol, running sum)
    pairs in fixed lexicographic order -- deterministic regardless of
    chunking.
    """
    _check_delta(model, delta)
    _check_cap(model, k_max)
    a = _as_transition(model)
    phi = np.asarray(pot.values, dtype=float)
    if phi.shape != (model.nsym,):
        raise ValueError("potential length must equal symbol count")
    table, counts = _successor_table(a)
    last = np.arange(model.nsym, dtype=np.int64)
    sums = phi.copy()
    out = np.empty(k_max)
    out[0] = np.exp(sums).sum()
    for k in range(1, k_max):
        nxt = table[last]
        keep = nxt >= 0
        repeated = np.repeat(sums, counts[last])
        last = nxt[keep]
        sums = repeated + phi[last]
        out[k] = np.exp(sums).sum()
    return out


def partition_sum(model: ModelSystem, pot: Potential, k: int, delta: float | None = None) -> float:
    """Z_k = sum over admissible k-words of exp(Birkhoff sum)."""
    return float(partition_sums_through(model, pot, k, delta)[-1])


# -- spectral pressure oracle ----------------------------------------------


def perron_root(matrix, tol: float = SPECTRAL_TOL, max_iter: int = SPECTRAL_MAX_ITER):
    """Dominant eigenvalue and right eigenvector of a primitive matrix.

    Power iteration with Collatz-Wielandt brackets: for positive v the
    ratios (Mv)_i / v_i bracket the Perron root, so the iteration stops
    with a certified relative width below `tol`.
    """
    m = np.asarray(matrix, dtype=float)
    v = np.ones(m.shape[0])
    lo, hi = 0.0, math.inf
    for _ in range(max_iter):
        w = m @ v
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(v > 0, w / v, math.inf)
        lo, hi = float(ratios.min()), float(ratios.max())
        if math.isfinite(hi) and hi - lo <= tol * hi:
            root = 0.5 * (lo + hi)
            return root, w / np.linalg.norm(w)
        peak = w.max()
        if peak <= 0:
            raise NotMixingError("matrix is not primitive (iteration collapsed)")
        v = w / peak
    raise NotMixingError(f"power iteration did not converge within {max_iter} steps")


def pressure_spectral(model: ModelSystem, pot: Potential) -> float:
    """Exact pressure of a locally constant potential.

    log of the spectral radius of M[i, j] = A[i, j] * exp(phi_j); the
    standard transfer-operator value, valid because the coding is a
    primitive subshift of finite type.
    """
    a = _as_transition(model)
    if not is_primitive(a):
        raise NotMixingError("transition matrix is not primitive")
    phi = np.asarray(pot.values, dtype=float)
    weighted = a * np.exp(phi)[None, :]
    root, _ = perron_root(weighted)
    return float(np.log(root))


# -- Markov measures --------------------------------------------------------


@dataclass(frozen=True)
class MarkovMeasureStats:
    """Entropy rate, Lyapunov exponents and potential integral of a measure."""

    entropy: float
    exponents: tuple
    potential_integral: float

    @property
    def positive_exponent_sum(self) -> float:
        return float(sum(lam * m for lam, m in self.exponents if lam > 0))


def stationary_distribution(stochastic: np.ndarray) -> np.ndarray:
    """Stationary row vector of a primitive stochastic matrix."""
    _, v = perron_root(np.asarray(stochastic, dtype=float).T)
    pi = np.abs(v)
    return pi / pi.sum()


def equilibrium_markov_chain(model: ModelSystem, pot: Potential):
    """Gibbs Markov chain of a locally constant potential.

    Q[i, j] = A[i, j] exp(phi_j) v_j / (rho v_i) with (rho, v) the Perron
    data of the weighted matrix; its entropy plus the potential integral
    equals the pressure.  For constant potentials this is the
    maximal-entropy (Parry) chain.  Returns (Q, pi).
    """
    a = _as_transition(model)
    if not is_primitive(a):
        raise NotMixingError("transition matrix is not primitive")
    weighted = a * np.exp(np.asarray(pot.values))[None, :]
    rho, v = perron_root(weighted)
    v = np.abs(v)
    q = weighted * v[None, :] / (rho * v[:, None])
    q = q / q.sum(axis=1, keepdims=True)  # scrub rounding
    return q, stationary_distribution(q)


def _group_exponents(values: np.ndarray, tol: float = 1e-9):
    pairs = []
    for lam in sorted(values.tolist(), reverse=True):
        if pairs and abs(pairs[-1][0] - lam) <= tol:
            pairs[-1][1] += 1
        else:
            pairs.append([lam, 1])
    return tuple((float(lam), int(mult)) for lam, mult in pairs)


def markov_measure_stats(model: ModelSystem, pot: Potential, probabilities) -> MarkovMeasureStats:
    """Entropy rate, Lyapunov exponents and integral for a symbolic measure.

    `probabilities` is either a per-symbol vector (i.i.d. product
    measure; needs full-shift transitions on its support) or a
    row-stochastic matrix compatible with the transition matrix.
    Lyapunov exponents come out as stationarity-weighted logs of the
    branch singular values, which is exact for the built-in models where
    all branches share their singular directions.
    """
    a = _as_transition(model)
    p = np.asarray(probabilities, dtype=float)
    if p.ndim == 1:
        if p.shape != (model.nsym,) or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise IncompatibleStochasticsError("need a probability vector over the symbols")
        support = np.flatnonzero(p > 1e-15)
        if np.any(a[np.ix_(support, support)] == 0):
            raise IncompatibleStochasticsError(
                "product measure support must be a full shift under the transition matrix"
            )
        pi = p
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        entropy = -float(terms.sum())
    elif p.ndim == 2:
        if p.shape != (model.nsym, model.nsym):
            raise IncompatibleStochasticsError("stochastic matrix shape must match symbols")
        if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
            raise IncompatibleStochasticsError("rows must be probability vectors")
        if np.any((p > 1e-15) & (a == 0)):
            raise IncompatibleStochasticsError("positive transitions must be admissible")
        pi = stationary_distribution(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        entropy = -float((pi[:, None] * terms).sum())
    else:
        raise IncompatibleStochasticsError("probabilities must be a vector or a matrix")

    log_sv = np.stack(
        [np.log(np.linalg.svd(b.linear, compute_uv=False)) for b in model.branches]
    )
    exponents = _group_exponents(pi @ log_sv)
    integral = float(pi @ np.asarray(pot.values))
    return MarkovMeasureStats(
        entropy=entropy, exponents=exponents, potential_integral=integral
    )


# -- iterated (power) models -------------------------------------------------


def power_model(model: ModelSystem, m: int) -> ModelSystem:
    """The model of f^m: branches indexed by admissible m-words.

    Each word's branch composes affine data along the word, its domain
    is the word's cylinder rectangle, and words connect exactly when the
    last symbol of one may precede the first of the next.  Pressure of
    the composed potentials and the expansion rate both scale by m.
    """
    if m < 1:
        raise ValueError("power must be >= 1")
    if m == 1:
        return model
    words, rects = cylinders(model, m)
    branches = []
    lam_u = []
    lam_s = []
    for new_sym, (word, rect) in enumerate(zip(words, rects)):
        linear = np.eye(model.n)
        offset = np.zeros(model.n)
        for s in word:
            b = model.branches[int(s)]
            linear = b.linear @ linear
            offset = b.linear @ offset + b.offset
        branches.append(
            AffineBranch(new_sym, lo=rect[0], hi=rect[1], linear=linear, offset=offset)
        )
        lam_u.append(float(np.prod(model.lambda_u[word])))
        if model.lambda_s is not None:
            lam_s.append(float(np.prod(model.lambda_s[word])))
    count = len(words)
    transition = np.zeros((count, count), dtype=np.int8)
    heads = words[:, -1]
    tails = words[:, 0]
    for i in range(count):
        transition[i] = model.transition[heads[i]][tails]
    return ModelSystem(
        space=model.space,
        branches=tuple(branches),
        kind=model.kind,
        unstable_dim=model.unstable_dim,
        stable_dim=model.stable_dim,
        transition=transition,
        lambda_u=np.asarray(lam_u),
        lambda_s=np.asarray(lam_s) if lam_s else None,
        strict=False,
    )
