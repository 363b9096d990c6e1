"""Hot numerical kernels: water-level bisection and the iterative update loop.

Both kernels exist in two variants with identical semantics: a numba
``@njit`` build (default) and a pure-numpy build. Set the environment
variable ``SPECTRUMGAME_NO_NUMBA=1`` before import to force the numpy
path; it is also selected automatically when numba is not importable.
``benchmarks/bench_kernels.py`` compares the two.

The bisection always runs ``max_bisect`` halvings (no early exit), which
makes results deterministic and exactly covariant under power-of-two
rescaling of (s_eff, p_max, p_mask).
"""

import os

import numpy as np

_TRUTHY = ("1", "true", "yes", "on")

_BISECT_FAIL_MSG = "water-level bisection did not meet the power budget"


def _numba_disabled() -> bool:
    return os.environ.get("SPECTRUMGAME_NO_NUMBA", "").strip().lower() in _TRUTHY


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def waterfill_numpy(s_eff, p_max, p_mask, max_bisect, budget_tol):
    """Fill `p_max` watts over channels with floors `s_eff` and caps `p_mask`.

    Returns ``(power, lam)`` where ``lam`` is the budget multiplier:
    0.0 when the caps absorb the whole budget, else ``1 / mu`` with ``mu``
    the water level. Raises ``ValueError`` if the met budget misses
    `p_max` by more than `budget_tol` (unreachable for finite inputs).
    """
    if p_mask.sum() <= p_max:
        return p_mask.copy(), 0.0
    lo = s_eff.min()
    hi = s_eff.max() + p_max
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if np.minimum(np.maximum(mid - s_eff, 0.0), p_mask).sum() > p_max:
            hi = mid
        else:
            lo = mid
    mu = 0.5 * (lo + hi)
    power = np.minimum(np.maximum(mu - s_eff, 0.0), p_mask)
    if abs(power.sum() - p_max) > budget_tol:
        raise ValueError(_BISECT_FAIL_MSG)
    return power, 1.0 / mu


def iwfa_numpy(gain, noise, p_max, p_mask, mult, p0, sequential,
               max_rounds, conv_tol, max_bisect, budget_tol):
    """Run best-response rounds until the per-round sup-norm change <= conv_tol.

    `gain` is (M, M, K) with gain[j, i, k] the power gain from transmitter j
    to receiver i on channel k; `mult` is the (M, K) interference multiplier
    field. One round updates all M users: in-place (Gauss-Seidel order) when
    `sequential`, against the previous iterate otherwise.

    Returns ``(profile, residuals, converged)``.
    """
    M, K = p0.shape
    diag = np.empty((M, K))
    for i in range(M):
        diag[i] = gain[i, i, :]
    p = p0.copy()
    residuals = np.empty(max_rounds)
    converged = False
    rounds = 0
    for t in range(max_rounds):
        prev = p.copy()
        src = p if sequential else prev
        for i in range(M):
            acc = (src * gain[:, i, :]).sum(axis=0) - src[i] * diag[i] + noise[i]
            s_eff = (acc / diag[i]) * mult[i]
            p[i], _ = waterfill_numpy(s_eff, p_max[i], p_mask, max_bisect, budget_tol)
        res = float(np.abs(p - prev).max())
        residuals[t] = res
        rounds = t + 1
        if res <= conv_tol:
            converged = True
            break
    return p, residuals[:rounds].copy(), converged


# ---------------------------------------------------------------------------
# numba implementations (compiled on demand, cached on disk)
# ---------------------------------------------------------------------------

NUMBA_ENABLED = False
waterfill_numba = None
iwfa_numba = None

if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
    if njit is not None:
        @njit(cache=True)
        def waterfill_numba(s_eff, p_max, p_mask, max_bisect, budget_tol):
            K = s_eff.shape[0]
            power = np.empty(K)
            mask_total = 0.0
            for k in range(K):
                mask_total += p_mask[k]
            if mask_total <= p_max:
                for k in range(K):
                    power[k] = p_mask[k]
                return power, 0.0
            lo = s_eff[0]
            hi = s_eff[0]
            for k in range(1, K):
                if s_eff[k] < lo:
                    lo = s_eff[k]
                if s_eff[k] > hi:
                    hi = s_eff[k]
            hi += p_max
            for _ in range(max_bisect):
                mid = 0.5 * (lo + hi)
                tot = 0.0
                for k in range(K):
                    v = mid - s_eff[k]
                    if v < 0.0:
                        v = 0.0
                    elif v > p_mask[k]:
                        v = p_mask[k]
                    tot += v
                if tot > p_max:
                    hi = mid
                else:
                    lo = mid
            mu = 0.5 * (lo + hi)
            tot = 0.0
            for k in range(K):
                v = mu - s_eff[k]
                if v < 0.0:
                    v = 0.0
                elif v > p_mask[k]:
                    v = p_mask[k]
                power[k] = v
                tot += v
            if abs(tot - p_max) > budget_tol:
                raise ValueError(_BISECT_FAIL_MSG)
            return power, 1.0 / mu

        @njit(cache=True)
        def iwfa_numba(gain, noise, p_max, p_mask, mult, p0, sequential,
                       max_rounds, conv_tol, max_bisect, budget_tol):
            M, K = p0.shape
            p = p0.copy()
            prev = np.empty((M, K))
            s_eff = np.empty(K)
            residuals = np.empty(max_rounds)
            converged = False
            rounds = 0
            for t in range(max_rounds):
                for i in range(M):
                    for k in range(K):
                        prev[i, k] = p[i, k]
                src = p if sequential else prev
                for i in range(M):
                    for k in range(K):
                        acc = noise[i, k]
                        for j in range(M):
                            if j != i:
                                acc += src[j, k] * gain[j, i, k]
                        s_eff[k] = (acc / gain[i, i, k]) * mult[i, k]
                    row, _ = waterfill_numba(s_eff, p_max[i], p_mask,
                                             max_bisect, budget_tol)
                    for k in range(K):
                        p[i, k] = row[k]
                res = 0.0
                for i in range(M):
                    for k in range(K):
                        d = abs(p[i, k] - prev[i, k])
                        if d > res:
                            res = d
                residuals[t] = res
                rounds = t + 1
                if res <= conv_tol:
                    converged = True
                    break
            return p, residuals[:rounds].copy(), converged

        NUMBA_ENABLED = True


def backend() -> str:
    """Name of the active kernel backend: 'numba' or 'numpy'."""
    return "numba" if NUMBA_ENABLED else "numpy"


def waterfill(s_eff, p_max, p_mask, max_bisect, budget_tol):
    if NUMBA_ENABLED:
        return waterfill_numba(s_eff, p_max, p_mask, max_bisect, budget_tol)
    return waterfill_numpy(s_eff, p_max, p_mask, max_bisect, budget_tol)


def iwfa(gain, noise, p_max, p_mask, mult, p0, sequential,
         max_rounds, conv_tol, max_bisect, budget_tol):
    if NUMBA_ENABLED:
        return iwfa_numba(gain, noise, p_max, p_mask, mult, p0, sequential,
                          max_rounds, conv_tol, max_bisect, budget_tol)
    return iwfa_numpy(gain, noise, p_max, p_mask, mult, p0, sequential,
                      max_rounds, conv_tol, max_bisect, budget_tol)


def warmup():
    """Trigger JIT compilation on a tiny instance (no-op on the numpy path)."""
    s = np.array([1.0, 2.0])
    mask = np.array([1.0, 1.0])
    waterfill(s, 0.5, mask, 50, 1e-10)
    gain = np.ones((1, 1, 2))
    noise = np.full((1, 2), 0.1)
    iwfa(gain, noise, np.array([0.5]), mask, np.ones((1, 2)),
         np.zeros((1, 2)), True, 5, 1e-8, 50, 1e-10)
