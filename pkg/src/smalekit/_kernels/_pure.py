"""Pure numpy implementation of the pairwise log-scale scan kernels.

Conventions shared with the compiled backend (_core.pyx):

* ``points`` is an (N, d) float64 array of torus coordinates in [0, 1).
* The scan iterates pair *differences*: the time-k separation of a pair
  is wrap(A^k wrap(x - y)) with wrap(z) = z - round(z), which is exact
  for lattice-preserving integer matrices and avoids the exponential
  float noise of iterating individual orbits.
* A pair "fails" at time k when its separation norm exceeds eps0.
* side=+1 (stable scan): value is -k*-1 where k* is the largest failing
  time in [-n_max, n_max]; NOT_ON_LEAF if the pair fails at k=+n_max;
  n_max if no failure (truncated reading, true value >= n_max).
* side=-1 (unstable scan): mirror image (smallest failing time k*,
  value k*-1, NOT_ON_LEAF at k=-n_max).
* side=0 (standard two-sided scan): value is n*-1 where n* is the
  smallest window radius with a failure at k=+n or k=-n (so -1 when the
  pair is already apart at k=0, the bi-Lipschitz-stable convention);
  n_max if no window fails.
"""

import numpy as np

NOT_ON_LEAF = -32768

BACKEND = "pure"

_CHUNK = 128


def _wrap(delta):
    delta -= np.round(delta)
    return delta


def _fail(delta, eps2):
    return np.einsum("...i,...i->...", delta, delta) > eps2


def ell_matrix(points, m_fwd, m_bwd, eps0, side, n_max):
    """Pairwise log-scale readings over a sample; int16 (N, N)."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    out = np.empty((n, n), dtype=np.int16)
    a_t = np.asarray(m_fwd, dtype=np.float64).T
    b_t = np.asarray(m_bwd, dtype=np.float64).T
    eps2 = float(eps0) * float(eps0)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        delta0 = _wrap(pts[lo:hi, None, :] - pts[None, :, :])
        out[lo:hi] = _scan_block(delta0, a_t, b_t, eps2, side, n_max)
    return out


def _scan_block(delta0, a_t, b_t, eps2, side, n_max):
    if side == 1:
        return _scan_one_sided(delta0, a_t, b_t, eps2, n_max)
    if side == -1:
        # the unstable value min(F) - 1 equals the stable scan of the
        # time-reversed dynamics (matrices swapped), sentinel included
        return _scan_one_sided(delta0, b_t, a_t, eps2, n_max)
    return _scan_standard(delta0, a_t, b_t, eps2, n_max)


def _scan_one_sided(delta0, tail_t, lead_t, eps2, n_max):
    """Stable scan: tail = forward dynamics, lead = backward.

    The value is -k*-1 with k* the largest failing time: the last
    failing forward time when one exists (NOT_ON_LEAF at the horizon),
    otherwise minus the first failing backward time.
    """
    shape = delta0.shape[:-1]
    worst = np.full(shape, -1, dtype=np.int32)  # last failing tail time
    delta = delta0.copy()
    for k in range(0, n_max + 1):
        if k > 0:
            delta = _wrap(delta @ tail_t)
        worst[_fail(delta, eps2)] = k
    val = np.empty(shape, dtype=np.int16)
    val[...] = n_max
    hit = worst >= 0
    val[worst == n_max] = NOT_ON_LEAF
    sel = hit & (worst < n_max)
    val[sel] = (-worst[sel] - 1).astype(np.int16)
    undone = ~hit
    delta = delta0.copy()
    for k in range(1, n_max + 1):
        if not undone.any():
            break
        delta = _wrap(delta @ lead_t)
        newly = _fail(delta, eps2) & undone
        if newly.any():
            val[newly] = k - 1
            undone &= ~newly
    return val


def _scan_standard(delta0, a_t, b_t, eps2, n_max):
    shape = delta0.shape[:-1]
    val = np.full(shape, n_max, dtype=np.int16)
    undone = np.ones(shape, dtype=bool)
    fwd = delta0.copy()
    bwd = delta0.copy()
    for r in range(0, n_max + 1):
        if r > 0:
            fwd = _wrap(fwd @ a_t)
            bwd = _wrap(bwd @ b_t)
        fail = _fail(fwd, eps2)
        if r > 0:
            fail |= _fail(bwd, eps2)
        newly = fail & undone
        if newly.any():
            val[newly] = r - 1
            undone &= ~newly
        if not undone.any():
            break
    return val


def ell_pairs(points, m_fwd, m_bwd, ii, jj, eps0, side, n_max):
    """Log-scale readings for an explicit pair index list; int16 (P,)."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    ii = np.asarray(ii, dtype=np.intp)
    jj = np.asarray(jj, dtype=np.intp)
    delta0 = _wrap(pts[ii] - pts[jj])
    a_t = np.asarray(m_fwd, dtype=np.float64).T
    b_t = np.asarray(m_bwd, dtype=np.float64).T
    eps2 = float(eps0) * float(eps0)
    return _scan_block(delta0, a_t, b_t, eps2, side, n_max)
