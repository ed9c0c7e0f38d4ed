"""NumPy implementations of the hot loops.

These are the reference versions; ``_ckernels.pyx`` mirrors them operation
for operation so both backends agree (bit-for-bit for the Chamfer sums).
"""
import numpy as np

_INV_2PI = 0.5 / np.pi
_EPS = 1e-9


def directed_min_dists(a, b):
    """For each point of ``a``, Euclidean distance to its nearest point in ``b``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty(len(a))
    # chunked to bound memory on large sets
    step = max(1, 4_000_000 // max(len(b), 1))
    for lo in range(0, len(a), step):
        dx = a[lo : lo + step, 0:1] - b[:, 0]
        dy = a[lo : lo + step, 1:2] - b[:, 1]
        out[lo : lo + step] = np.sqrt(dx * dx + dy * dy).min(axis=1)
    return out


def _seq_mean(d):
    # left-to-right accumulation, matching the compiled loop exactly
    return np.cumsum(d)[-1] / len(d)


def chamfer(a, b):
    return _seq_mean(directed_min_dists(a, b)) + _seq_mean(directed_min_dists(b, a))


def chamfer_one_to_many(a, stack):
    """Chamfer distance from point set ``a`` to every set in ``stack`` (M, n, 2)."""
    stack = np.asarray(stack, dtype=np.float64)
    return np.array([chamfer(a, s) for s in stack])


def vortex_stream_influence(nodes):
    """Streamfunction influence of linear-strength vortex panels.

    ``nodes`` is (N, 2); panel j runs from node j to node j+1. Returns the
    (N, N) matrix A with psi(node i) = sum_k A[i, k] * gamma_k.
    """
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    n = len(nodes)
    p1 = nodes[:-1]
    p2 = nodes[1:]
    tvec = p2 - p1
    d = np.hypot(tvec[:, 0], tvec[:, 1])
    tx = tvec[:, 0] / d
    tz = tvec[:, 1] / d
    rx = nodes[:, None, 0] - p1[None, :, 0]
    rz = nodes[:, None, 1] - p1[None, :, 1]
    x = rx * tx + rz * tz
    z = -rx * tz + rz * tx
    xd = x - d
    r1 = np.hypot(x, z)
    r2 = np.hypot(xd, z)
    theta1 = np.arctan2(z, x)
    theta2 = np.arctan2(z, xd)
    with np.errstate(divide="ignore"):
        logr1 = np.where(r1 < _EPS, 0.0, np.log(r1))
        logr2 = np.where(r2 < _EPS, 0.0, np.log(r2))
    p_1 = _INV_2PI * (z * (theta2 - theta1) - d + x * logr1 - xd * logr2)
    p_2 = x * p_1 + _INV_2PI * (
        0.5 * r2 * r2 * logr2 - 0.5 * r1 * r1 * logr1 - 0.25 * r2 * r2 + 0.25 * r1 * r1
    )
    coef_a = p_1 - p_2 / d
    coef_b = p_2 / d
    out = np.zeros((n, n))
    out[:, :-1] += coef_a
    out[:, 1:] += coef_b
    return out
