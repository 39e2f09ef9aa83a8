"""Dense phase-one simplex for tiny feasibility problems."""

import numpy as np

FEAS_TOL = 1e-9


def feasible(A, b, tol=FEAS_TOL, max_pivots=500):
    """Decide whether {x >= 0 : A x = b} is non-empty.

    Runs phase one of the tableau simplex with artificial variables and
    Bland's rule, so it always terminates.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    for _ in range(max_pivots):
        entering = np.flatnonzero(T[m, :-1] < -tol)
        if entering.size == 0:
            break
        j = entering[0]
        col = T[:m, j]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            break
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        r = min(ties, key=lambda i: basis[i])
        T[r] /= T[r, j]
        for i in range(m + 1):
            if i != r and T[i, j] != 0.0:
                T[i] -= T[i, j] * T[r]
        basis[r] = j

    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    return -T[m, -1] <= tol * scale
