"""
Compiled inner loops for the two coordinate-descent solvers.

Both kernels mutate their state arrays in place and return summary scalars;
the Python callers own convergence checks, logging and iteration budgets.
"""
from numba import njit


@njit(cache=True, nogil=True)
def soft_threshold(z, gamma):
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


@njit(cache=True, nogil=True)
def weighted_lasso_sweep(x, w, r, beta, col_curv, penalty, coords):
    """
    One cyclic sweep over ``coords`` of the weighted least-squares lasso

        (1/2n) sum_i w_i (z_i - x_i' beta)^2 + sum_j penalty_j |beta_j|

    with r = z - X beta kept current. Returns the largest curvature-scaled
    coordinate move.
    """
    n = x.shape[0]
    max_move = 0.0
    for c in range(coords.shape[0]):
        j = coords[c]
        a = col_curv[j]
        if a <= 0.0:
            continue
        grad = 0.0
        for i in range(n):
            grad += w[i] * x[i, j] * r[i]
        grad = grad / n + a * beta[j]
        new = soft_threshold(grad, penalty[j]) / a
        delta = new - beta[j]
        if delta != 0.0:
            for i in range(n):
                r[i] -= delta * x[i, j]
            beta[j] = new
            move = a * abs(delta)
            if move > max_move:
                max_move = move
    return max_move


@njit(cache=True, nogil=True)
def projection_dual_sweep(sigma, b, bb, sigma_b, curv, v, s, q, mu, zero_curvature):
    """
    One cyclic sweep over the p+1 dual coordinates of

        (1/4) (Hv)' Sigma (Hv) + b' H v + mu ||v||_1,   H = [b, I].

    State: s = Hv and q = Sigma s. Returns (largest curvature-scaled move,
    index of an unbounded coordinate or -1).
    """
    p = b.shape[0]
    max_move = 0.0
    for k in range(p + 1):
        if k == 0:
            g = bb
            for j in range(p):
                g += 0.5 * b[j] * q[j]
        else:
            g = 0.5 * q[k - 1] + b[k - 1]
        a = curv[k]
        if a <= zero_curvature:
            if abs(g) > mu:
                return max_move, k
            continue
        new = soft_threshold(a * v[k] - g, mu) / a
        delta = new - v[k]
        if delta == 0.0:
            continue
        v[k] = new
        if k == 0:
            for j in range(p):
                s[j] += delta * b[j]
                q[j] += delta * sigma_b[j]
        else:
            s[k - 1] += delta
            for j in range(p):
                q[j] += delta * sigma[k - 1, j]
        move = a * abs(delta)
        if move > max_move:
            max_move = move
    return max_move, -1
