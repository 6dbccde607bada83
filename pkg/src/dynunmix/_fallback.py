"""Pure numpy versions of the ADMM iteration kernels.

Contract shared with the compiled ``_kernels`` module: arrays are float64 and
C-contiguous, the state arrays are updated in place and the function returns
the squared norms needed by the stopping test.
"""

import numpy as np


def endmember_iteration(C, Ginv, M, U, rho, S):
    """One ADMM iteration of the nonnegative endmember problem for one frame.

    ``S <- (C + rho (M - U)) Ginv``, ``M <- max(S + U, 0)``, ``U <- U + S - M``.

    Returns
    -------
    tuple
        ``(||S - M||^2, ||M_new - M_old||^2, ||S||^2, ||M||^2, ||U||^2)``
    """
    np.matmul(C + rho * (M - U), Ginv, out=S)
    M_old = M.copy()
    np.maximum(S + U, 0.0, out=M)
    U += S - M
    r = S - M
    dm = M - M_old
    return (float(np.sum(r * r)), float(np.sum(dm * dm)), float(np.sum(S * S)),
            float(np.sum(M * M)), float(np.sum(U * U)))


def block_tridiagonal_solve(Cinv, rho, rhs, out):
    """Solve ``H a = rhs`` for every pixel, with ``H`` block tridiagonal.

    ``H`` has diagonal blocks ``B_k`` and off-diagonal blocks ``-rho I``;
    ``Cinv`` holds the inverted pivots of its block LU factorization (see
    :func:`dynunmix.admm_abundance.factor_coupled_system`).
    """
    K = rhs.shape[0]
    y = rhs.copy()
    for k in range(1, K):
        y[k] += rho * (Cinv[k - 1] @ y[k - 1])
    out[K - 1] = Cinv[K - 1] @ y[K - 1]
    for k in range(K - 2, -1, -1):
        out[k] = Cinv[k] @ (y[k] + rho * out[k + 1])
    return out


def abundance_iteration(StX, Cinv, Q, D, W, Z, rho, thresh, A_new):
    """One ADMM iteration of the abundance problem over all frames.

    ``A_new`` receives the exact minimizer of the augmented Lagrangian over
    all frames jointly; ``Q``, ``D``, ``W`` and ``Z`` are then updated from
    it. ``D[j]`` and ``Z[j]`` belong to the constraint
    ``A[j+1] - A[j] - D[j] = 0``.

    Returns
    -------
    tuple
        ``(primal^2, dual^2 / rho^2, ||Ax||^2, ||Bz||^2, ||A^T y||^2)``
    """
    K = Q.shape[0]
    rhs = StX + rho * (Q - W)
    if K > 1:
        rhs[1:] += rho * (D - Z)
        rhs[:-1] += rho * (Z - D)
    block_tridiagonal_solve(Cinv, rho, rhs, A_new)

    Q_old = Q.copy()
    np.maximum(A_new + W, 0.0, out=Q)
    W += A_new - Q
    r2 = np.sum((A_new - Q) ** 2)
    dual = Q - Q_old
    nAx2 = np.sum(A_new * A_new)
    nBz2 = np.sum(Q * Q)
    aty = W.copy()
    if K > 1:
        diff = A_new[1:] - A_new[:-1]
        D_old = D.copy()
        t = diff + Z
        D[...] = np.maximum(t - thresh, 0.0) - np.maximum(-t - thresh, 0.0)
        Z += diff - D
        r2 += np.sum((diff - D) ** 2)
        dD = D - D_old
        dual[1:] += dD
        dual[:-1] -= dD
        aty[1:] += Z
        aty[:-1] -= Z
        nAx2 += np.sum(diff * diff)
        nBz2 += np.sum(D * D)
    return (float(r2), float(np.sum(dual * dual)), float(nAx2), float(nBz2),
            float(np.sum(aty * aty)))
