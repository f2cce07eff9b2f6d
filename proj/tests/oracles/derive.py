"""Independent numpy/scipy oracle for the constants frozen in the C++ tests.

Run: python3 tests/oracles/derive.py
"""

import numpy as np
import scipy.linalg as sla

np.set_printoptions(precision=17)

A = np.array([[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [-0.136, 0.956, -2.406, 2.580]])
B = np.array([[2.520], [3.147], [2.945], [2.458]])
C = np.array([[1, 0, 0, 0], [-0.027, 0.083, -0.038, -0.030], [0.194, -0.868, 1.234, -0.566]])
D = np.ones((3, 1))
K = np.array([[0.1760, 0.6259, 0.0686], [-0.0815, 0.4654, -0.2711],
              [-0.288, 0.2886, -0.1961], [-0.3268, 0.1314, 0.3146]])
S = np.array([[5.25, 4.73, 3.96], [4.73, 4.87, 3.68], [3.96, 3.68, 3.59]])


def corrected(z0=0.95):
    v = np.linalg.solve(z0 * np.eye(4) - A, B[:, 0])
    Cc = C.copy()
    for j in (0, 2):
        delta = -D[j, 0] - Cc[j] @ v
        Cc[j] = Cc[j] + delta * v / (v @ v)
    return Cc


def tf_zeros(a, b, c, d):
    """Zeros of a SISO transfer function from its numerator polynomial."""
    char = np.poly(a)
    n = a.shape[0]
    num = d * char
    # c adj(zI - A) b via the resolvent identity evaluated by polynomial fitting
    zs = np.exp(2j * np.pi * np.arange(n + 1) / (n + 1)) * 3.0
    vals = [(c @ np.linalg.solve(z * np.eye(n) - a, b)).item() * np.polyval(char, z) for z in zs]
    coeffs = np.polyfit(zs, vals, n - 1) if n > 1 else np.array(vals[:1])
    num = num.astype(complex)
    num[1:] += coeffs
    return np.roots(num)


def observability(a, c, L):
    return np.vstack([c @ np.linalg.matrix_power(a, i) for i in range(L)])


def toeplitz(a, b, c, d, L):
    p, m = c.shape[0], b.shape[1]
    T = np.zeros((L * p, L * m))
    marks = [d] + [c @ np.linalg.matrix_power(a, i - 1) @ b for i in range(1, L)]
    for i in range(L):
        for j in range(i + 1):
            T[i * p:(i + 1) * p, j * m:(j + 1) * m] = marks[i - j]
    return T


def left_null(m, tol=1e-9):
    u, s, _ = np.linalg.svd(m)
    r = int(np.sum(s > tol * s[0]))
    return u[:, r:].T


def range_basis(m, tol=1e-9):
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    r = int(np.sum(s > tol * s[0]))
    return u[:, :r]


def cos(r, basis):
    return np.linalg.norm(basis.T @ r) / np.linalg.norm(r)


def scenario1_cos(Cc, L=5):
    f = np.zeros(200)
    for k in range(200):
        if 10 <= k < 70:
            f[k] = np.sin(0.2 * np.pi * k)
        elif 70 <= k < 130:
            f[k] = 0.95 ** (k - 70)
        elif k >= 130:
            f[k] = -0.5
    Ta = toeplitz(A, B, Cc, D, L)
    # The stacked kernel [K_u K_y] = [-N Ta, N] has orthonormal rows; K_y alone does not.
    N = left_null(observability(A, Cc, L))
    q, _ = np.linalg.qr(np.hstack([-N @ Ta, N]).T)
    Ky = q.T[:, L:]
    dicts = {"a1": range_basis(Ky @ Ta)}
    for j in range(3):
        sel = np.zeros((3 * L, L))
        for t in range(L):
            sel[t * 3 + j, t] = 1.0
        dicts[f"s{j + 1}"] = range_basis(Ky @ sel)
    out = {}
    for k in (20, 90, 150):
        r = Ky @ Ta @ f[k:k + L]
        out[k] = {name: cos(r, b) for name, b in dicts.items()}
    return out


def main():
    Cc = corrected()
    print("corrected C row 1:", repr(Cc[0]))
    print("corrected C row 3:", repr(Cc[2]))
    for j in range(3):
        z = tf_zeros(A, B[:, 0], Cc[j], D[j, 0])
        print(f"zeros input->y{j + 1}:", np.sort_complex(z))
    print("Markov M_1..M_3 (first column):")
    for i in range(1, 4):
        print(" ", repr((Cc @ np.linalg.matrix_power(A, i - 1) @ B)[:, 0]))
    P = sla.solve_discrete_lyapunov(A, K @ S @ K.T)
    print("stationary output noise power per channel:", repr(np.trace(Cc @ P @ Cc.T + S) / 3))
    for k, vals in scenario1_cos(Cc).items():
        print(f"scenario 1 cos at k={k}:", {n: repr(v) for n, v in vals.items()})

    # Square two-input two-output system with D = 0: finite zeros are the
    # finite generalized eigenvalues of the Rosenbrock pencil.
    a2 = np.array([[0.5, 0.1, 0.0], [0.0, -0.3, 0.2], [0.1, 0.0, 0.7]])
    b2 = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    c2 = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, -1.0]])
    d2 = np.zeros((2, 2))
    M = np.block([[a2, b2], [c2, d2]])
    N = np.block([[np.eye(3), np.zeros((3, 2))], [np.zeros((2, 3)), np.zeros((2, 2))]])
    w = sla.eig(M, N, right=False)
    print("square D=0 system finite zeros:", np.sort_complex(w[np.isfinite(w)]))


if __name__ == "__main__":
    main()
