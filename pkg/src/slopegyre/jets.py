"""Truncated Taylor series ("jets") in one small parameter h.

A jet is a numpy array whose last axis holds Taylor coefficients
a_0 + a_1 h + ... + a_{n-1} h^{n-1}.  Leading axes broadcast like ordinary
numpy arrays.  The solver uses h as an offset of the transverse wavenumber,
so that multiplication by y becomes i d/dh on jets.

Polynomials in a second variable (x) with jet coefficients are stored with
the polynomial axis second to last, ascending powers: shape (..., deg+1, n).
"""
from math import comb

import numpy as np


def const(x, n):
    x = np.asarray(x, dtype=complex)
    out = np.zeros(x.shape + (n,), dtype=complex)
    out[..., 0] = x
    return out


def var(x0, n):
    out = const(x0, n)
    if n > 1:
        out[..., 1] = 1.0
    return out


def order(a):
    return np.shape(a)[-1]


def truncate(a, n):
    return a[..., :n]


def match(a, b):
    n = min(order(a), order(b))
    return a[..., :n], b[..., :n]


def mul(a, b):
    a, b = match(np.asarray(a), np.asarray(b))
    n = order(a)
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape, dtype=complex)
    for k in range(n):
        out[..., k:] += a[..., k:k + 1] * b[..., :n - k]
    return out


def inv(a):
    a = np.asarray(a, dtype=complex)
    n = order(a)
    out = np.zeros_like(a)
    r = 1.0 / a[..., 0]
    out[..., 0] = r
    for k in range(1, n):
        acc = np.zeros_like(r)
        for j in range(1, k + 1):
            acc = acc + a[..., j] * out[..., k - j]
        out[..., k] = -r * acc
    return out


def div(a, b):
    return mul(a, inv(b))


def power(a, p):
    out = const(np.ones(np.shape(a)[:-1]), order(a))
    for _ in range(p):
        out = mul(out, a)
    return out


def exp(a):
    a = np.asarray(a, dtype=complex)
    n = order(a)
    out = np.zeros_like(a)
    out[..., 0] = np.exp(a[..., 0])
    for k in range(1, n):
        acc = np.zeros_like(out[..., 0])
        for j in range(1, k + 1):
            acc = acc + j * a[..., j] * out[..., k - j]
        out[..., k] = acc / k
    return out


def sqrt(a):
    a = np.asarray(a, dtype=complex)
    n = order(a)
    out = np.zeros_like(a)
    out[..., 0] = np.sqrt(a[..., 0])
    for k in range(1, n):
        acc = a[..., k]
        for j in range(1, k):
            acc = acc - out[..., j] * out[..., k - j]
        out[..., k] = acc / (2 * out[..., 0])
    return out


def deriv(a):
    """d/dh; the result has one coefficient fewer."""
    a = np.asarray(a)
    n = order(a)
    if n <= 1:
        raise ValueError("jet order exhausted")
    return a[..., 1:] * np.arange(1, n)


def solve(A, b):
    """Solve A x = b with jet entries; A (..., m, m, n), b (..., m, n)."""
    A, b = np.asarray(A, dtype=complex), np.asarray(b, dtype=complex)
    n = min(order(A), order(b))
    A0 = A[..., 0]
    x = np.zeros(np.broadcast_shapes(A.shape[:-3], b.shape[:-2]) + (A.shape[-2], n), dtype=complex)
    for k in range(n):
        rhs = b[..., k]
        for j in range(1, k + 1):
            rhs = rhs - np.einsum("...ij,...j->...i", A[..., j], x[..., k - j])
        x[..., k] = np.linalg.solve(A0, rhs[..., None])[..., 0]
    return x


# polynomials in x with jet coefficients

def poly_mul(p, q):
    dp, dq = p.shape[-2], q.shape[-2]
    p, q = match(p, q)
    shape = np.broadcast_shapes(p.shape[:-2], q.shape[:-2]) + (dp + dq - 1, order(p))
    out = np.zeros(shape, dtype=complex)
    for i in range(dp):
        out[..., i:i + dq, :] += mul(p[..., i:i + 1, :], q)
    return out


def poly_add(p, q):
    p, q = match(p, q)
    d = max(p.shape[-2], q.shape[-2])
    shape = np.broadcast_shapes(p.shape[:-2], q.shape[:-2]) + (d, order(p))
    out = np.zeros(shape, dtype=complex)
    out[..., :p.shape[-2], :] += p
    out[..., :q.shape[-2], :] += q
    return out


def poly_scale(p, a):
    return mul(p, np.asarray(a)[..., None, :])


def poly_from(*coeffs):
    """Stack jet coefficients (ascending powers) into a polynomial."""
    arrs = np.broadcast_arrays(*[np.asarray(c, dtype=complex) for c in coeffs])
    return np.stack(arrs, axis=-2)


def poly_eval(p, x):
    out = p[..., -1, :]
    for i in range(p.shape[-2] - 2, -1, -1):
        out = mul(out, x) + p[..., i, :]
    return out


def poly_dx(p):
    d = p.shape[-2]
    if d == 1:
        return np.zeros_like(p)
    return p[..., 1:, :] * np.arange(1, d)[:, None]


def poly_shift(p, x0):
    """Coefficients of q(t) = p(x0 + t)."""
    d = p.shape[-2]
    pw = [const(np.ones(np.shape(x0)[:-1]), order(x0))]
    for _ in range(d):
        pw.append(mul(pw[-1], x0))
    out = np.zeros(np.broadcast_shapes(p.shape, np.shape(x0)[:-1] + (d, 1))[:-1] + (min(order(p), order(x0)),),
                   dtype=complex)
    for k in range(d):
        acc = 0
        for j in range(k, d):
            acc = acc + comb(j, k) * mul(p[..., j, :], pw[j - k])
        out[..., k, :] = acc
    return out


def newton_refine(p, x, iters=None):
    """Lift a scalar root x[..., 0] of p to a full jet root by Newton steps."""
    n = order(x)
    dp = poly_dx(p)
    if iters is None:
        iters = 2 + int(np.ceil(np.log2(max(n, 1))))
    for _ in range(iters):
        x = x - div(poly_eval(p, x), poly_eval(dp, x))
    return x
