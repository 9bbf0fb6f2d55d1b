"""Pure numpy twin of the compiled kernels in ``_kernels.pyx``.

Operation order mirrors the compiled code so both backends produce
identical outcomes on identical uniforms.
"""

import numpy as np

TWO_PI = 6.283185307179586


def _points(u0, u1):
    z = 2.0 * u0 - 1.0
    rho2 = 1.0 - z * z
    rho = np.sqrt(np.where(rho2 > 0.0, rho2, 0.0))
    phi = TWO_PI * u1
    return rho * np.cos(phi), rho * np.sin(phi), z


def _dot(a, p):
    return a[0] * p[0] + a[1] * p[1] + a[2] * p[2]


def _sgn(a):
    return np.where(a >= 0.0, 1, -1).astype(np.int8)


def _pair(u):
    return _points(u[:, 0], u[:, 1]), _points(u[:, 2], u[:, 3])


def _select(r, yp, ym):
    plus = r > 0
    return tuple(np.where(plus, a, b) for a, b in zip(yp, ym))


def model1_stay_count(u, n, w):
    x = _points(u[:, 0], u[:, 1])
    return int(np.count_nonzero((_dot(n, x) >= 0.0) == (_dot(w, x) >= 0.0)))


def model2_counts(u, n, w):
    yp, ym = _pair(u)
    ap = _dot(n, yp)
    am = _dot(n, ym)
    plus = ap * ap - am * am >= 0.0
    a = np.where(plus, ap, am)
    yr = tuple(np.where(plus, p, m) for p, m in zip(yp, ym))
    stay = np.count_nonzero((a >= 0.0) == (_dot(w, yr) >= 0.0))
    return int(stay), int(np.count_nonzero(plus))


def bob_reduced_batch(u, v0):
    yp, ym = _pair(u)
    p = _dot(v0, yp)
    m = _dot(v0, ym)
    plus = p * p - m * m >= 0.0
    r = np.where(plus, 1, -1).astype(np.int8)
    return r, _sgn(np.where(plus, p, m))


def alice_reduced_batch(u, r, v1):
    yp, ym = _pair(u)
    return _sgn(_dot(v1, _select(np.asarray(r), yp, ym)))


def bob_full_batch(u, s0, v0, n):
    yp, ym = _pair(u)
    p = _dot(v0, yp)
    m = _dot(v0, ym)
    plus = p * p - m * m >= 0.0
    r = np.where(plus, 1, -1).astype(np.int8)
    yr = _select(r, yp, ym)
    s = np.asarray(s0, dtype=np.int8) * _sgn(_dot(v0, yr)) * _sgn(_dot(n, yr))
    return s.astype(np.int8), r


def alice_full_batch(u, s, r, v1, n):
    yp, ym = _pair(u)
    y = _select(np.asarray(r), yp, ym)
    s1 = np.asarray(s, dtype=np.int8) * _sgn(_dot(n, y)) * _sgn(_dot(v1, y))
    return s1.astype(np.int8)
