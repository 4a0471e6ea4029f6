# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: expert-block forward/backward.

Same math and cache layout as mos.nn.attention; selected by mos.backend
when the extension built. Sizes here are tiny (d <= a few dozen), so plain
C loops beat BLAS dispatch overhead.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef double LN_EPS = 1e-5


cdef void _matvec(double[:, ::1] M, double[::1] x, double[::1] out) noexcept nogil:
    # out = M.T @ x implemented as row-vector x @ M with M (in, out)
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n_in = M.shape[0], n_out = M.shape[1]
    for j in range(n_out):
        out[j] = 0.0
    for i in range(n_in):
        for j in range(n_out):
            out[j] += x[i] * M[i, j]


cdef void _layer_norm(double[::1] x, double[::1] scale, double[::1] shift,
                      double[::1] y, double[::1] xhat, double* inv_out) noexcept nogil:
    cdef Py_ssize_t d = x.shape[0], i
    cdef double mu = 0.0, var = 0.0, c, inv
    for i in range(d):
        mu += x[i]
    mu /= d
    for i in range(d):
        c = x[i] - mu
        xhat[i] = c
        var += c * c
    var /= d
    inv = 1.0 / sqrt(var + LN_EPS)
    for i in range(d):
        xhat[i] *= inv
        y[i] = scale[i] * xhat[i] + shift[i]
    inv_out[0] = inv


cdef void _layer_norm_backward(double[::1] dy, double[::1] scale, double[::1] xhat,
                               double inv, double[::1] dx, double[::1] dscale,
                               double[::1] dshift) noexcept nogil:
    cdef Py_ssize_t d = dy.shape[0], i
    cdef double mean_dxhat = 0.0, mean_dx_x = 0.0, v
    for i in range(d):
        v = dy[i] * scale[i]
        dx[i] = v
        mean_dxhat += v
        mean_dx_x += v * xhat[i]
        dscale[i] = dy[i] * xhat[i]
        dshift[i] = dy[i]
    mean_dxhat /= d
    mean_dx_x /= d
    for i in range(d):
        dx[i] = inv * (dx[i] - mean_dxhat - xhat[i] * mean_dx_x)


def block_forward(params, X):
    """Mirror of mos.nn.attention.block_forward (numpy cache layout)."""
    cdef cnp.ndarray[double, ndim=2] Xc = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t t = Xc.shape[0]
    cdef Py_ssize_t d = Xc.shape[1]

    cdef cnp.ndarray[double, ndim=2] wq = np.ascontiguousarray(params.w_query)
    cdef cnp.ndarray[double, ndim=2] wk = np.ascontiguousarray(params.w_key)
    cdef cnp.ndarray[double, ndim=2] wv = np.ascontiguousarray(params.w_value)
    cdef cnp.ndarray[double, ndim=2] wo = np.ascontiguousarray(params.w_output)
    cdef cnp.ndarray[double, ndim=2] w1 = np.ascontiguousarray(params.ffn.weights[0])
    cdef cnp.ndarray[double, ndim=1] b1 = np.ascontiguousarray(params.ffn.biases[0])
    cdef cnp.ndarray[double, ndim=2] w2 = np.ascontiguousarray(params.ffn.weights[1])
    cdef cnp.ndarray[double, ndim=1] b2 = np.ascontiguousarray(params.ffn.biases[1])
    cdef cnp.ndarray[double, ndim=1] g1 = np.ascontiguousarray(params.ln1_scale)
    cdef cnp.ndarray[double, ndim=1] s1 = np.ascontiguousarray(params.ln1_shift)
    cdef cnp.ndarray[double, ndim=1] g2 = np.ascontiguousarray(params.ln2_scale)
    cdef cnp.ndarray[double, ndim=1] s2 = np.ascontiguousarray(params.ln2_shift)
    cdef Py_ssize_t h = w1.shape[1]

    cdef cnp.ndarray[double, ndim=1] q = np.empty(d)
    cdef cnp.ndarray[double, ndim=2] K = np.empty((t, d))
    cdef cnp.ndarray[double, ndim=2] V = np.empty((t, d))
    cdef cnp.ndarray[double, ndim=1] a = np.empty(t)
    cdef cnp.ndarray[double, ndim=1] c = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] o = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] r1 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] z1 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] xhat1 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] hpre = np.empty(h)
    cdef cnp.ndarray[double, ndim=1] hact = np.empty(h)
    cdef cnp.ndarray[double, ndim=1] r2 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] z2 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] xhat2 = np.empty(d)

    cdef double[:, ::1] Xv = Xc, Kv = K, Vv = V
    cdef double[:, ::1] wqv = wq, wkv = wk, wvv = wv, wov = wo, w1v = w1, w2v = w2
    cdef double[::1] qv = q, av = a, cv = c, ov = o, r1v = r1, z1v = z1
    cdef double[::1] hprev = hpre, hactv = hact, r2v = r2, z2v = z2
    cdef double[::1] b1v = b1, b2v = b2, g1v = g1, s1v = s1, g2v = g2, s2v = s2
    cdef double[::1] xhat1v = xhat1, xhat2v = xhat2
    cdef double inv1 = 0.0, inv2 = 0.0
    cdef double smax, ssum, val, scale
    cdef Py_ssize_t i, j, r

    with nogil:
        _matvec(wqv, Xv[t - 1], qv)
        for r in range(t):
            _matvec(wkv, Xv[r], Kv[r])
            _matvec(wvv, Xv[r], Vv[r])
        scale = 1.0 / sqrt(<double> d)
        smax = -1e300
        for r in range(t):
            val = 0.0
            for j in range(d):
                val += Kv[r, j] * qv[j]
            av[r] = val * scale
            if av[r] > smax:
                smax = av[r]
        ssum = 0.0
        for r in range(t):
            av[r] = exp(av[r] - smax)
            ssum += av[r]
        for r in range(t):
            av[r] /= ssum
        for j in range(d):
            cv[j] = 0.0
        for r in range(t):
            for j in range(d):
                cv[j] += av[r] * Vv[r, j]
        _matvec(wov, cv, ov)
        for j in range(d):
            r1v[j] = Xv[t - 1, j] + ov[j]
        _layer_norm(r1v, g1v, s1v, z1v, xhat1v, &inv1)
        for i in range(h):
            val = b1v[i]
            for j in range(d):
                val += z1v[j] * w1v[j, i]
            hprev[i] = val
            hactv[i] = val if val > 0.0 else 0.0
        for j in range(d):
            val = b2v[j]
            for i in range(h):
                val += hactv[i] * w2v[i, j]
            r2v[j] = z1v[j] + val
        _layer_norm(r2v, g2v, s2v, z2v, xhat2v, &inv2)

    cache = (Xc, q, K, V, a, c, z1, hpre, hact, (xhat1, inv1), (xhat2, inv2))
    return z2, cache


def block_backward(params, cache, d_out):
    Xc, q, K, V, a, c, z1, hpre, hact, ln1c, ln2c = cache
    cdef cnp.ndarray[double, ndim=2] X = np.ascontiguousarray(Xc)
    cdef Py_ssize_t t = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]

    cdef cnp.ndarray[double, ndim=2] wq = np.ascontiguousarray(params.w_query)
    cdef cnp.ndarray[double, ndim=2] wk = np.ascontiguousarray(params.w_key)
    cdef cnp.ndarray[double, ndim=2] wv = np.ascontiguousarray(params.w_value)
    cdef cnp.ndarray[double, ndim=2] wo = np.ascontiguousarray(params.w_output)
    cdef cnp.ndarray[double, ndim=2] w1 = np.ascontiguousarray(params.ffn.weights[0])
    cdef cnp.ndarray[double, ndim=2] w2 = np.ascontiguousarray(params.ffn.weights[1])
    cdef cnp.ndarray[double, ndim=1] g1 = np.ascontiguousarray(params.ln1_scale)
    cdef cnp.ndarray[double, ndim=1] g2 = np.ascontiguousarray(params.ln2_scale)
    cdef Py_ssize_t h = w1.shape[1]

    cdef cnp.ndarray[double, ndim=1] xhat1 = ln1c[0]
    cdef cnp.ndarray[double, ndim=1] xhat2 = ln2c[0]
    cdef double inv1 = ln1c[1], inv2 = ln2c[1]

    cdef cnp.ndarray[double, ndim=1] dy = np.ascontiguousarray(d_out, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] qa = q, aa = a, ca = c, z1a = z1
    cdef cnp.ndarray[double, ndim=1] hprea = hpre, hacta = hact
    cdef cnp.ndarray[double, ndim=2] Ka = K, Va = V

    # outputs
    cdef cnp.ndarray[double, ndim=2] dX = np.zeros((t, d))
    cdef cnp.ndarray[double, ndim=2] dwq = np.empty((d, d))
    cdef cnp.ndarray[double, ndim=2] dwk = np.empty((d, d))
    cdef cnp.ndarray[double, ndim=2] dwv = np.empty((d, d))
    cdef cnp.ndarray[double, ndim=2] dwo = np.empty((d, d))
    cdef cnp.ndarray[double, ndim=2] dw1 = np.empty((d, h))
    cdef cnp.ndarray[double, ndim=1] db1 = np.empty(h)
    cdef cnp.ndarray[double, ndim=2] dw2 = np.empty((h, d))
    cdef cnp.ndarray[double, ndim=1] db2 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] dg1 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] ds1 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] dg2 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] ds2 = np.empty(d)

    # scratch
    cdef cnp.ndarray[double, ndim=1] dr2 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] dz1 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] dhpre = np.empty(h)
    cdef cnp.ndarray[double, ndim=1] dr1 = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] dc = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] ds = np.empty(t)
    cdef cnp.ndarray[double, ndim=1] dq = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] tmp_d = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] tmp_d2 = np.empty(d)

    cdef double[:, ::1] Xv = X, Kv = Ka, Vv = Va, dXv = dX
    cdef double[:, ::1] wqv = wq, wkv = wk, wvv = wv, wov = wo, w1v = w1, w2v = w2
    cdef double[:, ::1] dwqv = dwq, dwkv = dwk, dwvv = dwv, dwov = dwo, dw1v = dw1, dw2v = dw2
    cdef double[::1] dyv = dy, dr2v = dr2, dz1v = dz1, dhprev = dhpre
    cdef double[::1] dr1v = dr1, dcv = dc, dsv = ds, dqv = dq
    cdef double[::1] db1v = db1, db2v = db2, dg1v = dg1, ds1v = ds1, dg2v = dg2, ds2v = ds2
    cdef double[::1] xhat1v = xhat1, xhat2v = xhat2, g1v = g1, g2v = g2
    cdef double[::1] qv = qa, av = aa, cv = ca, z1v = z1a, hprev = hprea, hactv = hacta
    cdef double[::1] tdv = tmp_d, td2v = tmp_d2

    cdef double val, dot_a_da, scale
    cdef Py_ssize_t i, j, r

    with nogil:
        _layer_norm_backward(dyv, g2v, xhat2v, inv2, dr2v, dg2v, ds2v)
        for j in range(d):
            dz1v[j] = dr2v[j]
            db2v[j] = dr2v[j]
        # dw2 = outer(hact, dr2); dhact = dr2 @ w2.T ; relu mask
        for i in range(h):
            val = 0.0
            for j in range(d):
                dw2v[i, j] = hactv[i] * dr2v[j]
                val += dr2v[j] * w2v[i, j]
            dhprev[i] = val if hprev[i] > 0.0 else 0.0
            db1v[i] = dhprev[i]
        for j in range(d):
            val = 0.0
            for i in range(h):
                dw1v[j, i] = z1v[j] * dhprev[i]
                val += dhprev[i] * w1v[j, i]
            dz1v[j] += val
        _layer_norm_backward(dz1v, g1v, xhat1v, inv1, dr1v, dg1v, ds1v)
        for j in range(d):
            dXv[t - 1, j] += dr1v[j]
        # dwo = outer(c, dr1); dc = dr1 @ wo.T
        for i in range(d):
            val = 0.0
            for j in range(d):
                dwov[i, j] = cv[i] * dr1v[j]
                val += dr1v[j] * wov[i, j]
            dcv[i] = val
        # da[r] = V[r] . dc ; softmax backward ; scale
        dot_a_da = 0.0
        for r in range(t):
            val = 0.0
            for j in range(d):
                val += Vv[r, j] * dcv[j]
            dsv[r] = val
            dot_a_da += av[r] * val
        scale = 1.0 / sqrt(<double> d)
        for r in range(t):
            dsv[r] = av[r] * (dsv[r] - dot_a_da) * scale
        # dq = ds @ K ; dwq = outer(X[-1], dq) ; dX[-1] += dq @ wq.T
        for j in range(d):
            val = 0.0
            for r in range(t):
                val += dsv[r] * Kv[r, j]
            dqv[j] = val
        for i in range(d):
            val = 0.0
            for j in range(d):
                dwqv[i, j] = Xv[t - 1, i] * dqv[j]
                val += dqv[j] * wqv[i, j]
            dXv[t - 1, i] += val
        # dwk = outer(ds @ X, q); dX[r] += ds[r] * (q @ wk.T)
        for j in range(d):
            val = 0.0
            for r in range(t):
                val += dsv[r] * Xv[r, j]
            tdv[j] = val
        for i in range(d):
            val = 0.0
            for j in range(d):
                dwkv[i, j] = tdv[i] * qv[j]
                val += qv[j] * wkv[i, j]
            td2v[i] = val
        for r in range(t):
            for i in range(d):
                dXv[r, i] += dsv[r] * td2v[i]
        # dwv = outer(a @ X, dc); dX[r] += a[r] * (dc @ wv.T)
        for j in range(d):
            val = 0.0
            for r in range(t):
                val += av[r] * Xv[r, j]
            tdv[j] = val
        for i in range(d):
            val = 0.0
            for j in range(d):
                dwvv[i, j] = tdv[i] * dcv[j]
                val += dcv[j] * wvv[i, j]
            td2v[i] = val
        for r in range(t):
            for i in range(d):
                dXv[r, i] += av[r] * td2v[i]

    grads = {
        "ln2_scale": dg2, "ln2_shift": ds2,
        "ffn.b1": db2, "ffn.w1": dw2,
        "ffn.b0": db1, "ffn.w0": dw1,
        "ln1_scale": dg1, "ln1_shift": ds1,
        "w_output": dwo, "w_query": dwq, "w_key": dwk, "w_value": dwv,
    }
    return dX, grads
