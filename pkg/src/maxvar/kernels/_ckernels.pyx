# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: a postfix-program stack machine and fixed-step RK4."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, sqrt, fabs, isfinite
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_ADD = 2
    OP_MUL = 3
    OP_DIV = 4
    OP_POWI = 5
    OP_SIN = 6
    OP_COS = 7
    OP_EXP = 8
    OP_SQRT = 9


cdef inline double _powi(double a, long n) nogil:
    cdef double r = 1.0
    cdef long k = n if n >= 0 else -n
    cdef double b = a
    while k > 0:
        if k & 1:
            r *= b
        b *= b
        k >>= 1
    return r if n >= 0 else 1.0 / r


cdef double _run(const long[:, ::1] code, Py_ssize_t lo, Py_ssize_t hi,
                 const double[::1] consts, const double* vars, double* stack,
                 double* mag) noexcept nogil:
    cdef Py_ssize_t pc
    cdef int sp = -1
    cdef long op, arg
    cdef double v
    for pc in range(lo, hi):
        op = code[pc, 0]
        arg = code[pc, 1]
        if op == OP_CONST:
            sp += 1
            stack[sp] = consts[arg]
        elif op == OP_VAR:
            sp += 1
            stack[sp] = vars[arg]
        elif op == OP_ADD:
            sp -= 1
            stack[sp] = stack[sp] + stack[sp + 1]
        elif op == OP_MUL:
            sp -= 1
            stack[sp] = stack[sp] * stack[sp + 1]
        elif op == OP_DIV:
            sp -= 1
            stack[sp] = stack[sp] / stack[sp + 1]
        elif op == OP_POWI:
            stack[sp] = _powi(stack[sp], arg)
        elif op == OP_SIN:
            stack[sp] = sin(stack[sp])
        elif op == OP_COS:
            stack[sp] = cos(stack[sp])
        elif op == OP_EXP:
            stack[sp] = exp(stack[sp])
        else:
            stack[sp] = sqrt(stack[sp])
        if mag != NULL:
            v = fabs(stack[sp])
            if v > mag[0] or v != v:
                mag[0] = v
    return stack[0]


def eval_batch(const long[:, ::1] code, const double[::1] consts, double[:, ::1] X):
    cdef Py_ssize_t m = X.shape[0], i
    cdef Py_ssize_t L = code.shape[0]
    vals = np.empty(m)
    mags = np.zeros(m)
    cdef double[::1] vv = vals, mv = mags
    cdef double* stack = <double*> malloc((L + 1) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                vv[i] = _run(code, 0, L, consts, &X[i, 0] if X.shape[1] > 0 else NULL,
                             stack, &mv[i])
    finally:
        free(stack)
    return vals, mags


cdef void _field(const long[:, ::1] code, const long[::1] starts, const double[::1] consts,
                 Py_ssize_t d, double* y, double t, double* out, double* stack) noexcept nogil:
    cdef Py_ssize_t c
    y[d] = t
    for c in range(d):
        out[c] = _run(code, starts[c], starts[c + 1], consts, y, stack, NULL)


def rk4(const long[:, ::1] code, const long[::1] starts, const double[::1] consts,
        double[:, ::1] Y0, double t0, double h, long steps, double bound):
    cdef Py_ssize_t m = Y0.shape[0], d = Y0.shape[1]
    cdef Py_ssize_t i, c
    cdef long n
    cdef long fail = -1
    cdef double t, norm
    out_arr = np.empty((steps + 1, m, d))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t L = code.shape[0]
    cdef double* buf = <double*> malloc((7 * (d + 1) + L + 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* y = buf
    cdef double* tmp = buf + (d + 1)
    cdef double* k1 = buf + 2 * (d + 1)
    cdef double* k2 = buf + 3 * (d + 1)
    cdef double* k3 = buf + 4 * (d + 1)
    cdef double* k4 = buf + 5 * (d + 1)
    cdef double* stack = buf + 7 * (d + 1)
    cdef long last = steps
    try:
        with nogil:
            for i in range(m):
                for c in range(d):
                    y[c] = Y0[i, c]
                    out[0, i, c] = y[c]
                for n in range(steps):
                    t = t0 + n * h
                    _field(code, starts, consts, d, y, t, k1, stack)
                    for c in range(d):
                        tmp[c] = y[c] + 0.5 * h * k1[c]
                    _field(code, starts, consts, d, tmp, t + 0.5 * h, k2, stack)
                    for c in range(d):
                        tmp[c] = y[c] + 0.5 * h * k2[c]
                    _field(code, starts, consts, d, tmp, t + 0.5 * h, k3, stack)
                    for c in range(d):
                        tmp[c] = y[c] + h * k3[c]
                    _field(code, starts, consts, d, tmp, t + h, k4, stack)
                    norm = 0.0
                    for c in range(d):
                        y[c] = y[c] + (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
                        out[n + 1, i, c] = y[c]
                        norm += y[c] * y[c]
                    if not isfinite(norm) or sqrt(norm) > bound:
                        if fail < 0 or n + 1 < fail:
                            fail = n + 1
                        break
    finally:
        free(buf)
    if fail >= 0:
        return out_arr[: fail + 1], fail
    return out_arr, -1
