# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop for the windowed convolution DP.

Semantics must stay bit-for-bit identical to eetlab._convkern_py: for each
kernel offset d in ascending order (zero entries skipped), accumulate
c * prev[x - d] into out[x] for x = 0..W. Compiled with -ffp-contract=off so
no FMA contraction changes the rounding relative to the numpy fallback.
"""

import numpy as np
cimport numpy as cnp


def conv_step_sym(double[::1] prev_full, double[::1] ker, Py_ssize_t koff,
                  double[::1] out_half):
    """out_half[x] += sum_d ker[d + koff] * prev_full[x - d + W] for x in [0, W].

    prev_full is the symmetric previous row on [-W, W]; out_half covers [0, W].
    """
    cdef Py_ssize_t W = out_half.shape[0] - 1
    cdef Py_ssize_t nk = ker.shape[0]
    cdef Py_ssize_t j, d, x, hi, base
    cdef double c
    for j in range(nk):
        c = ker[j]
        if c == 0.0:
            continue
        d = j - koff
        if d >= 0:
            hi = W + 1
        else:
            hi = W + d + 1
        base = W - d
        for x in range(hi):
            out_half[x] = out_half[x] + c * prev_full[base + x]
