"""Pure-numpy fallback for the convolution DP inner loop.

Must stay bit-for-bit identical to the compiled version: kernel offsets are
visited in ascending order, zero entries are skipped, and each output element
accumulates one multiply-add per offset (numpy evaluates c * slice first, then
adds elementwise, which rounds exactly like the scalar loop without FMA).
"""

from __future__ import annotations

import numpy as np


def conv_step_sym(prev_full: np.ndarray, ker: np.ndarray, koff: int,
                  out_half: np.ndarray) -> None:
    W = out_half.shape[0] - 1
    for j in range(ker.shape[0]):
        c = ker[j]
        if c == 0.0:
            continue
        d = j - koff
        hi = W + 1 if d >= 0 else W + d + 1
        base = W - d
        out_half[0:hi] += c * prev_full[base:base + hi]
