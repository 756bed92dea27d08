"""Pure numpy version of the convolution recursion used when the compiled
extension is unavailable (or ``COLLRISK_BACKEND=python``)."""

import math

import numpy as np

NAME = "python"

_TINY = 1e-300
_RESCALE_AT = 1e280


def binomial_recursion(q, n, trunc_eps):
    q = np.ascontiguousarray(q, dtype=np.float64)
    K = q.size - 1
    length = int(n) * K + 1
    idx = np.flatnonzero(q[1:]) + 1
    val = q[idx]
    f = np.zeros(length)
    q0 = float(q[0])
    lf0 = n * math.log(q0)
    if lf0 >= math.log(_TINY):
        f[0] = math.exp(lf0)
        log_scale, rescaled = 0.0, False
    else:
        f[0] = 1.0
        log_scale, rescaled = lf0, True
    cum, cumc = f[0], 0.0
    target = 1.0 - trunc_eps
    np1 = n + 1
    m = 0
    last = 0
    for j in range(1, length):
        while m < idx.size and idx[m] <= j:
            m += 1
        ls = idx[:m]
        terms = (np1 * ls - j) * val[:m] * f[j - ls]
        v = math.fsum(terms.tolist()) / (j * q0)
        f[j] = v
        # Neumaier running sum, same as the compiled kernel
        tot = cum + v
        cumc += (cum - tot) + v if abs(cum) >= abs(v) else (v - tot) + cum
        cum = tot
        last = j
        if rescaled and abs(v) > _RESCALE_AT:
            f[: j + 1] /= _RESCALE_AT
            cum /= _RESCALE_AT
            cumc /= _RESCALE_AT
            log_scale += math.log(_RESCALE_AT)
        if trunc_eps > 0.0 and (cum + cumc) * math.exp(log_scale) >= target:
            break
    return f[: last + 1].copy(), log_scale, rescaled
