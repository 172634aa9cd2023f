"""Pure numpy fallback for the compiled kernels."""

import numpy as np


def chain_product(steps, u0):
    u = np.array(u0, dtype=complex)
    eye = np.eye(u.shape[0])
    worst = 0.0
    for step in steps:
        u = step @ u
        worst = max(worst, float(np.linalg.norm(u.conj().T @ u - eye)))
    return u, worst
