"""Sixth-order centered finite-difference stencils for interior residuals."""

import numpy as np

D2_STENCIL = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
D1_STENCIL = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])


def fd_apply(vals, axis, stencil, dx, power):
    out = np.zeros_like(vals)
    core = [slice(3, -3)] * vals.ndim
    for k, c in enumerate(stencil):
        if c == 0.0:
            continue
        sl = list(core)
        sl[axis] = slice(k, vals.shape[axis] - 6 + k)
        out[tuple(core)] += c * vals[tuple(sl)]
    return out / dx ** power


def fd_laplacian(vals, dx):
    out = np.zeros_like(vals)
    for ax in range(vals.ndim):
        out += fd_apply(vals, ax, D2_STENCIL, dx, 2)
    return out


def fd_grad(vals, dx):
    return [fd_apply(vals, ax, D1_STENCIL, dx, 1) for ax in range(vals.ndim)]
