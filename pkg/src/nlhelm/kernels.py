"""Hot numeric kernels: nonuniform DFT sums and direct kernel convolution.

Every kernel has a numba ``@njit(parallel=True)`` implementation and a pure
numpy implementation (chunked BLAS contractions).  ``NLHELM_BACKEND``
selects between them, see :mod:`nlhelm._backend`.  All sums exploit the
tensor-product structure of the grid, so both paths cost
O(N^n * n_nodes) with small constants.

Conventions: ``synthesize`` computes ``sum_j c_j exp(sign*i x.xi_j)`` on the
grid, ``restrict`` computes ``sum_x v(x) exp(-i x.xi_j)`` per node.  Scaling
prefactors (quadrature weights, (2pi)^{-n/2}, dx^n) belong to the callers.
"""

import numpy as np

from ._backend import USE_NUMBA

__all__ = ["synthesize", "restrict", "convolve_direct"]

# chunk size (number of sphere nodes per BLAS block) for the numpy path
_CHUNK_ELEMS = 1 << 23


# ---------------------------------------------------------------- numpy path

def _synth_np_3d(x1, x2, x3, nodes, coeffs, sign):
    n1, n2, n3 = len(x1), len(x2), len(x3)
    m = nodes.shape[0]
    out = np.zeros((n1 * n2, n3), dtype=np.complex128)
    chunk = max(8, _CHUNK_ELEMS // max(1, n1 * n2))
    s = sign * 1j
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        a1 = np.exp(s * np.outer(x1, nodes[lo:hi, 0]))
        a2 = np.exp(s * np.outer(x2, nodes[lo:hi, 1]))
        a3 = np.exp(s * np.outer(nodes[lo:hi, 2], x3))
        pair = (a1[:, None, :] * a2[None, :, :]).reshape(n1 * n2, hi - lo)
        out += pair @ (coeffs[lo:hi, None] * a3)
    return out.reshape(n1, n2, n3)


def _synth_np_2d(x1, x2, nodes, coeffs, sign):
    s = sign * 1j
    a1 = np.exp(s * np.outer(x1, nodes[:, 0]))
    a2 = np.exp(s * np.outer(nodes[:, 1], x2))
    return a1 @ (coeffs[:, None] * a2)


def _restrict_np_3d(vals, x1, x2, x3, nodes):
    m = nodes.shape[0]
    n1, n2 = len(x1), len(x2)
    out = np.empty(m, dtype=np.complex128)
    chunk = max(8, _CHUNK_ELEMS // max(1, n1 * n2))
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        e1 = np.exp(-1j * np.outer(nodes[lo:hi, 0], x1))
        e2 = np.exp(-1j * np.outer(nodes[lo:hi, 1], x2))
        e3 = np.exp(-1j * np.outer(nodes[lo:hi, 2], x3))
        t1 = np.tensordot(vals, e3, axes=([2], [1]))       # [a, b, j]
        t2 = np.einsum("abj,jb->aj", t1, e2)
        out[lo:hi] = np.einsum("aj,ja->j", t2, e1)
    return out


def _restrict_np_2d(vals, x1, x2, nodes):
    e1 = np.exp(-1j * np.outer(nodes[:, 0], x1))
    e2 = np.exp(-1j * np.outer(nodes[:, 1], x2))
    return np.einsum("aj,ja->j", vals @ e2.T, e1)


def _conv_np(kernel, f, out_shape):
    """Direct discrete convolution via zero-padded FFT (identical sum)."""
    pad = kernel.shape
    fpad = np.zeros(pad, dtype=np.complex128 if np.iscomplexobj(f) or np.iscomplexobj(kernel) else np.float64)
    fpad[tuple(slice(0, s) for s in f.shape)] = f
    if np.iscomplexobj(fpad):
        conv = np.fft.ifftn(np.fft.fftn(kernel.astype(np.complex128)) * np.fft.fftn(fpad))
    else:
        axes = tuple(range(f.ndim))
        conv = np.fft.irfftn(np.fft.rfftn(kernel) * np.fft.rfftn(fpad), s=pad, axes=axes)
    sl = tuple(slice(n, None) for n in f.shape)
    return np.ascontiguousarray(conv[sl][tuple(slice(0, s) for s in out_shape)])


# ---------------------------------------------------------------- numba path

if USE_NUMBA:
    from numba import njit, prange

    @njit(parallel=True, cache=True)
    def _synth_nb_3d(x1, x2, x3, nodes, coeffs, sign):
        n1, n2, n3 = len(x1), len(x2), len(x3)
        m = nodes.shape[0]
        e2 = np.empty((m, n2), dtype=np.complex128)
        e3 = np.empty((m, n3), dtype=np.complex128)
        for j in range(m):
            for b in range(n2):
                e2[j, b] = np.exp(sign * 1j * x2[b] * nodes[j, 1])
            for c in range(n3):
                e3[j, c] = np.exp(sign * 1j * x3[c] * nodes[j, 2])
        out = np.zeros((n1, n2, n3), dtype=np.complex128)
        for a in prange(n1):
            row = np.zeros((n2, n3), dtype=np.complex128)
            for j in range(m):
                c1 = coeffs[j] * np.exp(sign * 1j * x1[a] * nodes[j, 0])
                for b in range(n2):
                    c2 = c1 * e2[j, b]
                    for c in range(n3):
                        row[b, c] += c2 * e3[j, c]
            out[a] = row
        return out

    @njit(parallel=True, cache=True)
    def _synth_nb_2d(x1, x2, nodes, coeffs, sign):
        n1, n2 = len(x1), len(x2)
        m = nodes.shape[0]
        e2 = np.empty((m, n2), dtype=np.complex128)
        for j in range(m):
            for b in range(n2):
                e2[j, b] = np.exp(sign * 1j * x2[b] * nodes[j, 1])
        out = np.zeros((n1, n2), dtype=np.complex128)
        for a in prange(n1):
            for j in range(m):
                c1 = coeffs[j] * np.exp(sign * 1j * x1[a] * nodes[j, 0])
                for b in range(n2):
                    out[a, b] += c1 * e2[j, b]
        return out

    @njit(parallel=True, cache=True)
    def _restrict_nb_3d(vals, x1, x2, x3, nodes):
        n1, n2, n3 = len(x1), len(x2), len(x3)
        m = nodes.shape[0]
        out = np.empty(m, dtype=np.complex128)
        for j in prange(m):
            e3 = np.empty(n3, dtype=np.complex128)
            for c in range(n3):
                e3[c] = np.exp(-1j * x3[c] * nodes[j, 2])
            acc = 0.0 + 0.0j
            for a in range(n1):
                p1 = np.exp(-1j * x1[a] * nodes[j, 0])
                acc_a = 0.0 + 0.0j
                for b in range(n2):
                    p2 = np.exp(-1j * x2[b] * nodes[j, 1])
                    acc_b = 0.0 + 0.0j
                    for c in range(n3):
                        acc_b += vals[a, b, c] * e3[c]
                    acc_a += acc_b * p2
                acc += acc_a * p1
            out[j] = acc
        return out

    @njit(parallel=True, cache=True)
    def _restrict_nb_2d(vals, x1, x2, nodes):
        n1, n2 = len(x1), len(x2)
        m = nodes.shape[0]
        out = np.empty(m, dtype=np.complex128)
        for j in prange(m):
            acc = 0.0 + 0.0j
            for a in range(n1):
                p1 = np.exp(-1j * x1[a] * nodes[j, 0])
                acc_a = 0.0 + 0.0j
                for b in range(n2):
                    acc_a += vals[a, b] * np.exp(-1j * x2[b] * nodes[j, 1])
                acc += acc_a * p1
            out[j] = acc
        return out

    @njit(parallel=True, cache=True)
    def _conv_nb_3d(kernel, f):
        n1, n2, n3 = f.shape
        out = np.zeros((n1, n2, n3), dtype=np.complex128)
        for a in prange(n1):
            for b in range(n2):
                for c in range(n3):
                    acc = 0.0 + 0.0j
                    for i in range(n1):
                        for j in range(n2):
                            for k in range(n3):
                                acc += kernel[a - i + n1, b - j + n2, c - k + n3] * f[i, j, k]
                    out[a, b, c] = acc
        return out

    @njit(parallel=True, cache=True)
    def _conv_nb_2d(kernel, f):
        n1, n2 = f.shape
        out = np.zeros((n1, n2), dtype=np.complex128)
        for a in prange(n1):
            for b in range(n2):
                acc = 0.0 + 0.0j
                for i in range(n1):
                    for j in range(n2):
                        acc += kernel[a - i + n1, b - j + n2] * f[i, j]
                out[a, b] = acc
        return out


# ---------------------------------------------------------------- dispatch

def synthesize(axes, nodes, coeffs, sign=-1):
    """sum_j coeffs_j * exp(sign * i * <x, xi_j>) evaluated on the grid.

    axes: tuple of n 1d coordinate arrays; nodes: (m, n); coeffs: (m,).
    Returns a complex array of shape ``tuple(len(a) for a in axes)``.
    """
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    axes = [np.ascontiguousarray(a, dtype=np.float64) for a in axes]
    sign = float(np.sign(sign))
    if len(axes) == 3:
        if USE_NUMBA:
            return _synth_nb_3d(axes[0], axes[1], axes[2], nodes, coeffs, sign)
        return _synth_np_3d(axes[0], axes[1], axes[2], nodes, coeffs, sign)
    if len(axes) == 2:
        if USE_NUMBA:
            return _synth_nb_2d(axes[0], axes[1], nodes, coeffs, sign)
        return _synth_np_2d(axes[0], axes[1], nodes, coeffs, sign)
    raise ValueError("synthesize supports n in {2,3}")


def restrict(values, axes, nodes):
    """sum_x values(x) * exp(-i <x, xi_j>) for every node xi_j."""
    values = np.ascontiguousarray(values, dtype=np.complex128)
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    axes = [np.ascontiguousarray(a, dtype=np.float64) for a in axes]
    if len(axes) == 3:
        if USE_NUMBA:
            return _restrict_nb_3d(values, axes[0], axes[1], axes[2], nodes)
        return _restrict_np_3d(values, axes[0], axes[1], axes[2], nodes)
    if len(axes) == 2:
        if USE_NUMBA:
            return _restrict_nb_2d(values, axes[0], axes[1], nodes)
        return _restrict_np_2d(values, axes[0], axes[1], nodes)
    raise ValueError("restrict supports n in {2,3}")


def convolve_direct(kernel, f):
    """Discrete linear convolution sum_z kernel[x-z] f[z] on the f-grid.

    ``kernel`` is sampled on the doubled grid, index i <-> offset i - N.
    The numba path evaluates the sum literally; the numpy path evaluates the
    identical sum through a zero-padded FFT.
    """
    f = np.asarray(f)
    if USE_NUMBA:
        kc = np.ascontiguousarray(kernel, dtype=np.complex128)
        fc = np.ascontiguousarray(f, dtype=np.complex128)
        out = _conv_nb_3d(kc, fc) if f.ndim == 3 else _conv_nb_2d(kc, fc)
        if not (np.iscomplexobj(kernel) or np.iscomplexobj(f)):
            return out.real.copy()
        return out
    return _conv_np(kernel, f, f.shape)
