"""Compiled amplitude kernels. All operate in place on complex128 arrays."""
import numba
import numpy as np


@numba.njit(cache=True)
def complete_graph_apply(v, k, n, c_move, group):
    """Per-axis x -> x + c_move * sum(x): the complete-graph walk up to phase."""
    N = v.size
    buf = np.empty(k**group, dtype=np.complex128)
    j = 0
    while j < n:
        gg = min(group, n - j)
        stride = k**j
        bs = k**gg
        blk = stride * bs
        for o in range(0, N, blk):
            for i in range(stride):
                base = o + i
                for b in range(bs):
                    buf[b] = v[base + b * stride]
                st = 1
                for _ in range(gg):
                    for q in range(0, bs, st * k):
                        for r in range(q, q + st):
                            acc = 0j
                            for m in range(k):
                                acc += buf[r + m * st]
                            acc *= c_move
                            for m in range(k):
                                buf[r + m * st] += acc
                    st *= k
                for b in range(bs):
                    v[base + b * stride] = buf[b]
        j += gg


@numba.njit(cache=True)
def axis_sum(v, out, k, n):
    """out = A v for the Hamming graph: sum over each axis minus self."""
    N = v.size
    for x in range(N):
        out[x] = 0j
    for j in range(n):
        stride = k**j
        blk = stride * k
        for o in range(0, N, blk):
            for i in range(stride):
                base = o + i
                tot = 0j
                for m in range(k):
                    tot += v[base + m * stride]
                for m in range(k):
                    out[base + m * stride] += tot - v[base + m * stride]


@numba.njit(cache=True)
def gather_sum(z, nbr, out):
    """out[r] = sum_j z[nbr[r, j]]."""
    N, d = nbr.shape
    for r in range(N):
        acc = 0j
        for j in range(d):
            acc += z[nbr[r, j]]
        out[r] = acc


@numba.njit(cache=True)
def taylor_step(term, nbr, coef, new_term, total):
    """new_term = coef * A term; total += new_term; returns ||new_term||²."""
    N, d = nbr.shape
    nrm = 0.0
    for r in range(N):
        acc = 0j
        for j in range(d):
            acc += term[nbr[r, j]]
        acc *= coef
        new_term[r] = acc
        total[r] += acc
        nrm += acc.real * acc.real + acc.imag * acc.imag
    return nrm


@numba.njit(cache=True)
def _factorials(n):
    f = np.ones(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        f[i] = f[i - 1] * i
    return f


@numba.njit(cache=True)
def transposition_table(n):
    """Neighbour indices (Lehmer ranks) of every permutation under all position swaps."""
    fact = _factorials(n)
    N = fact[n]
    d = n * (n - 1) // 2
    nbr = np.empty((N, d), dtype=np.int32)
    perm = np.empty(n, dtype=np.int64)
    pool = np.empty(n, dtype=np.int64)
    for r in range(N):
        # unrank
        for i in range(n):
            pool[i] = i
        rem = r
        size = n
        for i in range(n):
            f = fact[n - 1 - i]
            digit = rem // f
            rem -= digit * f
            perm[i] = pool[digit]
            for q in range(digit, size - 1):
                pool[q] = pool[q + 1]
            size -= 1
        col = 0
        for a in range(n):
            for b in range(a + 1, n):
                pa = perm[a]
                perm[a] = perm[b]
                perm[b] = pa
                idx = 0
                for i in range(n - 1):
                    cnt = 0
                    for q in range(i + 1, n):
                        if perm[q] < perm[i]:
                            cnt += 1
                    idx += cnt * fact[n - 1 - i]
                nbr[r, col] = idx
                col += 1
                perm[b] = perm[a]
                perm[a] = pa
    return nbr


@numba.njit(cache=True)
def phase_step(state, current, step):
    """state *= current; current *= step (incremental linear phase schedule)."""
    for x in range(state.size):
        state[x] *= current[x]
        current[x] *= step[x]
