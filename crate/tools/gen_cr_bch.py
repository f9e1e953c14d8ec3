#!/usr/bin/env python3
"""Generate parity-check matrices (alist) for narrow-sense primitive BCH codes.

Bit v of a word is the coefficient of x^v, matching the GF(2^m) position
labeling used by the hard-decision decoder (roots alpha^1..alpha^2t).

The cyclic parity-check matrix is post-processed with greedy row additions
that lower the number of length-4 cycles of the Tanner graph. Row additions
preserve the row space, so the code is unchanged.

usage: gen_cr_bch.py m poly t out.alist [--no-reduce]
"""
import sys
import numpy as np


def gf_tables(m, poly):
    n = (1 << m) - 1
    exp = [0] * (2 * n)
    x = 1
    for i in range(n):
        exp[i] = x
        x <<= 1
        if x >> m:
            x ^= poly
    for i in range(n, 2 * n):
        exp[i] = exp[i - n]
    return exp


def minimal_poly(exp, m, i):
    n = (1 << m) - 1
    coset = []
    j = i % n
    while j not in coset:
        coset.append(j)
        j = (2 * j) % n
    # product of (x - alpha^j) over GF(2^m); coefficients as field ints
    log = {exp[k]: k for k in range(n)}

    def mul(a, b):
        if a == 0 or b == 0:
            return 0
        return exp[(log[a] + log[b]) % n]

    p = [1]
    for j in coset:
        root = exp[j]
        q = [0] * (len(p) + 1)
        for d, c in enumerate(p):
            q[d + 1] ^= c
            q[d] ^= mul(c, root)
        p = q
    assert all(c in (0, 1) for c in p)
    return p, coset


def polymul2(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] ^= y
    return out


def polydiv2(num, den):
    num = num[:]
    q = [0] * (len(num) - len(den) + 1)
    for i in range(len(num) - len(den), -1, -1):
        if num[i + len(den) - 1]:
            q[i] = 1
            for j, d in enumerate(den):
                num[i + j] ^= d
    assert not any(num), "non-zero remainder"
    return q


def four_cycles(h):
    o = h.astype(np.int64) @ h.T.astype(np.int64)
    np.fill_diagonal(o, 0)
    return int((o * (o - 1) // 2).sum() // 2)


def reduce_cycles(h):
    h = h.copy()
    best = (four_cycles(h), int(h.sum()))
    improved = True
    while improved:
        improved = False
        for i in range(h.shape[0]):
            for j in range(h.shape[0]):
                if i == j:
                    continue
                cand = h.copy()
                cand[i] ^= cand[j]
                if cand.sum(axis=0).min() == 0:
                    continue
                score = (four_cycles(cand), int(cand.sum()))
                if score < best:
                    h, best = cand, score
                    improved = True
    return h


def write_alist(h, path):
    rows, cols = h.shape
    col_lists = [list(np.nonzero(h[:, v])[0] + 1) for v in range(cols)]
    row_lists = [list(np.nonzero(h[c])[0] + 1) for c in range(rows)]
    mc = max(len(l) for l in col_lists)
    mr = max(len(l) for l in row_lists)
    with open(path, "w") as f:
        f.write(f"{cols} {rows}\n{mc} {mr}\n")
        f.write(" ".join(str(len(l)) for l in col_lists) + "\n")
        f.write(" ".join(str(len(l)) for l in row_lists) + "\n")
        for l in col_lists:
            f.write(" ".join(str(x) for x in l + [0] * (mc - len(l))) + "\n")
        for l in row_lists:
            f.write(" ".join(str(x) for x in l + [0] * (mr - len(l))) + "\n")


def main():
    m, poly, t, out = int(sys.argv[1]), int(sys.argv[2], 0), int(sys.argv[3]), sys.argv[4]
    reduce = "--no-reduce" not in sys.argv
    n = (1 << m) - 1
    exp = gf_tables(m, poly)
    g = [1]
    seen = set()
    for i in range(1, 2 * t + 1):
        if i in seen:
            continue
        p, coset = minimal_poly(exp, m, i)
        seen.update(coset)
        g = polymul2(g, p)
    r = len(g) - 1
    k = n - r
    xn1 = [1] + [0] * (n - 1) + [1]
    hpoly = polydiv2(xn1, g)
    hrec = hpoly[::-1]
    h = np.zeros((r, n), dtype=np.uint8)
    for i in range(r):
        for d, c in enumerate(hrec):
            if c:
                h[i, (i + d) % n] = 1
    gen = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        for d, c in enumerate(g):
            if c:
                gen[i, i + d] = 1
    assert not ((h.astype(int) @ gen.T.astype(int)) % 2).any()
    before = four_cycles(h)
    if reduce:
        h = reduce_cycles(h)
    assert not ((h.astype(int) @ gen.T.astype(int)) % 2).any()
    write_alist(h, out)
    print(f"n={n} k={k} rows={r} edges={int(h.sum())} 4-cycles {before} -> {four_cycles(h)}")


if __name__ == "__main__":
    main()
