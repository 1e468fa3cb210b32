"""Random fixtures and brute-force oracles shared by the tests."""

import random
from fractions import Fraction

from stpbn.network import BcnAssr
from stpbn.stp import DenseMatrix, LogicalMatrix


def frac(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-6, 6), rng.randint(1, 5))


def dense(rng, r, c) -> DenseMatrix:
    return DenseMatrix(r, c, tuple(frac(rng) for _ in range(r * c)))


def invertible(rng, k) -> DenseMatrix:
    while True:
        a = dense(rng, k, k)
        try:
            a.inverse()
            return a
        except ZeroDivisionError:
            continue


def logical(rng, p, q) -> LogicalMatrix:
    return LogicalMatrix(p, tuple(rng.randint(1, p) for _ in range(q)))


def permutation(rng, k) -> LogicalMatrix:
    cols = list(range(1, k + 1))
    rng.shuffle(cols)
    return LogicalMatrix(k, tuple(cols))


def bcn(rng, n, m) -> BcnAssr:
    return BcnAssr(n, m, logical(rng, 1 << n, 1 << (n + m)))


def function(rng, n) -> LogicalMatrix:
    return logical(rng, 2, 1 << n)


def naive_closure(gens, blocks) -> set:
    """Fixpoint of S -> S u {g B} on column tuples, no ordering involved."""
    S = {g.cols for g in gens}
    while True:
        new = {tuple(g[c - 1] for c in B.cols) for g in S for B in blocks} - S
        if not new:
            return S
        S |= new


def small_closure(rng, blocks, n, cap=10, tries=200):
    """Closure of a random generator that stays within ``cap`` functions."""
    from stpbn.invariant import ClosureCapExceeded, close_functions

    for _ in range(tries):
        try:
            return close_functions([function(rng, n)], blocks, cap=cap)
        except ClosureCapExceeded:
            continue
    return None
