"""Exact generalized Jaccard arithmetic and the block window.

Walks through descriptor parsing, exact thresholds, and which squared-norm
blocks a query has to visit.
"""

from fractions import Fraction

from sitad import (
    Threshold,
    dot,
    jaccard_geq,
    jaccard_value,
    parse_descriptor,
    squared_norm,
)
from sitad.partition import binary_norm_window, block_threshold, norm_window

# A descriptor line is "<id>TAB<d>:<f> ...", stored as sorted (index, weight) pairs
q = parse_descriptor("7\t1:3 3:1 4:2")
x = parse_descriptor("8\t1:2 4:1")
print("q =", q.format(), " |q|^2 =", squared_norm(q))
print("x =", x.format(), " |x|^2 =", squared_norm(x), " x.q =", dot(x, q))

# J is kept as a fraction, never a float
print("J(x, q) =", jaccard_value(x, q))

# thresholds parse from decimal text into exact rationals
eps = Threshold.parse("0.95")
print("0.95 ->", eps.numerator, "/", eps.denominator)

# a pair sitting exactly on the threshold is accepted
a, b = parse_descriptor("1\t1:1 2:1"), parse_descriptor("2\t1:1")
print("J =", jaccard_value(a, b), " J >= 0.5:", jaccard_geq(a, b, Threshold.parse("0.5")))

# every member x of block c needs x.q >= eps/(1+eps) * (c + |q|^2)
print("min dot in block 10 for |q|^2 = 14, eps = 0.5:", block_threshold(10, 14, Threshold.parse("0.5")))

# which blocks can hold an answer at all?
for e in ["0.5", "0.9", "1"]:
    print(f"eps {e}: blocks c in {norm_window(14, Threshold.parse(e))}")

# the 0/1-fingerprint window [eps |q|^2, |q|^2 / eps] is too narrow for counts:
x1, q1 = parse_descriptor("1\t1:1"), parse_descriptor("2\t1:2")
j = jaccard_value(x1, q1)
t = Threshold.parse(Fraction(2, 3))
print("J((1:1), (1:2)) =", j)
print("  fingerprint window", binary_norm_window(4, t), "misses c = 1")
print("  Cauchy-Schwarz window", norm_window(4, t), "keeps it")
