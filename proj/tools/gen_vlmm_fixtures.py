#!/usr/bin/env python3
"""Golden uniform-grid multistep coefficients in exact rational arithmetic.

Writes tests/fixtures/vlmm_uniform_v1.csv. Coefficients use the library convention
x_M + sum_{j<M} alpha_j x_j = h sum_{j<=M} beta_j f(x_j), nodes s_j = j - M.
"""

import argparse
from fractions import Fraction
from pathlib import Path


def poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def lagrange_basis(nodes, j):
    poly = [Fraction(1)]
    for k, s in enumerate(nodes):
        if k == j:
            continue
        denom = nodes[j] - s
        poly = poly_mul(poly, [-s / denom, Fraction(1) / denom])
    return poly


def integrate(poly, lo, hi):
    return sum(c * (hi ** (i + 1) - lo ** (i + 1)) / (i + 1) for i, c in enumerate(poly))


def derivative_at(poly, x):
    return sum(i * c * x ** (i - 1) for i, c in enumerate(poly) if i > 0)


def adams(M, implicit):
    nodes = [Fraction(j - M) for j in range(M + 1)]
    used = nodes if implicit else nodes[:M]
    beta = [integrate(lagrange_basis(used, j), Fraction(-1), Fraction(0)) for j in range(len(used))]
    if not implicit:
        beta.append(Fraction(0))
    alpha = [Fraction(0)] * M
    alpha[M - 1] = Fraction(-1)
    return alpha, beta


def bdf(M):
    nodes = [Fraction(j - M) for j in range(M + 1)]
    d = [derivative_at(lagrange_basis(nodes, j), Fraction(0)) for j in range(M + 1)]
    alpha = [d[j] / d[M] for j in range(M)]
    beta = [Fraction(0)] * M + [1 / d[M]]
    return alpha, beta


SCHEMES = [("ab", M, M) for M in range(1, 5)] + [("am", M, M + 1) for M in range(1, 4)] + \
          [("bdf", M, M) for M in range(1, 7)]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests/fixtures/vlmm_uniform_v1.csv"))
    args = parser.parse_args()
    rows = ["scheme,M,p,kind,j,numerator,denominator,value"]
    for family, M, p in SCHEMES:
        alpha, beta = bdf(M) if family == "bdf" else adams(M, family == "am")
        for kind, values in (("alpha", alpha), ("beta", beta)):
            for j, v in enumerate(values):
                rows.append(f"{family}{M},{M},{p},{kind},{j},{v.numerator},{v.denominator},{float(v)!r}")
    Path(args.out).write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
