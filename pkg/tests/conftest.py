"""Session-scoped instances shared between the unit and acceptance suites."""

import numpy as np
import pytest

from cayleyltc import analysis, codes, ltc, spectral
from cayleyltc.complexes import build_complex
from cayleyltc.groups import GeneratorSet, cayley_graph, cyclic_group, lps_generators, psl2


def build_toy(n, a_gens, b_gens=None):
    g = cyclic_group(n)
    A = GeneratorSet(g, a_gens, side="left")
    B = GeneratorSet(g, b_gens if b_gens is not None else a_gens, side="right")
    return build_complex(g, A, B)


@pytest.fixture(scope="session")
def p13_instance():
    """psl2(13) with the transvection generators and the parity[4,3,2] base."""
    g = psl2(13)
    t = g.index_of([1, 1, 0, 1])
    u = g.index_of([1, 0, 1, 1])
    gens = tuple(sorted({t, g.inv(t), u, g.inv(u)}))
    X = build_complex(g, GeneratorSet(g, gens, side="left"),
                      GeneratorSet(g, gens, side="right"))
    C1 = codes.parity_code(4)
    code = codes.square_code(X, C1)
    lam = spectral.second_eigenvalue(
        cayley_graph(g, X.A, "left"), method="dense").lam
    return X, C1, code, ltc.SquareCodeTester(X, C1, code), lam


@pytest.fixture(scope="session")
def lps41():
    return lps_generators(5, 41)


@pytest.fixture(scope="session")
def toy_instances():
    out = {}
    for name, n, a, b, base in [
        ("z5", 5, (1, 4), None, codes.repetition_code(2)),
        ("z12", 12, (1, 11), (5, 7), codes.repetition_code(2)),
        ("z20", 20, (1, 19), None, codes.repetition_code(2)),
        ("z10", 10, (1, 3, 5, 7, 9), None, codes.parity_code(5)),
    ]:
        X = build_toy(n, a, b)
        code = codes.square_code(X, base)
        out[name] = (X, base, code, ltc.SquareCodeTester(X, base, code))
    return out


@pytest.fixture(scope="session")
def sigma_parity4():
    return analysis.sigma_exact(codes.parity_code(4)).value
