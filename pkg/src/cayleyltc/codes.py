"""Linear code constructions.

Base codes (repetition, parity, BCH), tensor squares, Sipser-Spielman
Tanner codes on labelled regular graphs, and the square-complex codes whose
bits live on the squares of a left/right Cayley complex.  The square code
is assembled two ways, edge-wise from the length-r base code and
vertex-wise from its tensor square, and the equality of the two kernels is
asserted exactly at construction.

Coordinate conventions, used everywhere: tensor coordinates (a, b) are
serialized row-major with rows indexed by A; "F_2^r (x) C" means every row
lies in C and "C (x) F_2^r" means every column lies in C.
"""

from __future__ import annotations

import json

import numpy as np

from . import f2core
from .complexes import CayleyComplex
from .f2core import BitMatrix, BitVector, DimensionBudgetError
from .groups import FiniteGroup, GeneratorSet, Graph

SQUARE_CODE_COORD_BUDGET = 20000


class LinearCode:
    """A binary linear code with generator and parity-check bases."""

    def __init__(self, n: int, generator: BitMatrix, parity: BitMatrix,
                 provenance: str = "explicit", params: dict | None = None,
                 _skip_duality_check: bool = False):
        if generator.cols != n or parity.cols != n:
            raise ValueError("generator/parity width must equal the code length")
        self.n = n
        self.generator = generator
        self.parity = parity
        self.k = generator.rows
        self.provenance = provenance
        self.params = dict(params or {})
        self._distance: int | None = None
        if self.k + parity.rows != n:
            raise ValueError("k + rank(H) != n")
        if not _skip_duality_check:
            self._check_duality()

    def _check_duality(self):
        for h in self.parity.row_iter():
            syn = self.generator.matvec(h)
            if syn.weight() != 0:
                raise AssertionError("generator/parity duality violated")

    @classmethod
    def from_generators(cls, rows, n: int | None = None, provenance: str = "explicit",
                        params: dict | None = None) -> "LinearCode":
        if isinstance(rows, BitMatrix):
            M = rows
        else:
            rows = list(rows) if rows is not None else []
            if not rows and n is None:
                raise ValueError("need n for an empty generator list")
            M = BitMatrix.from_rows(rows) if rows else BitMatrix.zeros(0, n)
        G = f2core.row_basis(M)
        H_rows = f2core.kernel_basis(G if G.rows else BitMatrix.zeros(1, M.cols))
        H = BitMatrix.from_rows(H_rows) if H_rows else BitMatrix.zeros(0, M.cols)
        return cls(M.cols, G, H, provenance, params)

    @classmethod
    def from_parity_checks(cls, rows, n: int | None = None,
                           provenance: str = "explicit",
                           params: dict | None = None) -> "LinearCode":
        if isinstance(rows, BitMatrix):
            M = rows
        else:
            rows = list(rows) if rows is not None else []
            if not rows and n is None:
                raise ValueError("need n for an empty check list")
            M = BitMatrix.from_rows(rows) if rows else BitMatrix.zeros(0, n)
        H = f2core.row_basis(M)
        G_rows = f2core.kernel_basis(H if H.rows else BitMatrix.zeros(1, M.cols))
        G = BitMatrix.from_rows(G_rows) if G_rows else BitMatrix.zeros(0, M.cols)
        return cls(M.cols, G, H, provenance, params)

    @property
    def rate(self) -> float:
        return self.k / self.n if self.n else 0.0

    def contains(self, v: BitVector) -> bool:
        if v.n != self.n:
            raise ValueError(f"length mismatch: {v.n} != {self.n}")
        return self.parity.rows == 0 or self.parity.matvec(v).weight() == 0

    def codewords(self):
        """All 2^k codewords; only sensible for small k."""
        if self.k > f2core.MAX_ENUM_DIMENSION:
            raise DimensionBudgetError(f"k={self.k} too large to enumerate")
        words = f2core._enumerate_span_words(self.generator.words, self.k) \
            if self.k else np.zeros((1, self.generator.words.shape[1]), dtype=np.uint64)
        return [BitVector._from_words(w.copy(), self.n) for w in words]

    def distance_exact(self) -> int:
        """Exact minimum distance via exhaustive enumeration (k <= 24)."""
        if self._distance is None:
            if self.k == 0:
                raise ValueError("zero code has no distance")
            self._distance = f2core.min_weight_exhaustive(
                list(self.generator.row_iter()))
        return self._distance

    @property
    def cached_distance(self) -> int | None:
        return self._distance

    def normalized_distance(self) -> float:
        return self.distance_exact() / self.n

    def random_codeword(self, rng: np.random.Generator) -> BitVector:
        coeffs = rng.integers(0, 2, size=self.k)
        w = np.zeros(self.generator.words.shape[1], dtype=np.uint64)
        for i in np.nonzero(coeffs)[0]:
            w ^= self.generator.words[i]
        return BitVector._from_words(w, self.n)

    def dual(self) -> "LinearCode":
        return LinearCode(self.n, self.parity, self.generator,
                          provenance=f"dual({self.provenance})", params=self.params)

    def sidecar_json(self) -> str:
        return json.dumps({
            "n": self.n, "k": self.k, "provenance": self.provenance,
            "parameters": self.params,
        }, sort_keys=True)

    def __repr__(self) -> str:
        d = f",{self._distance}" if self._distance is not None else ""
        return f"LinearCode[{self.n},{self.k}{d}]({self.provenance})"


def repetition_code(n: int) -> LinearCode:
    return LinearCode.from_generators([BitVector([1] * n)], provenance="explicit",
                                      params={"family": "repetition", "n": n})


def parity_code(n: int) -> LinearCode:
    return LinearCode.from_parity_checks([BitVector([1] * n)], provenance="explicit",
                                         params={"family": "parity", "n": n})


def full_code(n: int) -> LinearCode:
    return LinearCode.from_parity_checks([], n=n, provenance="explicit",
                                         params={"family": "full", "n": n})


# ---------------------------------------------------------------------------
# BCH codes
# ---------------------------------------------------------------------------

# one fixed primitive polynomial per field degree (bit i = coefficient of x^i)
PRIMITIVE_POLY = {
    3: 0b1011, 4: 0b10011, 5: 0b100101, 6: 0b1000011, 7: 0b10001001,
    8: 0b100011101, 9: 0b1000010001, 10: 0b10000001001, 11: 0b100000000101,
    12: 0b1000001010011, 13: 0b10000000011011, 14: 0b100010001000011,
    15: 0b1000000000000011, 16: 0b10001000000001011,
}


class _GF2m:
    """GF(2^m) arithmetic through log/antilog tables."""

    def __init__(self, m: int):
        if m not in PRIMITIVE_POLY:
            raise ValueError(f"no primitive polynomial tabulated for m={m}")
        self.m = m
        self.size = 1 << m
        poly = PRIMITIVE_POLY[m]
        self.exp = np.zeros(2 * self.size, dtype=np.int64)
        self.log = np.zeros(self.size, dtype=np.int64)
        x = 1
        for i in range(self.size - 1):
            self.exp[i] = x
            self.log[x] = i
            x <<= 1
            if x & self.size:
                x ^= poly
        self.exp[self.size - 1: 2 * self.size - 2] = self.exp[: self.size - 1]

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def pow_alpha(self, e: int) -> int:
        return int(self.exp[e % (self.size - 1)])


def _poly_mul_gf(field: _GF2m, p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] ^= field.mul(a, b)
    return out


def bch_code(m: int, b: int) -> LinearCode:
    """Primitive narrow-sense binary BCH code of length 2^m - 1.

    The generator polynomial is the least common multiple of the minimal
    polynomials of alpha^1 .. alpha^(b-1); the BCH bound gives distance >= b.
    """
    if m < 3:
        raise ValueError(f"need m >= 3, got {m}")
    n = (1 << m) - 1
    if not 2 <= b <= n:
        raise ValueError(f"designed distance must lie in [2, {n}], got {b}")
    field = _GF2m(m)
    covered: set[int] = set()
    g = [1]
    for i in range(1, b):
        if i in covered:
            continue
        coset = []
        s = i
        while s not in coset:
            coset.append(s)
            s = (2 * s) % n
        covered.update(coset)
        minpoly = [1]
        for s in coset:
            minpoly = _poly_mul_gf(field, minpoly, [field.pow_alpha(s), 1])
        assert all(c in (0, 1) for c in minpoly), "minimal polynomial not binary"
        g = _poly_mul_gf(field, g, minpoly)
    deg = len(g) - 1
    k = n - deg
    if k <= 0:
        raise ValueError(f"designed distance {b} leaves no information bits")
    rows = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        rows[i, i: i + deg + 1] = g
    code = LinearCode.from_generators(BitMatrix(rows), provenance="bch",
                                      params={"m": m, "b": b})
    assert code.k == k
    if code.k <= f2core.MAX_ENUM_DIMENSION:
        assert code.distance_exact() >= b, "BCH bound violated"
    return code


# ---------------------------------------------------------------------------
# Tensor codes
# ---------------------------------------------------------------------------


def tensor_code(C1: LinearCode) -> LinearCode:
    """C1 (x) C1 on the r x r grid: all rows and all columns in C1."""
    r = C1.n
    checks = []
    h_bits = C1.parity.to_array()
    for a in range(r):
        for h in h_bits:
            row = np.zeros(r * r, dtype=np.uint8)
            row[a * r: (a + 1) * r] = h
            checks.append(row)
    for b in range(r):
        for h in h_bits:
            row = np.zeros(r * r, dtype=np.uint8)
            row[b::r] = h
            checks.append(row)
    M = BitMatrix(np.array(checks, dtype=np.uint8)) if checks else None
    code = (LinearCode.from_parity_checks(M, provenance="tensor",
                                          params={"r": r, "k1": C1.k})
            if M is not None else
            full_code(r * r))
    code.provenance = "tensor"
    code.params = {"r": r, "k1": C1.k}
    assert code.k == C1.k * C1.k, "tensor dimension must be k1^2"
    return code


def tensor_membership(C1: LinearCode, grid: np.ndarray) -> bool:
    """Direct row/column membership test of an r x r 0/1 grid."""
    r = C1.n
    grid = np.asarray(grid, dtype=np.uint8).reshape(r, r)
    H = C1.parity.to_array()
    if H.size == 0:
        return True
    return (not ((H @ grid.T) % 2).any()) and (not ((H @ grid) % 2).any())


# ---------------------------------------------------------------------------
# Tanner codes on labelled regular graphs
# ---------------------------------------------------------------------------


def graph_edge_labelling(graph: Graph) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Edge ids for a simple regular graph plus a per-vertex labelling.

    Returns (edges, labelling) where edges[i] is the vertex pair of edge i
    and labelling[v] lists the incident edge ids in ascending order.
    """
    pairs = graph.edge_pairs()
    if len(set(pairs)) != len(pairs) or any(u == v for u, v in pairs):
        raise ValueError("Tanner codes need a simple graph")
    index = {p: i for i, p in enumerate(pairs)}
    deg = graph.degree
    labelling = np.full((graph.n_vertices, deg), -1, dtype=np.int64)
    fill = np.zeros(graph.n_vertices, dtype=np.int64)
    for (u, v), i in index.items():
        labelling[u, fill[u]] = i
        fill[u] += 1
        labelling[v, fill[v]] = i
        fill[v] += 1
    if (labelling < 0).any():
        raise ValueError("graph is not regular")
    return pairs, labelling


def cayley_edge_labelling(G: FiniteGroup, S: GeneratorSet,
                          side: str = "left") -> tuple[int, np.ndarray]:
    """Labelling of Cay(S;G) edges by generator position.

    Edge <s,g> (connecting g and sg for the left side) gets the coordinate
    of s at vertex g and of s^-1 at vertex sg; ids follow the canonical
    (min position, root) representative.  Returns (n_edges, labelling).
    """
    n = G.order
    perms = np.stack([(G.left_perm(s) if side == "left" else G.right_perm(s))
                      for s in S.indices])
    inv_pos = S.inverse_positions
    keys = np.arange(len(S), dtype=np.int64)[:, None] * n + np.arange(n)[None, :]
    alt = inv_pos[:, None] * n + perms
    canon = np.minimum(keys, alt)
    _, inverse = np.unique(canon.ravel(), return_inverse=True)
    edge_ids = inverse.reshape(len(S), n)
    return edge_ids.max() + 1, edge_ids.T.copy()   # labelling[v, pos]


def tanner_code(n_edges: int, labelling: np.ndarray, C0: LinearCode,
                provenance: str = "tanner", params: dict | None = None) -> LinearCode:
    """Edge-bit code: the local view at every vertex must lie in C0.

    labelling[v] maps local coordinates 0..deg-1 to edge ids; its width
    must equal the length of C0.
    """
    labelling = np.asarray(labelling, dtype=np.int64)
    if labelling.shape[1] != C0.n:
        raise ValueError(
            f"local code length {C0.n} != vertex degree {labelling.shape[1]}")
    h_bits = C0.parity.to_array()
    checks = np.zeros((labelling.shape[0] * len(h_bits), n_edges), dtype=np.uint8)
    row = 0
    for v in range(labelling.shape[0]):
        for h in h_bits:
            np.add.at(checks[row], labelling[v], h)
            row += 1
    checks &= 1
    code = (LinearCode.from_parity_checks(BitMatrix(checks), provenance=provenance,
                                          params=params)
            if row else full_code(n_edges))
    rho0 = C0.rate
    assert code.k >= (2 * rho0 - 1) * n_edges - 1e-9, "Tanner rate bound violated"
    code.params.setdefault("rho0", rho0)
    return code


def tanner_code_on_graph(graph: Graph, C0: LinearCode) -> LinearCode:
    pairs, labelling = graph_edge_labelling(graph)
    return tanner_code(len(pairs), labelling, C0,
                       params={"graph": graph.name, "n_vertices": graph.n_vertices})


def tanner_code_on_cayley(G: FiniteGroup, S: GeneratorSet, C0: LinearCode,
                          side: str = "left") -> LinearCode:
    n_edges, labelling = cayley_edge_labelling(G, S, side)
    return tanner_code(n_edges, labelling, C0,
                       params={"group": G.manifest(), "S": list(S.indices)})


# ---------------------------------------------------------------------------
# Square-complex codes
# ---------------------------------------------------------------------------


def _edge_wise_checks(X: CayleyComplex, C1: LinearCode) -> np.ndarray:
    slots = X.edge_slot_table()                    # (n_edges, r)
    h_bits = C1.parity.to_array()
    checks = np.zeros((X.n_edges * len(h_bits), X.n_squares), dtype=np.uint8)
    row = 0
    for e in range(X.n_edges):
        for h in h_bits:
            np.add.at(checks[row], slots[e], h)    # repeated slots cancel mod 2
            row += 1
    return checks & 1


def _vertex_wise_checks(X: CayleyComplex, C0: LinearCode) -> np.ndarray:
    r2 = C0.n
    h_bits = C0.parity.to_array()
    checks = np.zeros((X.n_vertices * len(h_bits), X.n_squares), dtype=np.uint8)
    row = 0
    for g in range(X.n_vertices):
        flat = X.squares_of_vertex(g).reshape(r2)
        for h in h_bits:
            np.add.at(checks[row], flat, h)
            row += 1
    return checks & 1


def square_code(X: CayleyComplex, C1: LinearCode,
                max_coords: int = SQUARE_CODE_COORD_BUDGET) -> LinearCode:
    """The code on F_2^S whose view along every edge lies in C1.

    Assembles parity checks both edge-wise (one C1 constraint set per edge)
    and vertex-wise (one tensor-square constraint set per vertex) and
    asserts the two kernels are equal before returning the edge-wise code.
    """
    r = X.nA
    if X.nA != X.nB:
        raise ValueError(f"square codes need |A| = |B|, got {X.nA} != {X.nB}")
    if C1.n != r:
        raise ValueError(f"base code length {C1.n} != degree r = {r}")
    if X.n_squares > max_coords:
        raise DimensionBudgetError(
            f"square code on {X.n_squares} coordinates exceeds budget {max_coords}")
    C0 = tensor_code(C1)
    He = _edge_wise_checks(X, C1)
    Hv = _vertex_wise_checks(X, C0)
    edge_code = (LinearCode.from_parity_checks(BitMatrix(He)) if He.size
                 else full_code(X.n_squares))
    vert_code = (LinearCode.from_parity_checks(BitMatrix(Hv)) if Hv.size
                 else full_code(X.n_squares))
    if edge_code.k != vert_code.k:
        raise AssertionError("edge-wise and vertex-wise kernels differ in rank")
    stacked = (edge_code.parity.stack(vert_code.parity)
               if edge_code.parity.rows and vert_code.parity.rows else None)
    if stacked is not None and f2core.rank(stacked) != edge_code.parity.rows:
        raise AssertionError("edge-wise and vertex-wise kernels are not equal")
    # mutual membership, explicitly
    for v in edge_code.generator.row_iter():
        if not vert_code.contains(v):
            raise AssertionError("edge-wise codeword fails vertex-wise checks")
    for v in vert_code.generator.row_iter():
        if not edge_code.contains(v):
            raise AssertionError("vertex-wise codeword fails edge-wise checks")
    code = LinearCode(X.n_squares, edge_code.generator, edge_code.parity,
                      provenance="square",
                      params={"r": r, "k1": C1.k, "group": X.group.manifest()},
                      _skip_duality_check=True)
    rho1 = C1.rate
    assert code.k >= (4 * rho1 - 3) * X.n_squares - 1e-9, "square rate bound violated"
    assert X.n_squares >= r * r * X.n_vertices / 4 - 1e-9
    return code


# ---------------------------------------------------------------------------
# Bound checkers (rate/distance propositions)
# ---------------------------------------------------------------------------


def _distance_bound_record(code: LinearCode, n: int, delta0: float, lam: float,
                           bound_fn) -> dict:
    """Shared shape for the two distance-bound propositions.

    Bounds are evaluated with lambda clamped below at 0: the expansion
    parameter in the propositions is a positive upper bound, so a negative
    second eigenvalue (complete graphs) certifies at least lambda -> 0+.
    """
    lam_eff = max(lam, 0.0)
    rec = {
        "lambda": lam, "delta0": delta0,
        "hypothesis_holds": delta0 > lam_eff,
        "bound": bound_fn(delta0, lam_eff) * n,
    }
    if not rec["hypothesis_holds"]:
        rec["verdict"] = "na"
        rec["reason"] = "delta0 <= lambda: proposition hypothesis fails"
        return rec
    try:
        d = code.distance_exact()
    except (DimensionBudgetError, ValueError) as exc:
        rec["verdict"] = "na"
        rec["reason"] = f"exact distance unavailable: {exc}"
        return rec
    rec["distance"] = d
    rec["verdict"] = "pass" if d >= rec["bound"] - 1e-9 else "fail"
    return rec


def check_tanner_distance_bound(code: LinearCode, delta0: float, lam: float) -> dict:
    """delta(C) >= delta0 (delta0 - lambda) when delta0 > lambda."""
    return _distance_bound_record(code, code.n, delta0, lam,
                                  lambda d, l: d * (d - l))


def check_square_distance_bound(code: LinearCode, delta1: float, lam: float) -> dict:
    """delta(C) >= (1/4) delta1^2 (delta1 - lambda) when delta1 > lambda."""
    return _distance_bound_record(code, code.n, delta1, lam,
                                  lambda d, l: 0.25 * d * d * (d - l))


def check_rate_bound(code: LinearCode, kind: str) -> dict:
    if kind == "tanner":
        rho0 = code.params["rho0"]
        bound = (2 * rho0 - 1) * code.n
    elif kind == "square":
        rho1 = code.params["k1"] / code.params["r"]
        bound = (4 * rho1 - 3) * code.n
    else:
        raise ValueError(f"unknown rate bound kind {kind!r}")
    return {
        "k": code.k, "n": code.n, "bound": bound,
        "verdict": "pass" if code.k >= bound - 1e-9 else "fail",
    }
