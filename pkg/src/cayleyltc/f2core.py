"""Exact linear algebra over GF(2).

Words and matrices are stored bit-packed into uint64 numpy arrays (LSB of
word 0 = coordinate 0), so row operations run word-parallel.  Everything a
code computation needs lives here: rank, reduced row echelon form, kernel
bases, Hamming weight/distance, and the exhaustive minimum-weight oracle.

All values are immutable after construction from the caller's perspective;
the operations below are pure functions.
"""

from __future__ import annotations

import numpy as np

#: Hard cap on the dimension of exhaustive codeword enumeration (~16.7M words).
MAX_ENUM_DIMENSION = 24


class DimensionBudgetError(ValueError):
    """Raised when an exhaustive enumeration would exceed its stated budget."""


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 uint8 array into uint64 words, LSB-first."""
    n = bits.shape[-1]
    nwords = max(1, -(-n // 64))
    padded = np.zeros(bits.shape[:-1] + (nwords * 64,), dtype=np.uint8)
    padded[..., :n] = bits
    # little-endian within each 64-bit word
    b = padded.reshape(padded.shape[:-1] + (nwords, 8, 8))
    bytes_ = np.packbits(b, axis=-1, bitorder="little").squeeze(-1)
    return bytes_.view(np.uint64).reshape(bits.shape[:-1] + (nwords,))


def _unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of _pack_bits; returns a 0/1 uint8 array of length n."""
    bytes_ = words.view(np.uint8)
    bits = np.unpackbits(bytes_, axis=-1, bitorder="little")
    return bits[..., :n]


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words)


class BitVector:
    """A word in GF(2)^n, bit-packed."""

    __slots__ = ("n", "words")

    def __init__(self, bits):
        bits = np.asarray(bits, dtype=np.uint8) & 1
        if bits.ndim != 1:
            raise ValueError("BitVector expects a 1-d bit sequence")
        self.n = int(bits.shape[0])
        self.words = _pack_bits(bits)
        self.words.flags.writeable = False

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def _from_words(cls, words: np.ndarray, n: int) -> "BitVector":
        v = cls.__new__(cls)
        v.n = n
        v.words = words
        v.words.flags.writeable = False
        return v

    def to_bits(self) -> np.ndarray:
        return _unpack_bits(self.words, self.n)

    def weight(self) -> int:
        return int(_popcount(self.words).sum())

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"coordinate {i} out of range [0, {self.n})")
        return int((self.words[i >> 6] >> np.uint64(i & 63)) & np.uint64(1))

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise ValueError(f"length mismatch: {self.n} != {other.n}")
        return BitVector._from_words(self.words ^ other.words, self.n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.n, self.words.tobytes()))

    def dot(self, other: "BitVector") -> int:
        """GF(2) inner product."""
        if self.n != other.n:
            raise ValueError(f"length mismatch: {self.n} != {other.n}")
        return int(_popcount(self.words & other.words).sum()) & 1

    def __repr__(self) -> str:
        if self.n <= 64:
            return f"BitVector('{''.join(map(str, self.to_bits()))}')"
        return f"BitVector(n={self.n}, weight={self.weight()})"


class BitMatrix:
    """A dense GF(2) matrix, rows bit-packed into uint64 words."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, entries):
        entries = np.asarray(entries, dtype=np.uint8) & 1
        if entries.ndim != 2:
            raise ValueError("BitMatrix expects a 2-d 0/1 array")
        self.rows, self.cols = (int(x) for x in entries.shape)
        self.words = _pack_bits(entries) if self.rows else np.zeros(
            (0, max(1, -(-self.cols // 64))), dtype=np.uint64)
        self.words.flags.writeable = False

    @classmethod
    def _from_words(cls, words: np.ndarray, rows: int, cols: int) -> "BitMatrix":
        m = cls.__new__(cls)
        m.rows, m.cols, m.words = rows, cols, words
        m.words.flags.writeable = False
        return m

    @classmethod
    def from_rows(cls, vectors) -> "BitMatrix":
        vectors = list(vectors)
        if not vectors:
            raise ValueError("from_rows needs at least one row; use zeros() instead")
        n = vectors[0].n
        if any(v.n != n for v in vectors):
            raise ValueError("rows have mismatched lengths")
        words = np.stack([v.words for v in vectors])
        return cls._from_words(words, len(vectors), n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(np.eye(n, dtype=np.uint8))

    def to_array(self) -> np.ndarray:
        if self.rows == 0:
            return np.zeros((0, self.cols), dtype=np.uint8)
        return _unpack_bits(self.words, self.cols)

    def row(self, i: int) -> BitVector:
        return BitVector._from_words(self.words[i].copy(), self.cols)

    def row_iter(self):
        for i in range(self.rows):
            yield self.row(i)

    def transpose(self) -> "BitMatrix":
        return BitMatrix(self.to_array().T)

    def matvec(self, v: BitVector) -> BitVector:
        """Compute M v over GF(2)."""
        if v.n != self.cols:
            raise ValueError(f"length mismatch: matrix has {self.cols} cols, vector {v.n}")
        if self.rows == 0:
            return BitVector.zeros(0)
        out = (_popcount(self.words & v.words[None, :]).sum(axis=1) & 1).astype(np.uint8)
        return BitVector(out)

    def matmul(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ValueError("inner dimension mismatch")
        a = self.to_array()
        b = other.to_array()
        return BitMatrix((a.astype(np.uint32) @ b.astype(np.uint32)) & 1)

    def stack(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.cols:
            raise ValueError("column count mismatch")
        words = np.vstack([self.words, other.words])
        return BitMatrix._from_words(words, self.rows + other.rows, self.cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and bool(
            np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


def _rref_words(words: np.ndarray, cols: int):
    """In-place reduced row echelon form on packed rows.

    Returns (reduced words, pivot column list).  Word-parallel: each
    elimination step XORs the pivot row into every other row holding a 1 in
    the pivot column at once.
    """
    R = words.copy()
    m = R.shape[0]
    pivots = []
    prow = 0
    for c in range(cols):
        if prow >= m:
            break
        w, b = c >> 6, np.uint64(c & 63)
        colbits = (R[prow:, w] >> b) & np.uint64(1)
        hits = np.nonzero(colbits)[0]
        if hits.size == 0:
            continue
        piv = prow + int(hits[0])
        if piv != prow:
            R[[prow, piv]] = R[[piv, prow]]
        mask = ((R[:, w] >> b) & np.uint64(1)).astype(bool)
        mask[prow] = False
        if mask.any():
            R[mask] ^= R[prow]
        pivots.append(c)
        prow += 1
    return R, pivots


def rank(M: BitMatrix) -> int:
    """GF(2) row rank of M."""
    if M.rows == 0 or M.cols == 0:
        return 0
    _, pivots = _rref_words(M.words, M.cols)
    return len(pivots)


def rref(M: BitMatrix):
    """Reduced row echelon form; returns (BitMatrix, pivot column list)."""
    if M.rows == 0:
        return M, []
    R, pivots = _rref_words(M.words, M.cols)
    return BitMatrix._from_words(R, M.rows, M.cols), pivots


def row_basis(M: BitMatrix) -> BitMatrix:
    """Independent rows spanning the row space of M (echelon order)."""
    R, pivots = rref(M)
    r = len(pivots)
    return BitMatrix._from_words(R.words[:r].copy(), r, M.cols)


def kernel_basis(M: BitMatrix) -> list[BitVector]:
    """A basis of {v : M v = 0}; size = cols - rank(M)."""
    n = M.cols
    if n == 0:
        return []
    if M.rows == 0:
        return [BitVector(np.eye(n, dtype=np.uint8)[i]) for i in range(n)]
    R, pivots = _rref_words(M.words, n)
    pivot_set = set(pivots)
    free_cols = [c for c in range(n) if c not in pivot_set]
    Rbits = _unpack_bits(R[: len(pivots)], n)
    basis = []
    for f in free_cols:
        v = np.zeros(n, dtype=np.uint8)
        v[f] = 1
        for i, p in enumerate(pivots):
            v[p] = Rbits[i, f]
        basis.append(BitVector(v))
    return basis


def weight(v: BitVector) -> int:
    """Hamming weight."""
    return v.weight()


def hamming_distance(u: BitVector, v: BitVector) -> int:
    """Hamming distance; raises on length mismatch."""
    if u.n != v.n:
        raise ValueError(f"length mismatch: {u.n} != {v.n}")
    return (u ^ v).weight()


def _enumerate_span_words(rows: np.ndarray, k: int) -> np.ndarray:
    """All 2^k GF(2) combinations of the first k packed rows.

    Gray-order blockwise: low half via an explicitly materialized table,
    high half XORed in per chunk.  Returns an array of shape (2^k, nwords).
    """
    nwords = rows.shape[1]
    k_lo = min(k, 12)
    k_hi = k - k_lo
    lo = np.zeros((1 << k_lo, nwords), dtype=np.uint64)
    for i in range(k_lo):
        half = 1 << i
        lo[half: 2 * half] = lo[:half] ^ rows[i]
    if k_hi == 0:
        return lo
    out = np.empty((1 << k, nwords), dtype=np.uint64)
    hi = np.zeros(nwords, dtype=np.uint64)
    # Gray code over the high bits so each chunk differs by one row XOR.
    prev = 0
    for j in range(1 << k_hi):
        g = j ^ (j >> 1)
        diff = g ^ prev
        if diff:
            hi = hi ^ rows[k_lo + diff.bit_length() - 1]
            prev = g
        out[g << k_lo: (g + 1) << k_lo] = lo ^ hi
    return out


def min_weight_exhaustive(basis: list[BitVector]) -> int:
    """Exact minimum weight of a nonzero codeword in span(basis).

    Enumerates all 2^k codewords of the spanned code; refuses above
    MAX_ENUM_DIMENSION.  Raises ValueError for the zero code.
    """
    if not basis:
        raise ValueError("zero code: no nonzero codeword exists")
    M = BitMatrix.from_rows(basis)
    B = row_basis(M)
    k = B.rows
    if k == 0:
        raise ValueError("zero code: no nonzero codeword exists")
    if k > MAX_ENUM_DIMENSION:
        raise DimensionBudgetError(
            f"dimension {k} exceeds exhaustive enumeration budget {MAX_ENUM_DIMENSION}")
    words = _enumerate_span_words(B.words, k)
    wts = _popcount(words).sum(axis=1)
    return int(wts[1:].min()) if k > 0 else 0


# ---------------------------------------------------------------------------
# Text exchange formats.
#
# "f2mat v1 <rows> <cols>" followed by one hex row per line; the most
# significant hex digit of each line holds the lowest column indices
# (column 0 = MSB of the first digit), zero-padded to ceil(cols/4) digits.
# "f2word v1 <length>" followed by a single hex line, same digit convention.
# ---------------------------------------------------------------------------


def _bits_to_hex(bits: np.ndarray) -> str:
    n = bits.shape[0]
    ndigits = max(1, -(-n // 4))
    packed = np.packbits(bits, bitorder="big")
    return packed.tobytes().hex()[:ndigits]


def _hex_to_bits(h: str, n: int) -> np.ndarray:
    ndigits = max(1, -(-n // 4))
    if len(h) != ndigits:
        raise ValueError(f"expected {ndigits} hex digits for length {n}, got {len(h)}")
    if len(h) % 2:
        h += "0"
    raw = np.frombuffer(bytes.fromhex(h), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="big")[:n]
    return bits


def dump_matrix(M: BitMatrix) -> str:
    lines = [f"f2mat v1 {M.rows} {M.cols}"]
    arr = M.to_array()
    for i in range(M.rows):
        lines.append(_bits_to_hex(arr[i]))
    return "\n".join(lines) + "\n"


def load_matrix(text: str) -> BitMatrix:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 4 or head[0] != "f2mat" or head[1] != "v1":
        raise ValueError(f"bad f2mat header: {lines[0]!r}")
    rows, cols = int(head[2]), int(head[3])
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} rows, found {len(lines) - 1}")
    if rows == 0:
        return BitMatrix.zeros(0, cols)
    bits = np.stack([_hex_to_bits(ln.strip(), cols) for ln in lines[1:]])
    return BitMatrix(bits)


def dump_word(v: BitVector) -> str:
    return f"f2word v1 {v.n}\n{_bits_to_hex(v.to_bits())}\n"


def load_word(text: str) -> BitVector:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 3 or head[0] != "f2word" or head[1] != "v1":
        raise ValueError(f"bad f2word header: {lines[0]!r}")
    n = int(head[2])
    return BitVector(_hex_to_bits(lines[1].strip(), n))
