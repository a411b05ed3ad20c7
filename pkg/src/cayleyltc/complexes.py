"""Left/right Cayley square complexes.

A complex over a group G with a left generator set A and a right generator
set B has vertex set G, left edges {g, ag}, right edges {g, gb}, and squares:
equivalence classes [a,g,b] of the four triples

    (a,g,b) ~ (a^-1, ag, b) ~ (a^-1, agb, b^-1) ~ (a, gb, b^-1).

Everything is stored as dense integer id arrays: per-label permutations of
the vertex set, an edge id for every (label, vertex) slot, and a square id
for every (a, g, b) slot.  The canonical representative of an edge or
square is the lexicographically least of its equivalent slot tuples, so ids
are deterministic and independent of discovery order.

Degenerate squares (classes of size 2, occurring exactly when condition
N2C fails) are retained and flagged; their vertex and edge sets are
computed as sets of size 2-4.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass

import numpy as np

from .groups import FiniteGroup, GeneratorSet, cyclic_group, psl2

LEFT, RIGHT = 0, 1


@dataclass(frozen=True)
class ConditionReport:
    """TNC ('ga != bg for all g,a,b') and N2C ('a^2=1 implies g^-1ag not in B')."""

    tnc: bool
    n2c: bool
    tnc_witness: tuple[int, int, int] | None = None   # (g, a, b) element indices
    n2c_witness: tuple[int, int, int] | None = None


class CayleyComplex:
    """Vertices V = G, typed edges E_A | E_B, and square classes [a,g,b]."""

    def __init__(self, group: FiniteGroup, A: GeneratorSet, B: GeneratorSet,
                 _tables: dict | None = None):
        if A.group is not group or B.group is not group:
            raise ValueError("generator sets must belong to the given group")
        self.group = group
        self.A = A
        self.B = B
        self.nA = len(A)
        self.nB = len(B)
        self.n_vertices = group.order

        n = group.order
        self.left_perms = np.stack([group.left_perm(s) for s in A.indices])
        self.right_perms = np.stack([group.right_perm(s) for s in B.indices])
        self.a_inv_pos = A.inverse_positions
        self.b_inv_pos = B.inverse_positions

        # label l in [0, nA) is left multiplication by A[l]; label nA + j is
        # right multiplication by B[j].  vert_image[l, g] = g^l.
        self.n_labels = self.nA + self.nB
        self.vert_image = np.concatenate([self.left_perms, self.right_perms])
        self.label_type = np.concatenate([
            np.zeros(self.nA, dtype=np.int64), np.ones(self.nB, dtype=np.int64)])
        self.label_inv = np.concatenate([self.a_inv_pos, self.b_inv_pos + self.nA])

        if _tables is None:
            self._build_edges()
            self._build_squares()
        else:
            self.__dict__.update(_tables)
        self._edge_slots = None
        self.verify_counts()

    # -- construction -----------------------------------------------------

    def _build_edges(self):
        n = self.n_vertices
        g_row = np.arange(n, dtype=np.int64)

        def canonical_ids(perms, inv_pos):
            k = perms.shape[0]
            keys = np.arange(k, dtype=np.int64)[:, None] * n + g_row[None, :]
            alt = inv_pos[:, None] * n + perms
            canon = np.minimum(keys, alt)
            uniq, inverse = np.unique(canon.ravel(), return_inverse=True)
            return len(uniq), inverse.reshape(k, n).astype(np.int64), uniq

        self.n_left_edges, left_ids, left_keys = canonical_ids(
            self.left_perms, self.a_inv_pos)
        self.n_right_edges, right_ids, right_keys = canonical_ids(
            self.right_perms, self.b_inv_pos)
        self.n_edges = self.n_left_edges + self.n_right_edges
        # edge_at[l, g] = id of the edge <g; l>, right ids offset past left ids
        self.edge_at = np.concatenate([left_ids, right_ids + self.n_left_edges])
        # canonical representative (type, generator position, root vertex)
        self.edge_rep = np.empty((self.n_edges, 3), dtype=np.int64)
        self.edge_rep[:self.n_left_edges] = np.stack(
            [np.zeros_like(left_keys), left_keys // n, left_keys % n], axis=1)
        self.edge_rep[self.n_left_edges:] = np.stack(
            [np.ones_like(right_keys), right_keys // n, right_keys % n], axis=1)

    def _build_squares(self):
        n = self.n_vertices
        nA, nB = self.nA, self.nB
        g = np.arange(n, dtype=np.int64)
        i = np.arange(nA, dtype=np.int64)
        j = np.arange(nB, dtype=np.int64)

        ag = self.left_perms                              # (nA, n)
        gb = self.right_perms                             # (nB, n)
        agb = self.right_perms[:, ag]                     # (nB, nA, n)
        agb = np.ascontiguousarray(agb.transpose(1, 2, 0))  # (nA, n, nB)

        def key(ii, gg, jj):
            return (ii * n + gg) * nB + jj

        k0 = key(i[:, None, None], g[None, :, None], j[None, None, :])
        k1 = key(self.a_inv_pos[:, None, None], ag[:, :, None], j[None, None, :])
        k2 = key(self.a_inv_pos[:, None, None], agb, self.b_inv_pos[None, None, :])
        k3 = key(i[:, None, None], gb.T[None, :, :], self.b_inv_pos[None, None, :])
        canon = np.minimum(np.minimum(k0, k1), np.minimum(k2, k3))

        uniq, inverse = np.unique(canon.ravel(), return_inverse=True)
        self.n_squares = len(uniq)
        self.square_id = inverse.reshape(nA, n, nB).astype(np.int64)
        self.square_rep = np.stack(
            [uniq // (n * nB), (uniq // nB) % n, uniq % nB], axis=1)
        self.square_class_size = np.bincount(inverse, minlength=self.n_squares)

    # -- invariants --------------------------------------------------------

    def verify_counts(self):
        """Exact count identities; raised at build time if violated."""
        nG, nA, nB = self.n_vertices, self.nA, self.nB
        if self.n_edges != nG * (nA + nB) // 2:
            raise AssertionError("edge count violates |G|(|A|+|B|)/2")
        if self.n_left_edges * nB + self.n_right_edges * nA != nG * nA * nB:
            raise AssertionError("square-slot total violates |G||A||B|")
        sizes = np.unique(self.square_class_size)
        if not np.all(np.isin(sizes, [2, 4])):
            raise AssertionError("square class sizes must be 2 or 4")
        if int(self.square_class_size.sum()) != nG * nA * nB:
            raise AssertionError("square classes do not partition the slot triples")
        if bool((self.square_class_size == 4).all()):
            if self.n_squares != nG * nA * nB // 4:
                raise AssertionError("square count violates |G||A||B|/4 under N2C")

    # -- conditions ---------------------------------------------------------

    def check_conditions(self) -> ConditionReport:
        n = self.n_vertices
        g = np.arange(n, dtype=np.int64)
        ag = self.left_perms[:, :, None]                          # (nA, n, 1)
        gb = self.right_perms.T[None, :, :]                       # (1, n, nB)
        agb = self.right_perms[:, self.left_perms].transpose(1, 2, 0)
        # vertex collisions ag=gb or g=agb happen iff some A element is
        # conjugate into B, i.e. iff TNC fails
        viol = (ag == gb) | (g[None, :, None] == agb)
        tnc = not bool(viol.any())
        tnc_witness = None
        if not tnc:
            ii, gg, jj = (int(x[0]) for x in np.nonzero(viol))
            a_el, b_el = self.A.indices[ii], self.B.indices[jj]
            if int(ag[ii, gg, 0]) == int(gb[0, gg, jj]):
                # ag = gb, i.e. b = g^-1 a g, so (g^-1) a = b (g^-1)
                tnc_witness = (self.group.inv(gg), a_el, b_el)
            else:
                # g = agb, i.e. b = g^-1 a^-1 g
                tnc_witness = (self.group.inv(gg), self.group.inv(a_el), b_el)
            gw, aw, bw = tnc_witness
            assert self.group.mul(gw, aw) == self.group.mul(bw, gw)
        # a square class of size 2 is exactly an N2C violation
        n2c = bool((self.square_class_size == 4).all())
        n2c_witness = None
        if not n2c:
            s = int(np.nonzero(self.square_class_size == 2)[0][0])
            i, gg, j = (int(x) for x in self.square_rep[s])
            n2c_witness = (gg, self.A.indices[i], self.B.indices[j])
        return ConditionReport(tnc, n2c, tnc_witness, n2c_witness)

    # -- incidence and labelling --------------------------------------------

    def squares_of_vertex(self, g: int) -> np.ndarray:
        """The labelling map iota_g as an (|A|, |B|) grid of square ids."""
        return self.square_id[:, g, :]

    def distinct_squares_of_vertex(self, g: int) -> np.ndarray:
        return np.unique(self.square_id[:, g, :])

    def squares_of_edge(self, e: int) -> np.ndarray:
        """The labelling map iota_e: a vector of square ids over B (left
        edge) or A (right edge), possibly with repeats when N2C fails."""
        t, pos, g = (int(x) for x in self.edge_rep[e])
        if t == LEFT:
            return self.square_id[pos, g, :]
        return self.square_id[:, g, pos]

    def edge_slot_table(self) -> np.ndarray:
        """(n_edges, r) square ids when |A| = |B| = r; the decoder hot path."""
        if self._edge_slots is None:
            if self.nA != self.nB:
                raise ValueError("edge slot table requires |A| = |B|")
            left = self.edge_rep[:self.n_left_edges]
            right = self.edge_rep[self.n_left_edges:]
            lt = self.square_id[left[:, 1], left[:, 2], :]
            rt = self.square_id[:, right[:, 2], right[:, 1]].T
            self._edge_slots = np.ascontiguousarray(np.vstack([lt, rt]))
        return self._edge_slots

    def square_vertices(self, s: int) -> set[int]:
        i, g, j = (int(x) for x in self.square_rep[s])
        ag = int(self.left_perms[i, g])
        gb = int(self.right_perms[j, g])
        agb = int(self.right_perms[j, ag])
        return {g, ag, gb, agb}

    def square_edges(self, s: int) -> set[int]:
        i, g, j = (int(x) for x in self.square_rep[s])
        ag = int(self.left_perms[i, g])
        gb = int(self.right_perms[j, g])
        return {
            int(self.edge_at[i, g]), int(self.edge_at[self.nA + j, g]),
            int(self.edge_at[i, gb]), int(self.edge_at[self.nA + j, ag]),
        }

    def canonical_square(self, a_pos: int, g: int, b_pos: int) -> int:
        """Square id of [a,g,b]; equal for all four equivalent triples."""
        return int(self.square_id[a_pos, g, b_pos])

    def edge_endpoints(self, e: int) -> tuple[int, int]:
        t, pos, g = (int(x) for x in self.edge_rep[e])
        lbl = pos if t == LEFT else self.nA + pos
        return g, int(self.vert_image[lbl, g])

    # -- manifest / serialization -------------------------------------------

    def manifest(self) -> dict:
        cond = self.check_conditions()
        return {
            "format": "cay2 v1",
            "group": self.group.manifest(),
            "A": list(self.A.indices),
            "B": list(self.B.indices),
            "counts": {
                "vertices": self.n_vertices,
                "edges": self.n_edges,
                "left_edges": self.n_left_edges,
                "right_edges": self.n_right_edges,
                "squares": self.n_squares,
                "square_slots": self.n_vertices * self.nA * self.nB,
            },
            "tnc": cond.tnc,
            "n2c": cond.n2c,
        }


def build_complex(group: FiniteGroup, A: GeneratorSet, B: GeneratorSet) -> CayleyComplex:
    """Build all incidence tables; count invariants are verified eagerly."""
    return CayleyComplex(group, A, B)


def serialize_complex(X: CayleyComplex) -> bytes:
    """cay2 v1 container: a JSON manifest plus the binary id tables."""
    buf = io.BytesIO()
    np.savez_compressed(
        buf,
        manifest=np.frombuffer(json.dumps(X.manifest(), sort_keys=True).encode(),
                               dtype=np.uint8),
        edge_at=X.edge_at,
        edge_rep=X.edge_rep,
        square_id=X.square_id,
        square_rep=X.square_rep,
        square_class_size=X.square_class_size,
    )
    return buf.getvalue()


def _group_from_manifest(m: dict) -> FiniteGroup:
    if m["kind"] == "cyclic":
        return cyclic_group(m["parameters"]["n"])
    if m["kind"] == "psl2":
        return psl2(m["parameters"]["q"])
    raise ValueError(f"unknown group kind {m['kind']!r}")


def deserialize_complex(data: bytes) -> CayleyComplex:
    with np.load(io.BytesIO(data)) as z:
        manifest = json.loads(bytes(z["manifest"]).decode())
        if manifest.get("format") != "cay2 v1":
            raise ValueError("not a cay2 v1 file")
        group = _group_from_manifest(manifest["group"])
        A = GeneratorSet(group, tuple(manifest["A"]))
        B = GeneratorSet(group, tuple(manifest["B"]))
        c = manifest["counts"]
        tables = {
            "n_left_edges": c["left_edges"],
            "n_right_edges": c["right_edges"],
            "n_edges": c["edges"],
            "n_squares": c["squares"],
            "edge_at": z["edge_at"],
            "edge_rep": z["edge_rep"],
            "square_id": z["square_id"],
            "square_rep": z["square_rep"],
            "square_class_size": z["square_class_size"],
        }
    return CayleyComplex(group, A, B, _tables=tables)


def complex_content_hash(X: CayleyComplex) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(X.manifest(), sort_keys=True).encode())
    h.update(X.square_id.tobytes())
    h.update(X.edge_at.tobytes())
    return h.hexdigest()
