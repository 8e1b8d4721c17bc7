"""Finite groups with explicit or matrix backends.

Groups are immutable once built. Elements are hashable objects (ints,
permutation tuples, flattened matrix tuples); operations are index based.
Conjugacy classes are computed lazily: by generator-orbit BFS when a
generating set is known (vectorized for matrix groups), by full orbit
otherwise. Class 0 is always the identity class and the remaining classes
are sorted by (size, smallest member index) so fixtures are deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .arith_core import is_prime, legendre

__all__ = [
    "FiniteGroup",
    "GroupHom",
    "cyclic_group",
    "symmetric_group",
    "dihedral_group",
    "permutation_group",
    "gl2",
    "sl2",
    "sp4",
    "gsp4",
    "SampledSymplecticGroup",
    "conjugacy_classes",
    "direct_product",
    "weyl_group",
    "count_trace",
    "count_trace_det",
    "gallagher_check",
    "jordan_missed_class",
    "w_group_criterion",
    "subgroup_closure",
    "all_subgroups",
    "is_normal_subgroup",
    "quotient_group",
    "mat_mul_mod",
    "mat_inv_mod",
    "charpoly_mod",
    "gl2_class_by_charpoly",
    "symplectic_form",
    "similitude_multiplier",
    "random_gsp4_element",
    "GSP_SAMPLING_MIX_LENGTH",
]

_ENUM_CAPACITY = 2 * 10 ** 5
_FALLBACK_CLASS_CAPACITY = 5000


# ---------------------------------------------------------------------------
# matrix helpers over F_q


def mat_mul_mod(a: tuple, b: tuple, d: int, q: int) -> tuple:
    out = [0] * (d * d)
    for i in range(d):
        for k in range(d):
            x = a[i * d + k]
            if x:
                row = k * d
                for j in range(d):
                    out[i * d + j] += x * b[row + j]
    return tuple(v % q for v in out)


def mat_inv_mod(a: tuple, d: int, q: int) -> tuple:
    if d == 2:
        det = (a[0] * a[3] - a[1] * a[2]) % q
        if det == 0:
            raise ZeroDivisionError("matrix not invertible")
        inv = pow(det, -1, q)
        return ((a[3] * inv) % q, (-a[1] * inv) % q, (-a[2] * inv) % q, (a[0] * inv) % q)
    # Gauss-Jordan over F_q
    m = [[a[i * d + j] % q for j in range(d)] + [1 if i == j else 0 for j in range(d)]
         for i in range(d)]
    for col in range(d):
        piv = next((r for r in range(col, d) if m[r][col] % q != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix not invertible")
        m[col], m[piv] = m[piv], m[col]
        inv = pow(m[col][col], -1, q)
        m[col] = [v * inv % q for v in m[col]]
        for r in range(d):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [(v - f * w) % q for v, w in zip(m[r], m[col])]
    return tuple(m[i][d + j] for i in range(d) for j in range(d))


def _det_int(m: list[list[int]]) -> int:
    """Exact integer determinant by cofactor expansion (d <= 4)."""
    d = len(m)
    if d == 1:
        return m[0][0]
    if d == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0
    sign = 1
    for j in range(d):
        if m[0][j]:
            minor = [[row[k] for k in range(d) if k != j] for row in m[1:]]
            total += sign * m[0][j] * _det_int(minor)
        sign = -sign
    return total


def charpoly_mod(mat: tuple, d: int, q: int) -> tuple[int, ...]:
    """Coefficients (ascending, degree d, monic) of det(T*I - A) over F_q.

    Uses sums of principal minors, which stay valid in small characteristic
    where Newton-identity recovery would divide by p.
    """
    rows = [[mat[i * d + j] for j in range(d)] for i in range(d)]
    coeffs = [0] * (d + 1)
    coeffs[d] = 1
    for k in range(1, d + 1):
        e_k = 0
        for subset in itertools.combinations(range(d), k):
            sub = [[rows[i][j] for j in subset] for i in subset]
            e_k += _det_int(sub)
        coeffs[d - k] = (-1) ** k * e_k % q
    return tuple(coeffs)


def _pack_keys(mats: np.ndarray, q: int) -> np.ndarray:
    """Injective int64 key per matrix; q^(d*d) must fit in int64."""
    n, d, _ = mats.shape
    flat = mats.reshape(n, d * d).astype(np.int64)
    weights = q ** np.arange(d * d, dtype=np.int64)
    return flat @ weights


def symplectic_form(g: int) -> np.ndarray:
    """Antisymmetric form with <e_1, e_(g+... pairing e_i, e_(g+i)> = 1 in the
    block arrangement (e1,e2,e3,e4) with <e1,e3> = <e2,e4> = 1 for g = 2."""
    d = 2 * g
    J = np.zeros((d, d), dtype=np.int64)
    for i in range(g):
        J[i, g + i] = 1
        J[g + i, i] = -1
    return J


# ---------------------------------------------------------------------------
# the group class


class FiniteGroup:
    """Finite group over an explicit element list.

    mul_fn acts on element objects. For matrix groups pass matrix_shape
    (d, q) and the elements as flattened tuples; conjugacy classes then run
    through a vectorized orbit BFS over the generator list.
    """

    def __init__(
        self,
        elements: Sequence,
        mul_fn: Callable,
        identity,
        inv_fn: Optional[Callable] = None,
        generators: Optional[Sequence] = None,
        matrix_shape: Optional[tuple[int, int]] = None,
        name: str = "",
    ):
        elements = list(elements)
        if identity not in elements:
            raise ValueError("identity not among elements")
        # put the identity first so the identity class has index 0
        pos = elements.index(identity)
        if pos != 0:
            elements[0], elements[pos] = elements[pos], elements[0]
        self.elements = elements
        self.order = len(elements)
        self.identity = identity
        self.name = name or f"group{self.order}"
        self._mul_fn = mul_fn
        self._inv_fn = inv_fn
        self._index = {e: i for i, e in enumerate(elements)}
        if len(self._index) != self.order:
            raise ValueError("duplicate elements")
        self.generators = list(generators) if generators is not None else None
        self._matrix_shape = matrix_shape
        self._inv_cache: dict[int, int] = {}
        self._classes: Optional[list[np.ndarray]] = None
        self._class_of: Optional[np.ndarray] = None
        if matrix_shape is not None:
            d, q = matrix_shape
            self._mats = np.array(
                [e for e in elements], dtype=np.int64
            ).reshape(self.order, d, d)
            keys = _pack_keys(self._mats, q)
            self._key_order = np.argsort(keys, kind="stable")
            self._sorted_keys = keys[self._key_order]
        else:
            self._mats = None

    # -- element access ----------------------------------------------------

    def index(self, element) -> int:
        return self._index[element]

    def mul(self, i: int, j: int) -> int:
        return self._index[self._mul_fn(self.elements[i], self.elements[j])]

    def inv(self, i: int) -> int:
        if i in self._inv_cache:
            return self._inv_cache[i]
        if self._inv_fn is not None:
            k = self._index[self._inv_fn(self.elements[i])]
        else:
            e = self.elements[i]
            k = next(
                j for j, other in enumerate(self.elements)
                if self._mul_fn(e, other) == self.identity
            )
        self._inv_cache[i] = k
        self._inv_cache[k] = i
        return k

    def _lookup_mats(self, mats: np.ndarray) -> np.ndarray:
        d, q = self._matrix_shape
        keys = _pack_keys(mats, q)
        pos = np.searchsorted(self._sorted_keys, keys)
        if np.any(pos >= self.order) or np.any(self._sorted_keys[pos] != keys):
            raise KeyError("matrix outside group")
        return self._key_order[pos]

    # -- conjugacy ---------------------------------------------------------

    def conjugacy_classes(self) -> list[np.ndarray]:
        if self._classes is None:
            if self._mats is not None and self.generators:
                raw = self._classes_matrix_bfs()
            elif self.generators is not None:
                raw = self._classes_generator_bfs()
            else:
                if self.order > _FALLBACK_CLASS_CAPACITY:
                    raise ValueError(
                        "conjugacy classes without generators capped at order "
                        f"{_FALLBACK_CLASS_CAPACITY}"
                    )
                raw = self._classes_full_orbit()
            ident = [c for c in raw if 0 in c]
            rest = [c for c in raw if 0 not in c]
            rest.sort(key=lambda c: (len(c), int(np.min(c))))
            classes = [np.array(sorted(ident[0]), dtype=np.int64)] + [
                np.array(sorted(c), dtype=np.int64) for c in rest
            ]
            class_of = np.empty(self.order, dtype=np.int64)
            for ci, members in enumerate(classes):
                class_of[members] = ci
            self._classes = classes
            self._class_of = class_of
        return self._classes

    def class_of(self) -> np.ndarray:
        self.conjugacy_classes()
        return self._class_of

    def class_sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.conjugacy_classes()], dtype=np.int64)

    def _classes_matrix_bfs(self) -> list[list[int]]:
        d, q = self._matrix_shape
        gen_idx = [self._index[g] for g in self.generators]
        gens = [self._mats[i] for i in gen_idx]
        gens_inv = [
            np.array(mat_inv_mod(self.elements[i], d, q), dtype=np.int64).reshape(d, d)
            for i in gen_idx
        ]
        assigned = np.zeros(self.order, dtype=bool)
        out = []
        for start in range(self.order):
            if assigned[start]:
                continue
            assigned[start] = True
            members = [start]
            frontier = np.array([start], dtype=np.int64)
            while frontier.size:
                batch = self._mats[frontier]
                nxt = []
                for g, gi in zip(gens, gens_inv):
                    conj = np.matmul(np.matmul(g, batch), gi) % q
                    idxs = np.unique(self._lookup_mats(conj))
                    fresh = idxs[~assigned[idxs]]
                    if fresh.size:
                        assigned[fresh] = True
                        nxt.append(fresh)
                if nxt:
                    frontier = np.unique(np.concatenate(nxt))
                    members.extend(int(v) for v in frontier)
                else:
                    frontier = np.array([], dtype=np.int64)
            out.append(members)
        return out

    def _classes_generator_bfs(self) -> list[list[int]]:
        gen_idx = [self._index[g] for g in self.generators]
        gen_inv = [self.inv(i) for i in gen_idx]
        assigned = [False] * self.order
        out = []
        for start in range(self.order):
            if assigned[start]:
                continue
            assigned[start] = True
            members = [start]
            stack = [start]
            while stack:
                a = stack.pop()
                for gi, gii in zip(gen_idx, gen_inv):
                    b = self.mul(gi, self.mul(a, gii))
                    if not assigned[b]:
                        assigned[b] = True
                        members.append(b)
                        stack.append(b)
            out.append(members)
        return out

    def _classes_full_orbit(self) -> list[list[int]]:
        assigned = [False] * self.order
        out = []
        for start in range(self.order):
            if assigned[start]:
                continue
            orbit = set()
            for g in range(self.order):
                orbit.add(self.mul(g, self.mul(start, self.inv(g))))
            members = sorted(orbit)
            for m in members:
                assigned[m] = True
            out.append(members)
        return out

    # -- misc --------------------------------------------------------------

    def verify_generators(self) -> bool:
        """True when the stored generator list generates the whole group."""
        if not self.generators:
            return False
        closure = subgroup_closure(self, [self._index[g] for g in self.generators])
        return len(closure) == self.order

    def __repr__(self):
        return f"<FiniteGroup {self.name} order={self.order}>"


@dataclass(frozen=True)
class GroupHom:
    """Homomorphism given by its full image table (source index -> target index)."""

    source: FiniteGroup
    target: FiniteGroup
    images: tuple[int, ...]

    def __post_init__(self):
        if len(self.images) != self.source.order:
            raise ValueError("image table must cover the source")
        if self.images[0] != 0:
            raise ValueError("identity must map to identity")

    def __call__(self, i: int) -> int:
        return self.images[i]

    def verify(self, samples: int = 200, seed: int = 0) -> bool:
        rng = np.random.default_rng(seed)
        n = self.source.order
        for _ in range(samples):
            i, j = int(rng.integers(n)), int(rng.integers(n))
            if self.images[self.source.mul(i, j)] != self.target.mul(
                self.images[i], self.images[j]
            ):
                return False
        return True


# ---------------------------------------------------------------------------
# basic constructions


def cyclic_group(n: int) -> FiniteGroup:
    return FiniteGroup(
        range(n),
        lambda a, b: (a + b) % n,
        0,
        inv_fn=lambda a: (-a) % n,
        generators=[1 % n],
        name=f"Z{n}",
    )


def _perm_mul(p: tuple, q: tuple) -> tuple:
    # (p q)(i) = p(q(i))
    return tuple(p[q[i]] for i in range(len(p)))


def _perm_inv(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v] = i
    return tuple(out)


def permutation_group(gens: Sequence[tuple], name: str = "") -> FiniteGroup:
    """Closure of permutation tuples under composition."""
    gens = [tuple(g) for g in gens]
    n = len(gens[0])
    identity = tuple(range(n))
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                r = _perm_mul(g, p)
                if r not in seen:
                    seen.add(r)
                    nxt.append(r)
        frontier = nxt
    elements = sorted(seen)
    return FiniteGroup(
        elements, _perm_mul, identity, inv_fn=_perm_inv, generators=gens, name=name
    )


def symmetric_group(n: int) -> FiniteGroup:
    if n == 1:
        return permutation_group([(0,)], name="S1")
    swap = (1, 0) + tuple(range(2, n))
    cycle = tuple(range(1, n)) + (0,)
    return permutation_group([swap, cycle], name=f"S{n}")


def dihedral_group(n: int) -> FiniteGroup:
    rot = tuple(range(1, n)) + (0,)
    refl = tuple((n - i) % n for i in range(n))
    return permutation_group([rot, refl], name=f"D{n}")


# ---------------------------------------------------------------------------
# matrix groups over F_q


def _require_prime(q: int):
    if not is_prime(q):
        raise ValueError(f"q={q} must be prime (prime powers deferred)")


def gl2(q: int) -> FiniteGroup:
    """All invertible 2x2 matrices over F_q; order q(q-1)^2(q+1)."""
    _require_prime(q)
    if q > 13:
        raise ValueError("gl2 enumeration capped at q = 13")
    rng4 = np.arange(q ** 4)
    a, rem = np.divmod(rng4, q ** 3)
    b, rem = np.divmod(rem, q ** 2)
    c, d = np.divmod(rem, q)
    det = (a * d - b * c) % q
    keep = det != 0
    elements = [
        (int(x), int(y), int(z), int(w))
        for x, y, z, w in zip(a[keep], b[keep], c[keep], d[keep])
    ]
    g = _primitive_root(q)
    gens = [(1, 1, 0, 1), (g % q, 0, 0, 1), (0, 1, 1, 0)]
    if q == 2:
        gens = [(1, 1, 0, 1), (0, 1, 1, 0)]
    group = FiniteGroup(
        elements,
        lambda x, y: mat_mul_mod(x, y, 2, q),
        (1, 0, 0, 1),
        inv_fn=lambda x: mat_inv_mod(x, 2, q),
        generators=gens,
        matrix_shape=(2, q),
        name=f"GL2({q})",
    )
    assert group.order == q * (q - 1) ** 2 * (q + 1)
    return group


def sl2(q: int) -> FiniteGroup:
    """Determinant-1 subgroup of gl2(q); order q(q^2-1)."""
    _require_prime(q)
    if q > 13:
        raise ValueError("sl2 enumeration capped at q = 13")
    elements = []
    for a in range(q):
        for b in range(q):
            for c in range(q):
                for d in range(q):
                    if (a * d - b * c) % q == 1:
                        elements.append((a, b, c, d))
    group = FiniteGroup(
        elements,
        lambda x, y: mat_mul_mod(x, y, 2, q),
        (1, 0, 0, 1),
        inv_fn=lambda x: mat_inv_mod(x, 2, q),
        generators=[(1, 1, 0, 1), (1, 0, 1, 1)],
        matrix_shape=(2, q),
        name=f"SL2({q})",
    )
    assert group.order == q * (q * q - 1)
    return group


def _primitive_root(q: int) -> int:
    if q == 2:
        return 1
    for g in range(2, q):
        seen = set()
        x = 1
        for _ in range(q - 1):
            x = x * g % q
            seen.add(x)
        if len(seen) == q - 1:
            return g
    raise ValueError("no primitive root found")


def _sp4_elements(q: int) -> np.ndarray:
    """Enumerate Sp_4(F_q) column by column against the standard form."""
    d = 4
    J = symplectic_form(2)
    vecs = np.array(list(itertools.product(range(q), repeat=d)), dtype=np.int64)
    pair = (vecs @ J @ vecs.T) % q  # pair[i, j] = <v_i, v_j>
    nonzero = [i for i in range(len(vecs)) if i != 0]
    rows_eq0 = pair == 0
    rows_eq1 = pair == 1
    out = []
    for c1 in nonzero:
        c3s = np.nonzero(rows_eq1[c1])[0]
        for c3 in c3s:
            mask12 = rows_eq0[c1] & rows_eq0[c3]
            c2s = np.nonzero(mask12)[0]
            c2s = c2s[c2s != 0]
            for c2 in c2s:
                mask4 = mask12 & rows_eq1[c2]
                c4s = np.nonzero(mask4)[0]
                for c4 in c4s:
                    out.append((c1, c2, c3, c4))
    idx = np.array(out, dtype=np.int64)
    mats = np.empty((len(idx), d, d), dtype=np.int64)
    for col in range(d):
        mats[:, :, col] = vecs[idx[:, col]]
    return mats


def _sp4_generators(q: int) -> list[tuple]:
    """Symplectic transvections x -> x + <x, v> v for a spanning set of v,
    plus extras; verified to generate at construction."""
    J = symplectic_form(2)
    vs = [
        (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1),
        (1, 1, 0, 0), (0, 0, 1, 1), (1, 0, 0, 1), (0, 1, 1, 0),
    ]
    gens = []
    for v in vs:
        vv = np.array(v, dtype=np.int64)
        T = (np.eye(4, dtype=np.int64) + np.outer(vv, vv @ J)) % q
        gens.append(tuple(int(x) for x in T.reshape(-1)))
    return gens


def sp4(q: int) -> FiniteGroup:
    """Sp_4(F_q), fully enumerated for q = 3 only."""
    _require_prime(q)
    expected = q ** 4 * (q ** 2 - 1) * (q ** 4 - 1)
    if q != 3:
        raise ValueError(
            f"sp4 full enumeration supported at q=3 only; |Sp4({q})| = {expected}; "
            "use SampledSymplecticGroup for q in {5, 7}"
        )
    mats = _sp4_elements(q)
    elements = [tuple(int(v) for v in m.reshape(-1)) for m in mats]
    group = FiniteGroup(
        elements,
        lambda x, y: mat_mul_mod(x, y, 4, q),
        tuple(int(v) for v in np.eye(4, dtype=np.int64).reshape(-1)),
        inv_fn=lambda x: mat_inv_mod(x, 4, q),
        generators=_sp4_generators(q),
        matrix_shape=(4, q),
        name=f"Sp4({q})",
    )
    assert group.order == expected
    return group


def gsp4(q: int) -> FiniteGroup:
    """GSp_4(F_q) = symplectic similitudes; order (q-1)|Sp_4(F_q)|."""
    _require_prime(q)
    expected = (q - 1) * q ** 4 * (q ** 2 - 1) * (q ** 4 - 1)
    if q != 3:
        raise ValueError(
            f"gsp4 full enumeration supported at q=3 only; |GSp4({q})| = {expected}; "
            "use SampledSymplecticGroup for q in {5, 7}"
        )
    sp_mats = _sp4_elements(q)
    blocks = [sp_mats]
    g = _primitive_root(q)
    for k in range(1, q - 1):
        m = pow(g, k, q)
        D = np.diag([1, 1, m, m]).astype(np.int64)
        blocks.append(np.matmul(D, sp_mats) % q)
    mats = np.concatenate(blocks)
    elements = [tuple(int(v) for v in m.reshape(-1)) for m in mats]
    gens = _sp4_generators(q) + [
        tuple(int(v) for v in np.diag([1, 1, g, g]).astype(np.int64).reshape(-1))
    ]
    group = FiniteGroup(
        elements,
        lambda x, y: mat_mul_mod(x, y, 4, q),
        tuple(int(v) for v in np.eye(4, dtype=np.int64).reshape(-1)),
        inv_fn=lambda x: mat_inv_mod(x, 4, q),
        generators=gens,
        matrix_shape=(4, q),
        name=f"GSp4({q})",
    )
    assert group.order == expected
    return group


def similitude_multiplier(mat: tuple, q: int) -> int:
    """mult(A) with <Av, Aw> = mult(A) <v, w>; raises if A is no similitude."""
    A = np.array(mat, dtype=np.int64).reshape(4, 4)
    J = symplectic_form(2)
    M = (A.T @ J @ A) % q
    m = int(M[0, 2])
    if m == 0 or np.any((M - m * J) % q != 0):
        raise ValueError("matrix is not a symplectic similitude")
    return m


GSP_SAMPLING_MIX_LENGTH = 40


class SampledSymplecticGroup:
    """Sampling-only backend for GSp_4(F_q), q in {5, 7}.

    Exact enumeration is out of capacity; uniform-ish elements come from
    products of GSP_SAMPLING_MIX_LENGTH random generators (transvections
    plus one similitude of primitive-root multiplier).
    """

    def __init__(self, q: int, mix_length: int = GSP_SAMPLING_MIX_LENGTH):
        _require_prime(q)
        self.q = q
        self.order = (q - 1) * q ** 4 * (q ** 2 - 1) * (q ** 4 - 1)
        self.mix_length = mix_length
        g = _primitive_root(q)
        base = _sp4_generators(q)
        # transvection powers x -> x + c<x,v>v enrich mixing
        J = symplectic_form(2)
        extra = []
        for v in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]:
            vv = np.array(v, dtype=np.int64)
            for c in range(2, q):
                T = (np.eye(4, dtype=np.int64) + c * np.outer(vv, vv @ J)) % q
                extra.append(tuple(int(x) for x in T.reshape(-1)))
        self._gens = base + extra + [
            tuple(int(v) for v in np.diag([1, 1, g, g]).astype(np.int64).reshape(-1))
        ]
        self.name = f"GSp4({q})-sampled"

    def sample(self, rng: np.random.Generator) -> tuple:
        m = np.eye(4, dtype=np.int64)
        k = len(self._gens)
        for _ in range(self.mix_length):
            pick = np.array(self._gens[int(rng.integers(k))], dtype=np.int64).reshape(4, 4)
            m = (m @ pick) % self.q
        return tuple(int(v) for v in m.reshape(-1))

    def conjugacy_classes(self):
        raise NotImplementedError("sampling-only backend has no class enumeration")


def random_gsp4_element(q: int, rng: np.random.Generator,
                        mix_length: int = GSP_SAMPLING_MIX_LENGTH) -> tuple:
    return SampledSymplecticGroup(q, mix_length).sample(rng)


def conjugacy_classes(G: FiniteGroup) -> list[np.ndarray]:
    """Class partition of G as lists of element indices (lazy, cached)."""
    return G.conjugacy_classes()


def gl2_class_by_charpoly(G: FiniteGroup) -> dict[tuple[int, int], int]:
    """Map (trace, det) -> class index for a gl2 group.

    Charpoly determines the class except when the discriminant vanishes and
    the matrix is non-central: a scalar and its unipotent companion share
    (t, d). The map then points at the larger, non-central class, the one a
    trace-of-Frobenius observation almost always means.
    """
    q = G._matrix_shape[1]
    classes = G.conjugacy_classes()
    out: dict[tuple[int, int], int] = {}
    for ci, members in enumerate(classes):
        a, b, c, d = G.elements[int(members[0])]
        key = ((a + d) % q, (a * d - b * c) % q)
        if key not in out or len(classes[out[key]]) < len(members):
            out[key] = ci
    return out


# ---------------------------------------------------------------------------
# direct products


def direct_product(groups: Sequence[FiniteGroup]) -> FiniteGroup:
    """Componentwise product; conjugacy classes are products of component
    classes and are attached directly instead of recomputed."""
    groups = list(groups)
    total = 1
    for g in groups:
        total *= g.order
    if total > _ENUM_CAPACITY:
        raise ValueError(f"product order {total} above capacity {_ENUM_CAPACITY}")
    if not groups:
        trivial = FiniteGroup([()], lambda a, b: (), (), name="trivial")
        return trivial

    elements = list(itertools.product(*(g.elements for g in groups)))
    muls = [g._mul_fn for g in groups]

    def mul(a, b):
        return tuple(m(x, y) for m, x, y in zip(muls, a, b))

    identity = tuple(g.identity for g in groups)
    prod = FiniteGroup(elements, mul, identity, name="x".join(g.name for g in groups))

    # attach product classes
    index_of = prod._index
    component_classes = [g.conjugacy_classes() for g in groups]
    component_elements = [g.elements for g in groups]
    raw = []
    for combo in itertools.product(*(range(len(cc)) for cc in component_classes)):
        members = []
        for pick in itertools.product(
            *(component_classes[k][ci] for k, ci in enumerate(combo))
        ):
            elem = tuple(component_elements[k][int(i)] for k, i in enumerate(pick))
            members.append(index_of[elem])
        raw.append(sorted(members))
    ident = [c for c in raw if 0 in c]
    rest = [c for c in raw if 0 not in c]
    rest.sort(key=lambda c: (len(c), c[0]))
    classes = [np.array(c, dtype=np.int64) for c in ident + rest]
    class_of = np.empty(prod.order, dtype=np.int64)
    for ci, members in enumerate(classes):
        class_of[members] = ci
    prod._classes = classes
    prod._class_of = class_of
    return prod


# ---------------------------------------------------------------------------
# the pair-preserving permutation groups W_2g


def weyl_group(g: int) -> tuple[FiniteGroup, GroupHom]:
    """Subgroup of S_2g preserving the pairing {{0,1},{2,3},...}, with the
    induced quotient map onto S_g. Order 2^g g!."""
    if not 1 <= g <= 3:
        raise ValueError("g must be 1, 2, or 3")
    n = 2 * g
    sg = symmetric_group(g)
    elements = []
    for p in itertools.permutations(range(n)):
        ok = True
        for k in range(g):
            a, b = p[2 * k], p[2 * k + 1]
            if a // 2 != b // 2 or a == b:
                ok = False
                break
        if not ok:
            continue
        elements.append(p)
    assert len(elements) == 2 ** g * len(list(itertools.permutations(range(g))))
    identity = tuple(range(n))
    # generators: the pair swap (0 1) and the images of S_g generators
    gens = [(1, 0) + tuple(range(2, n))] if g >= 1 else []
    if g >= 2:
        block_swap = (2, 3, 0, 1) + tuple(range(4, n))
        gens.append(block_swap)
    if g >= 3:
        block_cycle = (2, 3, 4, 5, 0, 1)
        gens.append(block_cycle)
    W = FiniteGroup(
        elements, _perm_mul, identity, inv_fn=_perm_inv, generators=gens,
        name=f"W{n}",
    )
    images = []
    for p in W.elements:
        induced = tuple(p[2 * k] // 2 for k in range(g))
        images.append(sg.index(induced))
    phi = GroupHom(W, sg, tuple(images))
    if not phi.verify():
        raise AssertionError("pair-quotient map failed verification")
    return W, phi


# ---------------------------------------------------------------------------
# counting formulas for GL2(F_q)


def count_trace(q: int, t: int) -> int:
    """|{A in GL2(F_q) : tr A = t}|."""
    _require_prime(q)
    t %= q
    if t != 0:
        return q * (q * q - q - 1)
    return q * (q - 1) ** 2 * (q + 1) - (q - 1) * q * (q * q - q - 1)


def count_trace_det(q: int, t: int, d: int) -> int:
    """|{A in GL2(F_q) : tr A = t, det A = d}| = q(q + legendre(t^2-4d))."""
    _require_prime(q)
    if q == 2:
        raise ValueError("count_trace_det requires odd q")
    if d % q == 0:
        raise ValueError("determinant must be nonzero")
    return q * (q + legendre(t * t - 4 * d, q))


# ---------------------------------------------------------------------------
# subgroups, quotients, and the structural lemmas


def subgroup_closure(G: FiniteGroup, gen_indices: Iterable[int]) -> tuple[int, ...]:
    """Sorted indices of the subgroup generated by the given elements."""
    seen = {0}
    frontier = [0]
    gen_indices = sorted(set(gen_indices) | {0})
    while frontier:
        nxt = []
        for a in frontier:
            for b in gen_indices:
                c = G.mul(a, b)
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        # extend generator set to current members for true closure
        frontier = nxt
    # the loop above only multiplies by generators on the right, which
    # yields the generated submonoid = subgroup (finite group)
    return tuple(sorted(seen))


def all_subgroups(G: FiniteGroup) -> list[tuple[int, ...]]:
    """Every subgroup, as sorted index tuples. Capped at order 100."""
    if G.order > 100:
        raise ValueError("subgroup lattice enumeration capped at order 100")
    subgroups = {(0,)}
    frontier = {(0,)}
    while frontier:
        nxt = set()
        for H in frontier:
            Hset = set(H)
            for x in range(G.order):
                if x in Hset:
                    continue
                K = subgroup_closure(G, list(H) + [x])
                if K not in subgroups:
                    subgroups.add(K)
                    nxt.add(K)
        frontier = nxt
    return sorted(subgroups, key=lambda t: (len(t), t))


def is_normal_subgroup(G: FiniteGroup, H: Iterable[int]) -> bool:
    Hset = set(H)
    if 0 not in Hset:
        return False
    conjugators = (
        [G.index(g) for g in G.generators] if G.generators is not None
        else range(G.order)
    )
    for g in conjugators:
        gi = G.inv(g)
        for h in Hset:
            if G.mul(g, G.mul(h, gi)) not in Hset:
                return False
    return True


def quotient_group(
    G: FiniteGroup, N: Iterable[int], n_generators: Optional[Iterable[int]] = None
) -> tuple[FiniteGroup, np.ndarray]:
    """G/N for normal N; returns the quotient and the coset id per element.

    Cosets are left-multiplication orbits of N, found by BFS; pass
    n_generators (indices generating N) to keep the cost at
    O(|G| * #generators) for large N.
    """
    N = sorted(set(N))
    if not is_normal_subgroup(G, N):
        raise ValueError("N is not normal in G")
    multipliers = sorted(set(n_generators)) if n_generators is not None else N
    if not set(multipliers) <= set(N):
        raise ValueError("n_generators must lie inside N")
    coset_id = np.full(G.order, -1, dtype=np.int64)
    reps = []
    for start in range(G.order):
        if coset_id[start] >= 0:
            continue
        cid = len(reps)
        reps.append(start)
        stack = [start]
        coset_id[start] = cid
        while stack:
            a = stack.pop()
            for h in multipliers:
                b = G.mul(h, a)
                if coset_id[b] < 0:
                    coset_id[b] = cid
                    stack.append(b)
    if G.order != len(reps) * len(N):
        raise ValueError("coset multipliers do not generate N")
    reps_arr = list(reps)

    def mul(ci, cj):
        return int(coset_id[G.mul(reps_arr[ci], reps_arr[cj])])

    Q = FiniteGroup(
        range(len(reps)),
        mul,
        0,
        name=f"{G.name}/N{len(N)}",
    )
    return Q, coset_id


def _subgroup_as_group(
    G: FiniteGroup, H: Sequence[int], generators: Optional[Sequence[int]] = None
) -> FiniteGroup:
    elements = [G.elements[i] for i in sorted(H)]
    gens = [G.elements[i] for i in generators] if generators is not None else None
    return FiniteGroup(
        elements, G._mul_fn, G.identity, inv_fn=G._inv_fn,
        generators=gens, matrix_shape=G._matrix_shape,
        name=f"{G.name}-sub{len(elements)}",
    )


def gallagher_check(
    G: FiniteGroup, N: Iterable[int], n_generators: Optional[Sequence[int]] = None
) -> bool:
    """Class-count inequality |G^#| <= |(G/N)^#| * |N^#| for normal N."""
    N = sorted(set(N))
    Q, _ = quotient_group(G, N, n_generators)  # raises if not normal
    lhs = len(G.conjugacy_classes())
    sub = _subgroup_as_group(G, N, n_generators)
    rhs = len(Q.conjugacy_classes()) * len(sub.conjugacy_classes())
    return lhs <= rhs


def jordan_missed_class(
    G: FiniteGroup, h_generators: Iterable[int]
) -> Optional[int]:
    """Index of a conjugacy class of G disjoint from the subgroup generated
    by h_generators; None when the subgroup meets every class (in
    particular when it is all of G)."""
    Hset = set(subgroup_closure(G, h_generators))
    for ci, members in enumerate(G.conjugacy_classes()):
        if not any(int(m) in Hset for m in members):
            return ci
    return None


def _is_transposition(p: tuple) -> bool:
    moved = [i for i, v in enumerate(p) if v != i]
    return len(moved) == 2 and p[moved[0]] == moved[1]


def w_group_criterion(g: int, H_generators: Sequence[tuple]) -> bool:
    """For H <= W_2g: true iff H contains a transposition and maps onto S_g.

    When true the subgroup is verified to be all of W_2g; a violation would
    be an implementation bug and raises.
    """
    W, phi = weyl_group(g)
    gen_idx = [W.index(tuple(p)) for p in H_generators]
    H = subgroup_closure(W, gen_idx)
    has_transposition = any(_is_transposition(W.elements[i]) for i in H)
    image = {phi(i) for i in H}
    surjective = len(image) == phi.target.order
    result = has_transposition and surjective
    if result and len(H) != W.order:
        raise AssertionError(
            "criterion satisfied by a proper subgroup; group lemma violated"
        )
    return result
