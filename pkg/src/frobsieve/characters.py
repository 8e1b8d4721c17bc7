"""Class functions and irreducible character tables.

Two independent table constructions: a generic class-algebra
diagonalization that works for any small group, and the explicit four-family
table of GL2(F_q). They are cross-validated in tests. Character values are
complex doubles; degrees are exact integers.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .arith_core import legendre
from .group_core import FiniteGroup, direct_product, gl2

__all__ = [
    "ClassFunction",
    "CharacterTable",
    "inner_product",
    "char_table_generic",
    "char_table_gl2",
    "product_irreducibles",
    "primitive_characters",
    "trivial_character",
    "character_table_csv",
    "orthogonality_residuals",
]

ORTHOGONALITY_TOL = 1e-8


@dataclass(frozen=True)
class ClassFunction:
    group: FiniteGroup
    values: tuple[complex, ...]

    def __post_init__(self):
        if len(self.values) != len(self.group.conjugacy_classes()):
            raise ValueError("one value per conjugacy class required")

    def __call__(self, class_index: int) -> complex:
        return self.values[class_index]


@dataclass(frozen=True)
class CharacterTable:
    group: FiniteGroup
    rows: tuple[ClassFunction, ...]
    degrees: tuple[int, ...]

    def __post_init__(self):
        r = len(self.group.conjugacy_classes())
        if len(self.rows) != r or len(self.degrees) != r:
            raise ValueError("table must be square: one row per class")
        if sum(d * d for d in self.degrees) != self.group.order:
            raise ValueError("degree squares must sum to the group order")


def inner_product(f: ClassFunction, g: ClassFunction) -> complex:
    """|G|^-1 sum over classes of |C| f(C) conj(g(C))."""
    if f.group is not g.group:
        raise ValueError("class functions live on different groups")
    sizes = f.group.class_sizes()
    total = sum(
        int(s) * v * w.conjugate() for s, v, w in zip(sizes, f.values, g.values)
    )
    return total / f.group.order


def trivial_character(G: FiniteGroup) -> ClassFunction:
    return ClassFunction(G, (1 + 0j,) * len(G.conjugacy_classes()))


def orthogonality_residuals(table: CharacterTable) -> tuple[float, float]:
    """(row residual, column residual): max deviation from the two
    orthogonality relations."""
    G = table.group
    sizes = np.array(G.class_sizes(), dtype=np.float64)
    V = np.array([cf.values for cf in table.rows], dtype=np.complex128)
    gram = (V * sizes) @ V.conj().T / G.order
    row_res = float(np.max(np.abs(gram - np.eye(len(V)))))
    col = V.conj().T @ V  # col[k,l] = sum_chi conj(chi(Ck)) chi(Cl)
    target = np.diag(G.order / sizes)
    col_res = float(np.max(np.abs(col - target)))
    return row_res, col_res


# ---------------------------------------------------------------------------
# generic construction: diagonalize the class-sum algebra


def char_table_generic(G: FiniteGroup, max_attempts: int = 10) -> CharacterTable:
    """Character table by simultaneous diagonalization of the class-sum
    matrices, split with a seeded random linear combination and retried on
    a degenerate draw.
    """
    classes = G.conjugacy_classes()
    r = len(classes)
    if r > 60:
        raise ValueError(f"generic table capped at 60 classes, group has {r}")
    n = G.order
    class_of = G.class_of()
    sizes = np.array([len(c) for c in classes], dtype=np.float64)
    reps = [int(c[0]) for c in classes]
    inv_table = [G.inv(i) for i in range(n)]

    # structure constants a[j,k,l] = #{(x,y) in C_j x C_k : xy = z_l}
    a = np.zeros((r, r, r), dtype=np.float64)
    for l, zl in enumerate(reps):
        for x in range(n):
            j = class_of[x]
            y = G.mul(inv_table[x], zl)
            a[j, class_of[y], l] += 1.0

    last_err: Optional[Exception] = None
    for attempt in range(max_attempts):
        rng = np.random.default_rng(attempt)
        t = rng.standard_normal(r)
        M = np.tensordot(t, a, axes=(0, 0))  # sum_j t_j a[j,:,:]
        try:
            _, vecs = np.linalg.eig(M)
            rows = []
            degrees = []
            for col in range(r):
                w = vecs[:, col]
                if abs(w[0]) < 1e-12:
                    raise ArithmeticError("degenerate eigenvector")
                w = w / w[0]
                deg_sq = n / float(np.sum(np.abs(w) ** 2 / sizes))
                deg = float(np.sqrt(deg_sq))
                if abs(deg - round(deg)) > 1e-6:
                    raise ArithmeticError("non-integral degree")
                deg = int(round(deg))
                values = tuple(complex(v) for v in w * deg / sizes)
                rows.append(values)
                degrees.append(deg)
            order = sorted(
                range(r),
                key=lambda i: (
                    degrees[i],
                    tuple(
                        (round(v.real, 8), round(v.imag, 8)) for v in rows[i]
                    ),
                ),
            )
            table = CharacterTable(
                G,
                tuple(ClassFunction(G, rows[i]) for i in order),
                tuple(degrees[i] for i in order),
            )
            row_res, col_res = orthogonality_residuals(table)
            if max(row_res, col_res) > ORTHOGONALITY_TOL:
                raise ArithmeticError(
                    f"orthogonality residual {max(row_res, col_res):.2e}"
                )
            return table
        except (ArithmeticError, ValueError) as exc:
            last_err = exc
    raise RuntimeError(
        f"class-algebra diagonalization failed after {max_attempts} draws: {last_err}"
    )


# ---------------------------------------------------------------------------
# explicit GL2(F_q) table


def _zeta(num: int, den: int) -> complex:
    return cmath.exp(2j * cmath.pi * (num % den) / den)


def _smallest_primitive_root(q: int) -> int:
    for g in range(2, q):
        x, seen = 1, set()
        for _ in range(q - 1):
            x = x * g % q
            seen.add(x)
        if len(seen) == q - 1:
            return g
    raise ValueError("no primitive root")


class _QuadraticField:
    """F_{q^2} modeled as a + b*sqrt(eps) with eps the smallest non-residue.

    The multiplicative generator is the lexicographically smallest (a, b)
    of full order, so tables are reproducible.
    """

    def __init__(self, q: int):
        self.q = q
        self.eps = next(e for e in range(2, q) if legendre(e, q) == -1)
        self.gen = self._find_generator()
        self.dlog = {}
        x = (1, 0)
        for m in range(q * q - 1):
            self.dlog[x] = m
            x = self.mul(x, self.gen)

    def mul(self, u, v):
        a, b = u
        c, d = v
        q, eps = self.q, self.eps
        return ((a * c + b * d * eps) % q, (a * d + b * c) % q)

    def _find_generator(self):
        full = self.q * self.q - 1
        for a in range(self.q):
            for b in range(self.q):
                if a == 0 and b == 0:
                    continue
                x, order = (a, b), 0
                while True:
                    x = self.mul(x, (a, b)) if order else (a, b)
                    order += 1
                    if x == (1, 0):
                        break
                if order == full:
                    return (a, b)
        raise ValueError("no generator found")

    def frobenius(self, u):
        a, b = u
        return (a, (-b) % self.q)


def _classify_gl2_class(rep: tuple, q: int):
    """('central', x) | ('nonss', x) | ('split', (x, y)) | ('nonsplit', z)."""
    a, b, c, d = rep
    t = (a + d) % q
    det = (a * d - b * c) % q
    disc = (t * t - 4 * det) % q
    inv2 = pow(2, -1, q)
    if b == 0 and c == 0 and a == d:
        return ("central", a)
    if disc == 0:
        return ("nonss", t * inv2 % q)
    if legendre(disc, q) == 1:
        s = next(s for s in range(1, q) if s * s % q == disc)
        return ("split", tuple(sorted(((t + s) * inv2 % q, (t - s) * inv2 % q))))
    return ("nonsplit", (t, disc))  # z = (t + sqrt(disc))/2 resolved later


def char_table_gl2(q: int) -> CharacterTable:
    """The classical table of GL2(F_q): q-1 linear characters, q-1 twists
    of degree q, (q-1)(q-2)/2 principal-series of degree q+1, and
    q(q-1)/2 of degree q-1 parameterized by norm-nontrivial characters of
    the quadratic extension."""
    if q == 2 or q > 13:
        raise ValueError("explicit table needs an odd prime q <= 13")
    G = gl2(q)
    classes = G.conjugacy_classes()
    K = _QuadraticField(q)
    g = _smallest_primitive_root(q)
    dlog_q = {}
    x = 1
    for m in range(q - 1):
        dlog_q[x] = m
        x = x * g % q
    inv2 = pow(2, -1, q)

    # resolve class parameters; nonsplit classes get z in F_{q^2}
    kinds = []
    for cls in classes:
        kind, param = _classify_gl2_class(G.elements[int(cls[0])], q)
        if kind == "nonsplit":
            t, disc = param
            s = next(
                s for s in range(1, q)
                if s * s * K.eps % q == disc
            )
            z = (t * inv2 % q, s * inv2 % q)
            kinds.append((kind, z))
        else:
            kinds.append((kind, param))

    qq1 = q * q - 1

    def alpha(i: int, x: int) -> complex:
        return _zeta(i * dlog_q[x % q], q - 1)

    def phi(m: int, z: tuple) -> complex:
        return _zeta(m * K.dlog[z], qq1)

    def norm(z: tuple) -> int:
        a, b = z
        return (a * a - K.eps * b * b) % q

    rows: list[tuple[complex, ...]] = []
    degrees: list[int] = []

    def add_row(deg: int, fn):
        rows.append(tuple(fn(kind, param) for kind, param in kinds))
        degrees.append(deg)

    for i in range(q - 1):  # linear: alpha o det
        add_row(1, lambda kind, p, i=i: {
            "central": lambda: alpha(i, p * p % q),
            "nonss": lambda: alpha(i, p * p % q),
            "split": lambda: alpha(i, p[0] * p[1] % q),
            "nonsplit": lambda: alpha(i, norm(p)),
        }[kind]())

    for i in range(q - 1):  # degree-q twists
        add_row(q, lambda kind, p, i=i: {
            "central": lambda: q * alpha(i, p * p % q),
            "nonss": lambda: 0j,
            "split": lambda: alpha(i, p[0] * p[1] % q),
            "nonsplit": lambda: -alpha(i, norm(p)),
        }[kind]())

    for i in range(q - 1):  # principal series, unordered pairs i < j
        for j in range(i + 1, q - 1):
            add_row(q + 1, lambda kind, p, i=i, j=j: {
                "central": lambda: (q + 1) * alpha(i, p) * alpha(j, p),
                "nonss": lambda: alpha(i, p) * alpha(j, p),
                "split": lambda: alpha(i, p[0]) * alpha(j, p[1])
                + alpha(i, p[1]) * alpha(j, p[0]),
                "nonsplit": lambda: 0j,
            }[kind]())

    # quadratic-extension characters with phi != phi^q, one per pair {m, mq}
    for m in range(1, qq1):
        if m < m * q % qq1:
            add_row(q - 1, lambda kind, p, m=m: {
                "central": lambda: (q - 1) * phi(m, (p, 0)),
                "nonss": lambda: -phi(m, (p, 0)),
                "split": lambda: 0j,
                "nonsplit": lambda: -(phi(m, p) + phi(m, K.frobenius(p))),
            }[kind]())

    assert len(rows) == q * q - 1
    table = CharacterTable(
        G,
        tuple(ClassFunction(G, r) for r in rows),
        tuple(degrees),
    )
    row_res, col_res = orthogonality_residuals(table)
    if max(row_res, col_res) > ORTHOGONALITY_TOL:
        raise AssertionError(
            f"explicit table fails orthogonality: {max(row_res, col_res):.2e}"
        )
    return table


# ---------------------------------------------------------------------------
# product groups


def product_irreducibles(
    tables: Sequence[CharacterTable],
    product_group: Optional[FiniteGroup] = None,
) -> CharacterTable:
    """External products chi_1 ... chi_k on the direct product group."""
    tables = list(tables)
    if len(tables) == 1 and product_group is None:
        return tables[0]
    groups = [t.group for t in tables]
    P = product_group if product_group is not None else direct_product(groups)
    p_classes = P.conjugacy_classes()
    expected = 1
    for t in tables:
        expected *= len(t.rows)
    if len(p_classes) != expected:
        raise ValueError("product group classes do not match component tables")

    # component class indices of each product-class representative
    comp = []
    for cls in p_classes:
        rep = P.elements[int(cls[0])]
        comp.append(
            tuple(
                int(g.class_of()[g.index(rep[k])]) for k, g in enumerate(groups)
            )
        )

    rows = []
    degrees = []
    import itertools as _it

    for combo in _it.product(*(range(len(t.rows)) for t in tables)):
        values = []
        for c in comp:
            v = 1 + 0j
            for k, ri in enumerate(combo):
                v *= tables[k].rows[ri].values[c[k]]
            values.append(v)
        rows.append(ClassFunction(P, tuple(values)))
        deg = 1
        for k, ri in enumerate(combo):
            deg *= tables[k].degrees[ri]
        degrees.append(deg)
    return CharacterTable(P, tuple(rows), tuple(degrees))


def _nontrivial_rows(table: CharacterTable) -> list[int]:
    out = []
    for i, cf in enumerate(table.rows):
        if table.degrees[i] == 1 and all(abs(v - 1) < 1e-9 for v in cf.values):
            continue
        out.append(i)
    return out


def primitive_characters(
    D: Sequence, tables: dict, product_group: Optional[FiniteGroup] = None
) -> list[ClassFunction]:
    """Products prod_{lam in D} chi_lam with every factor nontrivial, as
    class functions on the product group over D (sorted for determinism).
    D = [] yields exactly the trivial character of the trivial group."""
    D = sorted(D)
    comp_tables = [tables[lam] for lam in D]
    groups = [t.group for t in comp_tables]
    P = product_group if product_group is not None else direct_product(groups)
    if not D:
        return [trivial_character(P)]
    p_classes = P.conjugacy_classes()
    comp = []
    for cls in p_classes:
        rep = P.elements[int(cls[0])]
        comp.append(
            tuple(
                int(g.class_of()[g.index(rep[k])]) for k, g in enumerate(groups)
            )
        )
    import itertools as _it

    picks = [_nontrivial_rows(t) for t in comp_tables]
    out = []
    for combo in _it.product(*picks):
        values = []
        for c in comp:
            v = 1 + 0j
            for k, ri in enumerate(combo):
                v *= comp_tables[k].rows[ri].values[c[k]]
            values.append(v)
        out.append(ClassFunction(P, tuple(values)))
    return out


# ---------------------------------------------------------------------------
# CSV dump (consumed by the CLI)


def _format_complex(z: complex) -> str:
    re, im = z.real, z.imag
    if abs(re - round(re)) < 1e-9:
        re = round(re)
    if abs(im - round(im)) < 1e-9:
        im = round(im)
    if im == 0:
        return f"{re:.10g}"
    sign = "+" if im >= 0 else "-"
    return f"{re:.10g}{sign}{abs(im):.10g}i"


def character_table_csv(table: CharacterTable) -> str:
    """Rows = characters, columns = classes; the header carries class sizes."""
    sizes = table.group.class_sizes()
    header = "character,degree," + ",".join(
        f"C{j}[{int(s)}]" for j, s in enumerate(sizes)
    )
    lines = [header]
    for i, cf in enumerate(table.rows):
        cells = ",".join(_format_complex(v) for v in cf.values)
        lines.append(f"chi{i},{table.degrees[i]},{cells}")
    return "\n".join(lines) + "\n"
