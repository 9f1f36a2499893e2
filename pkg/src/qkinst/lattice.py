"""Integer symplectic lattices, BPS structures and Darboux completion.

Charges are stored as tuples of Python ints in the global frame order
``(x-block, y-block)``, i.e. the coefficients ``(n^0..n^n, n_0..n_n)`` of
``gamma = n^i gamma~_i + n_i gamma^i`` with ``gamma~_i = d/dx^i`` and
``gamma^i = d/dy_i``. The convention is ``<gamma~_i, gamma^j> = delta_i^j``.

All arithmetic here is exact (arbitrary-precision ints); nothing in this
module touches floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Sequence

__all__ = [
    "LatticeError",
    "ChargeLattice",
    "BpsStructure",
    "standard_pairing",
    "pairing_eval",
    "validate_mutual_locality",
    "complete_darboux_basis",
    "integer_kernel",
    "saturate",
    "int_rank",
    "ext_gcd",
    "charge_gcds",
    "darboux_coordinates",
    "gram",
]


class LatticeError(ValueError):
    """Raised for malformed lattices, charges or impossible completions."""


Vector = tuple[int, ...]


def standard_pairing(m: int) -> tuple[Vector, ...]:
    """Standard form ``[[0, I], [-I, 0]]`` of rank ``2m``."""
    rows = []
    for a in range(2 * m):
        row = [0] * (2 * m)
        if a < m:
            row[a + m] = 1
        else:
            row[a - m] = -1
        rows.append(tuple(row))
    return tuple(rows)


def _as_int_vector(v: Iterable, length: int | None = None, what: str = "charge") -> Vector:
    out = []
    for c in v:
        if isinstance(c, bool) or int(c) != c:
            raise LatticeError(f"{what} has non-integer entry {c!r}")
        out.append(int(c))
    if length is not None and len(out) != length:
        raise LatticeError(f"{what} has length {len(out)}, expected {length}")
    return tuple(out)


def _det(mat: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [list(r) for r in mat]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True)
class ChargeLattice:
    """Rank-``2m`` lattice with an integral, unimodular skew pairing.

    ``pairing[a][b] = <e_a, e_b>`` in the stored frame. The default is the
    standard Darboux form; any unimodular antisymmetric integer matrix is
    accepted (e.g. the standard form in a rotated integral basis).
    """

    rank: int
    pairing: tuple[Vector, ...] = field(default=None)  # type: ignore[assignment]
    frame_labels: tuple[str, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.rank <= 0 or self.rank % 2:
            raise LatticeError(f"rank must be a positive even integer, got {self.rank}")
        m = self.rank // 2
        if self.pairing is None:
            object.__setattr__(self, "pairing", standard_pairing(m))
        else:
            rows = tuple(_as_int_vector(r, self.rank, "pairing row") for r in self.pairing)
            if len(rows) != self.rank:
                raise LatticeError("pairing must be a square matrix of size rank")
            object.__setattr__(self, "pairing", rows)
        P = self.pairing
        for a in range(self.rank):
            for b in range(self.rank):
                if P[a][b] != -P[b][a]:
                    raise LatticeError("pairing is not antisymmetric")
        if abs(_det(P)) != 1:
            raise LatticeError("pairing is not unimodular; no Darboux basis exists")
        if self.frame_labels is None:
            labels = tuple(f"gt_{i}" for i in range(m)) + tuple(f"g^{i}" for i in range(m))
            object.__setattr__(self, "frame_labels", labels)

    @property
    def m(self) -> int:
        return self.rank // 2

    @classmethod
    def standard(cls, m: int) -> "ChargeLattice":
        return cls(2 * m)

    def vector(self, coeffs: Iterable) -> Vector:
        return _as_int_vector(coeffs, self.rank)

    def is_standard(self) -> bool:
        return self.pairing == standard_pairing(self.m)


def pairing_eval(lattice: ChargeLattice, a: Iterable, b: Iterable) -> int:
    """Return ``a^T P b``."""
    va = lattice.vector(a)
    vb = lattice.vector(b)
    P = lattice.pairing
    return sum(va[i] * P[i][j] * vb[j] for i in range(lattice.rank) for j in range(lattice.rank)
               if va[i] and vb[j])


@dataclass(frozen=True, init=False)
class BpsStructure:
    """Finitely supported BPS indices ``Omega(gamma)``.

    Entries are symmetrized on construction: giving only ``gamma`` also
    stores ``-gamma`` with the same index. Conflicting indices for ``gamma``
    and ``-gamma`` raise. Zero indices are dropped.
    """

    entries: tuple[tuple[Vector, int], ...] = ()
    symmetrized: bool = True

    def __init__(self, entries: Iterable = (), rank: int | None = None):
        table: dict[Vector, int] = {}
        for charge, omega in entries:
            v = _as_int_vector(charge, rank)
            if rank is None:
                rank = len(v)
            if isinstance(omega, bool) or int(omega) != omega:
                raise LatticeError(f"BPS index for {v} is not an integer: {omega!r}")
            omega = int(omega)
            if not any(v):
                raise LatticeError("the zero charge cannot carry a BPS index")
            for w in (v, tuple(-c for c in v)):
                if w in table and table[w] != omega:
                    raise LatticeError(f"conflicting BPS indices for {w}: {table[w]} vs {omega}")
                table[w] = omega
        items = tuple(sorted((k, w) for k, w in table.items() if w != 0))
        object.__setattr__(self, "entries", items)
        object.__setattr__(self, "symmetrized", True)

    @property
    def support(self) -> tuple[Vector, ...]:
        return tuple(k for k, _ in self.entries)

    def omega(self, charge: Iterable) -> int:
        key = tuple(int(c) for c in charge)
        return dict(self.entries).get(key, 0)

    def __len__(self):
        return len(self.entries)

    def __bool__(self):
        return bool(self.entries)

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def half_support(self) -> tuple[tuple[Vector, int], ...]:
        """One representative of each ``±gamma`` pair (lexicographically larger)."""
        return tuple((k, w) for k, w in self.entries if k > tuple(-c for c in k))


def validate_mutual_locality(lattice: ChargeLattice, bps: BpsStructure) -> bool:
    """True iff all support charges pair to zero and ``Omega(g) = Omega(-g)``."""
    table = dict(bps.entries)
    for k, w in table.items():
        if len(k) != lattice.rank:
            return False
        if table.get(tuple(-c for c in k), None) != w:
            return False
    supp = list(table)
    for i, a in enumerate(supp):
        for b in supp[i + 1:]:
            if pairing_eval(lattice, a, b) != 0:
                return False
    return True


def charge_gcds(bps: BpsStructure, m: int) -> list[int | None]:
    """``d_i = gcd`` of the ``gamma^i`` components over the support (None if all zero)."""
    out: list[int | None] = []
    for i in range(m):
        g = 0
        for k in bps.support:
            g = gcd(g, k[m + i])
        out.append(g or None)
    return out


# ---------------------------------------------------------------------------
# exact integer linear algebra

def ext_gcd(values: Sequence[int]) -> tuple[int, list[int]]:
    """Return ``(g, x)`` with ``sum(x_k * values_k) = g = gcd(values) >= 0``."""
    g, coeffs = 0, [0] * len(values)
    for k, v in enumerate(values):
        if v == 0:
            continue
        # pairwise Bezout: g' = s*g + t*v
        a, b = g, v
        s0, s1, t0, t1 = 1, 0, 0, 1
        while b:
            q = a // b
            a, b = b, a - q * b
            s0, s1 = s1, s0 - q * s1
            t0, t1 = t1, t0 - q * t1
        if a < 0:
            a, s0, t0 = -a, -s0, -t0
        coeffs = [s0 * c for c in coeffs]
        coeffs[k] = t0
        g = a
    return g, coeffs


def _column_echelon(rows: Sequence[Sequence[int]], ncols: int):
    """Unimodular column reduction ``A U = H``.

    Returns ``(H_columns, U_columns, rank)``; the first ``rank`` columns of
    ``H`` are nonzero, the remaining ones vanish, and the matching columns
    of ``U`` form a Z-basis of the integer kernel of ``A``.
    """
    A = [list(r) for r in rows]
    nrows = len(A)
    # work with columns
    H = [[A[r][c] for r in range(nrows)] for c in range(ncols)]
    U = [[1 if i == c else 0 for i in range(ncols)] for c in range(ncols)]
    pivot_col = 0
    for r in range(nrows):
        if pivot_col >= ncols:
            break
        while True:
            nz = [c for c in range(pivot_col, ncols) if H[c][r] != 0]
            if not nz:
                break
            c_min = min(nz, key=lambda c: abs(H[c][r]))
            H[pivot_col], H[c_min] = H[c_min], H[pivot_col]
            U[pivot_col], U[c_min] = U[c_min], U[pivot_col]
            piv = H[pivot_col][r]
            done = True
            for c in range(pivot_col + 1, ncols):
                q = H[c][r] // piv
                if q:
                    H[c] = [x - q * y for x, y in zip(H[c], H[pivot_col])]
                    U[c] = [x - q * y for x, y in zip(U[c], U[pivot_col])]
                if H[c][r] != 0:
                    done = False
            if done:
                pivot_col += 1
                break
    return H, U, pivot_col


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int) -> list[Vector]:
    """Z-basis of ``{v in Z^ncols : A v = 0}``."""
    if not rows:
        return [tuple(1 if i == c else 0 for i in range(ncols)) for c in range(ncols)]
    _, U, rank = _column_echelon(rows, ncols)
    return [tuple(U[c]) for c in range(rank, ncols)]


def int_rank(vectors: Sequence[Sequence[int]]) -> int:
    if not vectors:
        return 0
    _, _, rank = _column_echelon(vectors, len(vectors[0]))
    return rank


def saturate(vectors: Sequence[Sequence[int]], dim: int) -> list[Vector]:
    """Z-basis of the primitive closure ``(span_Q vectors) ∩ Z^dim``."""
    vecs = [tuple(v) for v in vectors if any(v)]
    if not vecs:
        return []
    annihilator = integer_kernel(vecs, dim)
    return integer_kernel(annihilator, dim)


def _matvec(P, v):
    return tuple(sum(P[i][j] * v[j] for j in range(len(v))) for i in range(len(P)))


def _pair(P, a, b):
    return sum(a[i] * x for i, x in enumerate(_matvec(P, b)))


def _combo(coeffs_and_vectors, dim):
    out = [0] * dim
    for c, v in coeffs_and_vectors:
        if c:
            for k in range(dim):
                out[k] += c * v[k]
    return tuple(out)


def _bezout_partner(P, gamma, dim) -> Vector:
    """Integer ``t`` with ``<t, gamma> = 1`` (requires ``gamma`` primitive)."""
    row = _matvec(P, gamma)  # <t, gamma> = t . (P gamma)
    g, x = ext_gcd(row)
    if g != 1:
        raise LatticeError(f"vector {gamma} is not primitive for the pairing (gcd {g})")
    return tuple(x)


def complete_darboux_basis(lattice: ChargeLattice, support: Iterable[Iterable[int]]):
    """Darboux basis ``(gt_1..gt_m, g^1..g^m)`` with ``support ⊂ span_Z{g^i}``.

    Follows the constructive argument: saturate ``span(S)`` to a primitive
    isotropic sublattice, enlarge it to a maximal isotropic ``L`` of rank
    ``m``, then build the symplectic partners one at a time using Bezout
    and symplectic Gram-Schmidt corrections. Returns a list of ``2m``
    integer vectors (tildes first).
    """
    dim, m = lattice.rank, lattice.m
    P = lattice.pairing
    S = [lattice.vector(s) for s in support]
    for i, a in enumerate(S):
        for b in S[i:]:
            if _pair(P, a, b) != 0:
                raise LatticeError(f"support is not isotropic: <{a}, {b}> != 0")

    L = saturate(S, dim)
    while len(L) < m:
        perp = integer_kernel([_matvec(P, l) for l in L] if L else [], dim)
        for v in perp:
            if int_rank(L + [v]) > len(L):
                L = saturate(L + [v], dim)
                break
        else:  # pragma: no cover - impossible for unimodular pairings
            raise LatticeError("could not enlarge isotropic sublattice")

    gammas: list[Vector] = []
    tildes: list[Vector] = []
    for alpha in L:
        # g^{r+1} = a^{r+1} + sum_i <a^{r+1}, gt_i> g^i
        g_new = _combo([(1, alpha)] + [(_pair(P, alpha, t), g) for t, g in zip(tildes, gammas)], dim)
        a_t = _bezout_partner(P, g_new, dim)
        t_new = _combo(
            [(1, a_t)]
            + [(-_pair(P, a_t, g), t) for t, g in zip(tildes, gammas)]
            + [(_pair(P, a_t, t), g) for t, g in zip(tildes, gammas)],
            dim,
        )
        gammas.append(g_new)
        tildes.append(t_new)
    return tildes + gammas


def darboux_coordinates(lattice: ChargeLattice, basis: Sequence[Vector], v: Iterable[int]) -> Vector:
    """Exact coordinates of ``v`` in a Darboux basis.

    Uses ``B^{-1} = -J B^T P`` (valid whenever ``B^T P B = J``); the result is
    verified by reassembly.
    """
    P = lattice.pairing
    m = lattice.m
    vec = lattice.vector(v)
    # coefficient on gt_i is <v, g^i>; on g^i it is -<v, gt_i>  (from <gt_i, g^j> = delta)
    tildes, gammas = basis[:m], basis[m:]
    coeffs = tuple(_pair(P, vec, g) for g in gammas) + tuple(-_pair(P, vec, t) for t in tildes)
    if _combo(list(zip(coeffs, basis)), lattice.rank) != vec:
        raise LatticeError("basis is not a Darboux basis of the lattice")
    return coeffs


def gram(lattice: ChargeLattice, basis: Sequence[Vector]) -> list[list[int]]:
    P = lattice.pairing
    return [[_pair(P, a, b) for b in basis] for a in basis]
