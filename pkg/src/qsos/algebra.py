"""Canonical operator algebra for Pauli strings, Majorana monomials and fermion monomials.

All site, mode and Majorana indices are 0-based.  Monomials are stored as
integer bitmask keys:

* pauli:    ``(x, z)`` with bit ``j`` of ``x``/``z`` marking an X/Z component on
  site ``j``.  The key denotes the Hermitian string of letters, e.g. ``(1, 1)``
  is ``Y_0`` (not ``X_0 Z_0``).
* majorana: ``mask`` with bit ``a`` marking ``gamma_a``; the monomial is the
  product in increasing index order.
* fermion:  ``(u, v)`` denoting ``cdag_{u_1} ... cdag_{u_k} c_{v_1} ... c_{v_l}``
  with both index lists increasing (normal ordered).

The Majorana/fermion dictionary is ``gamma_{2a} = c_a + cdag_a`` and
``gamma_{2a+1} = -i (c_a - cdag_a)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

PAULI = "pauli"
MAJORANA = "majorana"
FERMION = "fermion"
KINDS = (PAULI, MAJORANA, FERMION)

ZERO_TOL = 1e-14
_IPOW = (1, 1j, -1, -1j)


class AlgebraError(ValueError):
    """Raised for mismatched algebras or malformed monomials."""


def popcount(x: int) -> int:
    return bin(x).count("1")


def bits(x: int) -> list[int]:
    """Indices of set bits, increasing."""
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


# ---------------------------------------------------------------------------
# key-level products


def pauli_key_mul(k1: tuple[int, int], k2: tuple[int, int]) -> tuple[complex, tuple[int, int]]:
    """Product of two Pauli strings: returns (phase, key)."""
    x1, z1 = k1
    x2, z2 = k2
    x, z = x1 ^ x2, z1 ^ z2
    # letter string = i^{|x&z|} X^x Z^z; Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1
    e = popcount(x1 & z1) + popcount(x2 & z2) + 2 * popcount(z1 & x2) - popcount(x & z)
    return _IPOW[e % 4], (x, z)


def majorana_key_mul(a: int, b: int) -> tuple[int, int]:
    """Product of two Majorana monomials: returns (sign, mask)."""
    swaps = 0
    bb = b
    while bb:
        low = bb & -bb
        j = low.bit_length() - 1
        swaps += popcount(a >> (j + 1))
        bb ^= low
    return (-1 if swaps & 1 else 1), a ^ b


def _sort_sign(idx: list[int]) -> tuple[int, list[int]] | None:
    """Sign of the permutation sorting idx; None if an index repeats."""
    if len(set(idx)) != len(idx):
        return None
    inv = 0
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                inv += 1
    return (-1 if inv & 1 else 1), sorted(idx)


@functools.lru_cache(maxsize=200_000)
def _normal_order_word(word: tuple[tuple[int, bool], ...]) -> tuple[tuple[tuple[int, int], int], ...]:
    """Normal order a word of (mode, is_creator) letters.

    Returns a tuple of ((u, v), integer coefficient) pairs.
    """
    for i in range(len(word) - 1):
        (j, cj), (k, ck) = word[i], word[i + 1]
        if not cj and ck:
            out: dict[tuple[int, int], int] = {}
            if j == k:
                for key, c in _normal_order_word(word[:i] + word[i + 2 :]):
                    out[key] = out.get(key, 0) + c
            swapped = word[:i] + ((k, True), (j, False)) + word[i + 2 :]
            for key, c in _normal_order_word(swapped):
                out[key] = out.get(key, 0) - c
            return tuple((k_, c) for k_, c in out.items() if c != 0)
    cre = [m for m, is_c in word if is_c]
    ann = [m for m, is_c in word if not is_c]
    sc = _sort_sign(cre)
    sa = _sort_sign(ann)
    if sc is None or sa is None:
        return ()
    return (((mask_of(sc[1]), mask_of(sa[1])), sc[0] * sa[0]),)


def fermion_word_of_key(key: tuple[int, int]) -> tuple[tuple[int, bool], ...]:
    u, v = key
    return tuple((m, True) for m in bits(u)) + tuple((m, False) for m in bits(v))


def fermion_key_mul(k1: tuple[int, int], k2: tuple[int, int]) -> tuple[tuple[tuple[int, int], int], ...]:
    if k1 == (0, 0):
        return ((k2, 1),)
    if k2 == (0, 0):
        return ((k1, 1),)
    return _normal_order_word(fermion_word_of_key(k1) + fermion_word_of_key(k2))


def key_adjoint(kind: str, key) -> tuple[int, object]:
    """Return (sign, key') with monomial(key)^dagger = sign * monomial(key')."""
    if kind == PAULI:
        return 1, key
    if kind == MAJORANA:
        d = popcount(key)
        return (-1 if (d * (d - 1) // 2) & 1 else 1), key
    u, v = key
    k, l = popcount(u), popcount(v)
    s = (k * (k - 1) // 2 + l * (l - 1) // 2) & 1
    return (-1 if s else 1), (v, u)


def key_degree(kind: str, key) -> int:
    if kind == PAULI:
        return popcount(key[0] | key[1])
    if kind == MAJORANA:
        return popcount(key)
    return popcount(key[0]) + popcount(key[1])


def key_parity(kind: str, key) -> int:
    """Fermion parity (0 even, 1 odd) of a monomial; Pauli keys are even."""
    if kind == PAULI:
        return 0
    return key_degree(kind, key) & 1


def identity_key(kind: str):
    return 0 if kind == MAJORANA else (0, 0)


# ---------------------------------------------------------------------------
# typed monomial views


@dataclass(frozen=True)
class PauliString:
    phase: complex
    letters: Mapping[int, str]

    def __post_init__(self):
        if self.phase not in _IPOW:
            raise AlgebraError(f"phase must be a power of i, got {self.phase}")
        if any(l not in "XYZ" for l in self.letters.values()):
            raise AlgebraError("letters must be X, Y or Z")

    @property
    def weight(self) -> int:
        return len(self.letters)

    def key(self) -> tuple[int, int]:
        x = z = 0
        for site, l in self.letters.items():
            if l in "XY":
                x |= 1 << site
            if l in "YZ":
                z |= 1 << site
        return x, z

    @classmethod
    def from_key(cls, key: tuple[int, int], phase: complex = 1) -> "PauliString":
        x, z = key
        letters = {}
        for s in bits(x | z):
            letters[s] = {(1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[((x >> s) & 1, (z >> s) & 1)]
        return cls(phase, letters)


@dataclass(frozen=True)
class MajoranaMonomial:
    sign: int
    indices: tuple[int, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise AlgebraError("Majorana indices must be strictly increasing")

    def key(self) -> int:
        return mask_of(self.indices)

    @classmethod
    def from_key(cls, key: int, sign: int = 1) -> "MajoranaMonomial":
        return cls(sign, tuple(bits(key)))


@dataclass(frozen=True)
class FermionMonomial:
    sign: int
    creators: tuple[int, ...]
    annihilators: tuple[int, ...]

    def __post_init__(self):
        for idx in (self.creators, self.annihilators):
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise AlgebraError("fermion indices must be strictly increasing")

    def key(self) -> tuple[int, int]:
        return mask_of(self.creators), mask_of(self.annihilators)

    @classmethod
    def from_key(cls, key: tuple[int, int], sign: int = 1) -> "FermionMonomial":
        return cls(sign, tuple(bits(key[0])), tuple(bits(key[1])))


# ---------------------------------------------------------------------------
# polynomials


def _clean(c: complex) -> complex:
    return complex(c)


@dataclass
class OperatorPolynomial:
    """Complex linear combination of canonical monomials of one algebra."""

    kind: str
    n: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AlgebraError(f"unknown algebra {self.kind!r}")
        if self.n < 0:
            raise AlgebraError("system size must be non-negative")
        self.terms = {k: complex(c) for k, c in self.terms.items() if abs(c) > ZERO_TOL}

    # constructors ----------------------------------------------------------
    @classmethod
    def zero(cls, kind: str, n: int) -> "OperatorPolynomial":
        return cls(kind, n, {})

    @classmethod
    def identity(cls, kind: str, n: int, coeff: complex = 1.0) -> "OperatorPolynomial":
        return cls(kind, n, {identity_key(kind): coeff})

    @classmethod
    def monomial(cls, kind: str, n: int, key, coeff: complex = 1.0) -> "OperatorPolynomial":
        return cls(kind, n, {key: coeff})

    # bookkeeping -----------------------------------------------------------
    def copy(self) -> "OperatorPolynomial":
        return OperatorPolynomial(self.kind, self.n, dict(self.terms))

    def __iter__(self) -> Iterator:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def coeff(self, key) -> complex:
        return self.terms.get(key, 0.0)

    def constant(self) -> complex:
        return self.terms.get(identity_key(self.kind), 0.0)

    def degree(self) -> int:
        return max((key_degree(self.kind, k) for k in self.terms), default=0)

    def norm1(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def is_even(self) -> bool:
        return all(key_parity(self.kind, k) == 0 for k in self.terms)

    def _check(self, other: "OperatorPolynomial") -> None:
        if self.kind != other.kind or self.n != other.n:
            raise AlgebraError(
                f"algebra mismatch: {self.kind}/{self.n} vs {other.kind}/{other.n}"
            )

    # arithmetic ------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, OperatorPolynomial):
            other = OperatorPolynomial.identity(self.kind, self.n, other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return OperatorPolynomial(self.kind, self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return OperatorPolynomial(self.kind, self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s: complex) -> "OperatorPolynomial":
        return OperatorPolynomial(self.kind, self.n, {k: s * c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, OperatorPolynomial):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, s):
        return self.scale(1.0 / s)

    def __pow__(self, k: int):
        out = OperatorPolynomial.identity(self.kind, self.n)
        for _ in range(k):
            out = out * self
        return out

    def adjoint(self) -> "OperatorPolynomial":
        return adjoint(self)

    @property
    def dag(self) -> "OperatorPolynomial":
        return adjoint(self)

    def hermiticity_error(self) -> float:
        return (self - adjoint(self)).norm1()

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_error() <= tol * max(1.0, self.norm1())

    def allclose(self, other: "OperatorPolynomial", tol: float = 1e-10) -> bool:
        return (self - other).norm1() <= tol

    def __repr__(self) -> str:
        if not self.terms:
            return f"OperatorPolynomial({self.kind}, n={self.n}, 0)"
        parts = [f"({c:.6g})*{format_key(self.kind, k)}" for k, c in sorted(self.terms.items(), key=lambda kc: _sort_key(self.kind, kc[0]))]
        return f"OperatorPolynomial({self.kind}, n={self.n}, " + " + ".join(parts) + ")"


def _sort_key(kind: str, key):
    if kind == MAJORANA:
        return (popcount(key), bits(key))
    if kind == PAULI:
        return (popcount(key[0] | key[1]), key)
    return (popcount(key[0]) + popcount(key[1]), bits(key[0]), bits(key[1]))


def format_key(kind: str, key) -> str:
    if kind == PAULI:
        ps = PauliString.from_key(key)
        return " ".join(f"{l}{s}" for s, l in sorted(ps.letters.items())) or "I"
    if kind == MAJORANA:
        return " ".join(f"g{a}" for a in bits(key)) or "I"
    u, v = key
    s = [f"c{m}+" for m in bits(u)] + [f"c{m}" for m in bits(v)]
    return " ".join(s) or "I"


def multiply(a: OperatorPolynomial, b: OperatorPolynomial) -> OperatorPolynomial:
    """Canonical-form product a*b."""
    a._check(b)
    out: dict = {}
    kind = a.kind
    for k1, c1 in a.terms.items():
        for k2, c2 in b.terms.items():
            c = c1 * c2
            if kind == PAULI:
                ph, k = pauli_key_mul(k1, k2)
                out[k] = out.get(k, 0.0) + ph * c
            elif kind == MAJORANA:
                s, k = majorana_key_mul(k1, k2)
                out[k] = out.get(k, 0.0) + s * c
            else:
                for k, s in fermion_key_mul(k1, k2):
                    out[k] = out.get(k, 0.0) + s * c
    return OperatorPolynomial(kind, a.n, out)


def adjoint(p: OperatorPolynomial) -> OperatorPolynomial:
    out: dict = {}
    for k, c in p.terms.items():
        s, k2 = key_adjoint(p.kind, k)
        out[k2] = out.get(k2, 0.0) + s * c.conjugate()
    return OperatorPolynomial(p.kind, p.n, out)


def normal_order(p: OperatorPolynomial) -> OperatorPolynomial:
    """Fermion polynomials are kept normal ordered; this re-canonicalizes."""
    if p.kind != FERMION:
        raise AlgebraError("normal_order requires a fermion polynomial")
    out: dict = {}
    for k, c in p.terms.items():
        for k2, s in _normal_order_word(fermion_word_of_key(k)):
            out[k2] = out.get(k2, 0.0) + s * c
    return OperatorPolynomial(FERMION, p.n, out)


# ---------------------------------------------------------------------------
# elementary operators


def pauli(n: int, letters: Mapping[int, str] | str, coeff: complex = 1.0) -> OperatorPolynomial:
    """Pauli string from a {site: letter} map or a string like ``"X0 Z3"``."""
    if isinstance(letters, str):
        parsed = {}
        for tok in letters.split():
            parsed[int(tok[1:])] = tok[0].upper()
        letters = parsed
    for s in letters:
        if not 0 <= s < n:
            raise AlgebraError(f"site {s} outside 0..{n - 1}")
    key = PauliString(1, dict(letters)).key()
    return OperatorPolynomial(PAULI, n, {key: coeff})


def X(n: int, i: int) -> OperatorPolynomial:
    return pauli(n, {i: "X"})


def Y(n: int, i: int) -> OperatorPolynomial:
    return pauli(n, {i: "Y"})


def Z(n: int, i: int) -> OperatorPolynomial:
    return pauli(n, {i: "Z"})


def majorana(n_modes: int, indices: Iterable[int], coeff: complex = 1.0) -> OperatorPolynomial:
    """Product gamma_{i1} gamma_{i2} ... in the given order (n_modes fermion modes)."""
    key = 0
    sign = 1
    for a in indices:
        if not 0 <= a < 2 * n_modes:
            raise AlgebraError(f"Majorana index {a} outside 0..{2 * n_modes - 1}")
        s, key = majorana_key_mul(key, 1 << a)
        sign *= s
    return OperatorPolynomial(MAJORANA, n_modes, {key: sign * coeff})


def fermion_word(n: int, word: Iterable[tuple[int, bool]], coeff: complex = 1.0) -> OperatorPolynomial:
    """Product of ladder operators; each letter is (mode, is_creator)."""
    word = tuple((int(m), bool(c)) for m, c in word)
    for m, _ in word:
        if not 0 <= m < n:
            raise AlgebraError(f"mode {m} outside 0..{n - 1}")
    return OperatorPolynomial(FERMION, n, {k: s * coeff for k, s in _normal_order_word(word)})


def cdag(n: int, i: int) -> OperatorPolynomial:
    return fermion_word(n, [(i, True)])


def c(n: int, i: int) -> OperatorPolynomial:
    return fermion_word(n, [(i, False)])


def number(n: int, i: int) -> OperatorPolynomial:
    return fermion_word(n, [(i, True), (i, False)])


# ---------------------------------------------------------------------------
# conversions


@functools.lru_cache(maxsize=100_000)
def _fermion_key_to_majorana(key: tuple[int, int]) -> tuple[tuple[int, complex], ...]:
    n = max(key[0] | key[1], 1).bit_length()
    p = OperatorPolynomial.identity(MAJORANA, n)
    for m, is_c in fermion_word_of_key(key):
        s = -0.5j if is_c else 0.5j
        p = p * OperatorPolynomial(MAJORANA, n, {1 << (2 * m): 0.5, 1 << (2 * m + 1): s})
    return tuple(p.terms.items())


def to_majorana(p: OperatorPolynomial) -> OperatorPolynomial:
    """Rewrite a fermion polynomial in Majorana monomials (same mode count)."""
    if p.kind == MAJORANA:
        return p.copy()
    if p.kind != FERMION:
        raise AlgebraError("to_majorana needs a fermion polynomial")
    out: dict = {}
    for k, cf in p.terms.items():
        for mk, mc in _fermion_key_to_majorana(k):
            out[mk] = out.get(mk, 0.0) + cf * mc
    return OperatorPolynomial(MAJORANA, p.n, out)


@functools.lru_cache(maxsize=100_000)
def majorana_key_to_pauli(key: int) -> tuple[complex, tuple[int, int]]:
    """Jordan-Wigner image of a Majorana monomial: gamma_{2a} = Z_{<a} X_a, gamma_{2a+1} = Z_{<a} Y_a."""
    phase: complex = 1
    pk = (0, 0)
    for a in bits(key):
        m = a // 2
        zs = (1 << m) - 1
        single = (1 << m, zs | ((1 << m) if a & 1 else 0))
        # single is the letter string Z_{<m} X_m or Z_{<m} Y_m, both Hermitian strings
        ph, pk = pauli_key_mul(pk, single)
        phase *= ph
    return phase, pk


def to_pauli(p: OperatorPolynomial) -> OperatorPolynomial:
    """Jordan-Wigner encoding of a fermionic polynomial (qubit j = mode j)."""
    if p.kind == PAULI:
        return p.copy()
    m = to_majorana(p)
    out: dict = {}
    for k, cf in m.terms.items():
        ph, pk = majorana_key_to_pauli(k)
        out[pk] = out.get(pk, 0.0) + ph * cf
    return OperatorPolynomial(PAULI, p.n, out)


def build_hamiltonian(spec) -> OperatorPolynomial:
    """Build the Hamiltonian named by a ModelSpec (see ``qsos.models``)."""
    from .models import build_hamiltonian as _build

    return _build(spec)
