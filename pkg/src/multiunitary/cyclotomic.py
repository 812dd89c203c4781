"""Exact arithmetic in the 40th cyclotomic field Q(zeta), zeta = exp(i*pi/20).

Elements are stored as 16 rational coordinates in the power basis
1, zeta, ..., zeta**15, reduced modulo

    Phi_40(x) = x**16 - x**12 + x**8 - x**4 + 1.

The field contains omega = exp(i*pi/10) = zeta**2 as well as sqrt(2) and
sqrt(5), which is all the golden AME(4,6) amplitudes need.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "ORDER",
    "DEGREE",
    "CycNumber",
    "zeta",
    "GoldenConstants",
    "build_constants",
    "RELATIONS",
    "verify_constellations",
    "evaluate_relation",
    "block_V",
    "verify_block_V",
]

ORDER = 40
DEGREE = 16
# Phi_40 coefficients, constant term first
PHI = tuple(Fraction(c) for c in (1, 0, 0, 0, -1, 0, 0, 0, 1, 0, 0, 0, -1, 0, 0, 0, 1))


def _trim(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def _polymod(p: list, m=PHI) -> list:
    p = list(p)
    dm = len(m) - 1
    for n in range(len(p) - 1, dm - 1, -1):
        c = p[n]
        if c:
            # m is monic
            for k in range(dm + 1):
                p[n - dm + k] -= c * m[k]
    return p[:dm] + [Fraction(0)] * max(0, dm - len(p))


def _polymul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _polydivmod(a: list, b: list):
    a = _trim(list(a))
    b = _trim(list(b))
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and a:
        c = a[-1] / b[-1]
        shift = len(a) - len(b)
        q[shift] = c
        for k, y in enumerate(b):
            a[shift + k] -= c * y
        _trim(a)
    return _trim(q), a


def _polysub(a: list, b: list) -> list:
    n = max(len(a), len(b))
    return [
        (a[k] if k < len(a) else 0) - (b[k] if k < len(b) else 0) for k in range(n)
    ]


class CycNumber:
    """Immutable element of Q(zeta_40)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        c = [Fraction(x) for x in coeffs]
        if len(c) > DEGREE:
            c = _polymod(c)
        c += [Fraction(0)] * (DEGREE - len(c))
        object.__setattr__(self, "coeffs", tuple(c))

    def __setattr__(self, *_):
        raise AttributeError("CycNumber is immutable")

    @classmethod
    def rational(cls, q) -> "CycNumber":
        return cls([Fraction(q)])

    @classmethod
    def root(cls, n: int) -> "CycNumber":
        """zeta**n for any integer n."""
        n %= ORDER
        c = [Fraction(0)] * (n + 1)
        c[n] = Fraction(1)
        return cls(c)

    @staticmethod
    def _coerce(x) -> "CycNumber":
        if isinstance(x, CycNumber):
            return x
        if isinstance(x, (int, Fraction)):
            return CycNumber.rational(x)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CycNumber(a + b for a, b in zip(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return CycNumber(-a for a in self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CycNumber(a - b for a, b in zip(self.coeffs, other.coeffs))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CycNumber(_polymod(_polymul(list(self.coeffs), list(other.coeffs))))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        result, base = CycNumber.rational(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inv()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inv()

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __bool__(self):
        return any(self.coeffs)

    def __repr__(self):
        terms = [f"{c}*z^{n}" for n, c in enumerate(self.coeffs) if c]
        return f"CycNumber({' + '.join(terms) or '0'})"

    def conj(self) -> "CycNumber":
        """Complex conjugation, zeta -> zeta**39."""
        out = CycNumber()
        for n, c in enumerate(self.coeffs):
            if c:
                out = out + CycNumber.root(-n) * c
        return out

    def inv(self) -> "CycNumber":
        """Inverse via the extended Euclidean algorithm against Phi_40."""
        if not self:
            raise ZeroDivisionError("inverse of zero in Q(zeta_40)")
        # invariant: s*self == r (mod Phi)
        r0, r1 = list(PHI), _trim(list(self.coeffs))
        s0, s1 = [], [Fraction(1)]
        while len(r1) > 1:
            q, rem = _polydivmod(r0, r1)
            r0, r1 = r1, rem
            s0, s1 = s1, _trim(_polysub(s0, _polymul(q, s1)))
        if not r1:
            # Phi_40 is irreducible, so a nonzero element is a unit
            raise ArithmeticError("gcd with Phi_40 is nontrivial")
        return CycNumber(_polymod([c / r1[0] for c in s1] + [Fraction(0)] * DEGREE))

    def to_complex(self) -> complex:
        z = cmath.exp(1j * cmath.pi / 20)
        return sum(float(c) * z**n for n, c in enumerate(self.coeffs))

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])


def zeta(n: int = 1) -> CycNumber:
    return CycNumber.root(n)


def omega(n: int = 1) -> CycNumber:
    """omega**n with omega = exp(i*pi/10) = zeta**2."""
    return CycNumber.root(2 * n)


@dataclass(frozen=True)
class GoldenConstants:
    omega: CycNumber
    sqrt2: CycNumber
    sqrt5: CycNumber
    a: CycNumber
    b: CycNumber
    c: CycNumber
    phi: CycNumber

    def check(self) -> dict:
        half = CycNumber.rational(Fraction(1, 2))
        return {
            "omega^20 = 1": self.omega**20 == 1,
            "omega^10 = -1": self.omega**10 == -1,
            "sqrt2^2 = 2": self.sqrt2 * self.sqrt2 == 2,
            "sqrt5^2 = 5": self.sqrt5 * self.sqrt5 == 5,
            "a^2 + b^2 = 1/2": self.a * self.a + self.b * self.b == half,
            "c^2 = 1/2": self.c * self.c == half,
            "b = a*phi": self.b == self.a * self.phi,
            "a, b, c real": all(x == x.conj() for x in (self.a, self.b, self.c)),
        }


def build_constants() -> GoldenConstants:
    w = omega()
    sqrt2 = zeta(5) + zeta(35)
    # zeta**8 is a primitive 5th root of unity: 2(zeta^8 + zeta^-8) + 1 = sqrt5
    sqrt5 = 2 * (zeta(8) + zeta(32)) + 1
    a = (sqrt2 * (w + w.conj())).inv()
    w3 = w**3
    b = (sqrt2 * (w3 + w3.conj())).inv()
    c = sqrt2 / 2
    phi = (1 + sqrt5) / 2
    k = GoldenConstants(omega=w, sqrt2=sqrt2, sqrt5=sqrt5, a=a, b=b, c=c, phi=phi)
    bad = [name for name, ok in k.check().items() if not ok]
    if bad:
        raise ArithmeticError(f"golden constants violate {bad}")
    return k


def _relations():
    """Row-orthogonality constellations of the golden matrix, as callables of the constants.

    ``V-*`` are the antipodal pairs inside the generic 4x4 block V,
    ``corner-*`` the three distinct relations of the exceptional block of U,
    ``RG-*`` the extra relations met in the blocks of U^R and U^Gamma.
    """
    w = omega
    return {
        "V-bc": lambda k: k.b * k.c * (1 - 1),
        "V-ac": lambda k: k.a * k.c * (1 - 1),
        "V-ab": lambda k: k.a * k.b * (2 - 2),
        "corner-1": lambda k: k.a**2 * (w(8) + w(-8)) + k.b**2 * (w(4) + w(-4)),
        "corner-2": lambda k: k.a * k.b * (1 + w(2) + w(-8) - 1),
        "corner-3": lambda k: k.a * k.b * (w(-2) + w(2) + w(-8) + w(8)),
        "RG-1": lambda k: k.a**2 * w(4) + k.a * k.b * (w(10) + w(-4)) + k.b**2 * w(-4),
        "RG-2": lambda k: k.a**2 * w(-3) + k.a * k.b * (w(5) + w(3)) + k.b**2 * w(-7),
        "RG-3": lambda k: k.a * k.b * (w(-4) + w(-6)) + k.b * k.c * w(5),
        "RG-4": lambda k: k.a * k.b * (w(-8) + w(-2)) + k.a * k.c * w(5),
        "RG-5": lambda k: k.a**2 + k.b**2 * w(4) + k.b * k.c * w(-7),
    }


RELATIONS = tuple(_relations())


def evaluate_relation(expr, constants: GoldenConstants | None = None) -> CycNumber:
    return expr(constants or build_constants())


def verify_constellations(constants: GoldenConstants | None = None) -> list:
    """[(relation id, is exact zero, residue)] for every orthogonality relation."""
    k = constants or build_constants()
    out = []
    for name, expr in _relations().items():
        r = expr(k)
        out.append((name, not r, r))
    return out


def block_V(constants: GoldenConstants | None = None) -> list:
    k = constants or build_constants()
    z = CycNumber()
    return [
        [k.a, k.a, k.b, k.b],
        [z, z, k.c, -k.c],
        [k.c, -k.c, z, z],
        [k.b, k.b, -k.a, -k.a],
    ]


def verify_block_V(constants: GoldenConstants | None = None) -> bool:
    """V V^dagger == I, entry by entry, in exact arithmetic."""
    V = block_V(constants)
    n = len(V)
    for r in range(n):
        for s in range(n):
            g = sum((V[r][t] * V[s][t].conj() for t in range(n)), CycNumber())
            if g != (1 if r == s else 0):
                return False
    return True
