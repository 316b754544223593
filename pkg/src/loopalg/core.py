"""Free graded-commutative algebra kernel over Q.

Monomials are exponent tuples over an ordered generator list; odd
generators square to zero and all signs route through a single
crossing-count function.  Elements are sparse {monomial: rational}
maps.  Derivations and algebra maps extend generator data by the
graded Leibniz rule / multiplicativity.
"""

from dataclasses import dataclass
from .scalars import QQ, rat_str


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    """A free generator: display name, cohomological degree, structural tag.

    tag is free-form ('base', 'bar', 'u', 'e', or a tensor-slot marker);
    base remembers the underlying base-generator name for derived copies.
    """
    name: str
    degree: int
    tag: str = "base"
    base: str = ""

    @property
    def odd(self) -> bool:
        return self.degree % 2 == 1


def koszul_crossings(mask1: int, mask2: int) -> int:
    """Number of odd-odd transpositions when moving mask2 factors left past mask1."""
    count = 0
    m2 = mask2
    while m2:
        j = (m2 & -m2).bit_length() - 1
        count += (mask1 >> (j + 1)).bit_count()
        m2 &= m2 - 1
    return count


class FreeCDGA:
    """Free graded-commutative DGA on finitely many positive-degree generators."""

    def __init__(self, generators, name=""):
        self.generators = tuple(generators)
        self.name = name
        if len({g.name for g in self.generators}) != len(self.generators):
            raise AlgebraError("duplicate generator names")
        for g in self.generators:
            if g.degree <= 0:
                raise AlgebraError(f"generator {g.name} has degree {g.degree} <= 0")
        self.n = len(self.generators)
        self.degrees = tuple(g.degree for g in self.generators)
        self.odd = tuple(g.degree % 2 == 1 for g in self.generators)
        self.index = {g.name: i for i, g in enumerate(self.generators)}
        self.one_mono = (0,) * self.n
        self.differential = None  # set via set_differential
        self._basis_cache = {}

    # -- monomial layer -------------------------------------------------
    def mono_degree(self, m) -> int:
        return sum(e * d for e, d in zip(m, self.degrees) if e)

    def odd_mask(self, m) -> int:
        mask = 0
        for i, e in enumerate(m):
            if e and self.odd[i]:
                mask |= 1 << i
        return mask

    def mono_mul(self, m1, m2):
        """(sign, product monomial), or None when an odd generator squares."""
        mask1, mask2 = self.odd_mask(m1), self.odd_mask(m2)
        if mask1 & mask2:
            return None
        sign = -1 if koszul_crossings(mask1, mask2) % 2 else 1
        return sign, tuple(a + b for a, b in zip(m1, m2))

    def mono_str(self, m) -> str:
        parts = []
        for i, e in enumerate(m):
            if not e:
                continue
            name = self.generators[i].name
            parts.append(name if e == 1 else f"{name}^{e}")
        return "*".join(parts) if parts else "1"

    def term_key(self, m):
        # graded, then reverse-lex on exponents: deterministic canonical order
        return (self.mono_degree(m), tuple(-e for e in m))

    # -- element layer ---------------------------------------------------
    def zero(self):
        return Element(self, {})

    def one(self):
        return Element(self, {self.one_mono: QQ(1)})

    def gen(self, name):
        i = self.index[name]
        m = [0] * self.n
        m[i] = 1
        return Element(self, {tuple(m): QQ(1)})

    def element(self, data):
        return Element(self, {m: QQ(c) for m, c in data.items() if c})

    def scalar(self, c):
        c = QQ(c)
        return Element(self, {self.one_mono: c} if c else {})

    # -- degree bases ----------------------------------------------------
    def _basis_from(self, i, n):
        key = (i, n)
        hit = self._basis_cache.get(key)
        if hit is not None:
            return hit
        if n == 0:
            out = [(0,) * (self.n - i)]
        elif i >= self.n:
            out = []
        else:
            d = self.degrees[i]
            emax = 1 if self.odd[i] else n // d
            out = []
            for e in range(emax, -1, -1):
                rem = n - e * d
                if rem < 0:
                    continue
                for tail in self._basis_from(i + 1, rem):
                    out.append((e,) + tail)
        self._basis_cache[key] = out
        return out

    def degree_basis(self, n):
        """Monomial basis of the degree-n component, reverse-lex within the degree."""
        if n < 0:
            return []
        return self._basis_from(0, n)

    def hilbert_coefficients(self, nmax):
        """Coefficients of prod_odd(1+t^d) * prod_even(1-t^d)^-1 up to t^nmax."""
        coeff = [0] * (nmax + 1)
        coeff[0] = 1
        for g in self.generators:
            d = g.degree
            if g.odd:
                for n in range(nmax, d - 1, -1):
                    coeff[n] += coeff[n - d]
            else:
                for n in range(d, nmax + 1):
                    coeff[n] += coeff[n - d]
        return coeff

    # -- differential ----------------------------------------------------
    def set_differential(self, values, check=True):
        """Install the degree +1 differential from generator values."""
        d = Derivation(self, 1, values, name="d")
        if check:
            for g in self.generators:
                img = d(self.gen(g.name))
                if not img.is_zero() and not img.is_homogeneous(g.degree + 1):
                    raise AlgebraError(f"d({g.name}) is not homogeneous of degree {g.degree + 1}")
            bad = d.square_nonzero_witness()
            if bad is not None:
                name, elt = bad
                raise AlgebraError(f"d^2 != 0 on generator {name}: d(d({name})) = {elt}")
        self.differential = d
        return d

    def __repr__(self):
        gens = ",".join(f"{g.name}:{g.degree}" for g in self.generators)
        return f"FreeCDGA({self.name or 'anon'}; {gens})"


class Element:
    """Sparse rational linear combination of monomials of one algebra."""

    __slots__ = ("alg", "data")

    def __init__(self, alg, data):
        self.alg = alg
        self.data = data

    # -- predicates / accessors ------------------------------------------
    def is_zero(self) -> bool:
        return not self.data

    def is_homogeneous(self, n=None) -> bool:
        degs = {self.alg.mono_degree(m) for m in self.data}
        if not degs:
            return True
        if len(degs) > 1:
            return False
        return n is None or degs == {n}

    def degree(self):
        """Degree of a homogeneous element (None for 0)."""
        degs = {self.alg.mono_degree(m) for m in self.data}
        if not degs:
            return None
        if len(degs) > 1:
            raise AlgebraError(f"inhomogeneous element: degrees {sorted(degs)}")
        return degs.pop()

    def homogeneous_part(self, n):
        return Element(self.alg, {m: c for m, c in self.data.items()
                                  if self.alg.mono_degree(m) == n})

    def terms(self):
        """Canonically ordered (monomial, coefficient) pairs."""
        return sorted(self.data.items(), key=lambda mc: self.alg.term_key(mc[0]))

    def coefficient(self, mono):
        return self.data.get(mono, QQ(0))

    # -- arithmetic --------------------------------------------------------
    def _same(self, other):
        if self.alg is not other.alg:
            raise AlgebraError("operands belong to different algebras")

    def __add__(self, other):
        self._same(other)
        data = dict(self.data)
        for m, c in other.data.items():
            s = data.get(m, 0) + c
            if s:
                data[m] = s
            else:
                data.pop(m, None)
        return Element(self.alg, data)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Element(self.alg, {m: -c for m, c in self.data.items()})

    def scale(self, c):
        c = QQ(c)
        if not c:
            return Element(self.alg, {})
        return Element(self.alg, {m: c * v for m, v in self.data.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __mul__(self, other):
        if not isinstance(other, Element):
            return self.scale(other)
        self._same(other)
        alg = self.alg
        data = {}
        for m1, c1 in self.data.items():
            for m2, c2 in other.data.items():
                sm = alg.mono_mul(m1, m2)
                if sm is None:
                    continue
                sign, m = sm
                c = c1 * c2 if sign > 0 else -c1 * c2
                s = data.get(m, 0) + c
                if s:
                    data[m] = s
                else:
                    data.pop(m, None)
        return Element(alg, data)

    def __pow__(self, e):
        assert e >= 0
        out = self.alg.one()
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self.alg is other.alg and self.data == other.data

    def __hash__(self):
        return hash((id(self.alg), frozenset(self.data.items())))

    def __str__(self):
        if not self.data:
            return "0"
        parts = []
        for m, c in self.terms():
            mono = self.alg.mono_str(m)
            if mono == "1":
                chunk = rat_str(c)
            elif c == 1:
                chunk = mono
            elif c == -1:
                chunk = f"-{mono}"
            else:
                chunk = f"{rat_str(c)}*{mono}"
            if parts and not chunk.startswith("-"):
                parts.append(f"+ {chunk}")
            elif parts:
                parts.append(f"- {chunk[1:]}")
            else:
                parts.append(chunk)
        return " ".join(parts)

    __repr__ = __str__


class Derivation:
    """Graded derivation given by its values on generators."""

    def __init__(self, alg, degree, values, name=""):
        self.alg = alg
        self.degree = degree
        self.name = name
        self.values = {}
        for key, val in values.items():
            i = alg.index[key] if isinstance(key, str) else key
            if val is not None and not val.is_zero():
                if val.alg is not alg:
                    raise AlgebraError("derivation value lies in a different algebra")
                self.values[i] = val

    def of_gen(self, i):
        return self.values.get(i, self.alg.zero())

    def of_mono(self, m):
        """Leibniz expansion on one monomial (as an Element)."""
        alg = self.alg
        out = {}
        prefix_deg = 0
        odd_deg = self.degree % 2
        for i, e in enumerate(m):
            if e:
                val = self.values.get(i)
                if val is not None:
                    sign = -1 if (odd_deg and prefix_deg % 2) else 1
                    coeff = QQ(sign * e)
                    left = m[:i] + (0,) * (alg.n - i)
                    rest = (0,) * i + (e - 1,) + m[i + 1:]
                    term = Element(alg, {left: coeff}) * val * Element(alg, {rest: QQ(1)})
                    for mm, cc in term.data.items():
                        s = out.get(mm, 0) + cc
                        if s:
                            out[mm] = s
                        else:
                            out.pop(mm, None)
                prefix_deg += e * alg.degrees[i]
        return Element(alg, out)

    def __call__(self, x):
        if not isinstance(x, Element):
            return self.of_mono(x)
        out = self.alg.zero()
        for m, c in x.data.items():
            out = out + self.of_mono(m).scale(c)
        return out

    def graded_commutator(self, other):
        """[a, b] = a b - (-1)^{|a||b|} b a as a derivation."""
        assert self.alg is other.alg
        alg = self.alg
        sign = -1 if (self.degree % 2 and other.degree % 2) else 1
        values = {}
        for i, g in enumerate(alg.generators):
            v = self(other.of_gen(i)) - other(self.of_gen(i)).scale(sign)
            values[i] = v
        return Derivation(alg, self.degree + other.degree, values,
                          name=f"[{self.name},{other.name}]")

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.values.values())

    def square_nonzero_witness(self):
        """Generator where the derivation fails to square to zero, or None."""
        for g in self.alg.generators:
            img = self(self(self.alg.gen(g.name)))
            if not img.is_zero():
                return g.name, img
        return None

    def __repr__(self):
        return f"Derivation({self.name or '?'}, deg {self.degree})"


def graded_commutator(a: Derivation, b: Derivation) -> Derivation:
    return a.graded_commutator(b)


class AlgebraMap:
    """Degree-0 algebra morphism given by generator images."""

    def __init__(self, source, target, values, name=""):
        self.source = source
        self.target = target
        self.name = name
        self.values = {}
        for key, val in values.items():
            i = source.index[key] if isinstance(key, str) else key
            if val.alg is not target:
                raise AlgebraError("map value lies outside the target algebra")
            self.values[i] = val
        self._powers = {}

    def of_gen(self, i):
        return self.values.get(i, self.target.zero())

    def _power(self, i, e):
        key = (i, e)
        hit = self._powers.get(key)
        if hit is None:
            hit = self.of_gen(i) ** e
            self._powers[key] = hit
        return hit

    def of_mono(self, m):
        out = self.target.one()
        for i, e in enumerate(m):
            if e:
                out = out * self._power(i, e)
                if out.is_zero():
                    break
        return out

    def __call__(self, x):
        if not isinstance(x, Element):
            return self.of_mono(x)
        out = self.target.zero()
        for m, c in x.data.items():
            out = out + self.of_mono(m).scale(c)
        return out

    def chain_defect(self, d_source=None, d_target=None):
        """Generator where f d != d f, or None; for degree-0 algebra maps
        the generator check settles the whole map."""
        ds = d_source or self.source.differential
        dt = d_target or self.target.differential
        for g in self.source.generators:
            lhs = self(ds(self.source.gen(g.name)))
            rhs = dt(self(self.source.gen(g.name)))
            if lhs != rhs:
                return g.name, lhs - rhs
        return None

    def __repr__(self):
        return f"AlgebraMap({self.name or '?'}: {self.source.name}->{self.target.name})"


class LinearMap:
    """Graded linear map between algebras, defined monomial-wise.

    dsign declares the commutation rule f(d x) = dsign * d(f x); it is
    +1 for even-degree chain maps and -1 for odd anticommuting ones.
    """

    def __init__(self, source, target, fn, degree, dsign=1, name=""):
        self.source = source
        self.target = target
        self.fn = fn
        self.degree = degree
        self.dsign = dsign
        self.name = name

    def __call__(self, x):
        if not isinstance(x, Element):
            return self.fn(x)
        out = self.target.zero()
        for m, c in x.data.items():
            out = out + self.fn(m).scale(c)
        return out

    def chain_defect_on(self, monos, d_source=None, d_target=None):
        ds = d_source or self.source.differential
        dt = d_target or self.target.differential
        for m in monos:
            x = Element(self.source, {m: QQ(1)})
            lhs = self(ds(x))
            rhs = dt(self(x)).scale(self.dsign)
            if lhs != rhs:
                return m, lhs - rhs
        return None


def derivation_as_linear(theta: Derivation, target=None, name=""):
    """View a derivation as a LinearMap, optionally into a larger algebra."""
    alg = theta.alg
    if target is None or target is alg:
        return LinearMap(alg, alg, theta.of_mono, theta.degree,
                         dsign=-1 if theta.degree % 2 else 1, name=name or theta.name)
    emb = embedding(alg, target)

    def fn(m):
        return emb(theta.of_mono(m))

    return LinearMap(alg, target, fn, theta.degree,
                     dsign=-1 if theta.degree % 2 else 1, name=name or theta.name)


def embedding(source, target, rename=None):
    """Name-preserving (or renamed) algebra embedding."""
    values = {}
    for g in source.generators:
        tname = rename(g.name) if rename else g.name
        values[g.name] = target.gen(tname)
    return AlgebraMap(source, target, values, name="emb")


def tensor_square(alg: FreeCDGA, check=True) -> FreeCDGA:
    """Two tagged copies of an algebra, differential acting slot-wise.

    Generators are ordered slot-1 block then slot-2 block, so a monomial
    splits as (left part)*(right part) with no extra sign.
    """
    gens = []
    for slot, wrap in ((1, "L"), (2, "R")):
        for g in alg.generators:
            gens.append(Generator(f"{wrap}({g.name})", g.degree,
                                  tag=f"{g.tag}@{slot}", base=g.name))
    T = FreeCDGA(gens, name=f"{alg.name}^(x2)")
    if alg.differential is not None:
        embL = embedding(alg, T, rename=lambda n: f"L({n})")
        embR = embedding(alg, T, rename=lambda n: f"R({n})")
        values = {}
        for g in alg.generators:
            dg = alg.differential(alg.gen(g.name))
            values[f"L({g.name})"] = embL(dg)
            values[f"R({g.name})"] = embR(dg)
        T.set_differential(values, check=check)
    return T


def tensor_split(T: FreeCDGA, n_left: int, m):
    """Split a tensor-square monomial into (left, right) exponent tuples."""
    return m[:n_left], m[n_left:]
