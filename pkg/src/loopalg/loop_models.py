"""Loop-space and cyclic models of a Sullivan algebra.

build_L doubles the generators with degree-shifted bars and installs
the two anticommuting derivations (s of degree -1, delta of degree +1
with delta(vbar) = -s(dv)); build_E adjoins the polynomial generator u
with total differential delta + u*s.  The Gysin wedge adjoins a degree
one generator e with d(e) = u.
"""

from .scalars import QQ
from .core import (FreeCDGA, Generator, Element, Derivation, AlgebraMap,
                   AlgebraError, embedding)


def bar_name(name: str) -> str:
    return name + "'"


class LoopModel:
    """(Lambda(V + Vbar), delta) with the loop rotation derivation s."""

    def __init__(self, base: FreeCDGA, check=True):
        for g in base.generators:
            if g.degree < 2:
                raise AlgebraError(
                    f"base generator {g.name} has degree {g.degree} < 2 "
                    "(simply-connected base required)")
        self.base = base
        gens = [Generator(g.name, g.degree, tag="base", base=g.name)
                for g in base.generators]
        gens += [Generator(bar_name(g.name), g.degree - 1, tag="bar", base=g.name)
                 for g in base.generators]
        self.algebra = FreeCDGA(gens, name=f"L({base.name})" if base.name else "L")
        A = self.algebra
        self.n_base = base.n
        self.emb = embedding(base, A)

        s_vals = {g.name: A.gen(bar_name(g.name)) for g in base.generators}
        self.s = Derivation(A, -1, s_vals, name="s")

        d_vals = {}
        for g in base.generators:
            dg = base.differential(base.gen(g.name)) if base.differential else base.zero()
            d_vals[g.name] = self.emb(dg)
        for g in base.generators:
            d_vals[bar_name(g.name)] = -self.s(d_vals[g.name])
        self.delta = A.set_differential(d_vals, check=check)
        if check:
            bad = self.s.square_nonzero_witness()
            if bad is not None:
                raise AlgebraError(f"s^2 != 0 at {bad[0]}")
            anti = self.delta.graded_commutator(self.s)
            if not anti.is_zero():
                raise AlgebraError("delta s + s delta != 0")

    # -- gradings -----------------------------------------------------------
    def is_bar(self, i) -> bool:
        return self.algebra.generators[i].tag == "bar"

    def word_length(self, mono) -> int:
        return sum(e for i, e in enumerate(mono) if e and self.is_bar(i))

    def reduced_pred(self):
        return lambda m: any(m)

    def word_pred(self, N):
        return lambda m: any(m) and self.word_length(m) == N

    def weights(self, base_weights):
        """Extend base weights to the loop model (wt(vbar) = wt(v))."""
        wt = {}
        for g in self.base.generators:
            wt[g.name] = base_weights[g.name]
            wt[bar_name(g.name)] = base_weights[g.name]
        return wt


class CyclicModel:
    """(L[u], D = delta + u s); u is central of degree 2."""

    def __init__(self, loop: LoopModel, check=True):
        self.loop = loop
        L = loop.algebra
        gens = list(L.generators) + [Generator("u", 2, tag="u")]
        self.algebra = FreeCDGA(gens, name=f"E({loop.base.name})" if loop.base.name else "E")
        A = self.algebra
        self.emb = embedding(L, A)
        u = A.gen("u")
        d_vals = {}
        for g in L.generators:
            val = self.emb(loop.delta(L.gen(g.name)))
            sval = loop.s(L.gen(g.name))
            if not sval.is_zero():
                val = val + u * self.emb(sval)
            d_vals[g.name] = val
        d_vals["u"] = A.zero()
        self.D = A.set_differential(d_vals, check=check)

    def u_index(self) -> int:
        return self.algebra.index["u"]

    def u_exponent(self, mono) -> int:
        return mono[self.u_index()]

    def word_length(self, mono) -> int:
        return sum(e for i, e in enumerate(mono) if e and
                   self.algebra.generators[i].tag == "bar")

    def reduced_pred(self):
        """Monomials with at least one non-u factor (the complement of Q[u])."""
        iu = self.u_index()
        return lambda m: any(e for i, e in enumerate(m) if i != iu)

    def truncation_linear(self, loop=None):
        """The chain map u -> 0 realizing pi: HC- -> HH."""
        from .core import LinearMap
        L = (loop or self.loop).algebra
        iu = self.u_index()

        def fn(mono):
            if mono[iu]:
                return L.zero()
            return Element(L, {mono[:iu] + mono[iu + 1:]: QQ(1)})

        return LinearMap(self.algebra, L, fn, 0, dsign=1, name="pi")

    def set_u_zero(self, elt: Element) -> Element:
        return self.truncation_linear()(elt)

    def include(self, elt: Element) -> Element:
        """Embed a loop-model element into the cyclic model."""
        return self.emb(elt)


def build_L(base: FreeCDGA, check=True) -> LoopModel:
    return LoopModel(base, check=check)


def build_E(loop: LoopModel, check=True) -> CyclicModel:
    return CyclicModel(loop, check=check)


def word_components(loop: LoopModel, n_max: int):
    """The subcomplexes L-tilde^(N) for N = 0..n_max."""
    from .homology import AlgebraComplex
    return [AlgebraComplex(loop.algebra, predicate=loop.word_pred(N),
                           name=f"Lt({N})") for N in range(n_max + 1)]


def word_dimension_check(loop: LoopModel, n: int) -> bool:
    """Degree-wise: dim L-tilde^n equals the sum over word components."""
    A = loop.algebra
    monos = [m for m in A.degree_basis(n) if any(m)]
    by_word = {}
    for m in monos:
        by_word[loop.word_length(m)] = by_word.get(loop.word_length(m), 0) + 1
    return len(monos) == sum(by_word.values())


class GysinModel:
    """L-wedge = E tensor (e), d(e) = u, with the maps rho, iota, int_e."""

    def __init__(self, cyc: CyclicModel, check=True):
        self.cyc = cyc
        E = cyc.algebra
        gens = list(E.generators) + [Generator("e", 1, tag="e")]
        self.algebra = FreeCDGA(gens, name="Lwedge")
        A = self.algebra
        self.emb = embedding(E, A)
        d_vals = {g.name: self.emb(cyc.D(E.gen(g.name))) for g in E.generators}
        d_vals["e"] = A.gen("u")
        self.dhat = A.set_differential(d_vals, check=check)

        L = cyc.loop.algebra
        # rho: kill u and e
        rho_vals = {g.name: L.gen(g.name) for g in L.generators}
        rho_vals["u"] = L.zero()
        rho_vals["e"] = L.zero()
        self.rho = AlgebraMap(A, L, rho_vals, name="rho")
        # iota(a) = a + (-1)^deg(a) s(a) e, an algebra map on generators
        e = A.gen("e")
        iota_vals = {}
        for g in L.generators:
            sign = -1 if g.degree % 2 else 1
            img = A.gen(g.name)
            sg = cyc.loop.s(L.gen(g.name))
            if not sg.is_zero():
                img = img + self.emb(cyc.include(sg)).scale(sign) * e
            iota_vals[g.name] = img
        self.iota = AlgebraMap(L, A, iota_vals, name="iota")

    def fiber_integration(self, elt: Element) -> Element:
        """int_e: a0 + a1 e  ->  (-1)^(deg a1 + 1) a1, landing in E."""
        E = self.cyc.algebra
        ie = self.algebra.index["e"]
        out = E.zero()
        for m, c in elt.data.items():
            if not m[ie]:
                continue
            rest = m[:ie] + m[ie + 1:]
            deg = E.mono_degree(rest)
            sign = 1 if (deg + 1) % 2 == 0 else -1
            out = out + Element(E, {rest: QQ(sign) * c})
        return out


def gysin_check(loop: LoopModel, max_degree: int):
    """Verify rho iota = id and int_e iota = s on a degree window.

    Returns (ok, witness) with witness = (what, monomial) on failure."""
    cyc = CyclicModel(loop)
    gys = GysinModel(cyc)
    L = loop.algebra
    bad = gys.iota.chain_defect(d_source=L.differential, d_target=gys.dhat)
    if bad is not None:
        return False, ("iota chain map", bad[0])
    bad = gys.rho.chain_defect(d_source=gys.dhat, d_target=L.differential)
    if bad is not None:
        return False, ("rho chain map", bad[0])
    for n in range(0, max_degree + 1):
        for m in L.degree_basis(n):
            x = Element(L, {m: QQ(1)})
            if gys.rho(gys.iota(x)) != x:
                return False, ("rho iota != id", m)
            lhs = gys.fiber_integration(gys.iota(x))
            rhs = cyc.include(loop.s(x))
            if lhs != rhs:
                return False, ("int_e iota != s", m)
    return True, None
