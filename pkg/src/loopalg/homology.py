"""Degree-wise homology of free-algebra complexes by exact elimination.

A complex exposes a labelled monomial basis per degree and a degree +1
differential.  ComplexWindow computes kernels, images, canonical
homology representatives, coordinate functionals and a harmonic
projection (the strong-deformation-retract data used for Kunneth
reductions).  InducedMap turns chain maps into matrices on homology.
"""

from .scalars import QQ
from .core import Element, LinearMap, derivation_as_linear
from .linalg import Echelon, kernel_basis


class NotACocycle(ValueError):
    pass


class ChainMapError(ValueError):
    pass


class AlgebraComplex:
    """The degree-wise complex of a FreeCDGA, optionally restricted to a
    monomial-closed subspace (word components, reduced parts, ...)."""

    def __init__(self, alg, derivation=None, predicate=None, name=""):
        self.alg = alg
        self.deriv = derivation if derivation is not None else alg.differential
        self.pred = predicate
        self.name = name or alg.name
        self._basis = {}
        self._pos = {}

    def basis(self, n):
        hit = self._basis.get(n)
        if hit is None:
            monos = self.alg.degree_basis(n)
            if self.pred is not None:
                monos = [m for m in monos if self.pred(m)]
            hit = self._basis[n] = monos
            self._pos[n] = {m: i for i, m in enumerate(monos)}
        return hit

    def position(self, n):
        self.basis(n)
        return self._pos[n]

    def dim(self, n):
        return len(self.basis(n))

    def d_of(self, label):
        img = self.deriv.of_mono(label)
        if self.pred is not None:
            assert all(self.pred(m) for m in img.data), "differential leaves the subspace"
        return img.data

    def to_element(self, vec):
        return Element(self.alg, {m: QQ(c) for m, c in vec.items() if c})

    def from_element(self, elt):
        return dict(elt.data)

    def sort_key(self, n):
        pos = self.position(n)
        return lambda lab: pos[lab]


class DegreeData:
    __slots__ = ("reps", "ech", "rep_pivots", "img_rank", "ker_dim")

    def __init__(self, reps, ech, rep_pivots, img_rank, ker_dim):
        self.reps = reps
        self.ech = ech
        self.rep_pivots = rep_pivots
        self.img_rank = img_rank
        self.ker_dim = ker_dim


class ComplexWindow:
    """Lazy homology of one complex over a degree range."""

    def __init__(self, cx, lo=0, hi=None):
        self.cx = cx
        self.lo = lo
        self.hi = hi
        self._elims = {}
        self._hom = {}

    def _elim(self, n):
        """Eliminate the degree-n differential columns.

        Caches (kernel vectors in C^n, image echelon in C^{n+1} whose
        shadows are boundary preimages in C^n)."""
        hit = self._elims.get(n)
        if hit is None:
            basis = self.cx.basis(n)
            columns = [self.cx.d_of(b) for b in basis]
            key = self.cx.sort_key(n + 1)
            ech = Echelon(key=key, track_shadows=True)
            kernel = []
            for j, col in enumerate(columns):
                piv = ech.insert(dict(col), {basis[j]: QQ(1)})
                if piv is None:
                    kernel.append(ech.last_kernel)
            hit = self._elims[n] = (kernel, ech)
        return hit

    def homology(self, n) -> DegreeData:
        hit = self._hom.get(n)
        if hit is None:
            kernel, _ = self._elim(n)
            _, img_ech = self._elim(n - 1)
            key = self.cx.sort_key(n)
            # non-reduced on purpose: back-cleaning image rows by the
            # later representative rows would push them out of the image
            # span and corrupt the coordinate functional
            E = Echelon(key=key)
            for p in img_ech.order:
                E.insert(dict(img_ech.rows[p]))
            img_rank = len(E)
            rep_pivots = []
            for v in kernel:
                piv = E.insert(dict(v))
                if piv is not None:
                    rep_pivots.append(piv)
            reps = [dict(E.rows[p]) for p in rep_pivots]
            hit = self._hom[n] = DegreeData(reps, E, rep_pivots, img_rank, len(kernel))
        return hit

    # -- public accessors --------------------------------------------------
    def dim(self, n) -> int:
        return len(self.homology(n).reps)

    def dims(self, lo=None, hi=None):
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        return [self.dim(n) for n in range(lo, hi + 1)]

    def reps(self, n):
        return self.homology(n).reps

    def rep_elements(self, n):
        return [self.cx.to_element(v) for v in self.reps(n)]

    def chain_dim(self, n):
        return self.cx.dim(n)

    def kernel_dim(self, n):
        return self.homology(n).ker_dim

    def image_rank_into(self, n):
        """Rank of d: C^{n-1} -> C^n."""
        return self.homology(n).img_rank

    def coords(self, n, vec, check=True):
        """Coordinates of a cocycle in the canonical representative basis."""
        data = self.homology(n)
        rec = {}
        rem, _ = data.ech.reduce(dict(vec), record=rec)
        if rem:
            if check:
                raise NotACocycle(f"vector is not a cocycle modulo boundaries at degree {n}")
            return None
        piv_pos = {p: i for i, p in enumerate(data.rep_pivots)}
        out = {}
        for p, c in rec.items():
            i = piv_pos.get(p)
            if i is not None and c:
                out[i] = c
        return out

    def coords_element(self, n, elt, check=True):
        return self.coords(n, self.cx.from_element(elt), check=check)

    def harmonic(self, n, vec):
        """Homology coordinates of an arbitrary chain's harmonic part.

        This is the projection P of the SDR built from the two recorded
        eliminations; 1 - P is chain homotopic to 0, so applying P
        factorwise to a tensor cocycle yields Kunneth coordinates."""
        v = dict(vec)
        dv = {}
        for lab, c in v.items():
            vec_add = self.cx.d_of(lab)
            for m, x in vec_add.items():
                s = dv.get(m, 0) + c * x
                if s:
                    dv[m] = s
                else:
                    dv.pop(m, None)
        if dv:
            _, ech = self._elim(n)
            rec = {}
            rem, _ = ech.reduce(dv, record=rec)
            assert not rem, "d(v) must lie in the image of d"
            for p, c in rec.items():
                shadow = ech.shadows[p]
                for m, x in shadow.items():
                    s = v.get(m, 0) - c * x
                    if s:
                        v[m] = s
                    else:
                        v.pop(m, None)
        return self.coords(n, v)

    def rank_nullity_ok(self, n) -> bool:
        data = self.homology(n)
        _, ech = self._elim(n)
        return data.ker_dim + len(ech) == self.chain_dim(n)


class VectorSubcomplex:
    """A subcomplex presented by explicit basis vectors inside a parent complex."""

    def __init__(self, parent, vectors, name=""):
        self.parent = parent
        self.vectors = vectors      # degree -> list of label-vector dicts
        self.name = name
        self._solvers = {}

    def basis(self, n):
        return [(n, i) for i in range(len(self.vectors.get(n, ())))]

    def dim(self, n):
        return len(self.vectors.get(n, ()))

    def position(self, n):
        return {lab: i for i, lab in enumerate(self.basis(n))}

    def sort_key(self, n):
        return lambda lab: lab[1]

    def _solver(self, n):
        hit = self._solvers.get(n)
        if hit is None:
            key = self.parent.sort_key(n)
            ech = Echelon(key=key, track_shadows=True)
            for j, v in enumerate(self.vectors.get(n, ())):
                ech.insert(dict(v), {j: QQ(1)})
            hit = self._solvers[n] = ech
        return hit

    def express(self, n, vec):
        """Write a parent-complex vector in the degree-n subcomplex basis."""
        ech = self._solver(n)
        rem, shadow = ech.reduce(dict(vec), {})
        if rem:
            raise ValueError(f"vector does not lie in the subcomplex at degree {n}")
        return {(n, j): -c for j, c in shadow.items() if c}

    def d_of(self, label):
        n, i = label
        v = self.vectors[n][i]
        dv = {}
        for lab, c in v.items():
            for m, x in self.parent.d_of(lab).items():
                s = dv.get(m, 0) + c * x
                if s:
                    dv[m] = s
                else:
                    dv.pop(m, None)
        if not dv:
            return {}
        return self.express(n + 1, dv)

    def to_parent(self, vec):
        out = {}
        for (n, i), c in vec.items():
            for m, x in self.vectors[n][i].items():
                s = out.get(m, 0) + c * x
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return out


def kernel_subcomplex(cx, theta_linear, lo, hi, name=""):
    """Degree-wise kernel of a map as a VectorSubcomplex (e.g. ker s-tilde)."""
    vectors = {}
    for n in range(lo, hi + 1):
        basis = cx.basis(n)
        columns = []
        for b in basis:
            img = theta_linear(Element(cx.alg, {b: QQ(1)}))
            columns.append(dict(img.data))
        kern, _ = kernel_basis(columns, key=cx.sort_key(n + theta_linear.degree))
        vectors[n] = [{basis[j]: c for j, c in kv.items()} for kv in kern]
    return VectorSubcomplex(cx, vectors, name=name)


class InducedMap:
    """Matrix of a chain map on homology windows.

    Columns are the source representatives' coordinates in the target basis;
    well-definedness is certified by the chain-map check on the window.
    """

    def __init__(self, f, src: ComplexWindow, tgt: ComplexWindow, name="", verify=True):
        self.f = f
        self.src = src
        self.tgt = tgt
        self.name = name or getattr(f, "name", "")
        self.degree = f.degree
        self._cols = {}
        if verify and hasattr(f, "chain_defect_on") and src.hi is not None:
            monos = []
            for n in range(src.lo, src.hi + 1):
                monos.extend(src.cx.basis(n))
            bad = f.chain_defect_on(monos, d_source=src.cx.deriv, d_target=tgt.cx.deriv)
            if bad is not None:
                raise ChainMapError(f"{self.name}: not a chain map at {bad[0]}")

    def columns(self, n):
        """List of coordinate dicts, one per source representative of degree n."""
        hit = self._cols.get(n)
        if hit is None:
            cols = []
            for rep in self.src.reps(n):
                img = self.f(self.src.cx.to_element(rep))
                cols.append(self.tgt.coords(n + self.degree, img.data))
            hit = self._cols[n] = cols
        return hit

    def rank(self, n):
        cols = self.columns(n)
        ech = Echelon()
        for c in cols:
            ech.insert(dict(c))
        return len(ech)

    def is_zero(self, n):
        return all(not c for c in self.columns(n))

    def apply_coords(self, n, coords):
        """Push source homology coordinates through the matrix."""
        out = {}
        cols = self.columns(n)
        for i, c in coords.items():
            for j, x in cols[i].items():
                s = out.get(j, 0) + c * x
                if s:
                    out[j] = s
                else:
                    out.pop(j, None)
        return out


def connes_maps(L, E, lo, hi):
    """Homology windows plus the Connes maps pi, beta, S for a loop model.

    pi : HC- -> HH (set u = 0), beta : HH -> HC- (the derivation s),
    S : HC- -> HC- (multiplication by u).  Windows are over total degree
    [lo, hi]; beta/S matrices are emitted wherever both ends fit.
    """
    HL = ComplexWindow(AlgebraComplex(L.algebra, name="L"), lo, hi)
    HE = ComplexWindow(AlgebraComplex(E.algebra, name="E"), lo, hi)
    pi = InducedMap(E.truncation_linear(L), HE, HL, name="pi")
    beta = InducedMap(derivation_as_linear(L.s, target=E.algebra, name="beta"),
                      HL, HE, name="beta")
    u = E.algebra.gen("u")

    def mul_u(mono):
        return Element(E.algebra, {mono: QQ(1)}) * u

    S = InducedMap(LinearMap(E.algebra, E.algebra, mul_u, 2, dsign=1, name="S"),
                   HE, HE, name="S")
    return {"HL": HL, "HE": HE, "pi": pi, "beta": beta, "S": S}


def connes_exactness_failures(maps, lo, hi):
    """Rank conditions of ... -> HC- -S-> HC- -pi-> HH -beta-> HC- -> ...

    Returns a list of (degree, joint) failures; empty means exact."""
    HL, HE = maps["HL"], maps["HE"]
    pi, beta, S = maps["pi"], maps["beta"], maps["S"]
    bad = []
    for n in range(lo, hi + 1):
        # at HH^n: ker(beta_n) = im(pi_n)
        if n - 1 >= lo:
            if HL.dim(n) - beta.rank(n) != pi.rank(n):
                bad.append((n, "HH"))
        # at HC-^n: ker(pi_n) = im(S from n-2)
        if n - 2 >= lo:
            if HE.dim(n) - pi.rank(n) != S.rank(n - 2):
                bad.append((n, "HC-S-in"))
        # at HC-^n: ker(S_n) = im(beta from n+1)
        if n + 2 <= hi and n + 1 <= hi:
            if HE.dim(n) - S.rank(n) != beta.rank(n + 1):
                bad.append((n, "HC-S-out"))
    return bad
