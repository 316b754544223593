"""String bracket machinery.

Manifold side: the dual loop product is the composite

    L --M_comp--> L (x)_{V} L  --sigma-->  P (x)_{(V)^2} L^2  --Diag!(x)1--> L^2,

where M_comp is the Sullivan representative of loop composition pushed
from the free-path model, sigma is a section of the path augmentation
and Diag! is fundamental-class data (zero on positive path bars).  The
dual string bracket applies beta = [s(-)] in both slots.

All correction terms are found by exact linear solves, canonicalized by
the left/right swap symmetry of the path models, so the displayed
formulas of the source computations are reproduced on the nose.

Classifying-space side: the loop cohomology of BG is polynomial tensor
exterior with an explicit BV operator; brackets are computed through
the cokernel-of-Delta model.
"""

from dataclasses import dataclass

from .scalars import QQ
from .core import (FreeCDGA, Generator, Element, Derivation, AlgebraMap,
                   AlgebraError, embedding, tensor_square)
from .linalg import Echelon, solve_in_span
from .homology import AlgebraComplex, ComplexWindow
from .loop_models import bar_name


class ObstructionError(ValueError):
    """A correction solve failed; carries the obstruction cocycle."""

    def __init__(self, msg, obstruction):
        super().__init__(msg)
        self.obstruction = obstruction


def _sorted_gens(base):
    return sorted(base.generators, key=lambda g: (g.degree, base.index[g.name]))


def _antisym_candidates(alg, degree, word_pred, tau):
    """Basis of the (-1)-eigenspace of tau on the given monomial subspace."""
    monos = [m for m in alg.degree_basis(degree) if word_pred(m)]
    seen = set()
    out = []
    for m in monos:
        if m in seen:
            continue
        mono_elt = Element(alg, {m: QQ(1)})
        t = tau(mono_elt)
        vec = mono_elt - t
        if vec.is_zero():
            continue
        seen.add(m)
        for mm in t.data:
            seen.add(mm)
        out.append(vec)
    return out


def _solve_correction(columns_basis, apply_d, target, key=None):
    """Solve d(c) = target with c in the span of columns_basis."""
    cols = [dict(apply_d(v).data) for v in columns_basis]
    sol = solve_in_span(cols, dict(target.data), key=key)
    if sol is None:
        raise ObstructionError("correction system is not solvable", target)
    out = None
    for j, c in sol.items():
        term = columns_basis[j].scale(c)
        out = term if out is None else out + term
    return out if out is not None else None


class PathModel:
    """Free-path Sullivan model (V_L + V_R + Vbar_P).

    D(vbar) = v_R - v_L - c_v with c_v the antisymmetric canonical
    solution of D(c_v) = (dv)_R - (dv)_L."""

    def __init__(self, base: FreeCDGA):
        self.base = base
        gens = [Generator(f"L({g.name})", g.degree, "pathL", g.name) for g in base.generators]
        gens += [Generator(f"R({g.name})", g.degree, "pathR", g.name) for g in base.generators]
        gens += [Generator(f"P({bar_name(g.name)})", g.degree - 1, "pathbar", g.name)
                 for g in base.generators]
        self.algebra = FreeCDGA(gens, name="P")
        A = self.algebra
        embL = embedding(base, A, rename=lambda n: f"L({n})")
        embR = embedding(base, A, rename=lambda n: f"R({n})")
        self.embL, self.embR = embL, embR

        dvals = {}
        for g in base.generators:
            dg = base.differential(base.gen(g.name))
            dvals[f"L({g.name})"] = embL(dg)
            dvals[f"R({g.name})"] = embR(dg)

        tau_vals = {}
        for g in base.generators:
            tau_vals[f"L({g.name})"] = A.gen(f"R({g.name})")
            tau_vals[f"R({g.name})"] = A.gen(f"L({g.name})")
            tau_vals[f"P({bar_name(g.name)})"] = -A.gen(f"P({bar_name(g.name)})")
        tau = AlgebraMap(A, A, tau_vals, name="tau")

        bar_idx = {i for i, g in enumerate(A.generators) if g.tag == "pathbar"}
        processed = set()
        self.corrections = {}
        partial = Derivation(A, 1, dvals, name="D")
        for g in _sorted_gens(base):
            bar = f"P({bar_name(g.name)})"
            prim = A.gen(f"R({g.name})") - A.gen(f"L({g.name})")
            target = partial(prim)
            corr = None
            if not target.is_zero():
                def word_ok(m):
                    bars = [i for i in bar_idx if m[i]]
                    return bars and all(A.generators[i].base in processed for i in bars)
                cands = _antisym_candidates(A, g.degree, word_ok, tau)
                corr = _solve_correction(cands, partial, target)
            self.corrections[g.name] = corr
            dvals[bar] = prim - corr if corr is not None else prim
            partial = Derivation(A, 1, dvals, name="D")
            processed.add(g.name)
        self.D = A.set_differential(dvals)

    def augmentation(self):
        """eps: P -> base (multiply the slots, kill the bars)."""
        vals = {}
        for g in self.base.generators:
            vals[f"L({g.name})"] = self.base.gen(g.name)
            vals[f"R({g.name})"] = self.base.gen(g.name)
            vals[f"P({bar_name(g.name)})"] = self.base.zero()
        return AlgebraMap(self.algebra, self.base, vals, name="eps_P")


class CompositionModel:
    """Sullivan representative of path composition P -> P (x)_{V} P.

    The double-path algebra has slots L, M, R and bar copies P1, P2;
    the value on each path bar is primitive plus a canonical
    antisymmetric correction."""

    def __init__(self, path: PathModel):
        self.path = path
        base = path.base
        gens = [Generator(f"L({g.name})", g.degree, "L", g.name) for g in base.generators]
        gens += [Generator(f"M({g.name})", g.degree, "M", g.name) for g in base.generators]
        gens += [Generator(f"R({g.name})", g.degree, "R", g.name) for g in base.generators]
        gens += [Generator(f"P1({bar_name(g.name)})", g.degree - 1, "P1", g.name)
                 for g in base.generators]
        gens += [Generator(f"P2({bar_name(g.name)})", g.degree - 1, "P2", g.name)
                 for g in base.generators]
        self.algebra = FreeCDGA(gens, name="PP")
        A = self.algebra

        def relabel(slotL, slotR, barwrap):
            def rn(name):
                g = path.algebra.generators[path.algebra.index[name]]
                if g.tag == "pathL":
                    return f"{slotL}({g.base})"
                if g.tag == "pathR":
                    return f"{slotR}({g.base})"
                return f"{barwrap}({bar_name(g.base)})"
            return embedding(path.algebra, A, rename=rn)

        to1 = relabel("L", "M", "P1")
        to2 = relabel("M", "R", "P2")
        dvals = {}
        for g in base.generators:
            dP = path.D(path.algebra.gen(f"L({g.name})"))
            dvals[f"L({g.name})"] = to1(dP)
            dvals[f"M({g.name})"] = to2(path.D(path.algebra.gen(f"L({g.name})")))
            dvals[f"R({g.name})"] = to2(path.D(path.algebra.gen(f"R({g.name})")))
            dvals[f"P1({bar_name(g.name)})"] = to1(path.D(path.algebra.gen(f"P({bar_name(g.name)})")))
            dvals[f"P2({bar_name(g.name)})"] = to2(path.D(path.algebra.gen(f"P({bar_name(g.name)})")))
        self.D = A.set_differential(dvals)

        tau_vals = {}
        for g in base.generators:
            tau_vals[f"L({g.name})"] = A.gen(f"R({g.name})")
            tau_vals[f"M({g.name})"] = A.gen(f"M({g.name})")
            tau_vals[f"R({g.name})"] = A.gen(f"L({g.name})")
            tau_vals[f"P1({bar_name(g.name)})"] = -A.gen(f"P2({bar_name(g.name)})")
            tau_vals[f"P2({bar_name(g.name)})"] = -A.gen(f"P1({bar_name(g.name)})")
        tau2 = AlgebraMap(A, A, tau_vals, name="tau2")

        bar_idx = {i for i, g in enumerate(A.generators) if g.tag in ("P1", "P2")}
        processed = set()
        phi_vals = {}
        for g in base.generators:
            phi_vals[f"L({g.name})"] = A.gen(f"L({g.name})")
            phi_vals[f"R({g.name})"] = A.gen(f"R({g.name})")
        self.phi_corrections = {}
        for g in _sorted_gens(base):
            prim = A.gen(f"P1({bar_name(g.name)})") + A.gen(f"P2({bar_name(g.name)})")
            phi_partial = AlgebraMap(path.algebra, A, phi_vals, name="phi")
            target = phi_partial(path.D(path.algebra.gen(f"P({bar_name(g.name)})"))) \
                - self.D(prim)
            corr = None
            if not target.is_zero():
                def word_ok(m):
                    bars = [i for i in bar_idx if m[i]]
                    return bars and all(A.generators[i].base in processed for i in bars)
                cands = _antisym_candidates(A, g.degree - 1, word_ok, tau2)
                corr = _solve_correction(cands, self.D, target)
            self.phi_corrections[g.name] = corr
            phi_vals[f"P({bar_name(g.name)})"] = prim + corr if corr is not None else prim
            processed.add(g.name)
        self.phi = AlgebraMap(path.algebra, A, phi_vals, name="phi")
        bad = self.phi.chain_defect(d_source=path.D, d_target=self.D)
        if bad is not None:
            raise AlgebraError(f"composition model is not a chain map at {bad[0]}")


class TwoSided:
    """L (x)_{V} L = (V + Vbar^(1) + Vbar^(2)) with the slotwise differential."""

    def __init__(self, loop):
        self.loop = loop
        base = loop.base
        gens = [Generator(g.name, g.degree, "base", g.name) for g in base.generators]
        gens += [Generator(f"L({bar_name(g.name)})", g.degree - 1, "bar1", g.name)
                 for g in base.generators]
        gens += [Generator(f"R({bar_name(g.name)})", g.degree - 1, "bar2", g.name)
                 for g in base.generators]
        self.algebra = FreeCDGA(gens, name="LxL")
        A = self.algebra
        self.slot = {}
        for w, tag in ((1, "L"), (2, "R")):
            def rn(name, wrap=tag):
                g = loop.algebra.generators[loop.algebra.index[name]]
                if g.tag == "bar":
                    return f"{wrap}({name})"
                return name
            self.slot[w] = embedding(loop.algebra, A, rename=rn)
        dvals = {}
        for g in base.generators:
            dvals[g.name] = self.slot[1](loop.delta(loop.algebra.gen(g.name)))
            for w, wrap in ((1, "L"), (2, "R")):
                dbar = loop.delta(loop.algebra.gen(bar_name(g.name)))
                dvals[f"{wrap}({bar_name(g.name)})"] = self.slot[w](dbar)
        self.D = A.set_differential(dvals)


class BigModel:
    """P (x)_{(V)^2} L^2: slots V_L, V_R, path bars, and both loop bars."""

    def __init__(self, loop, path: PathModel):
        self.loop = loop
        self.path = path
        base = loop.base
        gens = [Generator(f"L({g.name})", g.degree, "L", g.name) for g in base.generators]
        gens += [Generator(f"R({g.name})", g.degree, "R", g.name) for g in base.generators]
        gens += [Generator(f"P({bar_name(g.name)})", g.degree - 1, "pathbar", g.name)
                 for g in base.generators]
        gens += [Generator(f"L({bar_name(g.name)})", g.degree - 1, "bar1", g.name)
                 for g in base.generators]
        gens += [Generator(f"R({bar_name(g.name)})", g.degree - 1, "bar2", g.name)
                 for g in base.generators]
        self.algebra = FreeCDGA(gens, name="PxL2")
        A = self.algebra
        # path part maps by name; loop bars differentiate slotwise
        emb_path = embedding(path.algebra, A)
        dvals = {}
        for g in path.algebra.generators:
            dvals[g.name] = emb_path(path.D(path.algebra.gen(g.name)))
        for w, wrap in ((1, "L"), (2, "R")):
            def rn(name, wrap=wrap):
                g = loop.algebra.generators[loop.algebra.index[name]]
                if g.tag == "bar":
                    return f"{wrap}({name})"
                return f"{wrap}({name})"
            emb = embedding(loop.algebra, A, rename=rn)
            for g in base.generators:
                dbar = loop.delta(loop.algebra.gen(bar_name(g.name)))
                dvals[f"{wrap}({bar_name(g.name)})"] = emb(dbar)
            if w == 1:
                self.emb1 = emb
            else:
                self.emb2 = emb
        self.D = A.set_differential(dvals)
        self.pathbar_idx = tuple(i for i, g in enumerate(A.generators)
                                 if g.tag == "pathbar")
        self.nL = base.n
        self.nP = 3 * base.n  # L, R, pathbar blocks come first

    def augment(self, two: TwoSided):
        """eps_P (x) 1: kill path bars, multiply the base slots."""
        A = self.algebra
        vals = {}
        for g in self.algebra.generators:
            if g.tag in ("L", "R"):
                vals[g.name] = two.algebra.gen(g.base)
            elif g.tag == "pathbar":
                vals[g.name] = two.algebra.zero()
            else:
                vals[g.name] = two.algebra.gen(g.name)
        return AlgebraMap(A, two.algebra, vals, name="eps(x)1")


# -- the shriek map -----------------------------------------------------------

class ShriekData:
    """Fundamental-class data for Diag!: an element of the tensor square
    of the base, extended (V)^2-linearly and by zero on positive path bars."""

    def __init__(self, base, fundamental: Element, tensor=None):
        self.base = base
        self.tensor = tensor or fundamental.alg
        self.fundamental = fundamental
        self.degree = fundamental.degree()

    @classmethod
    def transversal(cls, base):
        """The product of slot differences prod (R(g) - L(g)); valid for
        odd-generator (Lie-type) models, checked at validation time."""
        T = tensor_square(base)
        out = T.one()
        for g in base.generators:
            out = out * (T.gen(f"R({g.name})") - T.gen(f"L({g.name})"))
        return cls(base, out, T)

    def validate(self):
        """Chain-map conditions: d(fund) = 0 and (v_R - v_L) fund = 0."""
        T = self.tensor
        if not self.tensor.differential(self.fundamental).is_zero():
            return False, "fundamental class is not a cocycle"
        for g in self.base.generators:
            lhs = (T.gen(f"R({g.name})") - T.gen(f"L({g.name})")) * self.fundamental
            if not lhs.is_zero():
                return False, f"({g.name}_R - {g.name}_L) * fundamental != 0"
        return True, ""


# -- the assembled pipeline ---------------------------------------------------

# Module sign conventions, fixed once and for all by reproducing the
# 11-manifold bracket table coefficient-by-coefficient (see tests):
#   * Diag! is module-linear with the Koszul factor on the base-slot
#     prefix: Diag!(w p) = (-1)^{d |w|} w Diag!(p);
#   * beta (x) beta flips the two tensor slots (duals of tensor products
#     reverse order) with the Koszul sign of the *target* degrees:
#     a (x) b  ->  (-1)^{|sa||sb|} [s b] (x) [s a].
# With these choices the computed dual loop product is graded
# cocommutative and the dual string bracket is graded antisymmetric in
# the shifted string grading, uniformly on all inputs.
DIAG_MODULE_KOSZUL = True
DSB_CONVENTION = "flip_target_koszul"


class StringPipeline:
    """Everything needed to evaluate Dlp / Dsb on one Sullivan model."""

    def __init__(self, loop, cyclic, shriek: ShriekData, max_degree):
        self.loop = loop
        self.cyc = cyclic
        self.max_degree = max_degree
        self.path = PathModel(loop.base)
        self.comp_model = CompositionModel(self.path)
        self.two = TwoSided(loop)
        self.big = BigModel(loop, self.path)
        self.shriek = shriek
        ok, why = shriek.validate()
        if not ok:
            raise AlgebraError(f"shriek data rejected: {why}")
        self.L2 = tensor_square(loop.algebra)
        self._fund2 = self._embed_fundamental()
        self.m_comp = self._build_m_comp()
        self.sigma = self._build_sigma()
        self.HL = ComplexWindow(AlgebraComplex(loop.algebra, name="L"))
        self.HE = ComplexWindow(AlgebraComplex(cyclic.algebra, name="E"))
        self._harm_cache = {}
        self._beta_cache = {}

    # -- construction stages --------------------------------------------
    def _embed_fundamental(self):
        T = self.shriek.tensor
        vals = {g.name: self.L2.gen(g.name) for g in T.generators}
        emb = AlgebraMap(T, self.L2, vals, name="T->L2")
        return emb(self.shriek.fundamental)

    def _build_m_comp(self):
        """Push the composition model to L -> L (x)_V L."""
        A = self.comp_model.algebra
        TS = self.two.algebra
        vals = {}
        for g in A.generators:
            if g.tag in ("L", "M", "R"):
                vals[g.name] = TS.gen(g.base)
            elif g.tag == "P1":
                vals[g.name] = TS.gen(f"L({bar_name(g.base)})")
            else:
                vals[g.name] = TS.gen(f"R({bar_name(g.base)})")
        push = AlgebraMap(A, TS, vals, name="push")
        m_vals = {}
        for g in self.loop.base.generators:
            m_vals[g.name] = TS.gen(g.name)
            m_vals[bar_name(g.name)] = push(
                self.comp_model.phi(self.path.algebra.gen(f"P({bar_name(g.name)})")))
        m = AlgebraMap(self.loop.algebra, TS, m_vals, name="M_comp")
        bad = m.chain_defect(d_source=self.loop.delta, d_target=self.two.D)
        if bad is not None:
            raise AlgebraError(f"M_comp is not a chain map at {bad[0]}")
        return m

    def _build_sigma(self):
        """Generator-wise section of eps_P (x) 1 solving the chain condition."""
        TS, A = self.two.algebra, self.big.algebra
        loop = self.loop
        vals = {}
        for g in loop.base.generators:
            vals[g.name] = A.gen(f"L({g.name})")
        pathbars = set(self.big.pathbar_idx)
        order = []
        for g in _sorted_gens(loop.base):
            order.append((f"L({bar_name(g.name)})", 1))
            order.append((f"R({bar_name(g.name)})", 2))
        for name, slot in order:
            gdeg = TS.degrees[TS.index[name]]
            prim = A.gen(name)
            sigma_partial = AlgebraMap(TS, A, vals, name="sigma")
            target = sigma_partial(self.two.D(TS.gen(name))) - self.big.D(prim)
            corr = None
            if not target.is_zero():
                cands = [Element(A, {m: QQ(1)})
                         for m in A.degree_basis(gdeg)
                         if any(m[i] for i in pathbars)]
                corr = _solve_correction(cands, self.big.D, target)
            vals[name] = prim + corr if corr is not None else prim
        sigma = AlgebraMap(TS, A, vals, name="sigma")
        bad = sigma.chain_defect(d_source=self.two.D, d_target=self.big.D)
        if bad is not None:
            raise AlgebraError(f"sigma is not a chain map at {bad[0]}")
        eps = self.big.augment(self.two)
        for g in TS.generators:
            if eps(sigma(TS.gen(g.name))) != TS.gen(g.name):
                raise AlgebraError(f"sigma is not a section at {g.name}")
        return sigma

    # -- Diag! (x) 1 -------------------------------------------------------
    def diag_apply(self, elt: Element) -> Element:
        """Apply Diag! to the path part and multiply into the loop bars."""
        A = self.big.algebra
        nb = self.loop.base.n
        out = self.L2.zero()
        d = self.shriek.degree
        for m, c in elt.data.items():
            if any(m[i] for i in self.big.pathbar_idx):
                continue
            w = m[:2 * nb] + (0,) * (3 * nb)
            b = (0,) * (3 * nb) + m[3 * nb:]
            w_elt = self._rename_to_L2(w)
            b_elt = self._rename_to_L2(b)
            if DIAG_MODULE_KOSZUL and (d % 2) and (A.mono_degree(w) % 2):
                c = -c
            out = out + (w_elt * self._fund2 * b_elt).scale(c)
        return out

    def _rename_to_L2(self, mono):
        A = self.big.algebra
        out = self.L2.one()
        for i, e in enumerate(mono):
            if e:
                g = A.generators[i]
                out = out * self.L2.gen(g.name) ** e
        return out

    # -- the dual loop product ------------------------------------------
    def dlp_element(self, xi: Element) -> Element:
        """Chain-level Dlp applied to a delta-cocycle of the loop model."""
        assert self.loop.delta(xi).is_zero(), "dlp input must be a cocycle"
        stage = self.sigma(self.m_comp(xi))
        out = self.diag_apply(stage)
        assert self.L2.differential(out).is_zero(), "Dlp output must be a cocycle"
        return out

    def _harmonic(self, n, mono):
        key = (n, mono)
        hit = self._harm_cache.get(key)
        if hit is None:
            hit = self.HL.harmonic(n, {mono: QQ(1)})
            self._harm_cache[key] = hit
        return hit

    def kunneth(self, elt: Element):
        """Coordinates of an L^2 cocycle class over pairs of H(L) classes.

        Returns {((nL, i), (nR, j)): coeff}; the harmonic projection is
        applied factorwise (valid since 1 - P is null-homotopic)."""
        nb = self.loop.algebra.n
        out = {}
        for m, c in elt.data.items():
            mL, mR = m[:nb], m[nb:]
            dL = self.loop.algebra.mono_degree(mL)
            dR = self.loop.algebra.mono_degree(mR)
            pL = self._harmonic(dL, mL)
            if not pL:
                continue
            pR = self._harmonic(dR, mR)
            if not pR:
                continue
            for i, a in pL.items():
                for j, b in pR.items():
                    key = ((dL, i), (dR, j))
                    s = out.get(key, 0) + c * a * b
                    if s:
                        out[key] = s
                    else:
                        out.pop(key, None)
        return out

    def dlp_class(self, xi: Element):
        return self.kunneth(self.dlp_element(xi))

    # -- beta and the dual string bracket ---------------------------------
    def beta_class(self, n, i):
        """[s(rep)] in H(E) for the i-th degree-n homology class of L."""
        key = (n, i)
        hit = self._beta_cache.get(key)
        if hit is None:
            rep = self.HL.reps(n)[i]
            img = self.cyc.include(self.loop.s(Element(self.loop.algebra, rep)))
            hit = self.HE.coords(n - 1, img.data)
            self._beta_cache[key] = hit
        return hit

    def dsb_class(self, xi: Element):
        """(beta (x) beta) Dlp in H(E) (x) H(E) coordinates.

        Convention (fixed by the reproduced computation): the two output
        slots are flipped with the Koszul sign of the target degrees."""
        pairs = self.dlp_class(xi)
        out = {}
        for ((nL, i), (nR, j)), c in pairs.items():
            bL = self.beta_class(nL, i)
            bR = self.beta_class(nR, j)
            if not bL or not bR:
                continue
            if DSB_CONVENTION == "flip_target_koszul":
                sign = -1 if ((nL - 1) % 2) and ((nR - 1) % 2) else 1
                left, right, dl, dr = bR, bL, nR - 1, nL - 1
            elif DSB_CONVENTION == "flip_plain":
                sign = 1
                left, right, dl, dr = bR, bL, nR - 1, nL - 1
            else:  # plain Koszul, no flip
                sign = -1 if nL % 2 else 1
                left, right, dl, dr = bL, bR, nL - 1, nR - 1
            cc = c * sign
            for a, x in left.items():
                for b, y in right.items():
                    key = ((dl, a), (dr, b))
                    s = out.get(key, 0) + cc * x * y
                    if s:
                        out[key] = s
                    else:
                        out.pop(key, None)
        return out


def is_m11_shaped(base) -> bool:
    """Three generators of degrees (3,3,5) with d(top) = +- (product of
    the two degree-3 generators): the nonformal 11-manifold pattern."""
    degs = sorted(g.degree for g in base.generators)
    if degs != [3, 3, 5]:
        return False
    names = [g.name for g in base.generators]
    z = [n for n in names if base.degrees[base.index[n]] == 5][0]
    dz = base.differential(base.gen(z))
    xy = [n for n in names if n != z]
    expect = base.gen(xy[0]) * base.gen(xy[1])
    return dz == expect or dz == -expect


class HCNames:
    """Named basis of the beta-image (plus the u-line) in HC-.

    For the 11-manifold model the classical zeta/eta/theta names are
    used; otherwise classes are beta-images of canonical cokernel
    representatives, labelled b[deg,index]."""

    def __init__(self, pipeline: StringPipeline, max_degree):
        self.pipe = pipeline
        self.max_degree = max_degree
        self.loop = pipeline.loop
        self.cyc = pipeline.cyc
        self._names = {}
        self._solvers = {}
        self.m11 = is_m11_shaped(self.loop.base)

    def _fact(self, k):
        out = 1
        for i in range(2, k + 1):
            out *= i
        return out

    def _m11_names(self, n):
        """zeta_{p,q} (deg 2p+2q), eta_{p,q} (deg 5+2p+2q), theta_r (deg 6+4r)."""
        A = self.loop.algebra
        base = self.loop.base
        by_deg = sorted(base.generators, key=lambda g: (g.degree, base.index[g.name]))
        xn, yn, zn = by_deg[0].name, by_deg[1].name, by_deg[2].name
        x, y, z = A.gen(xn), A.gen(yn), A.gen(zn)
        xb, yb, zb = A.gen(bar_name(xn)), A.gen(bar_name(yn)), A.gen(bar_name(zn))
        out = []
        if n % 2 == 0:
            for p in range(0, n // 2 + 1):
                q = (n - 2 * p) // 2
                rep = (xb ** p * yb ** q).scale(QQ(1, self._fact(p) * self._fact(q)))
                out.append((("zeta", p, q), self.cyc.include(rep)))
            if n >= 10 and (n - 6) % 4 == 0:
                r = (n - 6) // 4
                if r >= 1:
                    rep = self.loop.s(x * y * z * zb ** (r - 1))
                    out.append((("theta", r), self.cyc.include(rep)))
        else:
            if n >= 5 and (n - 5) % 2 == 0:
                for p in range(0, (n - 5) // 2 + 1):
                    q = (n - 5 - 2 * p) // 2
                    if (p, q) == (0, 0):
                        continue
                    if p >= 1:
                        rep = z * xb ** p * yb ** q - x * xb ** (p - 1) * yb ** q * zb
                    else:
                        rep = z * yb ** q - y * yb ** (q - 1) * zb
                    rep = rep.scale(QQ(1, self._fact(p) * self._fact(q)))
                    out.append((("eta", p, q), self.cyc.include(rep)))
        return out

    def _generic_names(self, n):
        """beta of the canonical cokernel basis of B~ at degree n+1."""
        loop, cyc = self.loop, self.cyc
        HL = self.pipe.HL
        # image of B~ into degree n+1 (from n+2), as homology coordinates
        img = Echelon()
        for rep in HL.reps(n + 2):
            elt = loop.s(Element(loop.algebra, rep))
            if not elt.is_zero():
                cc = HL.coords(n + 1, elt.data)
                img.insert(dict(cc))
        out = []
        for i, rep in enumerate(HL.reps(n + 1)):
            if img.insert({i: QQ(1)}) is None:
                continue
            if not any(rep):  # the unit class: beta(1) = 0
                continue
            sr = loop.s(Element(loop.algebra, rep))
            if sr.is_zero():
                continue
            out.append((("b", n + 1, i), cyc.include(sr)))
        return out

    def names(self, n):
        hit = self._names.get(n)
        if hit is None:
            out = self._m11_names(n) if self.m11 else self._generic_names(n)
            if n % 2 == 0 and n >= 0:
                u = self.cyc.algebra.gen("u")
                out.append((("u", n // 2), u ** (n // 2)))
            hit = self._names[n] = out
        return hit

    def _solver(self, n):
        hit = self._solvers.get(n)
        if hit is None:
            ech = Echelon(track_shadows=True)
            labels = []
            for label, rep in self.names(n):
                cc = self.pipe.HE.coords(n, rep.data)
                ech.insert(dict(cc), {len(labels): QQ(1)})
                labels.append(label)
            hit = self._solvers[n] = (ech, labels)
        return hit

    def express(self, n, coords):
        """Write H(E) coordinates in the named basis, or None if outside."""
        ech, labels = self._solver(n)
        rem, shadow = ech.reduce(dict(coords), {})
        if rem:
            return None
        return {labels[j]: -c for j, c in shadow.items() if c}

    def express_pairs(self, pair_coords):
        """Named expansion of an H(E) (x) H(E) coordinate dictionary."""
        out = {}
        for ((dl, a), (dr, b)), c in pair_coords.items():
            eL = self.express(dl, {a: QQ(1)})
            eR = self.express(dr, {b: QQ(1)})
            if eL is None or eR is None:
                return None
            for la, x in eL.items():
                for lb, y in eR.items():
                    key = (la, lb)
                    s = out.get(key, 0) + c * x * y
                    if s:
                        out[key] = s
                    else:
                        out.pop(key, None)
        return out

    def class_element(self, label) -> Element:
        """Representative cocycle (in L) of a named class under pi (u -> 0)."""
        for n in range(0, self.max_degree + 1):
            for lab, rep in self.names(n):
                if lab == label:
                    return self.cyc.set_u_zero(rep)
        raise KeyError(label)


def dsb_named(pipeline: StringPipeline, names: HCNames, label):
    """Dsb of a named HC- class, expanded in named tensor pairs."""
    if label[0] == "u" and label[1] > 0:
        return {}
    xi = names.class_element(label)
    return names.express_pairs(pipeline.dsb_class(xi))


def dsb_transpose_bracket(pipeline, names, label_a, label_b, degree_d):
    """The homology-side string bracket on duals of named classes:
    [a*, b*] = sum_rho <Dsb(rho), a (x) b> rho*."""
    deg_a = _label_degree(names, label_a)
    deg_b = _label_degree(names, label_b)
    rho_deg = deg_a + deg_b - degree_d + 2
    out = {}
    for lab, _ in names.names(rho_deg):
        got = dsb_named(pipeline, names, lab)
        if got is None:
            continue
        c = got.get((label_a, label_b), 0)
        if c:
            out[lab] = c
    return out


def _label_degree(names, label):
    if label[0] == "u":
        return 2 * label[1]
    for n in range(0, names.max_degree + 1):
        for lab, rep in names.names(n):
            if lab == label:
                return n
    raise KeyError(label)


class LoopHomology:
    """The homology side of the string operations: functionals on the
    canonical H(L)-window classes, with the loop product and BV operator
    realized as exact transposes of Dlp and H(s~).

    A dual vector is (n, {i: c}) pairing against degree-n classes."""

    def __init__(self, pipeline: StringPipeline):
        self.pipe = pipeline
        self.d = pipeline.shriek.degree
        self._dlp_cache = {}

    def dual_of(self, elt: Element):
        """The functional dual to a single canonical class (the element's
        coordinates must hit exactly one basis vector)."""
        n = elt.degree()
        coords = self.pipe.HL.coords(n, elt.data)
        assert len(coords) == 1, "dual_of expects a canonical basis class"
        (i, c), = coords.items()
        return (n, {i: 1 / QQ(c)})

    def _dlp_of_class(self, n, i):
        key = (n, i)
        hit = self._dlp_cache.get(key)
        if hit is None:
            rep = Element(self.pipe.loop.algebra, self.pipe.HL.reps(n)[i])
            hit = self.pipe.dlp_class(rep)
            self._dlp_cache[key] = hit
        return hit

    def product(self, a, b):
        """Chas-Sullivan loop product as the transpose of Dlp."""
        na, ca = a
        nb, cb = b
        m = na + nb - self.d
        out = {}
        dimm = self.pipe.HL.dim(m)
        for k in range(dimm):
            pairs = self._dlp_of_class(m, k)
            total = QQ(0)
            for ((dl, i), (dr, j)), c in pairs.items():
                if dl == na and dr == nb:
                    total += c * ca.get(i, 0) * cb.get(j, 0)
            if total:
                out[k] = total
        return (m, out)

    def bv(self, a):
        """Homology BV operator: the transpose of H(s~)."""
        na, ca = a
        m = na + 1
        out = {}
        for k in range(self.pipe.HL.dim(m)):
            rep = Element(self.pipe.loop.algebra, self.pipe.HL.reps(m)[k])
            img = self.pipe.loop.s(rep)
            if img.is_zero():
                continue
            coords = self.pipe.HL.coords(na, img.data)
            total = QQ(0)
            for i, c in coords.items():
                total += c * ca.get(i, 0)
            if total:
                out[k] = total
        return (m, out)

    def in_ker_bv(self, a):
        _, coords = self.bv(a)
        return not coords

    def bracket(self, a, b):
        """String bracket via the loop product and the BV operator
        (valid for classes in ker of the reduced BV operator)."""
        return self.bv(self.product(a, b))

    def gravity(self, args):
        """n-ary gravity bracket: BV of the iterated loop product."""
        assert len(args) >= 2
        prod = args[0]
        for x in args[1:]:
            prod = self.product(prod, x)
        return self.bv(prod)

    def format(self, a):
        n, coords = a
        if not coords:
            return "0"
        parts = []
        for i in sorted(coords):
            rep = Element(self.pipe.loop.algebra, self.pipe.HL.reps(n)[i])
            parts.append(f"({coords[i]})*dual[{rep}]")
        return " + ".join(parts)
