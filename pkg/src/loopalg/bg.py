"""Loop cohomology of BG as a BV algebra, and its string cobracket.

For a compact connected Lie group of rank N with H*(BG) = Q[y_1..y_N],
deg y_i = 2 m_i, the shifted loop cohomology is the tensor product
Q[y_1..y_N] (x) Exterior(xv_1..xv_N) with deg xv_i = -(2 m_i - 1) and
BV operator

    Delta(y^k xv_{i_1}..xv_{i_s}) = sum_j (-1)^{j-1} k_{i_j} *
        y^{k - e_{i_j}} xv_{i_1}..^{i_j}..xv_{i_s}.

Brackets are computed in the cokernel-of-Delta model: the class of 1 in
Hochschild homology corresponds to the top exterior monomial, the u-line
lifts through it, and [x, y] = (-1)^{sdeg x} Cok(lift(x) lift(y))."""

from dataclasses import dataclass
from .scalars import QQ
from .linalg import Echelon


class BGAlgebra:
    """Monomials are (k_tuple, smask): polynomial exponents and the
    exterior subset as a bitmask."""

    def __init__(self, degrees):
        """degrees: the m_i with deg y_i = 2 m_i (all m_i >= 1)."""
        assert all(m >= 1 for m in degrees)
        self.m = tuple(degrees)
        self.N = len(degrees)
        self.ydeg = tuple(2 * m for m in degrees)
        self.xdeg = tuple(-(2 * m - 1) for m in degrees)
        self.dim_g = sum(2 * m - 1 for m in degrees)
        self.top = (1 << self.N) - 1

    # -- monomials ---------------------------------------------------------
    def degree(self, mono):
        k, s = mono
        d = sum(e * y for e, y in zip(k, self.ydeg))
        for i in range(self.N):
            if s >> i & 1:
                d += self.xdeg[i]
        return d

    def one(self):
        return {((0,) * self.N, 0): QQ(1)}

    def y(self, i, e=1):
        k = [0] * self.N
        k[i] = e
        return {(tuple(k), 0): QQ(1)}

    def xv(self, i):
        return {((0,) * self.N, 1 << i): QQ(1)}

    def mono_mul(self, m1, m2):
        (k1, s1), (k2, s2) = m1, m2
        if s1 & s2:
            return None
        # crossings: pairs (i in s1, j in s2) with i > j; xv's are odd
        count = 0
        s = s2
        while s:
            j = (s & -s).bit_length() - 1
            count += (s1 >> (j + 1)).bit_count()
            s &= s - 1
        sign = -1 if count % 2 else 1
        return sign, (tuple(a + b for a, b in zip(k1, k2)), s1 | s2)

    def mul(self, e1, e2):
        out = {}
        for m1, c1 in e1.items():
            for m2, c2 in e2.items():
                got = self.mono_mul(m1, m2)
                if got is None:
                    continue
                sign, m = got
                s = out.get(m, 0) + sign * c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return out

    def scale(self, e, c):
        c = QQ(c)
        return {m: c * v for m, v in e.items()} if c else {}

    def add(self, e1, e2):
        out = dict(e1)
        for m, c in e2.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return out

    def mono_str(self, mono):
        k, s = mono
        parts = []
        for i, e in enumerate(k):
            if e:
                parts.append(f"y{i+1}" + (f"^{e}" if e > 1 else ""))
        for i in range(self.N):
            if s >> i & 1:
                parts.append(f"xv{i+1}")
        return "*".join(parts) if parts else "1"

    def elt_str(self, e):
        if not e:
            return "0"
        parts = []
        for m, c in sorted(e.items()):
            parts.append(f"({c})*{self.mono_str(m)}")
        return " + ".join(parts)

    # -- the BV operator ---------------------------------------------------
    def delta_mono(self, mono):
        """Closed-formula BV value on one monomial."""
        k, s = mono
        out = {}
        j = 0
        for i in range(self.N):
            if not (s >> i & 1):
                continue
            if k[i]:
                sign = -1 if j % 2 else 1
                kk = list(k)
                kk[i] -= 1
                key = (tuple(kk), s & ~(1 << i))
                c = QQ(sign * k[i])
                v = out.get(key, 0) + c
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
            j += 1
        return out

    def delta(self, e):
        out = {}
        for m, c in e.items():
            for mm, cc in self.delta_mono(m).items():
                s = out.get(mm, 0) + c * cc
                if s:
                    out[mm] = s
                else:
                    out.pop(mm, None)
        return out

    # -- degree enumeration & the cokernel model ---------------------------
    def basis(self, deg):
        """All monomials of a given shifted degree (finite)."""
        out = []
        for s in range(1 << self.N):
            sd = sum(self.xdeg[i] for i in range(self.N) if s >> i & 1)
            rem = deg - sd
            if rem < 0:
                continue
            out.extend((k, s) for k in self._poly_exps(rem))
        return sorted(out)

    def _poly_exps(self, deg, i=0):
        if i == self.N:
            return [()] if deg == 0 else []
        out = []
        step = self.ydeg[i]
        for e in range(deg // step + 1):
            for tail in self._poly_exps(deg - e * step, i + 1):
                out.append((e,) + tail)
        return out

    def cok_reduce(self, e):
        """Project onto H~H / Im Delta: drop the topbar line (the unit of
        Hochschild homology) and reduce modulo the Delta image degreewise."""
        out = {}
        by_deg = {}
        for m, c in e.items():
            if m == ((0,) * self.N, self.top):
                continue  # the HH-unit class, killed by the reduction
            by_deg.setdefault(self.degree(m), {})[m] = c
        for deg, vec in by_deg.items():
            ech = self._im_delta(deg)
            rem, _ = ech.reduce(vec)
            for m, c in rem.items():
                if c:
                    out[m] = c
        return out

    def _im_delta(self, deg):
        if not hasattr(self, "_im_cache"):
            self._im_cache = {}
        hit = self._im_cache.get(deg)
        if hit is None:
            ech = Echelon()
            for m in self.basis(deg + 1):
                img = self.delta_mono(m)
                if img:
                    ech.insert(dict(img))
            hit = self._im_cache[deg] = ech
        return hit

    def in_im_delta(self, e):
        return not self.cok_reduce(e) and not any(
            m == ((0,) * self.N, self.top) for m in e)

    # -- string cobracket ----------------------------------------------------
    def sdeg(self, cls):
        """Shifted string degree of a class."""
        kind, val = cls
        if kind == "u":
            return 2 * val - self.dim_g - 1
        degs = {self.degree(m) for m in val}
        assert len(degs) == 1, "cokernel class must be homogeneous"
        return degs.pop() - 2

    def lift(self, cls):
        """pi of a string class: Delta of a cokernel representative, the
        HH-unit (top exterior monomial) for u^0, zero for u^l (l >= 1)."""
        kind, val = cls
        if kind == "u":
            if val == 0:
                return {((0,) * self.N, self.top): QQ(1)}
            return {}
        return self.delta(val)

    def cobracket(self, x, y):
        """[x, y] = (-1)^{sdeg x} Cok(lift(x) lift(y)), a cokernel class."""
        prod = self.mul(self.lift(x), self.lift(y))
        sign = -1 if self.sdeg(x) % 2 else 1
        return self.cok_reduce(self.scale(prod, sign))

    def gravity(self, args):
        """n-ary bracket (-1)^{sum (n-i) sdeg x_i} Cok(prod lift(x_i))."""
        n = len(args)
        assert n >= 2
        prod = self.one()
        exp = 0
        for i, cls in enumerate(args, start=1):
            prod = self.mul(prod, self.lift(cls))
            if i < n:
                exp += (n - i) * self.sdeg(cls)
        return self.cok_reduce(self.scale(prod, -1 if exp % 2 else 1))

    # -- consistency ---------------------------------------------------------
    def bv_identity_defect(self, a, b, c):
        """The seven-term BV identity evaluated on three elements."""
        def sd(e):
            degs = {self.degree(m) for m in e}
            assert len(degs) == 1
            return degs.pop()
        sa, sb = sd(a), sd(b)
        ab = self.mul(a, b)
        bc = self.mul(b, c)
        ac = self.mul(a, c)
        out = self.delta(self.mul(ab, c))
        out = self.add(out, self.scale(self.mul(self.delta(ab), c), -1))
        out = self.add(out, self.scale(self.mul(a, self.delta(bc)),
                                       -(1 if sa % 2 == 0 else -1)))
        out = self.add(out, self.scale(self.mul(b, self.delta(ac)),
                                       -(1 if (sa * sb + sb) % 2 == 0 else -1)))
        out = self.add(out, self.mul(self.delta(a), self.mul(b, c)))
        out = self.add(out, self.scale(self.mul(a, self.mul(self.delta(b), c)),
                                       1 if sa % 2 == 0 else -1))
        out = self.add(out, self.scale(self.mul(ab, self.delta(c)),
                                       1 if (sa + sb) % 2 == 0 else -1))
        return out


def parse_bg_class(A: BGAlgebra, text: str):
    """'u^l' or an expression in y1..yN, xv1..xvN (monomial products)."""
    text = text.strip()
    if text == "u" or text.startswith("u^"):
        return ("u", 1 if text == "u" else int(text.split("^")[1]))
    out = A.one()
    for factor in text.split("*"):
        factor = factor.strip()
        if "^" in factor:
            sym, e = factor.split("^")
            e = int(e)
        else:
            sym, e = factor, 1
        sym = sym.strip()
        if sym.startswith("y"):
            term = A.y(int(sym[1:]) - 1, e)
        elif sym.startswith("xv"):
            term = A.xv(int(sym[2:]) - 1)
            assert e == 1, "exterior generators square to zero"
        else:
            raise ValueError(f"unknown BG symbol {sym!r}")
        out = A.mul(out, term)
    return ("cok", out)
