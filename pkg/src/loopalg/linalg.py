"""Sparse exact linear algebra over Q.

Vectors are {index: rational} dicts over an arbitrary hashable index
set.  The workhorse is an online reduced-echelon structure supporting
incremental insertion, full reduction with coefficient recording, and
optional shadow vectors (for kernel extraction and preimage tracking).
Everything is deterministic given the insertion order.
"""

import os
from .scalars import QQ


class MemoryBudgetError(RuntimeError):
    pass


def _budget_entries():
    cap = os.environ.get("LOOPALG_MAX_MEM_MB")
    if not cap:
        return None
    # soft estimate: ~80 bytes per stored nonzero
    return int(cap) * (1 << 20) // 80


def vec_add_scaled(target, src, c):
    """target += c * src, in place (dict arithmetic)."""
    if not c:
        return target
    for k, v in src.items():
        s = target.get(k, 0) + c * v
        if s:
            target[k] = s
        else:
            target.pop(k, None)
    return target


def vec_scale(v, c):
    c = QQ(c)
    return {k: c * x for k, x in v.items()} if c else {}


class Echelon:
    """Row-echelon span with optional shadow bookkeeping.

    Each row is normalized with coefficient 1 at its pivot, the minimal
    index under the sort key.  Reduction remainders and recorded
    coefficients are unique (hence canonical) whether or not rows are
    kept fully inter-reduced; reduced=True additionally back-cleans so
    stored rows are RREF.
    """

    def __init__(self, key=None, track_shadows=False, reduced=False):
        self.rows = {}      # pivot -> row vector
        self.shadows = {}   # pivot -> shadow vector
        self.order = []     # pivots in insertion order
        self.key = key or (lambda idx: idx)
        self.track = track_shadows
        self.reduced = reduced
        self._entries = 0
        self._cap = _budget_entries()

    def __len__(self):
        return len(self.order)

    def _charge(self, n):
        self._entries += n
        if self._cap is not None and self._entries > self._cap:
            raise MemoryBudgetError(
                "matrix workspace exceeds LOOPALG_MAX_MEM_MB soft cap")

    def reduce(self, v, shadow=None, record=None):
        """Fully reduce v (a fresh dict) against the span.

        record, if given, collects {pivot: coefficient} of the reduction
        v = remainder + sum coeff * row[pivot].
        """
        v = {k: c for k, c in v.items() if c}
        shadow = dict(shadow) if shadow is not None else None
        while True:
            hits = [k for k in v if k in self.rows]
            if not hits:
                break
            for k in sorted(hits, key=self.key):
                c = v.get(k)
                if not c:
                    continue
                vec_add_scaled(v, self.rows[k], -c)
                if shadow is not None and k in self.shadows:
                    vec_add_scaled(shadow, self.shadows[k], -c)
                if record is not None:
                    record[k] = record.get(k, QQ(0)) + c
        return v, shadow

    def insert(self, v, shadow=None):
        """Insert a vector; returns the new pivot or None if dependent.

        When dependent and shadows are tracked, the reduced shadow (a
        kernel combination) is available via .last_kernel.
        """
        if self.track and shadow is None:
            shadow = {}
        v, shadow = self.reduce(v, shadow)
        if not v:
            self.last_kernel = shadow
            return None
        pivot = min(v, key=self.key)
        inv = 1 / QQ(v[pivot])
        row = vec_scale(v, inv)
        srow = vec_scale(shadow, inv) if shadow is not None else None
        if self.reduced:
            for p in self.order:
                c = self.rows[p].get(pivot)
                if c:
                    vec_add_scaled(self.rows[p], row, -c)
                    if srow is not None and p in self.shadows:
                        vec_add_scaled(self.shadows[p], srow, -c)
        self.rows[pivot] = row
        if srow is not None:
            self.shadows[pivot] = srow
        self.order.append(pivot)
        self._charge(len(row) + (len(srow) if srow else 0))
        self.last_kernel = None
        return pivot

    def contains(self, v):
        r, _ = self.reduce(v)
        return not r


def kernel_basis(columns, key=None):
    """Kernel of the linear map sending e_j to columns[j].

    Returns (kernel vectors over column indices, echelon of the image).
    Deterministic: kernel vectors appear in ascending j order.
    """
    ech = Echelon(key=key, track_shadows=True)
    kernel = []
    for j, col in enumerate(columns):
        piv = ech.insert(dict(col), {j: QQ(1)})
        if piv is None:
            kernel.append(ech.last_kernel)
    return kernel, ech


def solve_in_span(columns, target, key=None):
    """Coefficients x with sum x_j columns[j] = target, or None.

    Returns the echelon-canonical solution (deterministic)."""
    ech = Echelon(key=key, track_shadows=True)
    for j, col in enumerate(columns):
        ech.insert(dict(col), {j: QQ(1)})
    rem, shadow = ech.reduce(dict(target), {})
    if rem:
        return None
    return {j: -c for j, c in shadow.items() if c}


def rank(columns, key=None):
    ech = Echelon(key=key)
    for col in columns:
        ech.insert(dict(col))
    return len(ech)
