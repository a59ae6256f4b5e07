"""Robust random cut forest with sliding-window trees.

Each tree holds the last `tree_capacity` points; insertion draws a cut
uniformly over the combined bounding box (dimension picked proportional
to side length) and deletion splices the sibling back in, so the tree
stays distributed as a random cut tree over the window. The score of x
is its collusive displacement averaged over trees, computed on a
*simulated* insertion: the would-be attachment point is found with a copy
of the tree's generator state, so scoring stays pure and the following
learn step replays identical draws. Exact duplicates share a leaf with a
multiplicity count instead of forcing zero-volume cuts.

Kept in plain Python objects: per-event work is pointer chasing over
small trees, which neither kernel backend would change materially.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..core import Detector
from ..params import RRCFParams, validate
from ._util import child_rng


class _Leaf:
    __slots__ = ("x", "n", "parent")

    def __init__(self, x, parent=None):
        self.x = x
        self.n = 1
        self.parent = parent


class _Branch:
    __slots__ = ("q", "p", "left", "right", "n", "parent", "bmin", "bmax")

    def __init__(self, q, p, left, right, parent=None):
        self.q = q
        self.p = p
        self.left = left
        self.right = right
        self.parent = parent
        self.n = 0
        self.bmin = None
        self.bmax = None


def _node_bounds(node):
    if isinstance(node, _Leaf):
        return node.x, node.x
    return node.bmin, node.bmax


def _draw_cut(bmin, bmax, x, rng):
    """Cut over the box merged with x: (dimension, cut value)."""
    cmin = np.minimum(bmin, x)
    cmax = np.maximum(bmax, x)
    span = cmax - cmin
    total = span.sum()
    r = rng.uniform(0.0, total)
    cum = np.cumsum(span)
    dim = int(np.searchsorted(cum, r))
    if dim == len(cum):
        dim = len(cum) - 1
    cut = cmin[dim] + cum[dim] - r
    return dim, cut


class _Tree:
    def __init__(self, rng):
        self.root = None
        self.leaves = {}
        self.rng = rng

    # -- read-only helpers -------------------------------------------

    def query(self, x):
        node = self.root
        while isinstance(node, _Branch):
            node = node.left if x[node.q] <= node.p else node.right
        return node

    def _attachment(self, x, rng):
        """Walk as insertion would; returns the displaced node (or a
        duplicate leaf). Consumes one uniform per non-separating level."""
        leaf = self.query(x)
        if leaf is not None and np.array_equal(leaf.x, x):
            return leaf, True
        node = self.root
        while True:
            bmin, bmax = _node_bounds(node)
            dim, cut = _draw_cut(bmin, bmax, x, rng)
            if cut <= bmin[dim] or cut >= bmax[dim]:
                return node, False
            node = node.left if x[node.q] <= node.p else node.right

    def codisp_virtual(self, x, rng):
        """CoDisp x would have right after insertion (no mutation)."""
        if self.root is None:
            return 0.0
        node, dup = self._attachment(x, rng)
        if dup:
            best = 0.0
            own = node.n + 1
            cur = node
        else:
            best = float(node.n)  # sibling mass over x's singleton side
            own = node.n + 1
            cur = node
        while cur.parent is not None:
            parent = cur.parent
            sib = parent.right if parent.left is cur else parent.left
            ratio = sib.n / own
            if ratio > best:
                best = ratio
            own = parent.n + 1
            cur = parent
        return best

    # -- mutation -----------------------------------------------------

    def _bump_counts(self, node, delta):
        while node is not None:
            node.n += delta
            node = node.parent

    def insert(self, key, x):
        """Actual insertion; mirrors _attachment draw-for-draw."""
        if self.root is None:
            leaf = _Leaf(x)
            self.root = leaf
            self.leaves[key] = leaf
            return
        leaf = self.query(x)
        if leaf is not None and np.array_equal(leaf.x, x):
            leaf.n += 1
            self._bump_counts(leaf.parent, +1)
            self.leaves[key] = leaf
            return
        node = self.root
        while True:
            bmin, bmax = _node_bounds(node)
            dim, cut = _draw_cut(bmin, bmax, x, self.rng)
            if cut <= bmin[dim] or cut >= bmax[dim]:
                break
            node = node.left if x[node.q] <= node.p else node.right
        new_leaf = _Leaf(x)
        parent = node.parent
        if cut <= bmin[dim]:
            branch = _Branch(dim, cut, new_leaf, node, parent)
        else:
            branch = _Branch(dim, cut, node, new_leaf, parent)
        node.parent = branch
        new_leaf.parent = branch
        branch.n = node.n + 1
        nmin, nmax = _node_bounds(node)
        branch.bmin = np.minimum(nmin, x)
        branch.bmax = np.maximum(nmax, x)
        if parent is None:
            self.root = branch
        elif parent.left is node:
            parent.left = branch
        else:
            parent.right = branch
        self._bump_counts(parent, +1)
        up = parent
        while up is not None:
            np.minimum(up.bmin, x, out=up.bmin)
            np.maximum(up.bmax, x, out=up.bmax)
            up = up.parent
        self.leaves[key] = new_leaf

    def forget(self, key):
        leaf = self.leaves.pop(key)
        if leaf.n > 1:
            leaf.n -= 1
            self._bump_counts(leaf.parent, -1)
            return
        parent = leaf.parent
        if parent is None:
            self.root = None
            return
        sibling = parent.right if parent.left is leaf else parent.left
        grand = parent.parent
        sibling.parent = grand
        if grand is None:
            self.root = sibling
        elif grand.left is parent:
            grand.left = sibling
        else:
            grand.right = sibling
        self._bump_counts(grand, -1)
        up = grand
        while up is not None:
            lmin, lmax = _node_bounds(up.left)
            rmin, rmax = _node_bounds(up.right)
            up.bmin = np.minimum(lmin, rmin)
            up.bmax = np.maximum(lmax, rmax)
            up = up.parent
        return

    @property
    def size(self):
        return self.root.n if self.root is not None else 0


class RRCF(Detector):
    kind = "RRCF"

    def __init__(self, params: RRCFParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or RRCFParams()
        validate(self.kind, self.params)
        self._trees = [
            _Tree(child_rng(self.seed, 8, t)) for t in range(self.params.n_trees)
        ]
        self._keys = deque()
        self._next_key = 0

    def _score(self, x):
        total = 0.0
        for tree in self._trees:
            shadow = np.random.Generator(np.random.PCG64())
            shadow.bit_generator.state = tree.rng.bit_generator.state
            total += tree.codisp_virtual(x, shadow)
        return total / len(self._trees)

    def _learn(self, x):
        if len(self._keys) >= self.params.tree_capacity:
            old = self._keys.popleft()
            for tree in self._trees:
                tree.forget(old)
        key = self._next_key
        self._next_key += 1
        self._keys.append(key)
        xc = x.copy()
        for tree in self._trees:
            tree.insert(key, xc)

    @property
    def stored_points(self):
        return len(self._keys)
