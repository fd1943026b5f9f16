"""Planar embedding of vertices from vantage-pair hop distances.

Each vantage pair spans a chord of the unit circle; a vertex's hop
distances to the two endpoints fix a triangle whose apex, rotated by the
pair's placement angle, is the vertex's point for that pair.  The final
position is the centroid over all pairs with usable distances.  A
point-region quadtree over the normalized positions then yields the
candidate buckets.
"""

from __future__ import annotations

import math

import numpy as np


def pair_angles(n_pairs: int) -> list:
    """Placement angle of each pair: i * pi / n_pairs for pair index i."""
    theta = math.pi / n_pairs
    return [i * theta for i in range(n_pairs)]


def pair_endpoints(n_pairs: int) -> list:
    """Unit-circle endpoints per pair; pair 0 sits at (1,0) and (-1,0)."""
    out = []
    for ang in pair_angles(n_pairs):
        c, s = math.cos(ang), math.sin(ang)
        out.append(((c, s), (-c, -s)))
    return out


def triangle_point(a: float, b: float, c: float):
    """Apex of the triangle with base 2 after scaling distances by 2/c.

    a and b are the distances to the two pair endpoints, c the distance
    between the endpoints (> 0).  The apex is placed off the base from
    (1, 0), in the upper half-plane.
    """
    ap = 2.0 * a / c
    bp = 2.0 * b / c
    if ap == 0.0:
        return (1.0, 0.0)
    arg = (ap * ap + 4.0 - bp * bp) / (4.0 * ap)
    arg = min(1.0, max(-1.0, arg))
    alpha = math.acos(arg)
    return (1.0 - ap * math.cos(alpha), ap * math.sin(alpha))


def compute_position(u: int, pairs, rows, pair_seps):
    """Centroid position of one vertex; returns (x, y, valid_pair_count).

    rows[i] is the distance row of pair i's first member toward u's
    graph, pair_seps[i] the distance between the pair's members in that
    graph.  Pairs with unreachable endpoints or zero separation are
    skipped; no usable pair leaves the vertex unpositioned (count 0).
    """
    angles = pair_angles(len(pairs))
    sx = 0.0
    sy = 0.0
    cnt = 0
    for i in range(len(pairs)):
        c = pair_seps[i]
        if not (0 < c < math.inf):
            continue
        a = rows[i][0][u]
        b = rows[i][1][u]
        if a < 0 or b < 0:
            continue
        x, y = triangle_point(float(a), float(b), float(c))
        rot = angles[i]
        cr, sr = math.cos(rot), math.sin(rot)
        sx += x * cr - y * sr
        sy += x * sr + y * cr
        cnt += 1
    if cnt == 0:
        return (0.0, 0.0, 0)
    return (sx / cnt, sy / cnt, cnt)


def compute_all_positions(n: int, pairs, rows, pair_seps):
    """Vectorized :func:`compute_position` over all vertices of a graph.

    Returns (coords array of shape (n, 2), valid-pair counts of shape
    (n,)); coordinates of vertices with count 0 are zeros and must be
    ignored by the caller.
    """
    angles = pair_angles(len(pairs))
    acc = np.zeros((n, 2), dtype=np.float64)
    cnt = np.zeros(n, dtype=np.int64)
    for i in range(len(pairs)):
        c = pair_seps[i]
        if not (0 < c < math.inf):
            continue
        a = rows[i][0]
        b = rows[i][1]
        valid = (a >= 0) & (b >= 0)
        ap = 2.0 * a.astype(np.float64) / c
        bp = 2.0 * b.astype(np.float64) / c
        safe = np.where(ap > 0.0, ap, 1.0)
        arg = (ap * ap + 4.0 - bp * bp) / (4.0 * safe)
        np.clip(arg, -1.0, 1.0, out=arg)
        alpha = np.arccos(arg)
        x = 1.0 - ap * np.cos(alpha)
        y = ap * np.sin(alpha)
        # ap == 0 pins the point to the first endpoint before rotation
        x = np.where(ap > 0.0, x, 1.0)
        y = np.where(ap > 0.0, y, 0.0)
        cr, sr = math.cos(angles[i]), math.sin(angles[i])
        acc[valid, 0] += (x * cr - y * sr)[valid]
        acc[valid, 1] += (x * sr + y * cr)[valid]
        cnt[valid] += 1
    pos = np.zeros((n, 2), dtype=np.float64)
    good = cnt > 0
    pos[good] = acc[good] / cnt[good, None]
    return pos, cnt


def normalize_coords(coord_arrays, valid_masks) -> float:
    """Scale all coordinates in place into [-1, 1] by the global extreme.

    The divisor is max(1, largest absolute coordinate over the valid
    vertices of every array); it is returned for reporting.
    """
    peak = 1.0
    for coords, valid in zip(coord_arrays, valid_masks):
        if np.any(valid):
            peak = max(peak, float(np.max(np.abs(coords[valid]))))
    for coords in coord_arrays:
        coords /= peak
    return peak


# -- quadtree -------------------------------------------------------------


class _Node:
    __slots__ = ("cx", "cy", "half", "children", "points", "same", "rep")

    def __init__(self, cx, cy, half):
        self.cx = cx
        self.cy = cy
        self.half = half
        self.children = None
        self.points = []
        self.same = True      # all stored points coincident so far
        self.rep = None

    def bounds(self):
        return (self.cx - self.half, self.cy - self.half,
                self.cx + self.half, self.cy + self.half)


class BucketTree:
    """Point-region quadtree over [-1, 1]^2 with a fixed leaf capacity.

    Leaves split into four quadrants when they exceed the capacity,
    except when every stored point is coincident, in which case the leaf
    is allowed to stay oversized.  Unpositioned vertices live outside
    the tree in a dedicated overflow bucket.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("bucket capacity must be positive")
        self.capacity = capacity
        self.root = _Node(0.0, 0.0, 1.0)
        self.overflow = []           # (graph_no, vid) without a position
        self._leaves = None

    def insert(self, x: float, y: float, graph_no: int, vid: int) -> None:
        node = self.root
        while node.children is not None:
            node = node.children[self._quadrant(node, x, y)]
        node.points.append((x, y, graph_no, vid))
        if node.rep is None:
            node.rep = (x, y)
        elif node.same and (x, y) != node.rep:
            node.same = False
        self._leaves = None
        if len(node.points) > self.capacity and not node.same:
            self._split(node)

    def add_overflow(self, graph_no: int, vid: int) -> None:
        self.overflow.append((graph_no, vid))

    @staticmethod
    def _quadrant(node, x, y):
        ix = 0 if x <= node.cx else 1
        iy = 0 if y <= node.cy else 1
        return iy * 2 + ix

    def _split(self, node):
        pending = [node]
        while pending:
            cur = pending.pop()
            q = cur.half / 2.0
            cur.children = [
                _Node(cur.cx - q, cur.cy - q, q),
                _Node(cur.cx + q, cur.cy - q, q),
                _Node(cur.cx - q, cur.cy + q, q),
                _Node(cur.cx + q, cur.cy + q, q),
            ]
            for pt in cur.points:
                child = cur.children[self._quadrant(cur, pt[0], pt[1])]
                child.points.append(pt)
                if child.rep is None:
                    child.rep = (pt[0], pt[1])
                elif child.same and (pt[0], pt[1]) != child.rep:
                    child.same = False
            cur.points = []
            for child in cur.children:
                if len(child.points) > self.capacity and not child.same:
                    pending.append(child)

    def leaves(self) -> list:
        """Leaf nodes ordered by (min x, min y) of their regions."""
        if self._leaves is None:
            found = []
            stack = [self.root]
            while stack:
                node = stack.pop()
                if node.children is None:
                    found.append(node)
                else:
                    stack.extend(node.children)
            found.sort(key=lambda nd: (nd.cx - nd.half, nd.cy - nd.half))
            self._leaves = found
        return self._leaves

    def neighbor_buckets(self, leaf) -> list:
        """Leaves whose closed regions touch the given leaf's region.

        Includes corner contact; ordered by (min x, min y); never
        includes the leaf itself.
        """
        x0, y0, x1, y1 = leaf.bounds()
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            nx0, ny0, nx1, ny1 = node.bounds()
            if nx0 > x1 or x0 > nx1 or ny0 > y1 or y0 > ny1:
                continue
            if node.children is None:
                if node is not leaf:
                    out.append(node)
            else:
                stack.extend(node.children)
        out.sort(key=lambda nd: (nd.cx - nd.half, nd.cy - nd.half))
        return out


def build_bucket_tree(coords1, valid1, coords2, valid2, capacity: int) -> BucketTree:
    """Insert both graphs' positioned vertices; the rest go to overflow."""
    tree = BucketTree(capacity)
    for graph_no, coords, valid in ((1, coords1, valid1), (2, coords2, valid2)):
        for vid in range(len(valid)):
            if valid[vid]:
                tree.insert(float(coords[vid, 0]), float(coords[vid, 1]),
                            graph_no, vid)
            else:
                tree.add_overflow(graph_no, vid)
    return tree


# -- density grid ---------------------------------------------------------


def density_grid(coords1, valid1, coords2, valid2, cell: float = 0.1):
    """Per-cell vertex counts of both graphs over [-1, 1]^2.

    Returns (bins, grid1, grid2) with the grids indexed [x_bin, y_bin]
    from the (-1, -1) corner.
    """
    if cell <= 0:
        raise ValueError("cell size must be positive")
    bins = max(1, int(round(2.0 / cell)))

    def count(coords, valid):
        grid = np.zeros((bins, bins), dtype=np.int64)
        pts = coords[np.asarray(valid, dtype=bool)]
        if len(pts):
            ix = np.minimum(((pts[:, 0] + 1.0) / cell).astype(np.int64), bins - 1)
            iy = np.minimum(((pts[:, 1] + 1.0) / cell).astype(np.int64), bins - 1)
            ix = np.maximum(ix, 0)
            iy = np.maximum(iy, 0)
            np.add.at(grid, (ix, iy), 1)
        return grid

    return bins, count(coords1, valid1), count(coords2, valid2)


def write_density_csv(path, bins: int, grid1, grid2) -> None:
    """CSV rows x_bin,y_bin,count_g1,count_g2 in row-major bin order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x_bin,y_bin,count_g1,count_g2\n")
        for ix in range(bins):
            for iy in range(bins):
                fh.write("%d,%d,%d,%d\n" % (ix, iy, grid1[ix, iy], grid2[ix, iy]))
