"""Census of zero-set components and nodal domains on sampled grids.

Zero-set components in 2-d are extracted as crossing loops: each mixed cell
pairs its crossed edges (marching-squares style), the pairings are glued by
connected components, and every loop or boundary-exiting chain is one
component. This keeps the census in exact agreement with contour tracing on
unambiguous sign grids; checkerboard cells are resolved by the cell-center
value and flagged. In 1-d components are sign changes; in d >= 3 the census
falls back to face-connected clusters of mixed cells.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as cs_connected
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .util import vol_ball
from .fields import GridWindow


# ---------------------------------------------------------------------------
# convex windows


class ConvexWindow:
    def contains_points(self, pts, R=1.0):
        raise NotImplementedError

    def box_inside(self, lo, hi, R=1.0):
        """All points of the axis box [lo, hi] inside the scaled window S(R)."""
        raise NotImplementedError

    def contains_unit_ball(self):
        raise NotImplementedError

    def bounding_radius(self, R=1.0):
        raise NotImplementedError


@dataclass(frozen=True)
class BallWindow(ConvexWindow):
    center: np.ndarray
    radius: float

    @staticmethod
    def unit(m):
        return BallWindow(np.zeros(m), 1.0)

    def __post_init__(self):
        if np.linalg.norm(self.center) >= self.radius:
            raise ValueError("window must contain the origin")

    def contains_points(self, pts, R=1.0):
        d = np.linalg.norm(np.asarray(pts, float) - R * self.center, axis=-1)
        return d < R * self.radius

    def box_inside(self, lo, hi, R=1.0):
        c = R * self.center
        far = np.maximum(np.abs(lo - c), np.abs(hi - c))
        return np.sqrt(np.sum(far ** 2, axis=-1)) < R * self.radius

    def contains_unit_ball(self):
        return self.radius - np.linalg.norm(self.center) >= 1.0 - 1e-12

    def bounding_radius(self, R=1.0):
        return R * (np.linalg.norm(self.center) + self.radius)


@dataclass(frozen=True)
class BoxWindow(ConvexWindow):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if not (np.all(self.lo < 0) and np.all(self.hi > 0)):
            raise ValueError("window must contain the origin")

    def contains_points(self, pts, R=1.0):
        pts = np.asarray(pts, float)
        return np.all((pts > R * self.lo) & (pts < R * self.hi), axis=-1)

    def box_inside(self, lo, hi, R=1.0):
        return bool(np.all(lo > R * self.lo) and np.all(hi < R * self.hi))

    def contains_unit_ball(self):
        return bool(np.all(self.lo <= -1 + 1e-12) and np.all(self.hi >= 1 - 1e-12))

    def bounding_radius(self, R=1.0):
        return R * float(np.sqrt(np.sum(np.maximum(np.abs(self.lo),
                                                   np.abs(self.hi)) ** 2)))


@dataclass(frozen=True)
class PolytopeWindow(ConvexWindow):
    A: np.ndarray                  # halfspaces a.x < b
    b: np.ndarray

    def __post_init__(self):
        if np.any(self.b <= 0):
            raise ValueError("window must contain the origin (b > 0)")

    def contains_points(self, pts, R=1.0):
        pts = np.asarray(pts, float)
        return np.all(pts @ self.A.T < R * self.b, axis=-1)

    def box_inside(self, lo, hi, R=1.0):
        support = np.sum(np.maximum(self.A * lo, self.A * hi), axis=1)
        return bool(np.all(support < R * self.b))

    def contains_unit_ball(self):
        norms = np.linalg.norm(self.A, axis=1)
        return bool(np.all(self.b / norms >= 1.0 - 1e-12))

    def bounding_radius(self, R=1.0):
        norms = np.linalg.norm(self.A, axis=1)
        return R * float(np.max(self.b / norms)) * math.sqrt(len(self.b))


# ---------------------------------------------------------------------------
# sign grids


@dataclass
class SignGrid:
    window: GridWindow
    signs: np.ndarray              # int8: +1 / -1; exact zeros recorded apart
    zero_mask: np.ndarray
    values: np.ndarray
    wrap: bool = False

    @property
    def dim(self):
        return self.window.dim

    def crossed_edges(self, axis):
        s = self.signs
        sl_a = [slice(None)] * self.dim
        sl_b = [slice(None)] * self.dim
        sl_a[axis] = slice(None, -1)
        sl_b[axis] = slice(1, None)
        return s[tuple(sl_a)] * s[tuple(sl_b)] < 0

    def mixed_cells(self):
        """Cells with at least one + and one - corner (zeros count as both)."""
        m = self.dim
        pos = self.signs > 0
        neg = (self.signs < 0) | self.zero_mask
        any_pos = pos
        any_neg = neg
        for a in range(m):
            sl_a = [slice(None)] * m
            sl_b = [slice(None)] * m
            sl_a[a] = slice(None, -1)
            sl_b[a] = slice(1, None)
            any_pos = any_pos[tuple(sl_a)] | any_pos[tuple(sl_b)]
            any_neg = any_neg[tuple(sl_a)] | any_neg[tuple(sl_b)]
        return any_pos & any_neg


def sign_grid(fieldsample, zero_tolerance=0.0):
    """Classify vertices by sign; |f| <= zero_tolerance is an exact zero."""
    vals = fieldsample.values
    if not np.all(np.isfinite(vals)):
        raise ValueError("field values must be finite")
    zero = np.abs(vals) <= zero_tolerance
    signs = np.where(vals > zero_tolerance, 1, -1).astype(np.int8)
    signs[zero] = 1               # measure-null tie-break; zeros flagged apart
    return SignGrid(window=fieldsample.window, signs=signs, zero_mask=zero,
                    values=vals, wrap=fieldsample.wrap)


# ---------------------------------------------------------------------------
# zero-set components


@dataclass
class ZeroComponent:
    cells: np.ndarray              # (k, m) integer cell indices
    touches_boundary: bool
    bbox_lo: np.ndarray
    bbox_hi: np.ndarray

    @property
    def n_cells(self):
        return len(self.cells)

    def diameter(self):
        return float(np.linalg.norm(self.bbox_hi - self.bbox_lo))


@dataclass
class NodalCensus:
    window: GridWindow
    components: list
    ambiguous_cells: int = 0
    mixed_cell_count: int = 0

    @property
    def n_components(self):
        return len(self.components)

    @property
    def dim(self):
        return self.window.dim


def _cells_to_bbox(window, cells):
    lo = window.origin + cells.min(axis=0) * window.spacing
    hi = window.origin + (cells.max(axis=0) + 1) * window.spacing
    return lo, hi


def _components_2d(grid):
    s = grid.signs
    nx, ny = s.shape
    x0 = grid.crossed_edges(0)          # (nx-1, ny)
    x1 = grid.crossed_edges(1)          # (nx, ny-1)
    n0 = (nx - 1) * ny
    n1 = nx * (ny - 1)

    def e0_id(ix, iy):
        return ix * ny + iy

    def e1_id(ix, iy):
        return n0 + ix * (ny - 1) + iy

    cx, cy = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    bottom = x0[:, :-1]
    top = x0[:, 1:]
    left = x1[:-1, :]
    right = x1[1:, :]
    count = (bottom.astype(np.int8) + top.astype(np.int8)
             + left.astype(np.int8) + right.astype(np.int8))
    ids = np.stack([e0_id(cx, cy), e0_id(cx, cy + 1),
                    e1_id(cx, cy), e1_id(cx + 1, cy)], axis=-1)
    mask = np.stack([bottom, top, left, right], axis=-1)

    pair_cells = []                     # (ix, iy) per pairing
    pair_a, pair_b = [], []

    two = count == 2
    if np.any(two):
        ids2 = ids[two]
        mask2 = mask[two]
        sel = np.where(mask2, ids2, np.iinfo(np.int64).max)
        sel.sort(axis=1)
        pair_a.append(sel[:, 0])
        pair_b.append(sel[:, 1])
        pair_cells.append(np.stack([cx[two], cy[two]], axis=1))

    ambiguous = 0
    four = count == 4
    if np.any(four):
        vals = grid.values
        for ix, iy in zip(cx[four], cy[four]):
            ambiguous += 1
            center = 0.25 * (vals[ix, iy] + vals[ix + 1, iy]
                             + vals[ix, iy + 1] + vals[ix + 1, iy + 1])
            b, t = e0_id(ix, iy), e0_id(ix, iy + 1)
            l, r = e1_id(ix, iy), e1_id(ix + 1, iy)
            s00 = s[ix, iy]
            if (center > 0 and s00 > 0) or (center <= 0 and s00 < 0):
                # corners 10 and 01 isolated: (bottom,right) and (top,left)
                pairs = [(b, r), (t, l)]
            else:
                pairs = [(b, l), (t, r)]
            for ea, eb in pairs:
                pair_a.append(np.array([ea]))
                pair_b.append(np.array([eb]))
                pair_cells.append(np.array([[ix, iy]]))

    if not pair_a:
        return [], ambiguous, 0

    pa = np.concatenate(pair_a)
    pb = np.concatenate(pair_b)
    pcells = np.concatenate(pair_cells, axis=0)

    n_nodes = n0 + n1
    graph = coo_matrix((np.ones(len(pa)), (pa, pb)), shape=(n_nodes, n_nodes))
    n_lab, labels = cs_connected(graph, directed=False)

    # keep only labels of crossed edges
    comp_of_pairing = labels[pa]
    # boundary-exiting chains: crossed frame edges
    frame = np.zeros(n_nodes, dtype=bool)
    iy0 = np.arange(nx - 1)
    frame[e0_id(iy0, 0)] = x0[:, 0]
    frame[e0_id(iy0, ny - 1)] = x0[:, ny - 1]
    ix1 = np.arange(ny - 1)
    frame[e1_id(0, ix1)] = x1[0, :]
    frame[e1_id(nx - 1, ix1)] = x1[nx - 1, :]
    boundary_labels = set(labels[np.flatnonzero(frame)].tolist())

    order = np.argsort(comp_of_pairing, kind="stable")
    sorted_labels = comp_of_pairing[order]
    sorted_cells = pcells[order]
    cuts = np.flatnonzero(np.diff(sorted_labels)) + 1
    groups = np.split(sorted_cells, cuts)
    group_labels = sorted_labels[np.concatenate([[0], cuts])] \
        if len(sorted_labels) else []

    comps = []
    for lab, cells in zip(np.atleast_1d(group_labels), groups):
        cells = np.unique(cells, axis=0)
        comps.append((int(lab), cells))
    mixed_count = int(np.count_nonzero(count > 0))
    return [(lab in boundary_labels, cells) for lab, cells in comps], \
        ambiguous, mixed_count


def zero_components(grid):
    """Connected components of the discrete zero set.

    Returns a NodalCensus whose components carry their mixed cells, bounding
    boxes, and window-boundary flags.
    """
    window = grid.window
    m = grid.dim
    comps = []
    ambiguous = 0
    mixed_count = 0
    if m == 1:
        crossings = np.flatnonzero(grid.crossed_edges(0))
        mixed_count = len(crossings)
        for ix in crossings:
            cells = np.array([[ix]])
            lo, hi = _cells_to_bbox(window, cells)
            comps.append(ZeroComponent(cells=cells, touches_boundary=False,
                                       bbox_lo=lo, bbox_hi=hi))
        if grid.wrap and grid.signs[-1] * grid.signs[0] < 0:
            cells = np.array([[window.shape[0] - 1]])
            lo, hi = _cells_to_bbox(window, cells)
            comps.append(ZeroComponent(cells=cells, touches_boundary=False,
                                       bbox_lo=lo, bbox_hi=hi))
    elif m == 2:
        raw, ambiguous, mixed_count = _components_2d(grid)
        for touches, cells in raw:
            lo, hi = _cells_to_bbox(window, cells)
            comps.append(ZeroComponent(cells=cells, touches_boundary=touches,
                                       bbox_lo=lo, bbox_hi=hi))
    else:
        mixed = grid.mixed_cells()
        mixed_count = int(np.count_nonzero(mixed))
        structure = ndimage.generate_binary_structure(m, 1)
        labels, n_lab = ndimage.label(mixed, structure=structure)
        for sl_set, lab in zip(ndimage.find_objects(labels), range(1, n_lab + 1)):
            idx = np.argwhere(labels == lab)
            touches = bool(np.any(idx == 0) or np.any(
                idx == np.array(mixed.shape) - 1))
            lo, hi = _cells_to_bbox(window, idx)
            comps.append(ZeroComponent(cells=idx, touches_boundary=touches,
                                       bbox_lo=lo, bbox_hi=hi))
    return NodalCensus(window=window, components=comps,
                       ambiguous_cells=ambiguous, mixed_cell_count=mixed_count)


# ---------------------------------------------------------------------------
# counting


def _component_distances(window, comp, center):
    """(farthest corner distance, nearest point distance) from center."""
    center = np.asarray(center, float)
    lo = window.origin + comp.cells * window.spacing
    hi = lo + window.spacing
    far_ax = np.maximum(np.abs(lo - center), np.abs(hi - center))
    far = float(np.sqrt(np.sum(far_ax ** 2, axis=1)).max())
    near_ax = np.maximum(0.0, np.maximum(lo - center, center - hi))
    near = float(np.sqrt(np.sum(near_ax ** 2, axis=1)).min())
    return far, near


def count_in_ball(census, center, r):
    """(N, N*): components contained in the open ball / meeting the closed ball."""
    window = census.window
    if not window.contains_ball(np.asarray(center, float), r):
        raise ValueError("ball exceeds the sampled window; counts would be "
                         "silently wrong")
    N = 0
    N_star = 0
    for comp in census.components:
        far, near = _component_distances(window, comp, center)
        if near <= r:
            N_star += 1
            if far < r and not comp.touches_boundary:
                N += 1
    return N, N_star


def count_in_window(census, S, R):
    """Components contained in the scaled convex window S(R)."""
    window = census.window
    sr = S.bounding_radius(R)
    if np.any(window.origin > -sr + 1e-9) or np.any(window.upper < sr - 1e-9):
        raise ValueError("sampled window does not cover S(R)")
    count = 0
    for comp in census.components:
        if comp.touches_boundary:
            continue
        lo = window.origin + comp.cells * window.spacing
        hi = lo + window.spacing
        if isinstance(S, BallWindow):
            c = R * S.center
            far_ax = np.maximum(np.abs(lo - c), np.abs(hi - c))
            inside = bool(np.all(np.sqrt(np.sum(far_ax ** 2, axis=1))
                                 < R * S.radius))
        elif isinstance(S, BoxWindow):
            inside = bool(np.all(lo > R * S.lo) and np.all(hi < R * S.hi))
        else:
            # per-row support of each cell box under each halfspace normal
            support = np.stack([np.maximum(lo * a, hi * a).sum(axis=1)
                                for a in S.A], axis=1)
            inside = bool(np.all(support < R * S.b))
        if inside:
            count += 1
    return count


def _component_corners(window, comp):
    m = window.dim
    offs = np.array(np.meshgrid(*[[0, 1]] * m, indexing="ij")).reshape(m, -1).T
    corners = (comp.cells[:, None, :] + offs[None, :, :]).reshape(-1, m)
    corners = np.unique(corners, axis=0)
    return window.origin + corners * window.spacing


def _hull_points(pts):
    if len(pts) <= 4 or pts.shape[1] == 1:
        return pts
    try:
        hull = ConvexHull(pts)
        return pts[hull.vertices]
    except QhullError:
        return pts


def ball_count_fields(census, r, stride=1, contained=True, intersecting=True):
    """N(u, r) and N*(u, r) on the window vertex lattice (optionally strided).

    Used by the sandwich integrals and ergodic averages. Distances to a
    component use its exact cell corners for containment (farthest-point via
    hull vertices) and the corner set for intersection (within h sqrt(m)/2
    of the true cell-union distance; the callers' slack absorbs this).
    """
    window = census.window
    m = window.dim
    axes = [ax[::stride] for ax in window.axes()]
    shape = tuple(len(ax) for ax in axes)
    h = window.spacing * stride
    Nc = np.zeros(shape, dtype=np.int32) if contained else None
    Ns = np.zeros(shape, dtype=np.int32) if intersecting else None

    def patch_ranges(lo, hi, pad):
        sls = []
        for a in range(m):
            i0 = int(np.floor((lo[a] - pad - axes[a][0]) / h[a]))
            i1 = int(np.ceil((hi[a] + pad - axes[a][0]) / h[a])) + 1
            sls.append(slice(max(i0, 0), min(i1, shape[a])))
        return tuple(sls)

    def patch_points(sls):
        sub_axes = [axes[a][sls[a]] for a in range(m)]
        mesh = np.meshgrid(*sub_axes, indexing="ij")
        return mesh, tuple(len(a) for a in sub_axes)

    for comp in census.components:
        corners = _component_corners(window, comp)
        if intersecting:
            sls = patch_ranges(comp.bbox_lo, comp.bbox_hi,
                               r + float(np.max(h)))
            if all(s.stop > s.start for s in sls):
                mesh, sub_shape = patch_points(sls)
                pts = np.stack([g.ravel() for g in mesh], axis=1)
                tree = cKDTree(corners)
                d, _ = tree.query(pts, k=1)
                Ns[sls] += (d.reshape(sub_shape) <= r)
        if not contained:
            continue
        # containment side: only small interior components are eligible
        if comp.touches_boundary or comp.diameter() > 2 * r:
            continue
        hull = _hull_points(corners)
        sls = patch_ranges(comp.bbox_lo, comp.bbox_hi, r)
        if not all(s.stop > s.start for s in sls):
            continue
        mesh, sub_shape = patch_points(sls)
        # accumulate the farthest-vertex distance one hull vertex at a
        # time; big broadcast temporaries fault heavily on this platform
        far2 = np.zeros(sub_shape)
        buf = np.empty(sub_shape)
        for q in hull:
            d2 = np.square(mesh[0] - q[0], out=buf)
            for a in range(1, m):
                d2 += np.square(mesh[a] - q[a])
            np.maximum(far2, d2, out=far2)
        Nc[sls] += far2 < r * r
    return Nc, Ns, axes


# ---------------------------------------------------------------------------
# nodal domains


@dataclass
class DomainCensus:
    n_positive: int
    n_negative: int
    n_regular: int
    labels_pos: np.ndarray
    labels_neg: np.ndarray
    volumes: np.ndarray            # per domain, positive domains first
    compact: np.ndarray            # bool per domain: away from window boundary
    window: GridWindow


def nodal_domains(grid):
    """Label sign-constant vertex clusters; count regular (small compact) domains."""
    window = grid.window
    m = grid.dim
    structure = ndimage.generate_binary_structure(m, 1)
    cellvol = window.cell_volume()
    vols, compact = [], []
    labels_out = []
    counts = []
    for mask_vals in (grid.signs > 0, grid.signs < 0):
        labels, n_lab = ndimage.label(mask_vals, structure=structure)
        labels_out.append(labels)
        counts.append(n_lab)
        if n_lab == 0:
            continue
        sizes = np.bincount(labels.ravel())[1:]
        border = np.zeros(n_lab + 1, dtype=bool)
        for a in range(m):
            border[np.unique(labels.take(0, axis=a))] = True
            border[np.unique(labels.take(-1, axis=a))] = True
        vols.extend((sizes * cellvol).tolist())
        compact.extend((~border[1:]).tolist())
    vols = np.asarray(vols)
    compact = np.asarray(compact, dtype=bool)
    regular = int(np.count_nonzero(compact & (vols < vol_ball(m))))
    return DomainCensus(n_positive=counts[0], n_negative=counts[1],
                        n_regular=regular, labels_pos=labels_out[0],
                        labels_neg=labels_out[1], volumes=vols,
                        compact=compact, window=window)


def domains_compactly_in_ball(grid, center, r):
    """Count sign domains all of whose vertices lie in the open ball."""
    window = grid.window
    mesh = np.meshgrid(*window.axes(), indexing="ij")
    dist = np.sqrt(sum((g - c) ** 2 for g, c in
                       zip(mesh, np.asarray(center, float))))
    total = 0
    structure = ndimage.generate_binary_structure(grid.dim, 1)
    for mask_vals in (grid.signs > 0, grid.signs < 0):
        labels, n_lab = ndimage.label(mask_vals, structure=structure)
        if n_lab == 0:
            continue
        maxd = ndimage.maximum(dist, labels=labels,
                               index=np.arange(1, n_lab + 1))
        border = np.zeros(n_lab + 1, dtype=bool)
        for a in range(grid.dim):
            border[np.unique(labels.take(0, axis=a))] = True
            border[np.unique(labels.take(-1, axis=a))] = True
        total += int(np.count_nonzero((np.atleast_1d(maxd) < r)
                                      & ~border[1:]))
    return total


def origin_domain_volume(grid, point=None):
    """Volume of the nodal domain containing `point` (default: the origin).

    Returns (volume, is_compact); the volume is a lower bound when the
    domain touches the window boundary.
    """
    window = grid.window
    if point is None:
        point = np.zeros(grid.dim)
    idx = tuple(int(round((point[a] - window.origin[a]) / window.spacing[a]))
                for a in range(grid.dim))
    structure = ndimage.generate_binary_structure(grid.dim, 1)
    mask = grid.signs > 0 if grid.signs[idx] > 0 else grid.signs < 0
    labels, _ = ndimage.label(mask, structure=structure)
    lab = labels[idx]
    size = int(np.count_nonzero(labels == lab))
    comp_mask = labels == lab
    touches = any(comp_mask.take(0, axis=a).any()
                  or comp_mask.take(-1, axis=a).any()
                  for a in range(grid.dim))
    return size * window.cell_volume(), not touches


# ---------------------------------------------------------------------------
# sphere census


def sphere_components(sample):
    """Number of connected components of the sphere minus the zero set.

    Union-find over sign-constant mesh faces (phi wrap and pole caps
    included).
    """
    mesh = sample.mesh
    nt, nphi = mesh.n_theta, mesh.n_phi
    if nt < 2 or nphi < 3:
        raise ValueError("mesh is degenerate")
    vals = sample.values
    if vals.shape != (nt, nphi):
        raise ValueError("face values do not match the mesh")
    s = np.where(vals > 0, 1, -1).astype(np.int8)
    ids = np.arange(nt * nphi).reshape(nt, nphi)
    edges_a, edges_b = [], []
    same_v = s[:-1, :] == s[1:, :]
    edges_a.append(ids[:-1, :][same_v])
    edges_b.append(ids[1:, :][same_v])
    s_rolled = np.roll(s, -1, axis=1)
    ids_rolled = np.roll(ids, -1, axis=1)
    same_h = s == s_rolled
    edges_a.append(ids[same_h])
    edges_b.append(ids_rolled[same_h])
    # pole caps: ring faces matching the pole sign connect through the pole
    for row, pole_val in ((0, sample.pole_values[0]), (nt - 1,
                                                       sample.pole_values[1])):
        pole_sign = 1 if pole_val > 0 else -1
        match = np.flatnonzero(s[row] == pole_sign)
        if len(match) > 1:
            edges_a.append(ids[row][match[:-1]])
            edges_b.append(ids[row][match[1:]])
    pa = np.concatenate(edges_a)
    pb = np.concatenate(edges_b)
    graph = coo_matrix((np.ones(len(pa)), (pa, pb)),
                       shape=(nt * nphi, nt * nphi))
    n_comp, _ = cs_connected(graph, directed=False)
    return int(n_comp)


def sphere_zero_component_count(sample):
    """Total zero-set components on the sphere: disjoint circles = domains - 1."""
    return sphere_components(sample) - 1


# ---------------------------------------------------------------------------
# ring-restricted counts (the psi functional)


def ring_component_count(fieldsample, center, r, points_per_cell=2.0):
    """Components of the sphere bd B(center, r) minus the zero set.

    In 2-d this walks the circle with bilinear interpolation and counts
    cyclic sign changes; in 1-d it is the number of nonzero endpoints.
    """
    window = fieldsample.window
    center = np.asarray(center, float)
    if not window.contains_ball(center, r):
        raise ValueError("ring exceeds the sampled window")
    m = window.dim
    if m == 1:
        vals = [np.interp(center[0] - r, window.axis(0), fieldsample.values),
                np.interp(center[0] + r, window.axis(0), fieldsample.values)]
        return int(np.count_nonzero(np.asarray(vals) != 0))
    if m != 2:
        raise NotImplementedError("ring counts implemented for m <= 2")
    h = float(np.min(window.spacing))
    n_pts = max(64, int(math.ceil(2 * math.pi * r / h * points_per_cell)))
    th = 2 * np.pi * np.arange(n_pts) / n_pts
    pts = center + r * np.stack([np.cos(th), np.sin(th)], axis=1)
    coords = [(pts[:, a] - window.origin[a]) / window.spacing[a]
              for a in range(2)]
    vals = ndimage.map_coordinates(fieldsample.values, coords, order=1,
                                   mode="nearest")
    signs = np.where(vals > 0, 1, -1)
    changes = int(np.count_nonzero(signs != np.roll(signs, 1)))
    return changes if changes > 0 else 1


# ---------------------------------------------------------------------------
# stability certificate


SAFETY_CURVATURE = 1.5     # headroom on differenced-gradient curvature bounds


@dataclass
class StabilityCertificate:
    alpha: float
    beta: float
    margin: float
    grid_perturbation_bound: float
    certified: bool
    details: dict = field(default_factory=dict)


def _cell_extreme(arr, m, op):
    out = arr
    for a in range(m):
        sl_a = [slice(None)] * m
        sl_b = [slice(None)] * m
        sl_a[a] = slice(None, -1)
        sl_b[a] = slice(1, None)
        out = op(out[tuple(sl_a)], out[tuple(sl_b)])
    return out


def _second_derivative_estimate(fieldsample):
    """Vertexwise curvature bound from differencing the analytic gradients."""
    h = fieldsample.window.spacing
    m = fieldsample.dim
    out = np.zeros_like(fieldsample.values)
    for comp in range(m):
        g = fieldsample.gradients[comp]
        for a in range(m):
            d = np.abs(np.diff(g, axis=a)) / h[a]
            lo = [slice(None)] * m
            hi = [slice(None)] * m
            lo[a] = slice(None, -1)
            hi[a] = slice(1, None)
            np.maximum(out[tuple(lo)], d, out=out[tuple(lo)])
            np.maximum(out[tuple(hi)], d, out=out[tuple(hi)])
    return out


def stability_certificate(fieldsample, alpha=None, beta=None,
                          second_order_allowance=None):
    """Certify that the discrete census matches the underlying smooth field.

    Verifies, on the one-cell neighborhood of the discrete zero set, that
    |f| > alpha or |grad f| > beta at every vertex, plus per-cell resolution
    checks: sign-definite cells provably free of hidden zeros away from the
    zero set, and no checkerboard-ambiguous cells. Certified censuses are
    stable under grid refinement for components further than alpha/beta from
    the window boundary.
    """
    if fieldsample.gradients is None:
        raise ValueError("certificate needs analytic gradients")
    window = fieldsample.window
    m = window.dim
    grid = sign_grid(fieldsample)
    absf = np.abs(fieldsample.values)
    g = fieldsample.grad_norm()
    diag = float(np.linalg.norm(window.spacing))
    spacing = float(np.max(window.spacing))
    M2_vertex = _second_derivative_estimate(fieldsample)
    M2_cell = _cell_extreme(M2_vertex, m, np.maximum) * SAFETY_CURVATURE
    M2_max = float(M2_vertex.max()) * SAFETY_CURVATURE
    if second_order_allowance is None:
        second_order_allowance = 0.5 * (0.5 * diag) ** 2 * M2_max

    mixed = grid.mixed_cells()
    structure = ndimage.generate_binary_structure(m, 1)
    near_cells = ndimage.binary_dilation(mixed, structure, iterations=2) \
        if mixed.any() else mixed
    # vertices incident to a near cell
    near_vertices = np.zeros_like(absf, dtype=bool)
    if mixed.any():
        for offs in np.ndindex(*([2] * m)):
            sl = tuple(slice(o, s - 1 + o) for o, s in
                       zip(offs, fieldsample.values.shape))
            near_vertices[sl] |= near_cells

    gmax_near = float(g[near_vertices].max()) if near_vertices.any() else 0.0
    pert = spacing * math.sqrt(m) * gmax_near + second_order_allowance

    if alpha is None:
        alpha = max(2.0 * pert, 1e-300)
    if beta is None:
        small = near_vertices & (absf <= alpha)
        if small.any():
            beta = float(g[small].min()) * (1.0 - 1e-9)
        else:
            beta = max(float(g.max()), 1.0)
    beta = max(beta, 1e-300)

    if near_vertices.any():
        dichotomy_ok = bool(np.all((absf > alpha) | (g > beta)
                                   | ~near_vertices))
    else:
        dichotomy_ok = bool(np.all(absf > alpha))
    degenerate_vertex = bool(np.any(grid.zero_mask & (g <= 1e-300)))

    # sign-definite cells provably free of zeros: at every corner, the value
    # dominates the largest possible in-cell excursion. A failing (risky)
    # cell is harmless when the zero it may hide belongs to one nearby
    # component (boundary clipping); it is fatal when it sits between two
    # different components (sub-cell neck) or far from any (hidden oval).
    cell_slack = _cell_extreme(absf - 0.5 * diag * g, m, np.minimum)
    risky = (~mixed) & (cell_slack <= 0.5 * (0.5 * diag) ** 2 * M2_cell)
    # Components are provably separate when every path between them crosses
    # a zero-free (non-risky) cell. Blobs of mixed-or-risky cells holding two
    # distinct components are potential sub-cell necks; blobs holding none
    # are potential hidden ovals. Necks between boundary-exiting chains
    # cannot change interior counts and are ignored.
    contested_risky = 0
    isolated_risky = 0
    if risky.any() and m == 2:
        raw, _, _ = _components_2d(grid)
        labels_cells = np.zeros(mixed.shape, dtype=np.int32)
        interior_label = np.zeros(len(raw) + 1, dtype=bool)
        for idx, (touches, cells) in enumerate(raw, start=1):
            labels_cells[cells[:, 0], cells[:, 1]] = idx
            interior_label[idx] = not touches
        union = mixed | risky
        blob_structure = np.ones((3, 3), dtype=bool)
        blobs, n_blobs = ndimage.label(union, structure=blob_structure)
        if n_blobs:
            has_comp = labels_cells > 0
            pairs = np.unique(np.stack([blobs[has_comp],
                                        labels_cells[has_comp]], axis=1),
                              axis=0)
            blob_ids, counts = np.unique(pairs[:, 0], return_counts=True)
            n_interior = np.zeros(n_blobs + 1, dtype=np.int32)
            n_any = np.zeros(n_blobs + 1, dtype=np.int32)
            np.add.at(n_any, pairs[:, 0], 1)
            np.add.at(n_interior, pairs[:, 0],
                      interior_label[pairs[:, 1]].astype(np.int32))
            multi = (n_any >= 2) & (n_interior >= 1)
            contested_risky = int(np.count_nonzero(multi[1:]))
            blob_has_risky = np.zeros(n_blobs + 1, dtype=bool)
            blob_has_risky[np.unique(blobs[risky])] = True
            empty = blob_has_risky & (n_any == 0)
            empty[0] = False
            isolated_risky = int(np.count_nonzero(empty))
            del blob_ids, counts
    elif risky.any():
        isolated_risky = int(np.count_nonzero(risky & ~near_cells))

    # checkerboard cells mean the crossing geometry is unresolved at this
    # spacing; their resolution by the center value keeps the census usable
    # but the sample is never certified
    ambiguous = 0
    if m == 2:
        crossings = (grid.crossed_edges(0)[:, :-1].astype(np.int8)
                     + grid.crossed_edges(0)[:, 1:]
                     + grid.crossed_edges(1)[:-1, :]
                     + grid.crossed_edges(1)[1:, :])
        ambiguous = int(np.count_nonzero(crossings == 4))

    margin_ratio = alpha / beta
    margin = float(np.min(np.maximum(absf, g * margin_ratio)))

    certified = (dichotomy_ok and pert < alpha and ambiguous == 0
                 and isolated_risky == 0 and contested_risky == 0
                 and not degenerate_vertex and beta > 1e-300)
    details = {"dichotomy_ok": dichotomy_ok,
               "ambiguous_cells": int(ambiguous),
               "isolated_risky_cells": isolated_risky,
               "contested_risky_cells": contested_risky,
               "second_derivative_estimate": M2_max,
               "stable_distance": float(alpha / beta),
               "degenerate_vertex": degenerate_vertex,
               "near_zero_max_gradient": gmax_near}
    return StabilityCertificate(alpha=float(alpha), beta=float(beta),
                                margin=margin,
                                grid_perturbation_bound=float(pert),
                                certified=bool(certified), details=details)


def bulinskaya_statistic(fieldsample):
    """min over the grid of max(|f|, |grad f|)."""
    return float(np.min(np.maximum(np.abs(fieldsample.values),
                                   fieldsample.grad_norm())))


# ---------------------------------------------------------------------------
# sandwich inequality


@dataclass
class SandwichResult:
    lhs: float
    mid: float
    rhs: float
    slack_lhs: float
    slack_rhs: float
    holds: bool
    r: float
    R: float


def sandwich_check(census, S, R, r, stride=1):
    """Integral-geometric two-sided bound on the window count.

    lhs = sum over grid u in S(R-r) of N(u, r) h^m / vol B(r)
    mid = N_S(R)
    rhs = sum over grid u in S(R+r) of N*(u, r) h^m / vol B(r)

    Riemann slack uses the Steiner bound: each component region differs from
    its continuum counterpart by at most vol B(r +- h sqrt(m)) - vol B(r).
    """
    if not S.contains_unit_ball():
        raise ValueError("the convex window must contain the unit ball")
    if not (0 < r < R):
        raise ValueError("need 0 < r < R")
    window = census.window
    m = window.dim
    need = S.bounding_radius(R + r) + r
    if np.any(window.origin > -need + 1e-9) or np.any(window.upper < need - 1e-9):
        raise ValueError("window too small: needs to cover S(R+r) padded by r")
    Nc, Ns, axes = ball_count_fields(census, r, stride=stride)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    inner = S.contains_points(pts, R - r).reshape(Nc.shape)
    outer = S.contains_points(pts, R + r).reshape(Nc.shape)
    cellvol = float(np.prod(window.spacing * stride))
    vb = vol_ball(m, r)
    lhs = float(Nc[inner].sum()) * cellvol / vb
    rhs = float(Ns[outer].sum()) * cellvol / vb
    mid = count_in_window(census, S, R)
    delta = float(np.linalg.norm(window.spacing * stride))
    dv_l = vol_ball(m, r + delta) - vb
    dv_r = vb - vol_ball(m, max(r - delta, 0.0))
    slack_l = mid * dv_l / vb
    slack_r = mid * dv_r / vb
    holds = (lhs <= mid + slack_l + 1e-9) and (mid <= rhs + slack_r + 1e-9)
    return SandwichResult(lhs=lhs, mid=float(mid), rhs=rhs,
                          slack_lhs=slack_l, slack_rhs=slack_r,
                          holds=bool(holds), r=r, R=R)
