"""Independent reference implementations used only by tests.

These deliberately take different algorithmic routes from the package:
the contour counter walks cells geometrically instead of gluing edge
pairings with union-find, and the sphere-domain counter uses BFS flood
fill instead of sparse connected components.
"""

import numpy as np


def _cell_edges(cx, cy):
    return {"b": (0, cx, cy), "t": (0, cx, cy + 1),
            "l": (1, cx, cy), "r": (1, cx + 1, cy)}


def trace_contour_components(values):
    """Count zero-contour components by explicit marching-squares walking.

    Returns (loops, chains): closed loops plus open chains that exit
    through the window boundary. Checkerboard cells are split by the sign
    of the cell-center average (the standard disambiguation).
    """
    s = np.where(values > 0, 1, -1)
    nx, ny = s.shape
    crossed = set()
    for ix in range(nx - 1):
        for iy in range(ny):
            if s[ix, iy] * s[ix + 1, iy] < 0:
                crossed.add((0, ix, iy))
    for ix in range(nx):
        for iy in range(ny - 1):
            if s[ix, iy] * s[ix, iy + 1] < 0:
                crossed.add((1, ix, iy))

    def cells_of_edge(edge):
        axis, ix, iy = edge
        out = []
        if axis == 0:
            if iy - 1 >= 0:
                out.append((ix, iy - 1))
            if iy <= ny - 2:
                out.append((ix, iy))
        else:
            if ix - 1 >= 0:
                out.append((ix - 1, iy))
            if ix <= nx - 2:
                out.append((ix, iy))
        return out

    def exit_edge(cell, entry):
        cx, cy = cell
        edges = _cell_edges(cx, cy)
        names = {v: k for k, v in edges.items()}
        inside = [e for e in edges.values() if e in crossed]
        if len(inside) == 2:
            other = [e for e in inside if e != entry]
            return other[0]
        # saddle: resolve by the center average
        center = 0.25 * (values[cx, cy] + values[cx + 1, cy]
                         + values[cx, cy + 1] + values[cx + 1, cy + 1])
        s00 = s[cx, cy]
        if (center > 0) == (s00 > 0):
            pairs = {"b": "r", "r": "b", "t": "l", "l": "t"}
        else:
            pairs = {"b": "l", "l": "b", "t": "r", "r": "t"}
        return edges[pairs[names[entry]]]

    def is_boundary(edge):
        axis, ix, iy = edge
        if axis == 0:
            return iy == 0 or iy == ny - 1
        return ix == 0 or ix == nx - 1

    # track visitation per (edge, cell) passage so saddle cells can be
    # traversed twice
    visited = set()
    loops = 0
    chains = 0

    def walk(start_edge, start_cell):
        edge, cell = start_edge, start_cell
        while True:
            visited.add((edge, cell))
            nxt = exit_edge(cell, edge)
            visited.add((nxt, cell))
            if is_boundary(nxt):
                return ("boundary", nxt)
            nbrs = [c for c in cells_of_edge(nxt) if c != cell]
            cell = nbrs[0]
            edge = nxt
            if (edge, cell) in visited:
                return ("loop", edge)

    boundary_edges = [e for e in crossed if is_boundary(e)]
    for e in boundary_edges:
        cell = cells_of_edge(e)[0]
        if (e, cell) in visited:
            continue
        walk(e, cell)
        chains += 1
    for e in crossed:
        for cell in cells_of_edge(e):
            if (e, cell) not in visited:
                walk(e, cell)
                loops += 1
    return loops, chains


def sphere_domains_bfs(values, pole_values):
    """Count sign domains on the lat-long face mesh by BFS flood fill."""
    nt, nphi = values.shape
    s = np.where(values > 0, 1, -1)
    seen = np.zeros((nt, nphi), dtype=bool)
    comps = 0
    pole_n = 1 if pole_values[0] > 0 else -1
    pole_s = 1 if pole_values[1] > 0 else -1

    def neighbors(i, j):
        out = [(i, (j + 1) % nphi), (i, (j - 1) % nphi)]
        if i > 0:
            out.append((i - 1, j))
        if i < nt - 1:
            out.append((i + 1, j))
        return out

    for i0 in range(nt):
        for j0 in range(nphi):
            if seen[i0, j0]:
                continue
            comps += 1
            stack = [(i0, j0)]
            seen[i0, j0] = True
            sign = s[i0, j0]
            while stack:
                i, j = stack.pop()
                nbrs = neighbors(i, j)
                if i == 0 and sign == pole_n:
                    nbrs.extend((0, jj) for jj in range(nphi)
                                if s[0, jj] == pole_n)
                if i == nt - 1 and sign == pole_s:
                    nbrs.extend((nt - 1, jj) for jj in range(nphi)
                                if s[nt - 1, jj] == pole_s)
                for (a, b) in nbrs:
                    if not seen[a, b] and s[a, b] == sign:
                        seen[a, b] = True
                        stack.append((a, b))
    return comps
