"""Structured triangulation of a rectangle with globally oriented edges."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# local edge k is opposite local vertex k, traversed counter-clockwise
LOCAL_EDGES = ((1, 2), (2, 0), (0, 1))


@dataclass(frozen=True)
class MeshTopology:
    """Triangle mesh with dense 0-based topology arrays.

    ``edges`` are stored (low, high) so the global tangent points from the
    lower to the higher node index.  ``elem_edges[k, i]`` is the global edge of
    local edge ``i`` of element ``k`` and ``elem_signs[k, i]`` is +1 when the
    counter-clockwise local tangent agrees with the global one.
    """

    nodes: np.ndarray
    elements: np.ndarray
    edges: np.ndarray
    elem_edges: np.ndarray
    elem_signs: np.ndarray
    boundary_edges: np.ndarray
    edge_elements: np.ndarray
    n: int = 0
    bounds: tuple = field(default=(-1.0, 1.0, -1.0, 1.0))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        """Largest element diameter."""
        p = self.nodes[self.elements]
        d = np.stack([np.linalg.norm(p[:, a] - p[:, b], axis=1) for a, b in LOCAL_EDGES])
        return float(d.max())

    def element_coords(self, k: int) -> np.ndarray:
        return self.nodes[self.elements[k]]

    def areas(self) -> np.ndarray:
        p = self.nodes[self.elements]
        u = p[:, 1] - p[:, 0]
        v = p[:, 2] - p[:, 0]
        return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])

    def edge_tangents(self) -> np.ndarray:
        """Unit global tangents, one row per edge."""
        t = self.nodes[self.edges[:, 1]] - self.nodes[self.edges[:, 0]]
        return t / np.linalg.norm(t, axis=1)[:, None]

    def dump(self) -> str:
        """Plain-text listing of nodes, elements and edges (debug aid)."""
        lines = [f"nodes {self.n_nodes}"]
        lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(self.nodes)]
        lines.append(f"elements {self.n_elements}")
        lines += [
            f"{k} {a} {b} {c} edges {e[0]} {e[1]} {e[2]} signs {s[0]:+d} {s[1]:+d} {s[2]:+d}"
            for k, ((a, b, c), e, s) in enumerate(zip(self.elements, self.elem_edges, self.elem_signs))
        ]
        lines.append(f"edges {self.n_edges}")
        lines += [
            f"{i} {a} {b} {'boundary' if bd else 'interior'}"
            for i, ((a, b), bd) in enumerate(zip(self.edges, self.boundary_edges))
        ]
        return "\n".join(lines) + "\n"


def build_uniform_triangulation(n: int, bounds=(-1.0, 1.0, -1.0, 1.0)) -> MeshTopology:
    """Split an ``n x n`` grid of squares along the lower-left/upper-right diagonal.

    >>> m = build_uniform_triangulation(2)
    >>> m.n_elements, m.n_nodes, m.n_edges
    (8, 9, 16)
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    x0, x1, y0, y1 = map(float, bounds)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate bounds {bounds!r}")

    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    ll = j * (n + 1) + i
    lr = ll + 1
    ul = ll + (n + 1)
    ur = ul + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    local = np.concatenate([elements[:, list(pair)] for pair in LOCAL_EDGES])
    key = np.sort(local, axis=1)
    edges, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    ne = len(elements)
    elem_edges = inverse.reshape(3, ne).T.copy()
    elem_signs = np.where(local[:, 0] < local[:, 1], 1, -1).reshape(3, ne).T.astype(np.int64)

    edge_elements = -np.ones((len(edges), 2), dtype=np.int64)
    owner = np.tile(np.arange(ne), 3)
    order = np.argsort(inverse, kind="stable")
    sorted_edges = inverse[order]
    first = np.r_[True, sorted_edges[1:] != sorted_edges[:-1]]
    edge_elements[sorted_edges[first], 0] = owner[order[first]]
    edge_elements[sorted_edges[~first], 1] = owner[order[~first]]

    return MeshTopology(
        nodes=nodes,
        elements=elements,
        edges=edges.astype(np.int64),
        elem_edges=elem_edges,
        elem_signs=elem_signs,
        boundary_edges=counts == 1,
        edge_elements=edge_elements,
        n=n,
        bounds=(x0, x1, y0, y1),
    )


def element_edge_sign(mesh: MeshTopology, elem: int, local_edge: int) -> int:
    """Sign ``s`` with ``s * t_global == t_local`` for the ccw local tangent."""
    if not 0 <= elem < mesh.n_elements:
        raise IndexError(f"element {elem} out of range")
    if not 0 <= local_edge < 3:
        raise IndexError(f"local edge {local_edge} out of range")
    return int(mesh.elem_signs[elem, local_edge])
