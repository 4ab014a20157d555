import numpy as np
import pytest

from hcurl_ife.mesh import LOCAL_EDGES, build_uniform_triangulation, element_edge_sign


@pytest.mark.parametrize("n, ne, nv, nedge", [(1, 2, 4, 5), (2, 8, 9, 16), (128, 32768, 16641, 49408)])
def test_counts(n, ne, nv, nedge):
    m = build_uniform_triangulation(n)
    assert (m.n_elements, m.n_nodes, m.n_edges) == (ne, nv, nedge)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 16, 64, 256])
def test_closed_form_counts_and_euler(n):
    m = build_uniform_triangulation(n)
    assert m.n_nodes == (n + 1) ** 2
    assert m.n_elements == 2 * n * n
    assert m.n_edges == (n + 1) ** 2 + 2 * n * n - 1
    assert m.n_nodes - m.n_edges + m.n_elements == 1
    assert m.boundary_edges.sum() == 4 * n


def test_positive_area_and_right_angles():
    m = build_uniform_triangulation(5, (0.0, 2.0, -1.0, 0.5))
    assert np.all(m.areas() > 0)
    p = m.nodes[m.elements]
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        # no obtuse angle anywhere
        assert np.all(np.einsum("ij,ij->i", a, b) >= -1e-14)
    assert np.isclose(m.areas().sum(), 3.0)


def test_edge_sharing():
    m = build_uniform_triangulation(6)
    counts = np.bincount(m.elem_edges.ravel(), minlength=m.n_edges)
    assert np.all(counts[m.boundary_edges] == 1)
    assert np.all(counts[~m.boundary_edges] == 2)
    assert np.all((m.edge_elements[:, 1] >= 0) == ~m.boundary_edges)


def test_signs_match_ccw_tangents():
    m = build_uniform_triangulation(4)
    t = m.nodes[m.edges[:, 1]] - m.nodes[m.edges[:, 0]]
    for k in range(m.n_elements):
        v = m.nodes[m.elements[k]]
        for le, (i, j) in enumerate(LOCAL_EDGES):
            local = v[j] - v[i]
            assert np.allclose(m.elem_signs[k, le] * t[m.elem_edges[k, le]], local)


def test_interior_edge_signs_cancel():
    m = build_uniform_triangulation(5)
    total = np.zeros(m.n_edges)
    np.add.at(total, m.elem_edges.ravel(), m.elem_signs.ravel())
    assert np.all(total[~m.boundary_edges] == 0)
    assert np.all(np.abs(total[m.boundary_edges]) == 1)


def test_diagonal_neighbours_have_opposite_signs():
    m = build_uniform_triangulation(1)
    diag = [g for g in range(m.n_edges) if not m.boundary_edges[g]]
    assert len(diag) == 1
    g = diag[0]
    s = [element_edge_sign(m, k, int(np.flatnonzero(m.elem_edges[k] == g)[0])) for k in range(2)]
    assert sorted(s) == [-1, 1]


def test_element_edge_sign_range():
    m = build_uniform_triangulation(2)
    with pytest.raises(IndexError):
        element_edge_sign(m, 8, 0)
    with pytest.raises(IndexError):
        element_edge_sign(m, 0, 3)
    assert element_edge_sign(m, 0, 0) in (-1, 1)


@pytest.mark.parametrize("n", [1, 4, 10])
def test_mesh_size(n):
    m = build_uniform_triangulation(n)
    assert np.isclose(m.h, np.sqrt(2) * 2.0 / n)


def test_global_tangent_low_to_high():
    m = build_uniform_triangulation(3)
    assert np.all(m.edges[:, 0] < m.edges[:, 1])


def test_invalid_input():
    with pytest.raises(ValueError):
        build_uniform_triangulation(0)
    with pytest.raises(ValueError):
        build_uniform_triangulation(2, (0, 0, 0, 1))


def test_dump_lists_everything():
    m = build_uniform_triangulation(1)
    text = m.dump()
    assert "nodes 4" in text and "elements 2" in text and "edges 5" in text
