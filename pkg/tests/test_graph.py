"""Erdos-Renyi adapter: matrix validation, flattening, graph-level RDP."""

import json

import numpy as np
import pytest

from bernrdp import (DomainError, EdgeProbabilityMatrix, flatten, graph_rdp,
                     h2, load_matrix, normalize, rdp, scalar_rdp)

TRIPLE_TERN = 0.714233365554124956  # 3 * scalar ternary branch at (0.1, 0.05, 0.25)


def _matrix_bytes(n, probs):
    return json.dumps({"n_vertices": n, "probs": probs}).encode()


class TestLoadMatrix:
    def test_two_vertex_valid(self):
        m = load_matrix(_matrix_bytes(2, [[0.0, 0.3], [0.3, 0.0]]))
        assert m.n_vertices == 2
        assert m.probs[0, 1] == 0.3

    def test_asymmetric_rejected(self):
        with pytest.raises(DomainError, match=r"probs\[0\]\[1\]"):
            load_matrix(_matrix_bytes(2, [[0.0, 0.3], [0.4, 0.0]]))

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(DomainError, match="diagonal"):
            load_matrix(_matrix_bytes(2, [[0.1, 0.3], [0.3, 0.0]]))

    def test_parse_error(self):
        with pytest.raises(DomainError, match="JSON"):
            load_matrix(b"not json at all {")

    def test_missing_keys(self):
        with pytest.raises(DomainError, match="n_vertices"):
            load_matrix(b'{"probs": [[0]]}')

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            load_matrix(_matrix_bytes(3, [[0.0, 0.3], [0.3, 0.0]]))

    def test_tiny_asymmetry_symmetrized(self):
        m = load_matrix(_matrix_bytes(2, [[0.0, 0.3], [0.3 + 1e-13, 0.0]]))
        assert m.probs[0, 1] == m.probs[1, 0]


class TestFlatten:
    def test_three_vertex_order_and_flips(self):
        m = EdgeProbabilityMatrix(3, np.array([
            [0.0, 0.2, 0.5],
            [0.2, 0.0, 0.9],
            [0.5, 0.9, 0.0]]))
        src, edges = flatten(m)
        assert edges == [(0, 1), (0, 2), (1, 2)]
        assert np.allclose(src.raw(), [0.2, 0.5, 0.9])
        assert np.allclose(src.q, [0.5, 0.2, 0.1])
        assert src.flip_mask.tolist() == [False, False, True]

    def test_two_vertex_single_component(self):
        m = EdgeProbabilityMatrix(2, np.array([[0.0, 0.3], [0.3, 0.0]]))
        src, edges = flatten(m)
        assert src.n == 1
        assert edges == [(0, 1)]

    def test_homogeneous_gives_equal_q(self):
        n = 4
        probs = np.full((n, n), 0.25)
        np.fill_diagonal(probs, 0.0)
        src, _ = flatten(EdgeProbabilityMatrix(n, probs))
        assert src.n == n * (n - 1) // 2
        assert np.allclose(src.q, 0.25)


class TestGraphRdp:
    def _homogeneous(self, n, p):
        probs = np.full((n, n), p)
        np.fill_diagonal(probs, 0.0)
        return EdgeProbabilityMatrix(n, probs)

    def test_homogeneous_triangle(self):
        res = graph_rdp(self._homogeneous(3, 0.25), (0.3, 0.15))
        assert res.rate == pytest.approx(TRIPLE_TERN, abs=1e-9)
        assert res.rate == pytest.approx(3 * scalar_rdp(0.1, 0.05, 0.25), abs=1e-9)

    def test_zero_rate_beyond_caps(self):
        m = self._homogeneous(3, 0.25)
        caps = 3 * 2 * 0.25 * 0.75
        assert graph_rdp(m, (caps + 0.01, 0.0)).rate == 0.0

    def test_zero_distortion_entropy(self):
        m = EdgeProbabilityMatrix(3, np.array([
            [0.0, 0.2, 0.5],
            [0.2, 0.0, 0.9],
            [0.5, 0.9, 0.0]]))
        res = graph_rdp(m, (0.0, 0.4))
        want = h2(0.2) + h2(0.5) + h2(0.1)
        assert res.rate == pytest.approx(want, abs=1e-12)

    def test_matches_flattened_solver(self):
        m = EdgeProbabilityMatrix(3, np.array([
            [0.0, 0.2, 0.5],
            [0.2, 0.0, 0.9],
            [0.5, 0.9, 0.0]]))
        src, _ = flatten(m)
        for budget in [(0.3, 0.1), (0.05, 0.01), (1.2, 0.5)]:
            assert graph_rdp(m, budget).rate == pytest.approx(
                rdp(src, budget).rate, abs=0.0)

    def test_vertex_relabeling_invariance(self):
        rng = np.random.default_rng(51)
        n = 4
        probs = rng.uniform(0.0, 1.0, (n, n))
        probs = 0.5 * (probs + probs.T)
        np.fill_diagonal(probs, 0.0)
        m = EdgeProbabilityMatrix(n, probs)
        base = graph_rdp(m, (0.6, 0.2)).rate
        for _ in range(5):
            perm = rng.permutation(n)
            m2 = EdgeProbabilityMatrix(n, probs[np.ix_(perm, perm)])
            assert graph_rdp(m2, (0.6, 0.2)).rate == pytest.approx(base, abs=1e-10)

    def test_edge_allocation_round_trip(self):
        m = EdgeProbabilityMatrix(3, np.array([
            [0.0, 0.2, 0.5],
            [0.2, 0.0, 0.9],
            [0.5, 0.9, 0.0]]))
        res = graph_rdp(m, (0.3, 0.12))
        assert abs(sum(e.d for e in res.edges) - 0.3) <= 1e-8
        assert abs(sum(e.p for e in res.edges) - 0.12) <= 1e-8
        assert sum(e.rate for e in res.edges) == pytest.approx(res.rate, abs=1e-12)
        # edges keep their original orientation and probabilities
        assert [(e.i, e.j) for e in res.edges] == [(0, 1), (0, 2), (1, 2)]
        assert [e.q for e in res.edges] == [0.2, 0.5, 0.9]

    def test_structurally_absent_edges_kept(self):
        m = EdgeProbabilityMatrix(3, np.array([
            [0.0, 0.0, 0.3],
            [0.0, 0.0, 0.3],
            [0.3, 0.3, 0.0]]))
        res = graph_rdp(m, (0.1, 0.05))
        assert len(res.edges) == 3
        absent = [e for e in res.edges if e.q == 0.0]
        assert len(absent) == 1 and absent[0].d == 0.0 and absent[0].rate == 0.0
