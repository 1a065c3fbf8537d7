"""Graph loading, serialization, validation, and adjacency normalization."""

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from ggnn.errors import FormatError, ValidationError
from ggnn.graph import (Graph, load_graph, normalize_adjacency,
                        row_normalize_adjacency, row_normalize_adjacency_t,
                        write_graph_files)

from conftest import build_graph


def random_graph(n, density, seed, ensure_edge=True):
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < density]
    if ensure_edge and not edges:
        edges = [(0, min(1, n - 1))]
    return build_graph(n, edges, labels=np.zeros(n, dtype=int),
                       train=[0], valid=[1 % n], test=[2 % n] if n > 2 else None)


class TestNormalizeAdjacency:
    def test_path3_closed_form(self, path3):
        a = normalize_adjacency(path3).toarray()
        # degrees with self-loops: 2, 3, 2
        assert a[0, 0] == pytest.approx(1 / 2, abs=1e-12)
        assert a[0, 1] == pytest.approx(1 / np.sqrt(6), abs=1e-12)
        assert a[1, 1] == pytest.approx(1 / 3, abs=1e-12)
        assert a[0, 2] == 0.0
        assert np.allclose(a, a.T, atol=1e-12)

    def test_two_node_constant_half(self, pair2):
        a = normalize_adjacency(pair2).toarray()
        assert np.allclose(a, 0.5, atol=1e-12)

    def test_single_node_identity(self):
        g = build_graph(1, [], labels=[0], train=[0])
        a = normalize_adjacency(g).toarray()
        assert np.allclose(a, [[1.0]], atol=1e-15)

    def test_symmetric(self, barbell):
        a = normalize_adjacency(barbell).toarray()
        assert np.max(np.abs(a - a.T)) < 1e-12

    def test_entries_in_unit_interval(self, barbell):
        a = normalize_adjacency(barbell)
        assert a.data.min() >= 0.0
        assert a.data.max() <= 1.0

    @given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=10_000))
    def test_sqrt_degree_eigenvector(self, n, seed):
        g = random_graph(n, 0.4, seed)
        a_hat = g.adjacency + sp.identity(n, format="csr")
        s = np.sqrt(np.asarray(a_hat.sum(axis=1)).ravel())
        lhs = normalize_adjacency(g) @ s
        assert np.max(np.abs(lhs - s)) < 1e-9

    def test_cached_instance_reused(self, path3):
        assert normalize_adjacency(path3) is normalize_adjacency(path3)

    def test_with_masks_shares_cache(self, barbell):
        a = normalize_adjacency(barbell)
        g2 = barbell.with_masks(barbell.train_mask, barbell.valid_mask,
                                barbell.test_mask)
        assert normalize_adjacency(g2) is a


class TestRowNormalize:
    def test_rows_sum_to_one(self, barbell):
        rw = row_normalize_adjacency(barbell)
        sums = np.asarray(rw.sum(axis=1)).ravel()
        assert np.allclose(sums, 1.0, atol=1e-12)

    def test_transpose_cached(self, barbell):
        rw = row_normalize_adjacency(barbell).toarray()
        rw_t = row_normalize_adjacency_t(barbell).toarray()
        assert np.allclose(rw.T, rw_t, atol=1e-15)

    def test_isolated_node_self_mean(self):
        g = build_graph(2, [], labels=[0, 0], train=[0])
        rw = row_normalize_adjacency(g).toarray()
        assert np.allclose(rw, np.eye(2), atol=1e-15)


class TestLoadGraph:
    def write(self, tmp_path, edges="", features=None, labels="", splits=""):
        p = {}
        for name, text in (("edges", edges), ("labels", labels), ("splits", splits)):
            f = tmp_path / f"{name}.tsv"
            f.write_text(text)
            p[name] = str(f)
        if features is not None:
            f = tmp_path / "features.tsv"
            f.write_text(features)
            p["features"] = str(f)
        else:
            p["features"] = None
        return p

    def test_basic_load(self, tmp_path):
        p = self.write(tmp_path,
                       edges="0\t1\n1\t2\n",
                       features="3 2\n0 0 1.0\n1 1 2.0\n",
                       labels="0\t0\n1\t1\n",
                       splits="0\ttrain\n1\tvalid\n2\ttest\n")
        g = load_graph(p["edges"], p["features"], p["labels"], p["splits"])
        assert g.n == 3
        assert g.num_attributes == 2
        assert g.num_classes == 2
        assert g.labels.tolist() == [0, 1, -1]
        assert g.train_mask.tolist() == [True, False, False]
        assert g.adjacency[0, 1] == 1.0
        assert g.adjacency[1, 0] == 1.0

    def test_symmetrization_and_duplicate_sum(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\t2.0\n1\t0\t3.0\n",
                       labels="0\t0\n", splits="0\ttrain\n")
        g = load_graph(p["edges"], None, p["labels"], p["splits"])
        # each directed line contributes to both directions; weights sum
        assert g.adjacency[0, 1] == 5.0
        assert g.adjacency[1, 0] == 5.0

    def test_self_loop_written_once(self, tmp_path):
        p = self.write(tmp_path, edges="0\t0\n0\t1\n",
                       labels="0\t0\n", splits="0\ttrain\n")
        g = load_graph(p["edges"], None, p["labels"], p["splits"])
        assert g.adjacency[0, 0] == 1.0

    def test_comments_and_blanks_skipped(self, tmp_path):
        p = self.write(tmp_path, edges="# a comment\n\n0\t1\n",
                       labels="0\t0\n", splits="0\ttrain\n")
        g = load_graph(p["edges"], None, p["labels"], p["splits"])
        assert g.n == 2

    def test_zero_weight_edges_dropped(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\t0.0\n0\t2\t1.0\n",
                       labels="0\t0\n", splits="0\ttrain\n")
        g = load_graph(p["edges"], None, p["labels"], p["splits"])
        assert g.adjacency[0, 1] == 0.0
        assert g.adjacency[0, 2] == 1.0

    def test_empty_edge_file_with_feature_header(self, tmp_path):
        p = self.write(tmp_path, edges="", features="1 1\n",
                       labels="0\t0\n", splits="0\ttrain\n")
        g = load_graph(p["edges"], p["features"], p["labels"], p["splits"])
        assert g.n == 1
        assert g.adjacency.nnz == 0

    def test_node_count_inferred_from_max_id(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\n", labels="5\t0\n",
                       splits="5\ttrain\n")
        g = load_graph(p["edges"], None, p["labels"], p["splits"])
        assert g.n == 6

    def test_feature_header_is_authoritative(self, tmp_path):
        p = self.write(tmp_path, edges="0\t9\n", features="3 1\n",
                       labels="0\t0\n", splits="0\ttrain\n")
        with pytest.raises(FormatError):
            load_graph(p["edges"], p["features"], p["labels"], p["splits"])

    @pytest.mark.parametrize("bad_edges", [
        "0\n",                      # too few fields
        "a\t1\n",                   # non-integer id
        "0\t1\tx\n",                # non-numeric weight
        "0\t1\tinf\n",              # non-finite weight
        "-1\t1\n",                  # negative id
    ])
    def test_malformed_edges(self, tmp_path, bad_edges):
        p = self.write(tmp_path, edges=bad_edges, labels="0\t0\n",
                       splits="0\ttrain\n")
        with pytest.raises(FormatError):
            load_graph(p["edges"], None, p["labels"], p["splits"])

    def test_error_names_file_and_line(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\nbroken\n", labels="0\t0\n",
                       splits="0\ttrain\n")
        with pytest.raises(FormatError, match=r"edges\.tsv:2"):
            load_graph(p["edges"], None, p["labels"], p["splits"])

    def test_missing_feature_header(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\n", features="",
                       labels="0\t0\n", splits="0\ttrain\n")
        with pytest.raises(FormatError):
            load_graph(p["edges"], p["features"], p["labels"], p["splits"])

    def test_feature_id_out_of_bounds(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\n", features="2 2\n0 5 1.0\n",
                       labels="0\t0\n", splits="0\ttrain\n")
        with pytest.raises(FormatError):
            load_graph(p["edges"], p["features"], p["labels"], p["splits"])

    def test_unknown_split_role(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\n", labels="0\t0\n",
                       splits="0\teval\n")
        with pytest.raises(FormatError):
            load_graph(p["edges"], None, p["labels"], p["splits"])

    def test_conflicting_labels(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\n", labels="0\t0\n0\t1\n",
                       splits="0\ttrain\n")
        with pytest.raises(ValidationError):
            load_graph(p["edges"], None, p["labels"], p["splits"])

    def test_node_in_two_splits(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\n", labels="0\t0\n",
                       splits="0\ttrain\n0\tvalid\n")
        with pytest.raises(ValidationError):
            load_graph(p["edges"], None, p["labels"], p["splits"])

    def test_train_node_without_label(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\n", labels="0\t0\n",
                       splits="1\ttrain\n")
        with pytest.raises(ValidationError):
            load_graph(p["edges"], None, p["labels"], p["splits"])

    def test_negative_edge_weight(self, tmp_path):
        p = self.write(tmp_path, edges="0\t1\t-2.0\n", labels="0\t0\n",
                       splits="0\ttrain\n")
        with pytest.raises(ValidationError):
            load_graph(p["edges"], None, p["labels"], p["splits"])

    def test_all_empty_files(self, tmp_path):
        p = self.write(tmp_path)
        with pytest.raises(FormatError):
            load_graph(p["edges"], None, p["labels"], p["splits"])


class TestRoundTrip:
    def test_write_then_load_reproduces_graph(self, tmp_path, barbell):
        paths = write_graph_files(barbell, str(tmp_path / "d"))
        g2 = load_graph(paths["edges"], paths["features"], paths["labels"],
                        paths["splits"])
        assert (g2.adjacency != barbell.adjacency).nnz == 0
        assert (g2.attributes != barbell.attributes).nnz == 0
        assert np.array_equal(g2.labels, barbell.labels)
        assert np.array_equal(g2.train_mask, barbell.train_mask)
        assert np.array_equal(g2.valid_mask, barbell.valid_mask)
        assert np.array_equal(g2.test_mask, barbell.test_mask)

    def test_plain_graph_round_trip(self, tmp_path):
        g = build_graph(3, [(0, 1), (1, 2)], labels=[0, 1, 0],
                        train=[0], valid=[1], test=[2])
        paths = write_graph_files(g, str(tmp_path / "d"))
        assert paths["features"] is None
        g2 = load_graph(paths["edges"], None, paths["labels"], paths["splits"])
        assert g2.attributes is None
        assert (g2.adjacency != g.adjacency).nnz == 0

    @given(n=st.integers(min_value=2, max_value=10),
           seed=st.integers(min_value=0, max_value=1000))
    def test_weighted_round_trip(self, tmp_path_factory, n, seed):
        rng = np.random.default_rng(seed)
        edges, weights = [], []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    edges.append((i, j))
                    weights.append(float(rng.uniform(0.1, 3.0)))
        if not edges:
            edges, weights = [(0, 1)], [1.0]
        g = build_graph(n, edges, labels=np.zeros(n, dtype=int), train=[0],
                        weights=weights)
        out = tmp_path_factory.mktemp("rt")
        paths = write_graph_files(g, str(out))
        g2 = load_graph(paths["edges"], None, paths["labels"], paths["splits"])
        assert np.max(np.abs((g2.adjacency - g.adjacency).toarray())) == 0.0


class TestValidation:
    def test_overlapping_masks_rejected(self, path3):
        with pytest.raises(ValidationError):
            path3.with_masks([True, False, False], [True, False, False],
                             [False, False, True])

    def test_label_below_minus_one_rejected(self):
        with pytest.raises(ValidationError):
            build_graph(2, [(0, 1)], labels=[-2, 0], train=[1])

    def test_attribute_row_count_mismatch(self):
        g = build_graph(2, [(0, 1)], labels=[0, 0], train=[0])
        bad = Graph(adjacency=g.adjacency, attributes=sp.csr_matrix(np.eye(3)),
                    labels=g.labels, train_mask=g.train_mask,
                    valid_mask=g.valid_mask, test_mask=g.test_mask)
        with pytest.raises(ValidationError):
            bad.validate()

    def test_num_classes_ignores_unknown(self):
        g = build_graph(3, [(0, 1)], labels=[2, -1, -1], train=[0])
        assert g.num_classes == 3
