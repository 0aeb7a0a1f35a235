import numpy as np
import pytest

from routegrad import diffcore as dc
from routegrad import netgraph as ng
from routegrad import surrogate as sg

from oracles import central_difference


@pytest.fixture
def small_model():
    return sg.GnnModel.initialize(sg.GnnConfig(hidden=8, rounds=3), seed=5)


@pytest.fixture
def small_graph():
    rng = np.random.default_rng(2)
    links = [(i, (i + 1) % 5, 1.0, False) for i in range(5)] + [(0, 2, 1.0, False)]
    g = ng.build_graph(5, links)
    w = rng.uniform(0.2, 1.8, g.edge_count)
    return g, w


class TestQueryIndicators:
    def test_swapping_endpoints_moves_two_rows(self, small_graph):
        g, _ = small_graph
        a = sg.query_indicators(g, [(1, 3)])[0]
        b = sg.query_indicators(g, [(3, 1)])[0]
        changed = np.flatnonzero(np.any(a != b, axis=1))
        assert changed.tolist() == [1, 3]
        assert a[1].tolist() == [1.0, 0.0] and a[3].tolist() == [0.0, 1.0]

    def test_same_endpoints_rejected(self, small_graph):
        g, _ = small_graph
        with pytest.raises(ng.GraphError):
            sg.query_indicators(g, [(2, 2)])


class TestEncode:
    def test_output_shapes(self, small_model, small_graph):
        g, w = small_graph
        state = sg.encode(g, w, sg.PairQuery(0, 3), small_model)
        assert state.nodes.shape == (g.node_count, 8)
        assert state.edges.shape == (g.edge_count, 8)

    def test_deterministic(self, small_model, small_graph):
        g, w = small_graph
        s1 = sg.encode(g, w, sg.PairQuery(0, 3), small_model)
        s2 = sg.encode(g, w, sg.PairQuery(0, 3), small_model)
        assert np.array_equal(s1.nodes.data, s2.nodes.data)
        assert np.array_equal(s1.edges.data, s2.edges.data)

    def test_all_finite(self, small_model, small_graph):
        g, w = small_graph
        state = sg.encode(g, w, sg.PairQuery(4, 1), small_model)
        assert np.all(np.isfinite(state.nodes.data))
        assert np.all(np.isfinite(state.edges.data))


class TestProcessStep:
    def test_shapes_preserved(self, small_model, small_graph):
        g, w = small_graph
        state = sg.encode(g, w, sg.PairQuery(0, 3), small_model)
        nxt = sg.process_step(g, state, small_model, 0)
        assert nxt.nodes.shape == state.nodes.shape
        assert nxt.edges.shape == state.edges.shape

    def test_edge_perturbation_reaches_only_receiver(self, small_model, small_graph):
        # one block moves information exactly one hop: changing edge k's
        # latent may only change the update of node receivers[k]
        g, w = small_graph
        state = sg.encode(g, w, sg.PairQuery(0, 3), small_model)
        k = 4
        bumped = sg.GraphState(
            nodes=dc.Tensor(state.nodes.data.copy()),
            edges=dc.Tensor(state.edges.data.copy()),
        )
        bumped.edges.data[k] += 1.0
        out_a = sg.process_step(g, state, small_model, 0)
        out_b = sg.process_step(g, bumped, small_model, 0)
        changed = np.flatnonzero(np.any(out_a.nodes.data != out_b.nodes.data, axis=1))
        assert changed.tolist() == [int(g.receivers[k])]

    def test_aggregation_invariant_to_edge_order(self, small_model, small_graph):
        g, w = small_graph
        rng = np.random.default_rng(0)
        perm = rng.permutation(g.edge_count)
        g2 = ng.Graph(
            g.node_count,
            receivers=g.receivers[perm],
            senders=g.senders[perm],
            capacities=g.capacities[perm],
        )
        s1 = sg.encode(g, w, sg.PairQuery(0, 3), small_model)
        s2 = sg.encode(g2, w[perm], sg.PairQuery(0, 3), small_model)
        n1 = sg.process_step(g, s1, small_model, 0)
        n2 = sg.process_step(g2, s2, small_model, 0)
        assert np.allclose(n1.nodes.data, n2.nodes.data, atol=1e-12)
        assert np.allclose(n1.edges.data[perm], n2.edges.data, atol=1e-12)


class TestDecode:
    def test_bounds_and_length(self, small_model, small_graph):
        g, w = small_graph
        state = sg.encode(g, w, sg.PairQuery(0, 3), small_model)
        probs = sg.decode(state, small_model)
        assert probs.shape == (g.edge_count,)
        assert np.all(probs.data > 0.0) and np.all(probs.data < 1.0)

    def test_edge_permutation_equivariance(self, small_model, small_graph):
        g, w = small_graph
        state = sg.encode(g, w, sg.PairQuery(0, 3), small_model)
        probs = sg.decode(state, small_model)
        rng = np.random.default_rng(1)
        perm = rng.permutation(g.edge_count)
        permuted = sg.GraphState(nodes=state.nodes, edges=dc.Tensor(state.edges.data[perm]))
        assert np.array_equal(sg.decode(permuted, small_model).data, probs.data[perm])


class TestPredictPath:
    def test_untrained_outputs_valid(self, small_model, small_graph):
        g, w = small_graph
        probs, steps = sg.predict_path(small_model, g, w, sg.PairQuery(0, 3))
        assert probs.shape == (g.edge_count,)
        assert np.all(np.isfinite(probs.data))
        assert np.all((probs.data > 0.0) & (probs.data < 1.0))
        assert len(steps) == small_model.config.rounds

    def test_final_step_equals_probs(self, small_model, small_graph):
        g, w = small_graph
        probs, steps = sg.predict_path(small_model, g, w, sg.PairQuery(2, 0))
        assert np.array_equal(probs.data, steps[-1].data)

    def test_matches_public_op_composition(self, small_model, small_graph):
        g, w = small_graph
        q = sg.PairQuery(1, 4)
        state = sg.encode(g, w, q, small_model)
        for t in range(small_model.config.rounds):
            state = sg.process_step(g, state, small_model, t)
        composed = sg.decode(state, small_model)
        probs, _ = sg.predict_path(small_model, g, w, q)
        assert np.allclose(probs.data, composed.data, atol=1e-12)


class TestPredictAllPairs:
    def test_row_count(self, small_model, small_graph):
        g, w = small_graph
        P = sg.predict_all_pairs(small_model, g, w)
        assert P.shape == (g.pair_count, g.edge_count)
        assert np.all((P.data > 0.0) & (P.data < 1.0))

    def test_batched_equals_sequential(self, small_model, small_graph):
        g, w = small_graph
        P = sg.predict_all_pairs(small_model, g, w)
        for i, (u, v) in enumerate(ng.ordered_pairs(g.node_count)):
            probs, _ = sg.predict_path(small_model, g, w, sg.PairQuery(int(u), int(v)))
            assert np.allclose(P.data[i], probs.data, atol=1e-12)

    def test_gradient_wrt_weights_matches_fd(self, small_graph):
        model = sg.GnnModel.initialize(sg.GnnConfig(hidden=6, rounds=2), seed=3)
        g, w = small_graph
        rng = np.random.default_rng(4)
        d = rng.uniform(0.0, 1.0, g.pair_count)

        def objective(wt: dc.Tensor) -> dc.Tensor:
            P = sg.predict_all_pairs(model, g, wt)
            rho = dc.reshape(dc.matmul(dc.Tensor(d.reshape(1, -1)), P), (g.edge_count,))
            rho = dc.div(rho, dc.Tensor(g.capacities))
            return dc.soft_maximum(rho, 0.1)

        err = dc.finite_difference_check(objective, w)
        assert err < 1e-3


class TestEquivariance:
    def test_node_relabeling(self, small_graph):
        model = sg.GnnModel.initialize(sg.GnnConfig(hidden=8, rounds=3), seed=7)
        g, w = small_graph
        rng = np.random.default_rng(11)
        perm = rng.permutation(g.node_count)  # perm[old] = new
        g2 = ng.Graph(
            g.node_count,
            receivers=perm[g.receivers],
            senders=perm[g.senders],
            capacities=g.capacities,
        )
        for u, v in [(0, 3), (4, 1)]:
            p1, _ = sg.predict_path(model, g, w, sg.PairQuery(u, v))
            p2, _ = sg.predict_path(model, g2, w, sg.PairQuery(int(perm[u]), int(perm[v])))
            assert np.allclose(p1.data, p2.data, atol=1e-10)


class TestCheckpoint:
    def test_round_trip_bytes_identical(self, small_model, tmp_path):
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        sg.save_checkpoint(small_model, p1)
        loaded = sg.load_checkpoint(p1)
        sg.save_checkpoint(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_params_exactly_preserved(self, small_model, tmp_path):
        path = tmp_path / "m.ckpt"
        sg.save_checkpoint(small_model, path)
        loaded = sg.load_checkpoint(path)
        assert loaded.config == small_model.config
        for name, arr in small_model.params.items():
            assert np.array_equal(loaded.params[name], arr)

    def test_bad_format_rejected(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text('{"format":"other","version":1}\n')
        with pytest.raises(sg.CheckpointError):
            sg.load_checkpoint(path)

    def test_missing_param_rejected(self, small_model, tmp_path):
        import json

        path = tmp_path / "m.ckpt"
        sg.save_checkpoint(small_model, path)
        doc = json.loads(path.read_text())
        del doc["params"]["dec_l1_w"]
        path.write_text(json.dumps(doc))
        with pytest.raises(sg.CheckpointError):
            sg.load_checkpoint(path)

    def test_wrong_shape_rejected(self, small_model, tmp_path):
        import json

        path = tmp_path / "m.ckpt"
        sg.save_checkpoint(small_model, path)
        doc = json.loads(path.read_text())
        doc["params"]["dec_l2_b"]["shape"] = [2]
        doc["params"]["dec_l2_b"]["data"] = [0.0, 0.0]
        path.write_text(json.dumps(doc))
        with pytest.raises(sg.CheckpointError):
            sg.load_checkpoint(path)


class TestSharedProcessor:
    def test_option_runs_and_differs(self, small_graph):
        g, w = small_graph
        shared = sg.GnnModel.initialize(sg.GnnConfig(hidden=8, rounds=3, share_processor=True), seed=5)
        assert "proc1_edge_l1_w" not in shared.params
        probs, steps = sg.predict_path(shared, g, w, sg.PairQuery(0, 3))
        assert len(steps) == 3
        assert np.all(np.isfinite(probs.data))


def test_float32_path_close_to_float64(small_graph):
    model = sg.GnnModel.initialize(sg.GnnConfig(hidden=8, rounds=3), seed=9)
    g, w = small_graph
    p64 = sg.predict_all_pairs(model, g, w, dtype=np.float64)
    p32 = sg.predict_all_pairs(model, g, w, dtype=np.float32)
    assert p32.data.dtype == np.float32
    assert np.allclose(p32.data, p64.data, atol=1e-4)
