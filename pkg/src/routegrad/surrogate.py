"""Differentiable shortest-path surrogate: an encode-process-decode GNN.

Given a graph, its link weights, and one (source, destination) query, the
network outputs a per-link probability of lying on the weighted shortest
path.  Stacking the queries for every ordered node pair yields a soft
routing matrix that is differentiable with respect to the link weights,
which is what the weight optimizer descends through.

Architecture: node features ``[I(u=i), I(v=i)]`` and edge features
``[w_k]`` are encoded independently by 2-layer MLPs, each followed by
layer normalization.  Each of T processor blocks updates edge latents
from (edge, receiver, sender) latents, sums updated incoming-edge latents
per node, and updates node latents from (aggregate, node).  A shared
decoder MLP with a sigmoid head reads edge latents; during training it is
applied after every block so each block learns to refine the previous
one's prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import diffcore as dc
from .netgraph import Graph, GraphError, ordered_pairs

CHECKPOINT_FORMAT = "routegrad-gnn"
CHECKPOINT_VERSION = 1
NODE_FEATURES = 2
EDGE_FEATURES = 1


class CheckpointError(ValueError):
    """A model checkpoint document is malformed or inconsistent."""


class PairQuery(NamedTuple):
    """One routing question: which links lie on the path source -> dest?"""

    source: int
    dest: int


@dataclass(frozen=True)
class GnnConfig:
    """Architecture hyperparameters.

    ``share_processor=True`` reuses one block's parameters for all T
    message-passing rounds (recurrent core) instead of T distinct blocks.
    """

    hidden: int = 128
    rounds: int = 8
    share_processor: bool = False

    def __post_init__(self):
        if self.hidden < 1 or self.rounds < 1:
            raise GraphError("hidden width and round count must be >= 1")


@dataclass
class GraphState:
    """Per-node and per-edge latent vectors (leading batch axes allowed)."""

    nodes: dc.Tensor
    edges: dc.Tensor


class GnnModel:
    """Parameter container for the surrogate network."""

    def __init__(self, config: GnnConfig, params: dict):
        self.config = config
        self.params = params

    @classmethod
    def initialize(cls, config: GnnConfig = GnnConfig(), seed: int = 0) -> "GnnModel":
        """Fresh model with He-initialized layers and identity layer norms."""
        rng = np.random.default_rng(seed)
        h = config.hidden
        params: dict[str, np.ndarray] = {}

        def dense(name, n_out, n_in, final=False):
            std = np.sqrt((1.0 if final else 2.0) / n_in)
            params[f"{name}_w"] = rng.normal(0.0, std, (n_out, n_in))
            params[f"{name}_b"] = np.zeros(n_out)

        def mlp_ln(prefix, n_in):
            dense(f"{prefix}_l1", h, n_in)
            dense(f"{prefix}_l2", h, h)
            params[f"{prefix}_ln_gain"] = np.ones(h)
            params[f"{prefix}_ln_bias"] = np.zeros(h)

        mlp_ln("enc_node", NODE_FEATURES)
        mlp_ln("enc_edge", EDGE_FEATURES)
        for t in range(1 if config.share_processor else config.rounds):
            mlp_ln(f"proc{t}_edge", 3 * h)
            mlp_ln(f"proc{t}_node", 2 * h)
        dense("dec_l1", h, h)
        dense("dec_l2", 1, h, final=True)
        return cls(config, params)

    def parameter_names(self) -> list[str]:
        return sorted(self.params)

    def block_prefix(self, round_index: int) -> str:
        t = 0 if self.config.share_processor else round_index
        return f"proc{t}"

    def tensors(self, dtype=np.float64, requires_grad: bool = False) -> dict:
        """Parameters wrapped as Tensors.

        At float64 the tensors alias the stored arrays, so in-place
        optimizer updates are visible to subsequent forwards; other dtypes
        produce cast copies for inference.
        """
        if dtype == np.float64:
            return {k: dc.Tensor(v, requires_grad=requires_grad) for k, v in self.params.items()}
        return {
            k: dc.Tensor(v.astype(dtype), requires_grad=requires_grad)
            for k, v in self.params.items()
        }


def _mlp_ln(xs, mt, prefix):
    z = dc.affine_sum(xs, mt[f"{prefix}_l1_w"], mt[f"{prefix}_l1_b"])
    z = dc.relu(z)
    z = dc.affine(z, mt[f"{prefix}_l2_w"], mt[f"{prefix}_l2_b"])
    return dc.layer_normalize(z, mt[f"{prefix}_ln_gain"], mt[f"{prefix}_ln_bias"])


def _encode(g: Graph, w_col: dc.Tensor, indicators: dc.Tensor, mt) -> GraphState:
    return GraphState(
        nodes=_mlp_ln([indicators], mt, "enc_node"),
        edges=_mlp_ln([w_col], mt, "enc_edge"),
    )


def _process(g: Graph, state: GraphState, mt, prefix: str, update_nodes: bool = True) -> GraphState:
    recv = dc.index_rows(state.nodes, g.receivers)
    send = dc.index_rows(state.nodes, g.senders)
    edges = _mlp_ln([state.edges, recv, send], mt, f"{prefix}_edge")
    if not update_nodes:
        return GraphState(nodes=state.nodes, edges=edges)
    agg = dc.segment_sum(edges, g.receivers, g.node_count)
    nodes = _mlp_ln([agg, state.nodes], mt, f"{prefix}_node")
    return GraphState(nodes=nodes, edges=edges)


def _decode(state: GraphState, mt) -> dc.Tensor:
    h = dc.relu(dc.affine(state.edges, mt["dec_l1_w"], mt["dec_l1_b"]))
    p = dc.sigmoid(dc.affine(h, mt["dec_l2_w"], mt["dec_l2_b"]))
    return dc.reshape(p, p.shape[:-1])


def query_indicators(g: Graph, queries, dtype=np.float64) -> np.ndarray:
    """Node feature block for a batch of queries: [I(u=i), I(v=i)] per node."""
    ind = np.zeros((len(queries), g.node_count, NODE_FEATURES), dtype=dtype)
    for row, (u, v) in enumerate(queries):
        if u == v:
            raise GraphError("query endpoints must differ")
        ind[row, u, 0] = 1.0
        ind[row, v, 1] = 1.0
    return ind


def forward(
    g: Graph,
    weights,
    indicators: np.ndarray,
    model: GnnModel,
    dtype=np.float64,
    per_step: bool = False,
    params_grad: bool = False,
    model_tensors=None,
):
    """Batched surrogate evaluation.

    Args:
        g: Graph whose links are being classified.
        weights: Link weights; pass a ``requires_grad`` Tensor to obtain
            gradients with respect to them.
        indicators: ``[n_q, n_v, 2]`` query features (see
            :func:`query_indicators`).  Disjoint graph components may
            carry independent queries in a single row.
        model: Trained or fresh model.
        dtype: Computation dtype (float64 default; float32 for the
            optimizer fast path).
        per_step: Also return the decoder output after every round.
        params_grad: Mark parameters as gradient-requiring (training).
        model_tensors: Pre-wrapped parameter tensors, to share across
            calls inside one tape.

    Returns:
        ``(final, steps)``: final-round edge probabilities ``[n_q, n_e]``
        and, when ``per_step``, the list of all per-round outputs.
    """
    mt = model_tensors if model_tensors is not None else model.tensors(dtype, params_grad)
    w = weights if isinstance(weights, dc.Tensor) else dc.Tensor(np.asarray(weights, dtype=dtype))
    if w.shape != (g.edge_count,):
        raise GraphError(f"weights shape {w.shape}, expected ({g.edge_count},)")
    w_col = dc.reshape(w, (1, g.edge_count, 1))
    ind = dc.Tensor(np.ascontiguousarray(indicators, dtype=dtype))

    state = _encode(g, w_col, ind, mt)
    steps: list[dc.Tensor] = []
    final = None
    rounds = model.config.rounds
    for t in range(rounds):
        last = t == rounds - 1
        # the final node update feeds nothing the decoder can see
        state = _process(g, state, mt, model.block_prefix(t), update_nodes=not last)
        if per_step or last:
            out = _decode(state, mt)
            if per_step:
                steps.append(out)
            if last:
                final = out
    return final, steps


def encode(g: Graph, weights, query: PairQuery, model: GnnModel) -> GraphState:
    """Initial latents for a single query (latents shaped [n_v|n_e, H])."""
    mt = model.tensors()
    w = weights if isinstance(weights, dc.Tensor) else dc.Tensor(np.asarray(weights, dtype=np.float64))
    w_col = dc.reshape(w, (1, g.edge_count, 1))
    ind = dc.Tensor(query_indicators(g, [query]))
    state = _encode(g, w_col, ind, mt)
    return GraphState(
        nodes=dc.reshape(state.nodes, (g.node_count, model.config.hidden)),
        edges=dc.reshape(state.edges, (g.edge_count, model.config.hidden)),
    )


def process_step(g: Graph, state: GraphState, model: GnnModel, round_index: int = 0) -> GraphState:
    """One full message-passing block (edge update, aggregate, node update)."""
    return _process(g, state, model.tensors(), model.block_prefix(round_index))


def decode(state: GraphState, model: GnnModel) -> dc.Tensor:
    """Per-edge path-membership probabilities, strictly inside (0, 1)."""
    return _decode(state, model.tensors())


def predict_path(model: GnnModel, g: Graph, weights, query: PairQuery):
    """Edge probabilities for one query, plus every round's output.

    Returns:
        ``(probs, steps)`` with ``probs`` shaped ``[n_e]`` and ``steps`` a
        list of T such tensors (the last one equals ``probs``).
    """
    ind = query_indicators(g, [query])
    final, steps = forward(g, weights, ind, model, per_step=True)
    squeeze = lambda t: dc.reshape(t, (g.edge_count,))
    return squeeze(final), [squeeze(s) for s in steps]


def predict_all_pairs(model: GnnModel, g: Graph, weights, dtype=np.float64) -> dc.Tensor:
    """Soft routing matrix: one probability row per ordered pair.

    Row i corresponds to ``ordered_pairs(n)[i]``; evaluated as a single
    batched computation and differentiable with respect to ``weights``.
    """
    ind = query_indicators(g, ordered_pairs(g.node_count), dtype=dtype)
    final, _ = forward(g, weights, ind, model, dtype=dtype)
    return final


# ---------------------------------------------------------------------------
# checkpoint serialization (see docs/checkpoint_format.md)


def save_checkpoint(model: GnnModel, path) -> None:
    """Writes the model as a canonical JSON document.

    Floats are emitted as shortest round-trip decimals, keys are sorted,
    and separators are fixed, so saving the same parameters always
    produces identical bytes.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "hidden": model.config.hidden,
        "rounds": model.config.rounds,
        "share_processor": model.config.share_processor,
        "node_feature_width": NODE_FEATURES,
        "edge_feature_width": EDGE_FEATURES,
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in model.params.items()
        },
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path) -> GnnModel:
    """Reads a checkpoint, validating structure, names, and shapes."""
    with open(path, "r", encoding="ascii") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"not valid JSON: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unknown checkpoint format {doc.get('format')!r}")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    if doc.get("node_feature_width") != NODE_FEATURES or doc.get("edge_feature_width") != EDGE_FEATURES:
        raise CheckpointError("feature widths do not match this implementation")
    config = GnnConfig(
        hidden=int(doc["hidden"]),
        rounds=int(doc["rounds"]),
        share_processor=bool(doc["share_processor"]),
    )
    reference = GnnModel.initialize(config, seed=0)
    stored = doc.get("params")
    if not isinstance(stored, dict):
        raise CheckpointError("missing params table")
    if set(stored) != set(reference.params):
        missing = set(reference.params) - set(stored)
        extra = set(stored) - set(reference.params)
        raise CheckpointError(f"parameter names mismatch: missing={sorted(missing)} extra={sorted(extra)}")
    params = {}
    for name, entry in stored.items():
        shape = tuple(entry["shape"])
        if shape != reference.params[name].shape:
            raise CheckpointError(
                f"{name}: stored shape {shape} != expected {reference.params[name].shape}"
            )
        arr = np.asarray(entry["data"], dtype=np.float64).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise CheckpointError(f"{name}: non-finite values")
        params[name] = arr
    return GnnModel(config, params)
