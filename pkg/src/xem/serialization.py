"""JSON model files.

Floats are written with ``repr`` (shortest round-trip form), so a saved
model reloads to bit-identical thresholds and leaf weights. Nothing time
dependent is stored: the ``fitted_at`` block identifies the training data by
digest, which keeps repeated fits byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import XEMModel, XEMParams
from .dataset import DataFormatError
from .gbt import GBTModel, GBTParams, RegressionTree
from .lce import CascadeNode, CascadeTree, LCEForest, LCEParams

SCHEMA_VERSION = 1


class ModelFormatError(DataFormatError):
    """Raised when a model document does not follow the schema."""


# --- encode ------------------------------------------------------------------


def _tree_to_dict(tree: RegressionTree) -> dict:
    nodes = []
    for i in range(tree.n_nodes):
        if tree.feature[i] < 0:
            nodes.append({"leaf_weight": float(tree.value[i])})
        else:
            nodes.append({
                "feature": int(tree.feature[i]),
                "threshold": float(tree.threshold[i]),
                "default_direction": "left" if tree.default_left[i] else "right",
                "left": int(tree.left[i]),
                "right": int(tree.right[i]),
            })
    return {"nodes": nodes}


def _gbt_to_dict(model: GBTModel) -> dict:
    return {
        "n_classes": model.n_classes,
        "feature_count": model.feature_count,
        "base_score": model.base_score,
        "rounds": [[_tree_to_dict(t) for t in round_trees] for round_trees in model.trees],
    }


def _node_to_dict(node: CascadeNode) -> dict:
    if node.leaf_class is not None:
        return {"leaf_class": node.leaf_class}
    out = {"base": _gbt_to_dict(node.base)}
    if node.is_split:
        out["split"] = {
            "feature": node.feature,
            "threshold": node.threshold,
            "default_direction": "left" if node.default_left else "right",
        }
        out["left"] = _node_to_dict(node.left)
        out["right"] = _node_to_dict(node.right)
    return out


def _params_to_dict(params: XEMParams) -> dict:
    g = params.lce.gbt
    return {
        "win_pct": params.win_pct,
        "n_trees": params.lce.n_trees,
        "max_depth": params.lce.max_depth,
        "gbt": {
            "n_rounds": g.n_rounds,
            "max_depth": g.max_depth,
            "learning_rate": g.learning_rate,
            "reg_lambda": g.reg_lambda,
            "gamma": g.gamma,
            "min_child_weight": g.min_child_weight,
        },
    }


def model_to_dict(model: XEMModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "class_names": list(model.class_names),
        "n_dims": model.n_dims,
        "w": model.w,
        "win_pct": model.win_pct,
        "train_max_length": model.train_max_length,
        "seed": model.seed,
        "params": _params_to_dict(model.params),
        "fitted_at": {"train_digest": model.train_digest, "library_version": __version__},
        "forest": {
            "n_classes": model.forest.n_classes,
            "input_width": model.forest.input_width,
            "trees": [_node_to_dict(t.root) for t in model.forest.trees],
        },
    }


def dumps(model: XEMModel) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def save_model(model: XEMModel, path: str | Path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


# --- decode ------------------------------------------------------------------


def _direction(value) -> bool:
    if value not in ("left", "right"):
        raise ModelFormatError(f"default_direction must be 'left' or 'right', got {value!r}")
    return value == "left"


def _tree_from_dict(d: dict) -> RegressionTree:
    nodes = d["nodes"]
    n = len(nodes)
    feature = np.full(n, -1, dtype=np.int64)
    threshold = np.zeros(n)
    default_left = np.ones(n, dtype=bool)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    value = np.zeros(n)
    for i, node in enumerate(nodes):
        if "leaf_weight" in node:
            value[i] = float(node["leaf_weight"])
            continue
        feature[i] = int(node["feature"])
        threshold[i] = float(node["threshold"])
        default_left[i] = _direction(node["default_direction"])
        left[i], right[i] = int(node["left"]), int(node["right"])
        if not (i < left[i] < n and i < right[i] < n):
            raise ModelFormatError(f"tree node {i} has out-of-range children")
    return RegressionTree(feature, threshold, default_left, left, right, value)


def _gbt_from_dict(d: dict) -> GBTModel:
    trees = [[_tree_from_dict(t) for t in round_trees] for round_trees in d["rounds"]]
    return GBTModel(trees, int(d["n_classes"]), int(d["feature_count"]), float(d["base_score"]))


def _node_from_dict(d: dict) -> CascadeNode:
    if "leaf_class" in d:
        return CascadeNode(leaf_class=int(d["leaf_class"]))
    base = _gbt_from_dict(d["base"])
    if "split" not in d:
        return CascadeNode(base=base)
    split = d["split"]
    return CascadeNode(
        base=base,
        feature=int(split["feature"]),
        threshold=float(split["threshold"]),
        default_left=_direction(split["default_direction"]),
        left=_node_from_dict(d["left"]),
        right=_node_from_dict(d["right"]),
    )


def model_from_dict(d: dict) -> XEMModel:
    try:
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ModelFormatError(f"unsupported schema_version {d.get('schema_version')!r}")
        p = d["params"]
        params = XEMParams(p["win_pct"], LCEParams(p["n_trees"], p["max_depth"], GBTParams(**p["gbt"])))
        f = d["forest"]
        k, width = int(f["n_classes"]), int(f["input_width"])
        forest = LCEForest([CascadeTree(_node_from_dict(t), k, width) for t in f["trees"]], k, width)
        return XEMModel(
            forest=forest,
            w=int(d["w"]),
            n_dims=int(d["n_dims"]),
            class_names=[str(c) for c in d["class_names"]],
            train_max_length=int(d["train_max_length"]),
            win_pct=d["win_pct"],
            params=params,
            seed=int(d["seed"]),
            train_digest=str(d.get("fitted_at", {}).get("train_digest", "")),
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from exc


def loads(text: str) -> XEMModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    return model_from_dict(doc)


def load_model(path: str | Path) -> XEMModel:
    return loads(Path(path).read_text(encoding="utf-8"))
