"""Reference values for the C++ tests, computed with PyTorch float64 autograd.

Writes tests/fixtures/oracle_cases.json. Regenerate with

    python3 tests/oracle/gen_oracle.py

Every case fixes the parameters and data explicitly (drawn here from a seeded
numpy generator and stored verbatim), so the C++ side never needs to replay
this RNG.
"""

import json
import math
import pathlib

import numpy as np
import torch

torch.set_default_dtype(torch.float64)

BN_EPS = 1e-5
SMOOTH = 1e-8
OUT = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "oracle_cases.json"


def make_net(rng, widths, bn):
    layers = []
    depth = len(widths) - 1
    for l in range(depth):
        hidden = l + 1 < depth
        use_bn = bn and hidden
        layer = {
            "weights": rng.normal(0.0, 0.8, size=(widths[l], widths[l + 1])).tolist(),
            "bias": [] if use_bn else rng.normal(0.0, 0.3, size=widths[l + 1]).tolist(),
            "batch_norm": use_bn,
            "relu": hidden,
        }
        if use_bn:
            layer["bn_scale"] = rng.uniform(0.5, 1.5, size=widths[l + 1]).tolist()
            layer["bn_shift"] = rng.normal(0.0, 0.3, size=widths[l + 1]).tolist()
            layer["running_mean"] = rng.normal(0.0, 0.5, size=widths[l + 1]).tolist()
            layer["running_var"] = rng.uniform(0.5, 2.0, size=widths[l + 1]).tolist()
        layers.append(layer)
    return layers


def tensors(layers):
    out = []
    for L in layers:
        t = {"weights": torch.tensor(L["weights"], requires_grad=True)}
        if L["bias"]:
            t["bias"] = torch.tensor(L["bias"], requires_grad=True)
        if L["batch_norm"]:
            t["bn_scale"] = torch.tensor(L["bn_scale"], requires_grad=True)
            t["bn_shift"] = torch.tensor(L["bn_shift"], requires_grad=True)
            t["running_mean"] = torch.tensor(L["running_mean"])
            t["running_var"] = torch.tensor(L["running_var"])
        out.append(t)
    return out


def forward(layers, ts, x, train):
    h = x
    for L, t in zip(layers, ts):
        z = h @ t["weights"]
        if "bias" in t:
            z = z + t["bias"]
        if L["batch_norm"]:
            if train:
                mean = z.mean(dim=0)
                var = ((z - mean) ** 2).mean(dim=0)
            else:
                mean, var = t["running_mean"], t["running_var"]
            z = (z - mean) / torch.sqrt(var + BN_EPS) * t["bn_scale"] + t["bn_shift"]
        h = torch.relu(z) if L["relu"] else z
    return h


def data_loss(pred, task, y):
    if task == "mse":
        return ((pred - y) ** 2).mean()
    return torch.nn.functional.cross_entropy(pred, y, reduction="mean")


def reg(ts, kind, alpha, masks):
    depth = len(ts)
    lw = [1.0 if l < depth // 2 else 10.0 for l in range(depth)]
    total_group = torch.zeros(())
    total_l1 = torch.zeros(())
    total_l2 = torch.zeros(())
    for l, t in enumerate(ts):
        w = t["weights"]
        rows = range(w.shape[0])
        if kind.startswith("partial"):
            rows = [r for r in rows if masks[l][r]]
        rows = list(rows)
        weight = lw[l] if kind.startswith("weighted") else 1.0
        if not rows:
            continue
        sub = w[rows, :]
        norms = torch.sqrt((sub ** 2).sum(dim=1) + SMOOTH ** 2) - SMOOTH
        total_group = total_group + weight * math.sqrt(w.shape[1]) * norms.sum()
        total_l1 = total_l1 + weight * sub.abs().sum()
        total_l2 = total_l2 + (sub ** 2).sum()
    if kind == "none":
        return torch.zeros(())
    if kind == "l1":
        return total_l1
    if kind == "l2":
        return total_l2
    if kind in ("group_lasso", "weighted_gl", "partial_gl"):
        return total_group
    return (1 - alpha) * total_group + alpha * total_l1


def grads_of(ts):
    out = []
    for t in ts:
        g = {}
        for key in ("weights", "bias", "bn_scale", "bn_shift"):
            if key in t:
                grad = t[key].grad
                g[key] = (grad if grad is not None else torch.zeros_like(t[key])).tolist()
        out.append(g)
    return out


def case(name, seed, widths, bn, task, batch, kinds, lam, alpha, mask_rows):
    rng = np.random.default_rng(seed)
    layers = make_net(rng, widths, bn)
    x = rng.normal(0.0, 1.0, size=(batch, widths[0]))
    if task == "mse":
        y = rng.normal(0.0, 1.0, size=(batch, widths[-1]))
        y_t = torch.tensor(y)
        targets = y.tolist()
    else:
        labels = rng.integers(0, widths[-1], size=batch)
        y_t = torch.tensor(labels, dtype=torch.long)
        targets = labels.tolist()
    masks = [[0 if r in mask_rows.get(l, ()) else 1 for r in range(widths[l])] for l in range(len(widths) - 1)]

    ts = tensors(layers)
    xt = torch.tensor(x)
    results = {
        "train_output": forward(layers, ts, xt, True).tolist(),
        "eval_output": forward(layers, ts, xt, False).tolist(),
        "data_loss": data_loss(forward(layers, ts, xt, True), task, y_t).item(),
        "kinds": {},
    }
    for kind in kinds:
        ts = tensors(layers)
        loss = data_loss(forward(layers, ts, xt, True), task, y_t)
        r = reg(ts, kind, alpha, masks)
        obj = loss + lam * r
        obj.backward()
        results["kinds"][kind] = {"reg_value": r.item(), "objective": obj.item(), "grads": grads_of(ts)}
    return {
        "name": name,
        "widths": widths,
        "task": task,
        "lambda": lam,
        "alpha": alpha,
        "layers": layers,
        "x": x.tolist(),
        "targets": targets,
        "masks": masks,
        **results,
    }


ALL = ["none", "l1", "l2", "group_lasso", "sparse_group_lasso", "weighted_gl", "weighted_sgl", "partial_gl",
       "partial_sgl"]

cases = [
    case("bn_regression", 11, [3, 5, 4, 2], True, "mse", 6, ALL, 0.01, 0.3, {0: {1}, 1: {0, 3}, 2: {2}}),
    case("plain_classification", 12, [4, 6, 3], False, "ce", 7, ALL, 0.02, 0.1, {0: {0, 2}, 1: {5}}),
    case("deep_bn_classification", 13, [5, 6, 6, 4, 3], True, "ce", 8,
         ["group_lasso", "partial_sgl", "weighted_sgl"], 0.005, 0.5, {1: {0, 1, 2}, 3: {3}}),
]
OUT.write_text(json.dumps({"bn_eps": BN_EPS, "smoothing_eps": SMOOTH, "cases": cases}, indent=1))
print("wrote", OUT)
