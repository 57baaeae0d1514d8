"""Property suites runnable from the CLI and reused by the test suite.

Each suite returns a list of (check name, passed, detail) tuples plus an
optional serialized failing case so failures can be replayed.
"""

from __future__ import annotations

import json
from dataclasses import replace

import numpy as np

from .boundary import ProjectorOptions, project_to_boundary
from .data import Dataset, gen_gaussian_blobs
from .geometry import (GridBoundary, VectorProjectionInstance, check_claim1_chain,
                       check_claim2_product, halfspace_projection, ratio_bound)
from .nn import TrainConfig, forward, grad_input, init_network, margin, margin_batch, train
from .rng import derive_seed, make_rng

CheckResult = tuple[str, bool, str]


def _activation_pattern(net, x) -> tuple:
    pattern = []
    h = np.asarray(x, dtype=np.float64)
    for k, (w, b) in enumerate(zip(net.weights[:-1], net.biases[:-1])):
        z = w @ h + b
        pattern.append(tuple(z > 0))
        h = np.maximum(z, 0.0)
    return tuple(pattern)


def gradient_suite(pairs: int = 100, seed: int = 2024, step: float = 1e-5,
                   rel_tol: float = 1e-4) -> tuple[list[CheckResult], dict | None]:
    """Backprop input gradient vs central finite differences on random
    (network, input) pairs. Coordinates whose FD stencil crosses a ReLU kink
    are excluded: the margin is piecewise linear there and the FD quotient
    measures the wrong branch."""
    rng = make_rng(seed, stream=0x64AD)
    results: list[CheckResult] = []
    failing = None
    dims_pool = ([4, 8, 2], [3, 16, 8, 2], [6, 10, 10, 2], [2, 12, 2])
    passed_all = True
    worst = 0.0
    for p in range(pairs):
        dims = dims_pool[p % len(dims_pool)]
        net = init_network(dims, derive_seed(seed, p))
        x = rng.standard_normal(dims[0])
        g = grad_input(net, x)
        base_pattern = _activation_pattern(net, x)
        for i in range(len(x)):
            hi, lo = x.copy(), x.copy()
            hi[i] += step
            lo[i] -= step
            if _activation_pattern(net, hi) != base_pattern or \
               _activation_pattern(net, lo) != base_pattern:
                continue  # kink-adjacent coordinate, FD oracle invalid
            fd = (margin(net, hi) - margin(net, lo)) / (2 * step)
            denom = max(abs(fd), abs(g[i]), 1e-8)
            rel = abs(g[i] - fd) / denom
            worst = max(worst, rel)
            if rel >= rel_tol:
                passed_all = False
                if failing is None:
                    failing = {"pair": p, "coordinate": i, "dims": dims,
                               "backprop": float(g[i]), "fd": float(fd)}
    results.append((f"gradient check ({pairs} pairs)", passed_all,
                    f"worst relative error {worst:.2e}"))
    return results, failing


def _train_2d_net(seed: int):
    data = gen_gaussian_blobs(2, 40, (np.array([-2.0, 0.0]), np.array([2.0, 0.0])),
                              0.5, derive_seed(seed, 0))
    net = init_network([2, 16, 16, 2], derive_seed(seed, 1))
    cfg = TrainConfig(optimizer="adam", learning_rate=1e-2, max_epochs=3000,
                      batch_size=16, accuracy_target=0.9, seed=derive_seed(seed, 2))
    report = train(net, data, cfg)
    return net, data, report


def oracle_suite(nets: int = 10, points_per_net: int = 5, seed: int = 77,
                 grid_step: float = 1e-3) -> tuple[list[CheckResult], dict | None]:
    """Combined projection solver vs 2D grid brute force (2% relative) and
    vs the analytic halfspace projection on linear networks (1e-3 absolute)."""
    results: list[CheckResult] = []
    failing = None
    opts = ProjectorOptions()
    rng = make_rng(seed, stream=0x04AC)

    worst_rel = 0.0
    grid_ok = True
    for n in range(nets):
        net, data, report = _train_2d_net(derive_seed(seed, n))
        if report.stopped_reason != "criterion_met":
            grid_ok = False
            failing = failing or {"net": n, "reason": "training did not reach criterion"}
            continue
        field = GridBoundary(lambda pts: margin_batch(net, pts),
                             ((-4.0, 4.0), (-3.0, 3.0)), grid_step)
        m = margin_batch(net, data.samples)
        correct = np.flatnonzero(np.where(data.labels == 1, m > 0, m < 0))
        picks = rng.choice(correct, size=points_per_net, replace=False)
        for i in picks:
            x = data.samples[i]
            res = project_to_boundary(net, x, int(data.labels[i]), data, opts)
            _, d_grid = field.nearest(x)
            rel = abs(res.distance - d_grid) / max(d_grid, 1e-12)
            worst_rel = max(worst_rel, rel)
            if not res.converged or rel > 0.02:
                grid_ok = False
                if failing is None:
                    failing = {"net": n, "sample": int(i), "solver": res.distance,
                               "grid": d_grid, "rel": rel}
    results.append((f"grid oracle ({nets} nets x {points_per_net} points)", grid_ok,
                    f"worst relative gap {worst_rel:.4f}"))

    # linear network: margin = w.x + c, analytic halfspace answer
    linear_ok = True
    worst_abs = 0.0
    for t in range(20):
        w = rng.standard_normal(2)
        while np.linalg.norm(w) < 0.3:
            w = rng.standard_normal(2)
        c = float(rng.standard_normal())
        net = init_network([2, 2], derive_seed(seed, 1000 + t))
        net.weights[0][0] = np.zeros(2)
        net.weights[0][1] = w
        net.biases[0][:] = (0.0, c)
        x = 3.0 * rng.standard_normal(2)
        m = margin(net, x)
        if abs(m) < 1e-9:
            continue
        label = 1 if m > 0 else 0
        anchor = halfspace_projection(w, c, x) - (2.0 if m > 0 else -2.0) * w / np.linalg.norm(w)
        data = Dataset(np.vstack([x, anchor]), np.array([label, 1 - label]))
        res = project_to_boundary(net, x, label, data, opts)
        exact = np.linalg.norm(halfspace_projection(w, c, x) - x)
        err = abs(res.distance - exact)
        worst_abs = max(worst_abs, err)
        if err > 1e-3:
            linear_ok = False
            if failing is None:
                failing = {"linear_case": t, "solver": res.distance, "exact": float(exact)}
    results.append(("linear analytic oracle (20 cases)", linear_ok,
                    f"worst absolute gap {worst_abs:.2e}"))
    return results, failing


def random_claim1_instance(seed: int, s: int = 6, dim: int = 4) -> VectorProjectionInstance:
    """Instance with pointwise-orthogonal f/g vectors whose norms satisfy the
    pair-separation preconditions with strict slack."""
    rng = make_rng(seed, stream=0xC1A1)
    half = s // 2
    pts = np.vstack([rng.standard_normal((half, dim)) - 4.0,
                     rng.standard_normal((s - half, dim)) + 4.0])
    labels = np.array([0] * half + [1] * (s - half))
    d_min = min(np.linalg.norm(pts[i] - pts[j])
                for i in range(half) for j in range(half, s))
    f_vecs = np.empty((s, dim))
    g_vecs = np.empty((s, dim))
    for i in range(s):
        u = rng.standard_normal(dim)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(dim)
        v -= (v @ u) * u
        v /= np.linalg.norm(v)
        f_vecs[i] = rng.uniform(0.05, 0.2) * d_min * u
        g_vecs[i] = rng.uniform(0.05, 0.2) * d_min * v
    return VectorProjectionInstance(pts, labels, f_vecs, g_vecs)


def claims_suite(instances: int = 1000, ratio_samples: int = 100_000,
                 seed: int = 13) -> tuple[list[CheckResult], dict | None]:
    results: list[CheckResult] = []
    failing = None

    chain_ok = True
    for k in range(instances):
        inst = random_claim1_instance(derive_seed(seed, k))
        report = check_claim1_chain(inst)
        if not report["passed"]:
            chain_ok = False
            if failing is None:
                failing = {"instance_seed": derive_seed(seed, k), "report": report,
                           "instance": inst.to_jsonable()}
    results.append((f"claim-1 chain on {instances} randomized instances", chain_ok, ""))

    rng = make_rng(seed, stream=0x4A71)
    vals = np.exp(rng.uniform(-6, 6, size=(ratio_samples, 2)))
    rb = vals[:, 0] / vals[:, 1] + vals[:, 1] / vals[:, 0]
    ratio_ok = bool((rb >= 2.0 - 1e-12).all())
    if not ratio_ok and failing is None:
        bad = int(np.argmin(rb))
        failing = {"ratio_pair": vals[bad].tolist(), "value": float(rb[bad])}
    results.append((f"a/b + b/a >= 2 on {ratio_samples} random pairs", ratio_ok,
                    f"min {rb.min():.15f}"))

    # designed instances: orthogonal equal-norm must be flagged, collinear must not
    orth = VectorProjectionInstance(
        points=np.array([[0.0, 0.0], [4.0, 0.0]]), labels=np.array([0, 1]),
        f_vectors=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        g_vectors=np.array([[0.0, 1.0], [0.0, -1.0]]))
    orth_report = check_claim2_product(orth)
    orth_ok = orth_report["counterexample"] and not orth_report["strict_product_inequality"]
    results.append(("claim-2 flags the orthogonal equal-norm counterexample", orth_ok,
                    f"prod_h={orth_report['prod_h']:.6f} vs prod_f={orth_report['prod_f']:.6f}"))

    coll = VectorProjectionInstance(
        points=orth.points, labels=orth.labels,
        f_vectors=orth.f_vectors, g_vectors=orth.f_vectors.copy())
    coll_report = check_claim2_product(coll)
    coll_ok = (not coll_report["counterexample"]
               and abs(coll_report["prod_h"] - coll_report["prod_f"]) <= 1e-12)
    results.append(("claim-2 accepts the collinear equality instance", coll_ok, ""))
    if not (orth_ok and coll_ok) and failing is None:
        failing = {"orth_report": orth_report, "coll_report": coll_report}
    return results, failing


SUITES = {"gradients": gradient_suite, "oracle": oracle_suite, "claims": claims_suite}


def run_suite(name: str) -> tuple[list[CheckResult], dict | None]:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
