"""Drivers behind the CLI subcommands.

Each driver is a pure-ish function from parsed config to records, writing its
artifacts (CSV / JSON / SVG) into the output directory.  All randomness flows
through numpy SeedSequence spawns of the global seed, so reruns with the same
config are byte-identical.
"""

import json
from pathlib import Path

import numpy as np

from . import svg
from .config import ConfigError, ResourceCapError
from .data import (
    AugmentationSpec,
    LabeledDataset,
    build_ssl,
    load_idx,
    spiral,
)
from .downstream import (
    accuracy,
    bound_from_complexity,
    complexity_sn,
    ovr_classify,
    ovr_fit,
)
from .graph import laplacian, neighborhood_adjacency
from .induced import SslConfig, fit_contrastive, fit_noncontrastive
from .kernels import RBF
from .sdp import attach_data, batch_targets, make_batches, save_trace_csv, solve_sdp

BOUND_LIPSCHITZ = 1.0
BOUND_RANGE = 2.0
BOUND_DELTA = 0.05


class SolverError(Exception):
    """The SDP solver failed to converge."""


# ---------------------------------------------------------------------------
# helpers


def stratified_subset(labels, n, rng):
    """n indices in shuffled order, covering every class when n allows."""
    labels = np.asarray(labels)
    order = rng.permutation(len(labels))
    chosen = list(order[:n])
    classes = np.unique(labels)
    if n >= len(classes):
        present = set(labels[chosen])
        missing = [c for c in classes if c not in present]
        if missing:
            counts = {}
            for i in chosen:
                counts[labels[i]] = counts.get(labels[i], 0) + 1
            spares = {c: [i for i in order[n:] if labels[i] == c] for c in missing}
            ptr = len(chosen) - 1
            for c in missing:
                while counts[labels[chosen[ptr]]] <= 1:
                    ptr -= 1
                counts[labels[chosen[ptr]]] -= 1
                chosen[ptr] = spares[c][0]
                counts[c] = 1
                ptr -= 1
    return np.array(chosen)


def even_odd_targets(labels):
    """Binary +-1 targets: even digit classes +1, odd -1."""
    labels = np.asarray(labels)
    return np.where(labels % 2 == 0, 1.0, -1.0)


def _write_json(records, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("[\n")
        for i, rec in enumerate(records):
            sep = "," if i + 1 < len(records) else ""
            fh.write(json.dumps(rec, sort_keys=True) + sep + "\n")
        fh.write("]\n")


def _write_csv(rows, header, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fit_induced(base, points, adjacency, loss, beta, k):
    if loss == "contrastive":
        cfg = SslConfig("contrastive", k=k)
        G = base.gram(points)
        return fit_contrastive(G, adjacency, cfg, base=base, points=points), G
    cfg = SslConfig("noncontrastive", beta=beta, k=k)
    G = base.gram(points)
    return fit_noncontrastive(G, laplacian(adjacency), cfg, base=base, points=points), G


# ---------------------------------------------------------------------------
# spiral demo


def _arm_stats(gram, labels):
    """Within-arm vs cross-arm statistics of an induced train Gram.

    The factor compares mean magnitudes, matching the per-panel max-|value|
    normalization of the heatmaps; raw means are reported alongside.
    """
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(len(labels), dtype=bool)
    mag = np.abs(gram)
    within = float(np.mean(gram[same & off]))
    cross = float(np.mean(gram[~same]))
    factor = float(np.mean(mag[same & off]) / max(np.mean(mag[~same]), 1e-300))
    return within, cross, factor


def spiral_demo(cfg, common):
    """Induced-kernel geometry on the two-spiral dataset at two thresholds.

    The `local` run thresholds the base kernel high, so only same-arm
    neighborhoods connect; the `shortcircuit` run admits cross-arm edges.
    Returns the per-run statistics keyed by (run, loss).
    """
    out = Path(common.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = spiral(
        cfg.n_per_arm,
        seed=common.seed,
        t_min=cfg.t_min_pi * np.pi,
        t_max=cfg.t_max_pi * np.pi,
    )
    base = RBF(cfg.sigma)
    G = base.gram(ds.points)
    rng = np.random.default_rng(np.random.SeedSequence([common.seed, 17]))
    anchors = rng.choice(len(ds), size=cfg.n_anchors, replace=False)

    stats = {}
    rows = []
    for run, d in (("local", cfg.d_local), ("shortcircuit", cfg.d_shortcircuit)):
        A = neighborhood_adjacency(G, d)
        panels = [[], []]
        for loss in ("noncontrastive", "contrastive"):
            ik, _ = _fit_induced(base, ds.points, A, loss, cfg.beta, cfg.k)
            induced_gram = ik.train_gram()
            within, cross, factor = _arm_stats(induced_gram, ds.labels)
            stats[(run, loss)] = {"within": within, "cross": cross, "factor": factor}
            rows.append((run, loss, d, within, cross, factor))
            if loss == cfg.loss:
                for a in anchors:
                    panels[0].append((f"base k x{a}", G[int(a)], int(a)))
                    panels[1].append((f"induced k* x{a}", induced_gram[int(a)], int(a)))
        svg.scatter_panels(ds.points, panels, out / f"spiral_{run}.svg")
    _write_csv(
        rows,
        ["run", "loss", "threshold", "within_mean", "cross_mean", "factor"],
        out / "spiral_stats.csv",
    )
    return stats


# ---------------------------------------------------------------------------
# classification experiment (three arms per cell)


def _load_pools(dataset_cfg):
    train = load_idx(dataset_cfg.train_images, dataset_cfg.train_labels)
    test = load_idx(dataset_cfg.test_images, dataset_cfg.test_labels)
    return train, test


def _subsample_test(test, n_test, seed):
    if n_test >= len(test):
        return test
    rng = np.random.default_rng(np.random.SeedSequence([seed, 9999]))
    idx = rng.choice(len(test), size=n_test, replace=False)
    return LabeledDataset(test.points[idx], test.labels[idx], test.provenance)


def _augmentation_spec(kind, n_aug, params, seed):
    return AugmentationSpec(
        kind=kind,
        n_aug=n_aug,
        seed=seed,
        sigma_b=params.sigma_b,
        rot_deg=params.rot_deg,
        trans_frac=params.trans_frac,
        scale_range=(params.scale_min, params.scale_max),
    )


def _cell_records(task):
    (
        cell_id,
        train_points,
        train_labels,
        test_points,
        test_labels,
        base,
        aug_kind,
        n,
        n_aug,
        seed,
        cfg,
    ) = task
    ss = np.random.SeedSequence([cfg["global_seed"], seed, cfg["cell_index"]])
    rng_sample, rng_aug = [np.random.default_rng(s) for s in ss.spawn(2)]
    idx = stratified_subset(train_labels, n, rng_sample)
    originals = LabeledDataset(train_points[idx], train_labels[idx])
    aug_seed = int(rng_aug.integers(0, 2**31 - 1))
    spec = _augmentation_spec(aug_kind, n_aug, cfg["augment"], aug_seed)
    ssl_set = build_ssl(originals, spec, mode=cfg["adjacency"])

    ik, G_ssl = _fit_induced(
        base, ssl_set.points, ssl_set.adjacency, cfg["loss"], cfg["beta"], cfg["k"]
    )
    cross_ssl_test = base.cross(ssl_set.points, test_points)

    records = []
    y_test = test_labels
    C = cfg["svm_c"]
    k_str = "full" if cfg["k"] is None else cfg["k"]
    beta = cfg["beta"] if cfg["loss"] == "noncontrastive" else 0.0

    def record(kind, acc, s_n):
        records.append(
            {
                "experiment": cell_id,
                "kernel": kind,
                "N": n,
                "n_aug": n_aug,
                "K": k_str,
                "beta": beta,
                "C": C,
                "accuracy": acc,
                "s_N": s_n,
                "bound": bound_from_complexity(
                    s_n, n, BOUND_LIPSCHITZ, BOUND_RANGE, BOUND_DELTA
                ),
            }
        )

    # SSL arm: induced kernel, labels only on the originals.
    orig_rows = np.array([g[0] for g in ssl_set.groups])
    Z_train = (ik.M @ G_ssl[:, orig_rows]).T
    Z_test = (ik.M @ cross_ssl_test).T
    K_tt = Z_train @ Z_train.T
    models = ovr_fit(K_tt, originals.labels, C)
    pred = ovr_classify(models, Z_train @ Z_test.T)
    s_n = complexity_sn(K_tt, even_odd_targets(originals.labels))
    record(f"induced-{cfg['loss']}", accuracy(pred, y_test), s_n)

    # Supervised baseline with labels on originals and augmentations.
    models = ovr_fit(G_ssl, ssl_set.labels, C)
    pred = ovr_classify(models, cross_ssl_test)
    s_n = complexity_sn(G_ssl, even_odd_targets(ssl_set.labels))
    record("base-augmented-labels", accuracy(pred, y_test), s_n)

    # Supervised baseline on the originals alone.
    G_tt = base.gram(originals.points)
    models = ovr_fit(G_tt, originals.labels, C)
    pred = ovr_classify(models, base.cross(originals.points, test_points))
    s_n = complexity_sn(G_tt, even_odd_targets(originals.labels))
    record("base-no-augment", accuracy(pred, y_test), s_n)
    return records


def run_experiment(cfg, common, base):
    """Three-arm comparison over the (N, n_aug, augmentation, seed) grid."""
    out = Path(common.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, test_full = _load_pools(cfg.dataset)
    test = _subsample_test(test_full, cfg.n_test, common.seed)
    if max(cfg.n_train) > len(train):
        raise ConfigError(
            f"n_train up to {max(cfg.n_train)} exceeds the {len(train)}-point training pool"
        )

    tasks = []
    cell_index = 0
    for aug_kind in cfg.augmentations:
        for n in cfg.n_train:
            for n_aug in cfg.n_aug:
                if n * (1 + n_aug) > cfg.max_samples:
                    raise ResourceCapError(
                        f"cell {aug_kind}-N{n}-a{n_aug} exceeds max_samples"
                    )
                for seed in cfg.seeds:
                    cell_id = f"{aug_kind}-N{n}-a{n_aug}-seed{seed}"
                    tasks.append(
                        (
                            cell_id,
                            train.points,
                            train.labels,
                            test.points,
                            test.labels,
                            base,
                            aug_kind,
                            n,
                            n_aug,
                            seed,
                            {
                                "global_seed": common.seed,
                                "cell_index": cell_index,
                                "loss": cfg.loss,
                                "beta": cfg.beta,
                                "k": cfg.k,
                                "adjacency": cfg.adjacency,
                                "svm_c": cfg.svm_c,
                                "augment": cfg.augment,
                            },
                        )
                    )
                cell_index += 1

    if common.workers > 1:
        import multiprocessing as mp

        with mp.Pool(common.workers) as pool:
            grouped = pool.map(_cell_records, tasks)
    else:
        grouped = [_cell_records(t) for t in tasks]
    records = [rec for group in grouped for rec in group]

    _write_json(records, out / "metrics.json")
    header = ["experiment", "kernel", "N", "n_aug", "K", "beta", "C", "accuracy", "s_N", "bound"]
    rows = [[rec[h] for h in header] for rec in records]
    _write_csv(rows, header, out / "results.csv")
    return records


# ---------------------------------------------------------------------------
# ablation grids


def run_ablate(cfg, common, base):
    """Accuracy/s_N surfaces over (K, C) contrastive and (K, beta) non-contrastive."""
    out = Path(common.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, test_full = _load_pools(cfg.dataset)
    test = _subsample_test(test_full, cfg.n_test, common.seed)
    if cfg.n_train > len(train):
        raise ConfigError(
            f"n_train {cfg.n_train} exceeds the {len(train)}-point training pool"
        )
    ss = np.random.SeedSequence([common.seed, cfg.seed, 31])
    rng_sample, rng_aug = [np.random.default_rng(s) for s in ss.spawn(2)]
    idx = stratified_subset(train.labels, cfg.n_train, rng_sample)
    originals = LabeledDataset(train.points[idx], train.labels[idx])
    spec = _augmentation_spec(
        cfg.augmentation, cfg.n_aug, cfg.augment, int(rng_aug.integers(0, 2**31 - 1))
    )
    ssl_set = build_ssl(originals, spec, mode=cfg.adjacency)
    G_ssl = base.gram(ssl_set.points)
    cross_test = base.cross(ssl_set.points, test.points)
    orig_rows = np.array([g[0] for g in ssl_set.groups])
    y_eo = even_odd_targets(originals.labels)

    def evaluate(ik, C):
        Z_train = (ik.M @ G_ssl[:, orig_rows]).T
        Z_test = (ik.M @ cross_test).T
        K_tt = Z_train @ Z_train.T
        models = ovr_fit(K_tt, originals.labels, C)
        pred = ovr_classify(models, Z_train @ Z_test.T)
        return accuracy(pred, test.labels), complexity_sn(K_tt, y_eo)

    rows = []
    acc_c = np.zeros((len(cfg.c_grid), len(cfg.k_grid)))
    for j, k in enumerate(cfg.k_grid):
        ik = fit_contrastive(
            G_ssl, ssl_set.adjacency, SslConfig("contrastive", k=k)
        )
        for i, C in enumerate(cfg.c_grid):
            acc, s_n = evaluate(ik, C)
            acc_c[i, j] = acc
            rows.append(("contrastive", k, "C", C, acc, s_n))

    acc_n = np.zeros((len(cfg.beta_grid), len(cfg.k_grid)))
    L = laplacian(ssl_set.adjacency)
    for j, k in enumerate(cfg.k_grid):
        for i, beta in enumerate(cfg.beta_grid):
            ik = fit_noncontrastive(
                G_ssl, L, SslConfig("noncontrastive", beta=beta, k=k)
            )
            acc, s_n = evaluate(ik, cfg.svm_c)
            acc_n[i, j] = acc
            rows.append(("noncontrastive", k, "beta", beta, acc, s_n))

    _write_csv(
        rows,
        ["loss", "K", "axis", "value", "accuracy", "s_N"],
        out / "ablate.csv",
    )
    svg.grid_heatmap(
        acc_c,
        [f"C={_fmt(c)}" for c in cfg.c_grid],
        [f"K={k}" for k in cfg.k_grid],
        "contrastive accuracy",
        out / "ablate_contrastive.svg",
    )
    svg.grid_heatmap(
        acc_n,
        [f"b={_fmt(b)}" for b in cfg.beta_grid],
        [f"K={k}" for k in cfg.k_grid],
        "noncontrastive accuracy",
        out / "ablate_noncontrastive.svg",
    )
    return {"contrastive": acc_c, "noncontrastive": acc_n, "rows": rows}


# ---------------------------------------------------------------------------
# batched SDP check


def run_sdp_check(cfg, common):
    """Solve the batched SDP on a synthetic pairwise dataset.

    With a single batch the result is compared against the closed form.
    Raises SolverError when the solver does not converge.
    """
    out = Path(common.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence([common.seed, cfg.seed, 47]))
    n = 2 * cfg.n_pairs
    anchors = rng.normal(size=(cfg.n_pairs, 3)) * 2.0
    points = np.empty((n, 3))
    points[0::2] = anchors
    # Augmentations at 0.4 sigma keep the Gram well conditioned.
    points[1::2] = anchors + rng.normal(size=(cfg.n_pairs, 3)) * (0.4 * cfg.sigma)
    base = RBF(cfg.sigma)
    G = base.gram(points)
    from .graph import pairwise_adjacency

    A = pairwise_adjacency(cfg.n_pairs)
    ssl_cfg = SslConfig(cfg.loss, beta=cfg.beta, k=cfg.k)
    plan = make_batches(n, min(cfg.batch_size, n), seed=cfg.seed)
    attach_data(plan, G, A, ssl_cfg)
    targets = batch_targets(plan, ssl_cfg)
    sol = solve_sdp(G, plan, targets, tol=cfg.tol, max_iter=cfg.max_iter)
    save_trace_csv(sol, out / "sdp_trace.csv")

    closed_gap = None
    if len(plan.batch_indices) == 1:
        if cfg.loss == "contrastive":
            ik = fit_contrastive(G, A, ssl_cfg)
        else:
            ik = fit_noncontrastive(G, laplacian(A), ssl_cfg)
        closed_gap = float(np.max(np.abs(sol.B - ik.B)))

    report = {
        "converged": sol.converged,
        "stagnated": sol.stagnated,
        "iterations": sol.iterations,
        "objective": sol.objective,
        "max_residual": float(sol.residuals.max()),
        "n_batches": len(plan.batch_indices),
        "closed_form_gap": closed_gap,
    }
    with open(out / "sdp_report.json", "w", encoding="ascii", newline="\n") as fh:
        fh.write(json.dumps(report, sort_keys=True) + "\n")
    if not sol.converged:
        raise SolverError(
            f"sdp did not converge in {sol.iterations} iterations "
            f"(max residual {report['max_residual']:.3e})"
        )
    return report
