"""Acceptance suite: one test per release criterion, each printing a
``[PASS] <criterion>`` line with its wall time.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
complete. Every tolerance and runtime limit is pinned here; none are
calibrated anywhere else.
"""

import math
import time

import numpy as np

from annotator.journal import Journal
from annotator.learner import ToyModel, featurize, fit, loss_and_grad, predict_proba
from annotator.lidar_io import (
    ClassMap,
    PointCloud,
    builtin_class_map,
    read_labels,
    read_points,
    write_labels,
    write_points,
)
from annotator.loop import CampaignConfig, run_campaign
from annotator.report import class_frequencies
from annotator.strategies import (
    Predictions,
    point_entropy,
    point_margin,
    pseudo_labels,
    score_vcd,
    select_voxel,
)
from annotator.synth import gaussian_dataset, longtail_dataset
from annotator.voxelgrid import build_index, voxel_of
from tests.test_strategies import entropy_oracle, margin_oracle, select_oracle, vcd_oracle
from tests.test_voxelgrid import make_cloud

RARE_CLASSES = (4, 5)


class timer:
    def __enter__(self):
        self.t0 = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.seconds = time.monotonic() - self.t0


def report(name, elapsed, limit=None):
    ok = limit is None or elapsed < limit
    budget = f" (limit {limit:.0f}s)" if limit else ""
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {elapsed:.2f}s{budget}")
    assert ok, f"{name} exceeded its runtime budget"


def test_vcd_oracle_equivalence():
    """score_vcd matches an independent histogram-entropy oracle, 1e-9 abs."""
    rng = np.random.default_rng(101)
    with timer() as t:
        for _ in range(1000):
            n = int(rng.integers(1, 65))
            k = int(rng.integers(1, 9))
            labels = rng.integers(1, k + 1, size=n).astype(np.int32)
            # all points in one voxel so the bucket is exactly these labels
            idx = build_index(make_cloud(np.full((n, 3), 0.1, dtype=np.float32)), 1.0)
            got = score_vcd(idx, (0, 0, 0), labels).value
            assert abs(got - vcd_oracle(labels.tolist())) < 1e-9
    report("vcd-oracle-equivalence", t.seconds, limit=1.0)


def test_selection_oracle_equivalence():
    """select_voxel == exhaustive brute-force argmax/argmin, exact tie rule."""
    rng = np.random.default_rng(202)
    with timer() as t:
        for strategy in ("entropy", "margin", "vcd", "random"):
            for _ in range(50):
                n, k = int(rng.integers(8, 150)), int(rng.integers(2, 8))
                pts = rng.uniform(-3, 3, size=(n, 3)).astype(np.float32)
                idx = build_index(make_cloud(pts), float(rng.choice([0.3, 0.5, 1.0])))
                excluded = {
                    idx.coord_at(int(r))
                    for r in rng.integers(0, len(idx), size=len(idx) // 5)
                }
                if strategy == "random":
                    got = select_voxel(idx, None, "random", excluded=excluded, seed=7)
                    if got is not None:
                        assert got.coord not in excluded
                    continue
                probs = Predictions(probs=rng.dirichlet(np.ones(k), size=n))
                labels = pseudo_labels(probs)
                got = select_voxel(idx, probs, strategy, excluded=excluded)
                want = select_oracle(idx, strategy, probs.probs, labels, excluded)
                if want is None:
                    assert got is None
                else:
                    assert got.coord == want[0]
    report("selection-oracle-equivalence", t.seconds, limit=5.0)


def test_analytic_score_values():
    """Uniform entropy = ln K, one-hot = 0, margin = 0.5, VCD pair = ln 2."""
    with timer() as t:
        for k in (2, 4, 8):
            assert abs(point_entropy([1.0 / k] * k) - math.log(k)) < 1e-12
        assert point_entropy([0.0, 1.0, 0.0]) == 0.0
        assert abs(point_margin([0.7, 0.2, 0.1]) - 0.5) < 1e-12
        idx = build_index(make_cloud(np.full((4, 3), 0.1, dtype=np.float32)), 1.0)
        got = score_vcd(idx, (0, 0, 0), np.array([1, 1, 2, 2])).value
        assert abs(got - math.log(2.0)) < 1e-12
    report("analytic-score-values", t.seconds)


def exact_floor_div(p: float, d: float) -> int:
    """Independent extended-precision oracle: exact integer floor division."""
    pn, pd = float(p).as_integer_ratio()
    dn, dd = float(d).as_integer_ratio()
    return (pn * dd) // (pd * dn)


def test_voxelization_partition_100k():
    """10^5 random points partition exactly; floors match exact arithmetic."""
    rng = np.random.default_rng(303)
    n = 100_000
    pts = rng.uniform(-40.0, 40.0, size=(n, 3)).astype(np.float32)
    cloud = make_cloud(pts)
    with timer() as t:
        for delta in (0.05, 0.25):
            idx = build_index(cloud, delta)
            sizes = idx.sizes()
            assert sizes.sum() == n
            assert (sizes > 0).all()
            assert np.array_equal(np.sort(idx.order), np.arange(n))
            # every stored coordinate equals the exact rational floor
            flat = pts.astype(np.float64).ravel()
            coords_per_point = np.repeat(idx.coords, sizes, axis=0)
            by_point = np.empty((n, 3), dtype=np.int64)
            by_point[idx.order] = coords_per_point
            want = np.fromiter(
                (exact_floor_div(v, delta) for v in flat), dtype=np.int64, count=3 * n
            ).reshape(n, 3)
            assert np.array_equal(by_point, want)
        # spot agreement of the scalar path, biased toward negative coords
        sample = rng.integers(0, n, size=1500)
        for i in sample:
            assert voxel_of(pts[i], 0.25) == tuple(exact_floor_div(float(v), 0.25) for v in pts[i])
        negatives = pts[(pts < 0).all(axis=1)][:500]
        for p in negatives:
            assert voxel_of(p, 0.05) == tuple(exact_floor_div(float(v), 0.05) for v in p)
    report("voxelization-partition-100k", t.seconds, limit=2.0)


def test_budget_exactness():
    """10 synthetic scans, voxel budget 5: 5 rounds, 5 unique picks per scan."""
    with timer() as t:
        target = longtail_dataset(seed=404, n_scans=10, n_points=700)
        config = CampaignConfig(mode="al", strategy="vcd", budget_voxels=5, seed=404, epochs=40)
        journal, _, metrics = run_campaign(config, target)
        assert metrics["rounds"] == 5
        per_scan: dict = {}
        keys = set()
        for e in journal.entries:
            per_scan[e.scan_id] = per_scan.get(e.scan_id, 0) + 1
            assert (e.scan_id, e.coord) not in keys
            keys.add((e.scan_id, e.coord))
        assert all(v == 5 for v in per_scan.values())
        assert len(journal) == 50
    report("budget-exactness", t.seconds, limit=10.0)


def test_voxel_size_round_sweep():
    """Fixed point budget: rounds are non-increasing across the size grid."""
    grid = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35)
    with timer() as t:
        rounds = []
        for delta in grid:
            target = longtail_dataset(seed=9, n_scans=2, n_points=20000, extent=3.0)
            source = longtail_dataset(
                seed=9 + 991, n_scans=2, n_points=3000, extent=3.0,
                intensity_shift=0.05, prefix="src",
            )
            config = CampaignConfig(
                mode="asfda",
                strategy="entropy",
                voxel_size=delta,
                budget_voxels=None,
                budget_points=30,
                seed=9,
                epochs=0,
                pretrain_epochs=150,
            )
            _, _, metrics = run_campaign(config, target, source=source)
            rounds.append(metrics["rounds"])
        assert all(b <= a for a, b in zip(rounds, rounds[1:])), rounds
        assert rounds[0] > rounds[-1]  # the sweep actually exercises the effect
    report(f"voxel-size-round-sweep {rounds}", t.seconds, limit=30.0)


def _rare_share(journal, scans):
    base = {s.scan_id: s.labels for s in scans}
    rep = class_frequencies(journal.entries, base)
    sel = sum(c.selected_share for c in rep.classes if c.class_id in RARE_CLASSES)
    bas = sum(c.base_share for c in rep.classes if c.class_id in RARE_CLASSES)
    return sel, bas


def test_rare_class_lift():
    """VCD mean rare share >= 2x base, beats random in >= 16/20 seeds."""
    with timer() as t:
        wins = 0
        vcd_shares, base_shares = [], []
        for seed in range(20):
            target = longtail_dataset(seed=seed, n_scans=6, n_points=1500)
            config = dict(budget_voxels=5, seed=seed, epochs=100, mode="al")
            j_vcd, _, _ = run_campaign(
                CampaignConfig(strategy="vcd", **config), target
            )
            vcd_sel, vcd_base = _rare_share(j_vcd, target)
            j_rnd, _, _ = run_campaign(
                CampaignConfig(strategy="random", **config), target
            )
            rnd_sel, _ = _rare_share(j_rnd, target)
            vcd_shares.append(vcd_sel)
            base_shares.append(vcd_base)
            wins += vcd_sel > rnd_sel
        mean_share = float(np.mean(vcd_shares))
        mean_base = float(np.mean(base_shares))
        assert mean_share >= 2.0 * mean_base, (mean_share, mean_base)
        assert wins >= 16, wins
    report(
        f"rare-class-lift share={mean_share:.3f} base={mean_base:.3f} wins={wins}/20",
        t.seconds,
        limit=120.0,
    )


def _held_out_accuracy(mode, strategy, seed):
    target = gaussian_dataset(seed=seed, n_scans=6)
    heldout = gaussian_dataset(seed=seed + 5000, n_scans=2, prefix="ho")
    source = None
    if mode != "al":
        source = gaussian_dataset(seed=seed + 900, n_scans=3, shift=0.6, prefix="src")
    config = CampaignConfig(mode=mode, strategy=strategy, budget_voxels=5, seed=seed, epochs=100)
    _, _, metrics = run_campaign(config, target, source=source, eval_scans=heldout)
    accuracy = [c.value for c in metrics["curve"] if c.metric == "accuracy"]
    return accuracy[-1]


def test_loop_improvement():
    """VCD >= Random - 0.01 held-out accuracy; ASFDA warm start >= AL - 0.01."""
    with timer() as t:
        vcd = [_held_out_accuracy("al", "vcd", s) for s in range(10)]
        rnd = [_held_out_accuracy("al", "random", s) for s in range(10)]
        asfda = [_held_out_accuracy("asfda", "vcd", s) for s in range(10)]
        mean_vcd, mean_rnd, mean_asfda = map(float, map(np.mean, (vcd, rnd, asfda)))
        assert mean_vcd >= mean_rnd - 0.01, (mean_vcd, mean_rnd)
        assert mean_asfda >= mean_vcd - 0.01, (mean_asfda, mean_vcd)
    report(
        f"loop-improvement vcd={mean_vcd:.3f} random={mean_rnd:.3f} asfda={mean_asfda:.3f}",
        t.seconds,
        limit=180.0,
    )


def test_toy_learner_numerics():
    """Gradients match central differences (1e-5 rel); softmax rows sum to 1."""
    rng = np.random.default_rng(505)
    with timer() as t:
        for _ in range(20):
            n, k = int(rng.integers(4, 25)), int(rng.integers(2, 6))
            feats = rng.normal(size=(n, 7))
            labels = rng.integers(0, k, size=n)
            weights = rng.normal(scale=0.5, size=(k, 7))
            _, grad = loss_and_grad(weights, feats, labels)
            eps = 1e-6
            for _check in range(5):
                i, j = int(rng.integers(0, k)), int(rng.integers(0, 7))
                up, down = weights.copy(), weights.copy()
                up[i, j] += eps
                down[i, j] -= eps
                fd = (
                    loss_and_grad(up, feats, labels)[0] - loss_and_grad(down, feats, labels)[0]
                ) / (2 * eps)
                denom = max(abs(fd), abs(grad[i, j]), 1e-8)
                assert abs(fd - grad[i, j]) / denom < 1e-5

        # loss non-increase is asserted inside fit(); run several fits
        for seed in range(5):
            target = gaussian_dataset(seed=seed, n_scans=1, n_points=400)
            feats = featurize(target[0].cloud)
            fit(ToyModel.fresh(4, seed=seed), feats, target[0].labels.labels)

        model = fit(
            ToyModel.fresh(4, seed=0),
            featurize(gaussian_dataset(seed=1, n_scans=1, n_points=300)[0].cloud),
            gaussian_dataset(seed=1, n_scans=1, n_points=300)[0].labels.labels,
        )
        probs = predict_proba(model, gaussian_dataset(seed=2, n_scans=1)[0].cloud).probs
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-6
    report("toy-learner-numerics", t.seconds)


def test_io_roundtrips_and_class_maps(tmp_path):
    """100 random scan/label files round-trip bit-exact; map rows match."""
    rng = np.random.default_rng(606)
    with timer() as t:
        identity = ClassMap.identity(19)
        for trial in range(100):
            n = int(rng.integers(1, 80))
            scan_bytes = (
                np.column_stack((rng.uniform(-60, 60, (n, 3)), rng.uniform(0, 1, n)))
                .astype("<f4")
                .tobytes()
            )
            label_bytes = rng.integers(0, 20, size=n, dtype=np.uint32).astype("<u4").tobytes()
            sp = tmp_path / f"s{trial}.bin"
            lp = tmp_path / f"l{trial}.label"
            sp.write_bytes(scan_bytes)
            lp.write_bytes(label_bytes)
            cloud = read_points(sp)
            labels = read_labels(lp, identity)
            sp2 = tmp_path / f"s{trial}.out.bin"
            lp2 = tmp_path / f"l{trial}.out.label"
            write_points(cloud, sp2)
            write_labels(labels, lp2)
            assert sp2.read_bytes() == scan_bytes
            assert lp2.read_bytes() == label_bytes

        def train_id(cmap, name):
            return next(t for _r, t, n in cmap.entries if n == name)

        syn19 = builtin_class_map("synlidar_to_19")
        kitti19 = builtin_class_map("kitti_to_19")
        syn13 = builtin_class_map("synlidar_to_13")
        assert train_id(syn19, "car") == 1
        assert train_id(kitti19, "car") == 1
        assert train_id(kitti19, "bicyclist") == 7
        assert train_id(kitti19, "moving-bicyclist") == 7
        assert train_id(syn19, "bicyclist") == 7
        assert train_id(syn13, "pole") == 10
    report("io-roundtrips-and-class-maps", t.seconds)


def test_resumability_byte_exact(tmp_path):
    """Kill after round 2 and resume: journal equals the uninterrupted one."""
    with timer() as t:
        config = CampaignConfig(mode="al", strategy="vcd", budget_voxels=5, seed=707, epochs=60)

        straight = tmp_path / "straight.ndjson"
        run_campaign(config, longtail_dataset(seed=707, n_scans=3, n_points=800), journal_path=straight)

        resumed = tmp_path / "resumed.ndjson"
        run_campaign(
            config,
            longtail_dataset(seed=707, n_scans=3, n_points=800),
            journal_path=resumed,
            stop_after_round=2,
        )
        header, entries = Journal.load(resumed)
        assert max(e.round_index for e in entries) == 2  # really interrupted
        run_campaign(
            config, longtail_dataset(seed=707, n_scans=3, n_points=800), journal_path=resumed
        )
        assert straight.read_bytes() == resumed.read_bytes()
    report("resumability-byte-exact", t.seconds)
