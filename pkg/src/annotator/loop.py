"""Multi-round annotation campaigns.

Each round scores every scan's voxels with the strategy in effect, selects
at most one voxel per scan, asks the oracle for the contained points'
labels, appends the reveals to the journal, then retrains the learner and
refreshes predictions. Rounds repeat until the budget (voxels per scan or
points per scan) is exhausted.

Modes:

- ``al``    — learner trained from scratch on the annotated voxels; the
  first round is forced to random selection (an untrained model's scores
  carry no information).
- ``asfda`` — learner pretrained on a labeled source dataset; the warm
  model guides selection from round 1 and is the starting point of every
  retrain. Source data itself is not used after pretraining.
- ``ada``   — like ``asfda``, but retraining jointly minimizes the source
  and annotated-target losses.

Everything downstream of the seed is deterministic, so a campaign is a
pure function of (config, data): interrupting and resuming from the
journal reproduces the uninterrupted run byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from . import learner as learner_mod
from .errors import ConfigError, IntegrityError, UsageError
from .journal import Journal, JournalEntry
from .lidar_io import LabelSet, PointCloud
from .strategies import STRATEGIES, Predictions, eligible_rows, select_voxel
from .voxelgrid import (
    DEFAULT_SELECTION_VOXEL_SIZE,
    VoxelCoord,
    VoxelIndex,
    build_index,
)

MODES = ("al", "asfda", "ada")
DEFAULT_BUDGET_VOXELS = 5


@dataclass(frozen=True)
class Scan:
    """One target or source scan; labels are optional for live annotation."""

    scan_id: str
    cloud: PointCloud
    labels: LabelSet | None = None


@dataclass(frozen=True)
class CampaignConfig:
    mode: str = "al"
    strategy: str = "vcd"
    voxel_size: float = DEFAULT_SELECTION_VOXEL_SIZE
    budget_voxels: int | None = DEFAULT_BUDGET_VOXELS
    budget_points: int | None = None
    seed: int = 0
    class_count: int | None = None
    min_points_per_voxel: int = 1
    margin_aggregate: str = "max"
    learning_rate: float = learner_mod.DEFAULT_LEARNING_RATE
    epochs: int = learner_mod.DEFAULT_EPOCHS
    pretrain_epochs: int | None = None  # source warm-up; None -> same as epochs

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.voxel_size <= 0:
            raise ConfigError(f"voxel size must be > 0, got {self.voxel_size}")
        if (self.budget_voxels is None) == (self.budget_points is None):
            raise ConfigError("exactly one of budget_voxels / budget_points must be set")
        budget = self.budget_voxels if self.budget_voxels is not None else self.budget_points
        if budget < 1:
            raise ConfigError(f"budget must be >= 1, got {budget}")
        if self.min_points_per_voxel < 1:
            raise ConfigError("min_points_per_voxel must be >= 1")
        if self.margin_aggregate not in ("max", "min"):
            raise ConfigError("margin_aggregate must be 'max' or 'min'")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.pretrain_epochs is not None and self.pretrain_epochs < 0:
            raise ConfigError("pretrain_epochs must be >= 0")

    def journal_header(self) -> dict:
        return {
            "mode": self.mode,
            "strategy": self.strategy,
            "voxel_size": self.voxel_size,
            "budget_voxels": self.budget_voxels,
            "budget_points": self.budget_points,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(data: dict) -> "CampaignConfig":
        known = {f for f in CampaignConfig.__dataclass_fields__}
        return CampaignConfig(**{k: v for k, v in data.items() if k in known})


class Oracle(Protocol):
    def label_voxel(self, scan_id: str, point_indices: Sequence[int]) -> Sequence[int]:
        """Return exactly one label per requested index (idempotent)."""


class SimulatedOracle:
    """Oracle that reveals ground-truth train ids."""

    def __init__(self, labels_by_scan: dict[str, LabelSet]):
        self._labels = labels_by_scan

    @staticmethod
    def for_scans(scans: Sequence[Scan]) -> "SimulatedOracle":
        missing = [s.scan_id for s in scans if s.labels is None]
        if missing:
            raise UsageError(f"scans without labels cannot back a simulated oracle: {missing}")
        return SimulatedOracle({s.scan_id: s.labels for s in scans})

    def label_voxel(self, scan_id: str, point_indices: Sequence[int]) -> list[int]:
        labels = self._labels[scan_id].labels
        out = []
        for i in point_indices:
            if not 0 <= int(i) < labels.shape[0]:
                raise UsageError(f"{scan_id}: point index {i} out of range 0..{labels.shape[0] - 1}")
            out.append(int(labels[int(i)]))
        return out


def cold_start_policy(mode: str, round_index: int, model_fitted: bool) -> str | None:
    """Override for the round's strategy: 'random' or None (use configured).

    An untrained model's scores are noise, so AL's first round falls back
    to random selection; warm-started modes select with the source model
    from round 1.
    """
    if mode == "al" and round_index == 1 and not model_fitted:
        return "random"
    return None


@dataclass
class PendingQuery:
    scan_ordinal: int
    scan_id: str
    round_index: int
    coord: VoxelCoord
    strategy: str
    score: float
    point_indices: tuple[int, ...]


class CampaignEngine:
    """Incremental campaign state machine.

    Drives one query at a time: :meth:`next_query` exposes the pending
    selection, :meth:`submit_labels` journals the answer and advances. The
    synchronous :func:`run_campaign` and the HTTP annotation service are
    both thin drivers over this class, so they produce identical journals.
    """

    def __init__(
        self,
        config: CampaignConfig,
        target: Sequence[Scan],
        source: Sequence[Scan] | None = None,
        journal_path: str | Path | None = None,
    ):
        if not target:
            raise ConfigError("campaign needs at least one target scan")
        if config.mode in ("asfda", "ada") and not source:
            raise ConfigError(f"mode {config.mode!r} requires a source dataset")
        if config.mode == "al" and source:
            raise ConfigError("mode 'al' does not accept a source dataset at loop time")
        self.config = config
        self.target = list(target)
        self.source = list(source) if source else None
        self.class_count = self._resolve_class_count()

        self._indexes: list[VoxelIndex | None] = [None] * len(self.target)
        self._excluded: list[set[VoxelCoord]] = [set() for _ in self.target]
        self._points_taken = [0] * len(self.target)
        self._prediction_cache: dict[int, Predictions] = {}
        self._ordinal_of = {s.scan_id: i for i, s in enumerate(self.target)}
        if len(self._ordinal_of) != len(self.target):
            raise ConfigError("duplicate scan ids in the target dataset")

        self._source_model = self._pretrain_source() if self.source else None
        self.model = self._source_model or learner_mod.ToyModel.fresh(
            self.class_count,
            seed=config.seed,
            learning_rate=config.learning_rate,
            epochs=config.epochs,
        )

        resumed = (
            journal_path is not None
            and Path(journal_path).exists()
            and Path(journal_path).stat().st_size > 0
        )
        if resumed:
            self.journal = Journal.resume(journal_path, config.journal_header())
        else:
            self.journal = Journal(config.journal_header(), path=journal_path)

        self.round_index = 0
        self._queue: list[PendingQuery] = []
        self._queue_pos = 0
        self._done = False
        if resumed and self.journal.entries:
            self._restore_from_entries()
        else:
            self._finish_round_and_advance(retrain=False)

    # -- setup ---------------------------------------------------------

    def _resolve_class_count(self) -> int:
        if self.config.class_count is not None:
            return self.config.class_count
        counts = {
            s.labels.class_count
            for s in (self.target + (self.source or []))
            if s.labels is not None
        }
        if not counts:
            raise ConfigError("class_count must be given when no scan carries labels")
        if len(counts) > 1:
            raise ConfigError(f"scans disagree on class_count: {sorted(counts)}")
        return counts.pop()

    def _pretrain_source(self) -> learner_mod.ToyModel:
        features, labels = [], []
        for scan in self.source:
            if scan.labels is None:
                raise ConfigError(f"source scan {scan.scan_id} has no labels")
            features.append(learner_mod.featurize(scan.cloud))
            labels.append(scan.labels.labels)
        pretrain_epochs = (
            self.config.pretrain_epochs
            if self.config.pretrain_epochs is not None
            else self.config.epochs
        )
        fresh = learner_mod.ToyModel.fresh(
            self.class_count,
            seed=self.config.seed,
            learning_rate=self.config.learning_rate,
            epochs=pretrain_epochs,
        )
        warm = learner_mod.fit(fresh, np.vstack(features), np.concatenate(labels))
        # per-round refits use the loop epoch count, not the warm-up one
        return replace(warm, epochs=self.config.epochs)

    def index_for(self, ordinal: int) -> VoxelIndex:
        if self._indexes[ordinal] is None:
            self._indexes[ordinal] = build_index(
                self.target[ordinal].cloud, self.config.voxel_size
            )
        return self._indexes[ordinal]

    # -- round machinery -------------------------------------------------

    def _budget_reached(self, ordinal: int) -> bool:
        if self.config.budget_points is not None:
            return self._points_taken[ordinal] >= self.config.budget_points
        return False

    def _campaign_exhausted(self, next_round: int) -> bool:
        if self.config.budget_voxels is not None:
            return next_round > self.config.budget_voxels
        return all(self._budget_reached(i) for i in range(len(self.target)))

    def _effective_strategy(self, round_index: int) -> str:
        forced = cold_start_policy(self.config.mode, round_index, self.model.fitted)
        return forced or self.config.strategy

    def _select_round(self, round_index: int) -> list[PendingQuery]:
        strategy = self._effective_strategy(round_index)
        queue: list[PendingQuery] = []
        for ordinal, scan in enumerate(self.target):
            if self._budget_reached(ordinal):
                continue
            index = self.index_for(ordinal)
            predictions: Predictions | None = None
            if strategy != "random":
                predictions = self._prediction_cache.get(ordinal)
                if predictions is None:
                    predictions = learner_mod.predict_proba(self.model, scan.cloud)
                    self._prediction_cache[ordinal] = predictions
            winner = select_voxel(
                index,
                predictions,
                strategy,
                excluded=self._excluded[ordinal],
                seed=np.random.SeedSequence([self.config.seed, round_index, ordinal]),
                min_points=self.config.min_points_per_voxel,
                margin_aggregate=self.config.margin_aggregate,
            )
            if winner is None:
                continue
            queue.append(
                PendingQuery(
                    scan_ordinal=ordinal,
                    scan_id=scan.scan_id,
                    round_index=round_index,
                    coord=winner.coord,
                    strategy=strategy,
                    score=winner.value,
                    point_indices=tuple(int(i) for i in index.bucket(winner.coord)),
                )
            )
        return queue

    def _retrain(self) -> None:
        if self.config.epochs == 0 or not self.journal.entries:
            return
        rows, labels = self._journal_training_rows()
        if rows is None:
            return
        self._prediction_cache.clear()
        if self.config.mode == "al":
            start = learner_mod.ToyModel.fresh(
                self.class_count,
                seed=self.config.seed,
                learning_rate=self.config.learning_rate,
                epochs=self.config.epochs,
            )
            self.model = learner_mod.fit(start, rows, labels, objective="al")
        elif self.config.mode == "asfda":
            self.model = learner_mod.fit(self._source_model, rows, labels, objective="asfda")
        else:
            src_f, src_l = self._source_training_rows()
            self.model = learner_mod.fit(
                self._source_model, rows, labels, objective="ada", source=(src_f, src_l)
            )

    def _journal_training_rows(self):
        features, labels = [], []
        for entry in self.journal.entries:
            ordinal = self._ordinal_of[entry.scan_id]
            rows = learner_mod.featurize(self.target[ordinal].cloud)
            features.append(rows[list(entry.point_indices)])
            labels.append(np.asarray(entry.revealed_labels, dtype=np.int32))
        feats = np.vstack(features)
        labs = np.concatenate(labels)
        if not (labs != 0).any():
            return None, None
        return feats, labs

    def _source_training_rows(self):
        features = [learner_mod.featurize(s.cloud) for s in self.source]
        labels = [s.labels.labels for s in self.source]
        return np.vstack(features), np.concatenate(labels)

    def _finish_round_and_advance(self, retrain: bool = True) -> None:
        """Close the current round (retraining if asked) and open the next."""
        if retrain:
            self._retrain()
        next_round = self.round_index + 1
        if self._campaign_exhausted(next_round):
            self._done = True
            self._queue, self._queue_pos = [], 0
            return
        queue = self._select_round(next_round)
        if not queue:
            self._done = True
            self._queue, self._queue_pos = [], 0
            return
        self.round_index = next_round
        self._queue = queue
        self._queue_pos = 0

    def _restore_from_entries(self) -> None:
        """Rebuild engine state from a loaded journal (possibly mid-round)."""
        last_round = 0
        for entry in self.journal.entries:
            if entry.scan_id not in self._ordinal_of:
                raise IntegrityError(f"journal references unknown scan {entry.scan_id!r}")
            ordinal = self._ordinal_of[entry.scan_id]
            self._excluded[ordinal].add(entry.coord)
            self._points_taken[ordinal] += len(entry.point_indices)
            last_round = max(last_round, entry.round_index)

        # Retrain exactly as the uninterrupted run would have before the
        # last journaled round, then recompute that round's queue.
        def train_through(upto_round: int) -> None:
            saved = self.journal.entries
            subset = [e for e in saved if e.round_index <= upto_round]
            self.journal.entries = subset
            try:
                self._retrain()
            finally:
                self.journal.entries = saved

        self.model = self._source_model or learner_mod.ToyModel.fresh(
            self.class_count,
            seed=self.config.seed,
            learning_rate=self.config.learning_rate,
            epochs=self.config.epochs,
        )
        # State for selecting round R is the model trained on rounds < R;
        # recompute it from scratch (training is a pure function of data).
        prior_excluded = [set() for _ in self.target]
        prior_taken = [0] * len(self.target)
        for entry in self.journal.entries:
            if entry.round_index < last_round:
                ordinal = self._ordinal_of[entry.scan_id]
                prior_excluded[ordinal].add(entry.coord)
                prior_taken[ordinal] += len(entry.point_indices)
        live_excluded, live_taken = self._excluded, self._points_taken
        self._excluded, self._points_taken = prior_excluded, prior_taken
        train_through(last_round - 1)
        queue = self._select_round(last_round)
        self._excluded, self._points_taken = live_excluded, live_taken

        # Journal appends follow selection order, so the journaled tail of the
        # last round must be a prefix of the recomputed queue.
        journaled = [
            (e.scan_id, e.coord) for e in self.journal.entries if e.round_index == last_round
        ]
        prefix = [(q.scan_id, q.coord) for q in queue[: len(journaled)]]
        if prefix != journaled:
            raise IntegrityError(
                "resumed journal does not match the deterministic re-selection "
                f"of round {last_round}"
            )
        self.round_index = last_round
        if len(journaled) < len(queue):
            self._queue = queue
            self._queue_pos = len(journaled)
        else:
            self._finish_round_and_advance()

    # -- public stepping interface ---------------------------------------

    @property
    def done(self) -> bool:
        return self._done

    def next_query(self) -> PendingQuery | None:
        """The pending selection, or None when the campaign is finished.

        Stable under repeated calls: the same query is returned until its
        labels are submitted.
        """
        if self._done:
            return None
        return self._queue[self._queue_pos]

    def submit_labels(self, scan_id: str, coord, labels: Sequence[int]) -> JournalEntry:
        """Journal the labels for the pending query and advance."""
        pending = self.next_query()
        if pending is None:
            raise UsageError("campaign is already finished")
        coord = tuple(int(v) for v in coord)
        if scan_id != pending.scan_id or coord != pending.coord:
            raise UsageError(
                f"submission for {scan_id}@{coord} does not match the pending "
                f"query {pending.scan_id}@{pending.coord}"
            )
        labels = [int(v) for v in labels]
        if len(labels) != len(pending.point_indices):
            raise UsageError(
                f"expected {len(pending.point_indices)} labels, got {len(labels)}"
            )
        if any(not 0 <= v <= self.class_count for v in labels):
            raise UsageError(f"labels must lie in 0..{self.class_count}")
        entry = JournalEntry(
            scan_id=pending.scan_id,
            round_index=pending.round_index,
            coord=pending.coord,
            strategy=pending.strategy,
            score=pending.score,
            point_indices=pending.point_indices,
            revealed_labels=tuple(labels),
        )
        self.journal.append(entry)
        ordinal = pending.scan_ordinal
        self._excluded[ordinal].add(pending.coord)
        self._points_taken[ordinal] += len(pending.point_indices)
        self._queue_pos += 1
        if self._queue_pos >= len(self._queue):
            self._finish_round_and_advance()
        return entry

    def run_round(self, oracle: Oracle) -> list[JournalEntry]:
        """Answer every pending query of the current round via ``oracle``.

        All oracle calls happen before any journal append, so an oracle
        failure aborts the round atomically.
        """
        if self._done:
            raise UsageError("campaign is already finished")
        round_index = self.round_index
        queue = self._queue[self._queue_pos :]
        answers = [oracle.label_voxel(q.scan_id, q.point_indices) for q in queue]
        delta = []
        for q, labels in zip(queue, answers):
            delta.append(self.submit_labels(q.scan_id, q.coord, labels))
        assert all(e.round_index == round_index for e in delta)
        return delta

    def progress(self) -> dict:
        """Budget progress snapshot (used by the annotation service)."""
        return {
            "round": self.round_index,
            "rounds_total": self.config.budget_voxels,
            "entries": len(self.journal),
            "points_labeled": int(sum(self._points_taken)),
            "budget_points_per_scan": self.config.budget_points,
            "done": self._done,
        }


def evaluate_model(model, scans: Sequence[Scan]) -> dict[str, float]:
    """Accuracy and mIoU of ``model`` over all labeled points of ``scans``."""
    from . import report as report_mod

    preds, truths = [], []
    class_count = None
    for scan in scans:
        if scan.labels is None:
            continue
        preds.append(learner_mod.predict_labels(model, scan.cloud))
        truths.append(scan.labels.labels)
        class_count = scan.labels.class_count
    if not preds:
        return {}
    pred = np.concatenate(preds)
    truth = np.concatenate(truths)
    _, miou = report_mod.compute_miou(pred, truth, class_count)
    return {
        "accuracy": report_mod.compute_accuracy(pred, truth),
        "miou": miou,
    }


def run_campaign(
    config: CampaignConfig,
    target: Sequence[Scan],
    source: Sequence[Scan] | None = None,
    oracle: Oracle | None = None,
    journal_path: str | Path | None = None,
    eval_scans: Sequence[Scan] | None = None,
    stop_after_round: int | None = None,
):
    """Run (or resume) a campaign against an oracle.

    ``oracle`` defaults to a simulated one backed by the target scans'
    ground-truth labels. ``eval_scans`` (default: the target scans) are
    scored after every retrain to build the metric curve.
    ``stop_after_round`` ends the run early with the journal flushed,
    which is how tests exercise kill-and-resume.

    Returns (journal, model, metrics): metrics carries the per-round curve
    and campaign counters.
    """
    from .report import CurvePoint

    engine = CampaignEngine(config, target, source, journal_path=journal_path)
    if oracle is None:
        oracle = SimulatedOracle.for_scans(target)
    eval_scans = list(eval_scans) if eval_scans is not None else list(target)

    curve: list[CurvePoint] = []
    budget_used = sum(len(e.point_indices) for e in engine.journal.entries)
    rounds_run = engine.journal.rounds_completed()
    while not engine.done:
        delta = engine.run_round(oracle)
        if not delta:
            break
        round_index = delta[0].round_index
        rounds_run = round_index
        budget_used += sum(len(e.point_indices) for e in delta)
        scores = evaluate_model(engine.model, eval_scans)
        for metric, value in sorted(scores.items()):
            curve.append(
                CurvePoint(round_index=round_index, budget=budget_used, metric=metric, value=value)
            )
        if stop_after_round is not None and round_index >= stop_after_round:
            break

    exhausted = [
        s.scan_id
        for ordinal, s in enumerate(engine.target)
        if not engine._budget_reached(ordinal)
        and eligible_rows(
            engine.index_for(ordinal), engine._excluded[ordinal], config.min_points_per_voxel
        ).size
        == 0
    ]
    metrics = {
        "rounds": rounds_run,
        "entries": len(engine.journal),
        "points_labeled": budget_used,
        "curve": curve,
        "scans_exhausted": exhausted,
        "strategy": config.strategy,
        "mode": config.mode,
    }
    engine.journal.close()
    return engine.journal, engine.model, metrics
