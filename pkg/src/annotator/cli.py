"""Command-line entry points.

Subcommands:

- ``annotator loop``   run a full campaign against the simulated oracle
- ``annotator select`` one scoring pass over a scan from a prediction file
- ``annotator serve``  start the HTTP annotation service
- ``annotator synth``  generate a synthetic demo dataset + ready config
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import AnnotatorError, ConfigError
from .learner import save_model
from .lidar_io import (
    BUILTIN_CLASS_MAPS,
    builtin_class_map,
    load_class_map,
    read_labels,
    read_points,
)
from .loop import CampaignConfig, Scan, run_campaign
from .report import class_frequencies, emit_report
from .strategies import STRATEGIES, read_predictions, select_voxel
from .voxelgrid import build_index

DATA_ROOT_ENV = "ANNOTATOR_DATA_ROOT"


def _resolve(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    root = os.environ.get(DATA_ROOT_ENV)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def load_dataset(scans_dir, labels_dir, class_map, layout: str = "kitti") -> list[Scan]:
    """Pair ``<stem>.bin`` scans with ``<stem>.label`` files by name."""
    scans_dir = Path(scans_dir)
    scan_files = sorted(scans_dir.glob("*.bin"))
    if not scan_files:
        raise ConfigError(f"no .bin scans found in {scans_dir}")
    out = []
    for scan_file in scan_files:
        cloud = read_points(scan_file, layout=layout)
        labels = None
        if labels_dir is not None:
            label_file = Path(labels_dir) / (scan_file.stem + ".label")
            if not label_file.exists():
                raise ConfigError(f"missing label file {label_file}")
            labels = read_labels(label_file, class_map)
        out.append(Scan(scan_id=scan_file.stem, cloud=cloud, labels=labels))
    return out


def _campaign_pieces(args_or_cfg: dict):
    cfg_dict = dict(args_or_cfg)
    class_map = None
    spec = cfg_dict.get("class_map")
    if spec:
        if spec in BUILTIN_CLASS_MAPS:
            class_map = builtin_class_map(spec)
        else:
            class_map = load_class_map(_resolve(spec), class_count=cfg_dict.get("class_count"))
        if cfg_dict.get("class_count") is None:
            cfg_dict["class_count"] = class_map.class_count
    layout = cfg_dict.get("layout", "kitti")
    target = load_dataset(
        _resolve(cfg_dict["scans"]), _resolve(cfg_dict.get("labels")), class_map, layout
    )
    source = None
    if cfg_dict.get("source_scans"):
        source = load_dataset(
            _resolve(cfg_dict["source_scans"]),
            _resolve(cfg_dict.get("source_labels")),
            class_map,
            layout,
        )
    config = CampaignConfig.from_dict(cfg_dict)
    names = class_map.train_class_names() if class_map else None
    return config, target, source, names


def cmd_loop(args) -> int:
    cfg_dict = {
        "mode": args.mode,
        "strategy": args.strategy,
        "voxel_size": args.voxel_size,
        "budget_voxels": None if args.budget_points else args.budget_voxels,
        "budget_points": args.budget_points,
        "seed": args.seed,
        "epochs": args.epochs,
        "pretrain_epochs": args.pretrain_epochs,
        "min_points_per_voxel": args.min_points_per_voxel,
        "margin_aggregate": args.margin_aggregate,
        "scans": args.scans,
        "labels": args.labels,
        "source_scans": args.source_scans,
        "source_labels": args.source_labels,
        "class_map": args.class_map,
        "class_count": args.class_count,
    }
    config, target, source, names = _campaign_pieces(cfg_dict)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    journal, model, metrics = run_campaign(
        config, target, source=source, journal_path=out_dir / "journal.ndjson"
    )
    save_model(model, out_dir / "model.txt")
    base = {s.scan_id: s.labels for s in target if s.labels is not None}
    if base:
        freq = class_frequencies(journal.entries, base, names)
        emit_report(
            out_dir,
            freq,
            metrics["curve"],
            {
                "mode": config.mode,
                "strategy": config.strategy,
                "voxel_size": config.voxel_size,
                "seed": config.seed,
                "rounds": metrics["rounds"],
                "entries": metrics["entries"],
                "points_labeled": metrics["points_labeled"],
            },
        )
    print(
        json.dumps(
            {
                "rounds": metrics["rounds"],
                "entries": metrics["entries"],
                "points_labeled": metrics["points_labeled"],
                "out": str(out_dir),
            }
        )
    )
    return 0


def cmd_select(args) -> int:
    cloud = read_points(args.scan, layout=args.layout)
    index = build_index(cloud, args.voxel_size)
    predictions = None
    if args.strategy != "random":
        if not args.predictions:
            raise ConfigError(f"strategy {args.strategy!r} needs --predictions")
        predictions = read_predictions(args.predictions)
    excluded = set()
    if args.exclude:
        for part in args.exclude.split(";"):
            a, b, c = (int(v) for v in part.split(","))
            excluded.add((a, b, c))
    winner = select_voxel(
        index,
        predictions,
        args.strategy,
        excluded=excluded,
        seed=args.seed,
        min_points=args.min_points_per_voxel,
        margin_aggregate=args.margin_aggregate,
    )
    if winner is None:
        print(json.dumps({"selected": None}))
        return 0
    bucket = index.bucket(winner.coord)
    print(
        json.dumps(
            {
                "selected": {
                    "coord": list(winner.coord),
                    "score": winner.value,
                    "strategy": winner.strategy,
                    "point_count": int(bucket.size),
                    "point_indices": [int(i) for i in bucket],
                }
            }
        )
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .loop import CampaignEngine
    from .service import create_app

    cfg_dict = json.loads(Path(args.config).read_text(encoding="utf-8"))
    out = cfg_dict.get("out")
    journal_path = Path(out) / "journal.ndjson" if out else None
    if journal_path is not None:
        journal_path.parent.mkdir(parents=True, exist_ok=True)
    config, target, source, names = _campaign_pieces(cfg_dict)
    engine = CampaignEngine(config, target, source, journal_path=journal_path)
    app = create_app(engine, names, frontend_dir=cfg_dict.get("frontend"))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_synth(args) -> int:
    from . import synth

    if args.kind == "longtail":
        scans = synth.longtail_dataset(seed=args.seed, n_scans=args.scans, n_points=args.points)
        names = synth.LONGTAIL_CLASS_NAMES
    else:
        scans = synth.gaussian_dataset(seed=args.seed, n_scans=args.scans, n_points=args.points)
        names = None
    out = synth.write_dataset(scans, args.out, names)
    config = {
        "mode": "al",
        "strategy": "vcd",
        "voxel_size": 0.25,
        "budget_voxels": 5,
        "seed": args.seed,
        "epochs": 100,
        "scans": str(out / "scans"),
        "labels": str(out / "labels"),
        "class_map": str(out / "classmap.txt"),
        "class_count": scans[0].labels.class_count,
        "out": str(out / "run"),
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({"out": str(out), "scans": len(scans), "config": str(out / "config.json")}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annotator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("loop", help="run an annotation campaign with the simulated oracle")
    p.add_argument("--mode", choices=["al", "asfda", "ada"], default="al")
    p.add_argument("--strategy", choices=list(STRATEGIES), default="vcd")
    p.add_argument("--scans", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--source-scans", dest="source_scans")
    p.add_argument("--source-labels", dest="source_labels")
    p.add_argument("--voxel-size", dest="voxel_size", type=float, default=0.25)
    p.add_argument("--budget-voxels", dest="budget_voxels", type=int, default=5)
    p.add_argument("--budget-points", dest="budget_points", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int)
    p.add_argument("--min-points-per-voxel", dest="min_points_per_voxel", type=int, default=1)
    p.add_argument("--margin-aggregate", dest="margin_aggregate", choices=["max", "min"], default="max")
    p.add_argument("--class-map", dest="class_map")
    p.add_argument("--class-count", dest="class_count", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("select", help="single scoring pass from a prediction file")
    p.add_argument("--scan", required=True)
    p.add_argument("--predictions")
    p.add_argument("--strategy", choices=list(STRATEGIES), default="vcd")
    p.add_argument("--voxel-size", dest="voxel_size", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layout", choices=["kitti", "nuscenes"], default="kitti")
    p.add_argument("--min-points-per-voxel", dest="min_points_per_voxel", type=int, default=1)
    p.add_argument("--margin-aggregate", dest="margin_aggregate", choices=["max", "min"], default="max")
    p.add_argument("--exclude", help="excluded voxels, e.g. '1,2,3;4,5,6'")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("serve", help="serve the live annotation HTTP API")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate a synthetic demo dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["longtail", "gaussian"], default="longtail")
    p.add_argument("--scans", type=int, default=6)
    p.add_argument("--points", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AnnotatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
