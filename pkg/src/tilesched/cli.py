"""Command-line reproduction harness.

Subcommands: ``synth`` (generate a segment file), ``schedule`` (one-shot
drop decision for a byte budget), ``simulate`` (full session metrics),
``compare`` (five strategies across a bandwidth sweep), and
``eval-predictor`` (per-horizon great-circle error table).

Options may come from a flat YAML config file (``--config``); explicit
flags win. Every run writes into a subdirectory of the output root keyed
by the hash of its resolved configuration, together with the resolved
config itself for reproducibility. The output root defaults to
``$TILESCHED_OUT`` or ``./runs``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import yaml

from . import netsim
from .media import SynthConfig, load_segment, save_segment, synth_video
from .netsim import (
    BandwidthTrace,
    SessionConfig,
    compare_strategies,
    constant_trace,
    load_lte_trace,
    run_session,
    salient_viewpoint,
)
from .predictor import (
    FilePredictor,
    GroundTruthPredictor,
    LastPositionPredictor,
    evaluate_predictor,
    load_trajectory,
    make_smooth_trajectory,
    roll_predictor,
    static_trajectory,
)
from .scheduler import schedule as rd_schedule
from .viewport import TileWeights, Viewpoint, weights_for_prediction

DEFAULT_BANDWIDTHS = (0.5, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)


class CliError(Exception):
    """Validation failure surfaced before any side effect."""


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise CliError(f"{path}: config file must be a flat key/value mapping")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _resolve(args: argparse.Namespace, keys: list[str]) -> dict:
    """Merge config-file values with CLI flags; flags win."""
    file_cfg = _load_config_file(getattr(args, "config", None))
    resolved = {}
    for key in keys:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            resolved[key] = flag_val
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = None
    return resolved


def _pick(resolved: dict, key: str, default):
    value = resolved.get(key)
    return default if value is None else value


def _run_dir(args: argparse.Namespace, command: str, resolved: dict) -> Path:
    root = getattr(args, "out_root", None) or os.environ.get("TILESCHED_OUT", "runs")
    payload = json.dumps({"command": command, **resolved}, sort_keys=True, default=str)
    digest = hashlib.sha256(payload.encode()).hexdigest()[:12]
    run = Path(root) / f"{command}-{digest}"
    run.mkdir(parents=True, exist_ok=True)
    with open(run / "resolved_config.json", "w", encoding="utf-8") as fh:
        fh.write(payload)
    return run


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if str(x).strip()]


def _segment_from(resolved: dict):
    if resolved.get("segment"):
        return load_segment(resolved["segment"])
    cfg = SynthConfig(
        tiles=int(_pick(resolved, "tiles", 24)),
        frames=int(_pick(resolved, "frames", 125)),
        gop_length=int(_pick(resolved, "gop", 25)),
        seed=int(_pick(resolved, "seed", 0)),
        size_scale=float(_pick(resolved, "size_scale", 1.0)),
    )
    return synth_video(cfg)


def _session_config(resolved: dict) -> SessionConfig:
    kwargs = {}
    if resolved.get("quantum"):
        kwargs["quantum_bytes"] = int(resolved["quantum"])
    if resolved.get("threshold"):
        kwargs["threshold"] = float(resolved["threshold"])
    if resolved.get("capacity"):
        kwargs["capacity_bytes"] = int(resolved["capacity"])
    return SessionConfig(**kwargs)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    keys = ["tiles", "frames", "gop", "seed", "size_scale", "out"]
    resolved = _resolve(args, keys)
    cfg = SynthConfig(
        tiles=int(_pick(resolved, "tiles", 24)),
        frames=int(_pick(resolved, "frames", 125)),
        gop_length=int(_pick(resolved, "gop", 25)),
        seed=int(_pick(resolved, "seed", 0)),
        size_scale=float(_pick(resolved, "size_scale", 1.0)),
    )
    cfg.validate()
    segment = synth_video(cfg)
    out = resolved.get("out")
    if out:
        save_segment(segment, out)
        target = out
    else:
        run = _run_dir(args, "synth", resolved)
        target = run / "segment.txt"
        save_segment(segment, target)
    mbps = segment.total_bytes * 8 / (cfg.frames / 25.0) / 1e6
    print(f"wrote {target} ({segment.tile_count} tiles x {segment.frames_per_tile} "
          f"frames, {segment.total_bytes} bytes, ~{mbps:.1f} Mbps at 25 fps)")
    return 0


def cmd_schedule(args: argparse.Namespace) -> int:
    keys = [
        "segment", "tiles", "frames", "gop", "seed", "size_scale",
        "budget_bytes", "strategy", "yaw", "pitch", "probability", "quantum",
    ]
    resolved = _resolve(args, keys)
    if resolved.get("budget_bytes") is None:
        raise CliError("--budget-bytes is required")
    budget = int(resolved["budget_bytes"])
    strategy = _pick(resolved, "strategy", "twrd")
    if strategy not in ("twrd", "ewrd"):
        raise CliError("one-shot scheduling supports the rd strategies: twrd, ewrd")
    segment = _segment_from(resolved)
    quantum = int(_pick(resolved, "quantum", 188))

    if strategy == "ewrd":
        weights = TileWeights.uniform(segment.tile_count)
    else:
        prob = float(resolved["probability"]) if resolved.get("probability") is not None else 0.8
        if resolved.get("yaw") is not None and resolved.get("pitch") is not None:
            view = Viewpoint.from_angles(float(resolved["yaw"]), float(resolved["pitch"]))
        else:
            view = salient_viewpoint(segment)
        weights = weights_for_prediction(view, prob)

    sched = rd_schedule(segment, weights, budget, quantum)
    run = _run_dir(args, "schedule", resolved)
    with open(run / "schedule.txt", "w", encoding="ascii") as fh:
        fh.write(f"# strategy {strategy} budget {budget} rate {sched.rate_bytes}\n")
        for tile, ks in enumerate(sched.kept):
            fh.write(f"keep {tile} {' '.join(str(k) for k in ks)}\n")
        for tile, ks in enumerate(sched.dropped):
            fh.write(f"drop {tile} {' '.join(str(k) for k in ks)}\n")
    summary = {
        "strategy": strategy,
        "budget_bytes": budget,
        "rate_bytes": sched.rate_bytes,
        "weighted_distortion": sched.weighted_distortion,
        "kept_packets": sched.total_kept,
        "dropped_packets": sched.total_dropped,
    }
    with open(run / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(json.dumps(summary, sort_keys=True))
    print(f"wrote {run}")
    return 0


def _trace_from(resolved: dict, duration_s: float) -> BandwidthTrace:
    if resolved.get("trace"):
        return load_lte_trace(resolved["trace"])
    mbps = float(_pick(resolved, "mbps", 30.0))
    return constant_trace(mbps, duration_s)


def cmd_simulate(args: argparse.Namespace) -> int:
    keys = [
        "segment", "tiles", "frames", "gop", "seed", "size_scale",
        "trace", "mbps", "trajectory", "static", "predictor", "predictions",
        "probability", "strategy", "quantum", "threshold", "capacity",
    ]
    resolved = _resolve(args, keys)
    segment = _segment_from(resolved)
    config = _session_config(resolved)
    strategy = _pick(resolved, "strategy", "twrd")
    duration_s = segment.frames_per_tile / config.fps

    if resolved.get("trajectory"):
        gt = load_trajectory(resolved["trajectory"])
    elif resolved.get("static"):
        yaw, pitch = _floats(resolved["static"])[:2]
        gt = static_trajectory(Viewpoint.from_angles(yaw, pitch), duration_s * 3)
    else:
        gt = static_trajectory(salient_viewpoint(segment, config.grid), duration_s * 3)

    prob = float(resolved["probability"]) if resolved.get("probability") is not None else 0.8
    kind = _pick(resolved, "predictor", "ground-truth")
    if kind == "baseline":
        predictor = LastPositionPredictor(prob)
    elif kind == "prediction-file":
        if not resolved.get("predictions"):
            raise CliError("--predictions is required with --predictor prediction-file")
        predictor = FilePredictor.from_file(resolved["predictions"])
    elif kind == "ground-truth":
        predictor = GroundTruthPredictor(gt, prob)
    else:
        raise CliError(f"unknown predictor {kind!r}")

    trace = _trace_from(resolved, duration_s * 3)
    report = run_session(segment, predictor, strategy, trace, gt, config)

    run = _run_dir(args, "simulate", resolved)
    with open(run / "metrics.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    with open(run / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", *netsim.METRIC_FIELDS])
        writer.writerow([report.strategy] + [f"{report.metrics()[m]!r}" for m in netsim.METRIC_FIELDS])
    conserved = report.transmitted_packets + report.dropped_packets == report.offered_packets
    print(json.dumps({**report.metrics(), "strategy": strategy, "conserved": conserved},
                     sort_keys=True))
    print(f"wrote {run}")
    return 0 if conserved else 1


def cmd_compare(args: argparse.Namespace) -> int:
    keys = [
        "segment", "tiles", "frames", "gop", "size_scale", "seeds",
        "bandwidths", "trace", "probability", "quantum", "threshold", "capacity",
    ]
    resolved = _resolve(args, keys)
    seeds = list(range(int(_pick(resolved, "seeds", 5))))
    config = _session_config(resolved)
    prob = float(resolved["probability"]) if resolved.get("probability") is not None else 0.8

    if resolved.get("segment"):
        segments = [load_segment(resolved["segment"])]
        duration_s = segments[0].frames_per_tile / config.fps
    else:
        segments = []
        for s in seeds:
            cfg = SynthConfig(
                tiles=int(_pick(resolved, "tiles", 24)),
                frames=int(_pick(resolved, "frames", 125)),
                gop_length=int(_pick(resolved, "gop", 25)),
                seed=s,
                size_scale=float(_pick(resolved, "size_scale", 1.0)),
            )
            segments.append(synth_video(cfg))
        duration_s = segments[0].frames_per_tile / config.fps

    if resolved.get("trace"):
        traces = [("lte", load_lte_trace(resolved["trace"]))]
    else:
        bws = _floats(_pick(resolved, "bandwidths", ",".join(str(b) for b in DEFAULT_BANDWIDTHS)))
        traces = [(f"{bw:g}Mbps", constant_trace(bw, duration_s * 3)) for bw in bws]

    table, _ = compare_strategies(segments, traces, seeds, probability=prob, config=config)
    run = _run_dir(args, "compare", resolved)
    with open(run / "comparison.csv", "w", encoding="utf-8") as fh:
        fh.write(table.to_csv())
    print(table.to_csv())
    print(f"wrote {run}")
    return 0


def cmd_eval_predictor(args: argparse.Namespace) -> int:
    keys = ["trajectory", "traj_seed", "duration", "predictor", "predictions", "probability"]
    resolved = _resolve(args, keys)
    if resolved.get("trajectory"):
        gt = load_trajectory(resolved["trajectory"])
    else:
        gt = make_smooth_trajectory(
            int(_pick(resolved, "traj_seed", 0)),
            float(_pick(resolved, "duration", 60.0)),
        )
    kind = _pick(resolved, "predictor", "baseline")
    horizons = (1.0, 2.0, 3.0, 4.0, 5.0)
    if kind == "baseline":
        prob = float(resolved["probability"]) if resolved.get("probability") is not None else 1.0
        preds = roll_predictor(LastPositionPredictor(prob), gt, horizons[-1])
    elif kind == "prediction-file":
        if not resolved.get("predictions"):
            raise CliError("--predictions is required with --predictor prediction-file")
        from .predictor import load_predictions

        preds = load_predictions(resolved["predictions"])
    else:
        raise CliError(f"unknown predictor {kind!r}")

    table = evaluate_predictor(preds, gt, horizons)
    run = _run_dir(args, "eval-predictor", resolved)
    with open(run / "predictor.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["horizon_s", "mean_great_circle_rad"])
        for h in horizons:
            writer.writerow([h, repr(table[h])])
    print(json.dumps({str(h): table[h] for h in horizons}, sort_keys=True))
    print(f"wrote {run}")
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tilesched",
        description="Viewport-weighted packet scheduling and network simulation "
        "for tiled 360-degree video.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat YAML config file; flags override it")
        p.add_argument("--out-root", help="output root (default $TILESCHED_OUT or ./runs)")

    p = sub.add_parser("synth", help="generate a synthetic segment file")
    common(p)
    p.add_argument("--tiles", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--gop", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--size-scale", dest="size_scale", type=float)
    p.add_argument("--out", help="segment file path (default inside the run dir)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("schedule", help="one-shot scheduling at a byte budget")
    common(p)
    p.add_argument("--segment")
    p.add_argument("--tiles", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--gop", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--size-scale", dest="size_scale", type=float)
    p.add_argument("--budget-bytes", dest="budget_bytes", type=int)
    p.add_argument("--strategy", choices=["twrd", "ewrd"])
    p.add_argument("--yaw", type=float)
    p.add_argument("--pitch", type=float)
    p.add_argument("--probability", type=float)
    p.add_argument("--quantum", type=int)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="run one full session")
    common(p)
    p.add_argument("--segment")
    p.add_argument("--tiles", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--gop", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--size-scale", dest="size_scale", type=float)
    p.add_argument("--trace", help="trace file (time_ms throughput_bps)")
    p.add_argument("--mbps", type=float, help="constant-bandwidth trace instead")
    p.add_argument("--trajectory", help="ground-truth trajectory file")
    p.add_argument("--static", help="static viewpoint 'yaw,pitch' degrees")
    p.add_argument("--predictor", choices=["baseline", "prediction-file", "ground-truth"])
    p.add_argument("--predictions", help="prediction file for --predictor prediction-file")
    p.add_argument("--probability", type=float)
    p.add_argument("--strategy", choices=list(netsim.STRATEGIES))
    p.add_argument("--quantum", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--capacity", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="five strategies across a bandwidth sweep")
    common(p)
    p.add_argument("--segment")
    p.add_argument("--tiles", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--gop", type=int)
    p.add_argument("--size-scale", dest="size_scale", type=float)
    p.add_argument("--seeds", type=int, help="number of seeds (segments) to average")
    p.add_argument("--bandwidths", help="comma-separated Mbps list")
    p.add_argument("--trace", help="use one LTE trace file instead of the sweep")
    p.add_argument("--probability", type=float)
    p.add_argument("--quantum", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--capacity", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("eval-predictor", help="per-horizon great-circle error table")
    common(p)
    p.add_argument("--trajectory", help="ground-truth trajectory file")
    p.add_argument("--traj-seed", dest="traj_seed", type=int)
    p.add_argument("--duration", type=float, help="synthetic trajectory length, seconds")
    p.add_argument("--predictor", choices=["baseline", "prediction-file"])
    p.add_argument("--predictions")
    p.add_argument("--probability", type=float)
    p.set_defaults(func=cmd_eval_predictor)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
