"""Command-line pipeline: topology/calibration generation, data generation,
preparation, training, evaluation, routing, and the comparison benchmark.

Every subcommand writes a manifest echoing its resolved configuration and
seed; re-running a manifest's command reproduces the outputs byte for byte.
Exit codes: 0 success, 1 validation error, 2 runtime/data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import dataset as ds
from . import gbdt, router
from .circuit import emit_qasm, parse_qasm
from .errors import DataError, FidrouteError, NoPathError, ValidationError
from .noisesim import PERMUTE, RESTORE
from .topology import (
    CalibrationSnapshot,
    Topology,
    calibration_to_json,
    generate_topology,
    load_calibration,
    load_topology,
    topology_to_json,
)

EDGE_ERROR_RANGE = (1e-3, 5e-2)
READOUT_ERROR_RANGE = (5e-3, 5e-2)
BASE_TIMESTAMP = 1_700_000_000


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def _write_manifest(out_dir: str, command: str, config: dict, outputs: list[str]) -> None:
    manifest = {"command": command, "config": config, "outputs": sorted(outputs)}
    _write(os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _load_topology_file(path: str) -> Topology:
    return load_topology(_read(path))


def _load_calibration_file(path: str, t: Topology) -> CalibrationSnapshot:
    return load_calibration(_read(path), t)


# --- subcommands -------------------------------------------------------------


def cmd_gen_topology(args) -> int:
    if args.reference or args.kind == "heavy-hex":
        t = generate_topology(
            "heavy_hex",
            rows=7 if args.reference else args.hex_rows,
            row_len=15 if args.reference else args.row_len,
        )
    elif args.kind == "ring":
        if args.n is None:
            raise ValidationError("--kind ring needs --n")
        t = generate_topology("ring", n=args.n)
    elif args.kind == "grid":
        if args.rows is None or args.cols is None:
            raise ValidationError("--kind grid needs --rows and --cols")
        t = generate_topology("grid", rows=args.rows, cols=args.cols)
    else:
        raise ValidationError("gen-topology needs --kind or --reference")
    out = _ensure_out(args.out)
    path = os.path.join(out, "topology.json")
    _write(path, topology_to_json(t))
    _write_manifest(out, "gen-topology", _config(args), [path])
    print(f"wrote {path}: {t.num_qubits} qubits, {len(t.edges)} edges")
    return 0


def cmd_gen_calibration(args) -> int:
    t = _load_topology_file(args.topology)
    if args.fail_edges < 0 or args.fail_edges > len(t.edges):
        raise ValidationError(f"--fail-edges must be in [0,{len(t.edges)}]")
    if args.count < 1:
        raise ValidationError("--count must be >= 1")
    out = _ensure_out(args.out)
    outputs = []
    for i in range(args.count):
        cal = synth_calibration(t, seed=args.seed, index=i, fail_edges=args.fail_edges)
        name = "calibration.json" if args.count == 1 else f"calibration-{i:03d}.json"
        path = os.path.join(out, name)
        _write(path, calibration_to_json(cal))
        outputs.append(path)
    _write_manifest(out, "gen-calibration", _config(args), outputs)
    print(f"wrote {len(outputs)} calibration file(s) to {out}")
    return 0


def synth_calibration(
    t: Topology, seed: int, index: int = 0, fail_edges: int = 0,
    fail_on: list[tuple[int, int]] | None = None,
) -> CalibrationSnapshot:
    """Synthetic snapshot: edge errors log-uniform in [1e-3, 5e-2], readout
    log-uniform in [5e-3, 5e-2], plus optional eps=1.0 failed edges."""
    rng = np.random.default_rng([seed, 0xCA1, index])
    lo, hi = np.log(EDGE_ERROR_RANGE)
    edge_error = {e: float(np.exp(rng.uniform(lo, hi))) for e in t.edges}
    rlo, rhi = np.log(READOUT_ERROR_RANGE)
    readout = {q: float(np.exp(rng.uniform(rlo, rhi))) for q in range(t.num_qubits)}
    failed = list(fail_on or [])
    if fail_edges:
        pick = rng.choice(len(t.edges), size=fail_edges, replace=False)
        failed.extend(t.edges[int(i)] for i in pick)
    for e in failed:
        edge_error[e] = 1.0
    return CalibrationSnapshot(
        edge_error=edge_error, readout_error=readout, timestamp=BASE_TIMESTAMP + index * 3600
    )


def cmd_gen_data(args) -> int:
    t = _load_topology_file(args.topology)
    cals = [_load_calibration_file(p, t) for p in args.calibration]
    if args.num < 1:
        raise ValidationError("--num must be >= 1")
    records = ds.generate_experiments(
        t, cals, n=args.num, len_min=args.min_len, len_max=args.max_len,
        seed=args.seed, shots=args.shots,
    )
    out = _ensure_out(args.out)
    path = os.path.join(out, "dataset.jsonl")
    ds.save_dataset(records, path)
    _write_manifest(out, "gen-data", _config(args), [path, path + ".calibrations.json"])
    lengths = [r.path_length for r in records]
    print("experiments | min length | max length | mean length")
    print(f"{len(records)} | {min(lengths)} | {max(lengths)} | {float(np.mean(lengths)):.2f}")
    return 0


def cmd_prepare(args) -> int:
    t = _load_topology_file(args.topology)
    records = ds.load_dataset(args.dataset, t)
    split = ds.bin_and_sample(records, seed=args.seed)
    out = _ensure_out(args.out)
    train_path = os.path.join(out, "train.jsonl")
    val_path = os.path.join(out, "validation.jsonl")
    ds.save_dataset(split.train, train_path)
    ds.save_dataset(split.validation, val_path)
    bins_path = os.path.join(out, "bins.json")
    _write(
        bins_path,
        json.dumps(
            {str(k): {"total": v[0], "train": v[1]} for k, v in sorted(split.bin_summary.items())},
            indent=2, sort_keys=True,
        ) + "\n",
    )
    _write_manifest(out, "prepare", _config(args), [train_path, val_path, bins_path])
    print(f"train {len(split.train)} records, validation {len(split.validation)} records")
    return 0


def cmd_train(args) -> int:
    t = _load_topology_file(args.topology)
    records = ds.load_dataset(args.train, t)
    X, y = ds.features_matrix(records, t, args.lmax)
    params = {
        "rounds": args.rounds,
        "max_depth": args.depth,
        "eta": args.eta,
        "lambda_reg": args.reg_lambda,
        "min_child_weight": args.min_child_weight,
        "min_gain": args.min_gain,
    }
    model = gbdt.train(X, y, params)
    out = _ensure_out(args.out)
    path = os.path.join(out, "model.json")
    gbdt.save_model(model, path)
    _write_manifest(out, "train", _config(args), [path])
    print(f"trained {len(model.trees)} trees on {len(records)} records; final training MSE "
          f"{model.training_mse[-1]:.3e}" if model.training_mse else "trained empty ensemble")
    return 0


def cmd_evaluate(args) -> int:
    t = _load_topology_file(args.topology)
    records = ds.load_dataset(args.validation, t)
    model = gbdt.load_model(args.model)
    X, y = ds.features_matrix(records, t, args.lmax)
    metrics = gbdt.compute_metrics(gbdt.predict(model, X), y)
    out = _ensure_out(args.out)
    table = gbdt.fidelity_vs_length_table(model, records, t, args.lmax)
    table_path = os.path.join(out, "fidelity_vs_length.csv")
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_length", "mean_measured_fidelity", "mean_predicted_fidelity"])
        writer.writerows([(l, repr(a), repr(b)) for l, a, b in table])
    metrics_path = os.path.join(out, "metrics.json")
    _write(
        metrics_path,
        json.dumps(
            {"mae": metrics.mae, "mse": metrics.mse, "rmse": metrics.rmse, "r2": metrics.r2},
            indent=2, sort_keys=True,
        ) + "\n",
    )
    _write_manifest(out, "evaluate", _config(args), [metrics_path, table_path])
    r2_text = "undefined" if metrics.r2 is None else f"{metrics.r2:.4f}"
    print("MAE | MSE | RMSE | R2")
    print(f"{metrics.mae:.4f} | {metrics.mse:.4f} | {metrics.rmse:.4f} | {r2_text}")
    return 0


def cmd_route(args) -> int:
    t = _load_topology_file(args.topology)
    cal = _load_calibration_file(args.calibration, t)
    if args.method == router.XGSWAP and args.model is None:
        raise ValidationError("--method xgswap needs --model")
    model = gbdt.load_model(args.model) if args.model else None
    circuit = parse_qasm(_read(args.circuit))
    result = router.route(
        circuit, t, cal, model, method=args.method,
        slack=args.slack, cap=args.cap, mode=args.mode, lmax=args.lmax,
    )
    _write(args.out, emit_qasm(result.circuit))
    sidecar = {
        "method": args.method,
        "swap_count": result.swap_count,
        "final_layout": list(result.final_layout.logical_to_physical),
        "chosen_paths": [
            {
                "gate_index": c.gate_index,
                "path": list(c.path.qubits),
                "predicted_fidelity": c.predicted_fidelity,
            }
            for c in result.chosen_paths
        ],
    }
    _write(args.out + ".report.json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    _write(
        args.out + ".manifest.json",
        json.dumps(
            {"command": "route", "config": _config(args), "outputs": [args.out, args.out + ".report.json"]},
            indent=2, sort_keys=True,
        ) + "\n",
    )
    print(f"routed {len(circuit.gates)} gates with {result.swap_count} swaps -> {args.out}")
    return 0


def cmd_compare(args) -> int:
    t = _load_topology_file(args.topology)
    cal = _load_calibration_file(args.calibration, t)
    model = gbdt.load_model(args.model)
    report = router.compare_benchmark(
        t, cal, model, n_pairs=args.pairs, len_min=args.min_len, len_max=args.max_len,
        seed=args.seed, shots=args.shots, slack=args.slack, cap=args.cap, lmax=args.lmax,
    )
    out = _ensure_out(args.out)
    csv_path = os.path.join(out, "comparison.csv")
    router.report_to_csv(report, csv_path)
    summary_path = os.path.join(out, "summary.json")
    _write(summary_path, router.summary_to_json(report))
    _write_manifest(out, "compare", _config(args), [csv_path, summary_path])
    summary = router.report_summary(report)
    print(f"pairs: {report.total}")
    print("metric | experiments | proportion")
    for row in summary["rows"]:
        print(f"{row['metric']} | {row['count']} | {row['proportion']:.0f}%")
    return 0


# --- wiring ------------------------------------------------------------------


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return json.loads(json.dumps(cfg, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fidroute", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen-topology", help="write a coupling-map file")
    p.add_argument("--kind", choices=["ring", "grid", "heavy-hex"])
    p.add_argument("--reference", action="store_true", help="127-qubit heavy-hex reference device")
    p.add_argument("--n", type=int, help="ring size")
    p.add_argument("--rows", type=int, help="grid rows")
    p.add_argument("--cols", type=int, help="grid cols")
    p.add_argument("--hex-rows", type=int, default=7)
    p.add_argument("--row-len", type=int, default=15)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen_topology)

    p = sub.add_parser("gen-calibration", help="write synthetic calibration snapshot(s)")
    p.add_argument("--topology", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--fail-edges", type=int, default=0, help="plant this many eps=1.0 edges")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen_calibration)

    p = sub.add_parser("gen-data", help="generate experiment records via tomography")
    p.add_argument("--topology", required=True)
    p.add_argument("--calibration", action="append", required=True, help="repeatable")
    p.add_argument("--num", type=int, default=4050)
    p.add_argument("--min-len", type=int, default=2)
    p.add_argument("--max-len", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--shots", type=int, default=None, help="sampled labels; default exact")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("prepare", help="bin by length and split train/validation")
    p.add_argument("--topology", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="fit the boosted-tree fidelity model")
    p.add_argument("--topology", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--lmax", type=int, default=ds.DEFAULT_LMAX)
    p.add_argument("--rounds", type=int, default=gbdt.DEFAULT_PARAMS["rounds"])
    p.add_argument("--depth", type=int, default=gbdt.DEFAULT_PARAMS["max_depth"])
    p.add_argument("--eta", type=float, default=gbdt.DEFAULT_PARAMS["eta"])
    p.add_argument("--reg-lambda", type=float, default=gbdt.DEFAULT_PARAMS["lambda_reg"])
    p.add_argument("--min-child-weight", type=int, default=gbdt.DEFAULT_PARAMS["min_child_weight"])
    p.add_argument("--min-gain", type=float, default=gbdt.DEFAULT_PARAMS["min_gain"])
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="validation metrics and length table")
    p.add_argument("--topology", required=True)
    p.add_argument("--validation", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--lmax", type=int, default=ds.DEFAULT_LMAX)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("route", help="route a QASM circuit onto the device")
    p.add_argument("--circuit", required=True)
    p.add_argument("--topology", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--method", choices=[router.XGSWAP, router.SHORTEST], default=router.XGSWAP)
    p.add_argument("--slack", type=int, default=4)
    p.add_argument("--cap", type=int, default=64)
    p.add_argument("--mode", choices=[PERMUTE, RESTORE], default=PERMUTE)
    p.add_argument("--lmax", type=int, default=ds.DEFAULT_LMAX)
    p.add_argument("--out", required=True, help="output QASM path")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("compare", help="shortest vs xgswap random-CNOT benchmark")
    p.add_argument("--topology", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", type=int, default=313)
    p.add_argument("--min-len", type=int, default=3)
    p.add_argument("--max-len", type=int, default=27)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--slack", type=int, default=4)
    p.add_argument("--cap", type=int, default=64)
    p.add_argument("--lmax", type=int, default=ds.DEFAULT_LMAX)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, NoPathError, FidrouteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
