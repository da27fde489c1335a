"""Command-line pipeline driver.

Exit status: 0 success, 1 domain/IO error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import config as C
from .ais import clean_records, filter_vessels, parse_ais_csv, read_records, write_records
from .errors import BargeCountError, DomainError, SchemaError
from .evaluation import (CvReport, RfecvResult, cross_validate, format_table, rfecv,
                         selection_frequency, stratified_kfold)
from .features import FEATURE_NAMES, FeatureRow, extract_all, read_feature_csv, write_feature_csv
from .fusion import (ImputationReport, LabeledSample, build_labeled_dataset, impute, imputation_medians,
                     match_all, read_detections_geojson, read_labeled_csv, samples_to_design,
                     write_detections_geojson, write_labeled_csv)
from .models import FAMILIES, feature_importance, fit, load_model, predict, save_model
from .synth import generate_labeled_dataset
from .trajectory import detect_stops, read_trips_csv, reconstruct_trips, write_trips_csv


# -- option groups ------------------------------------------------------------

def _add_stop_flags(p):
    g = p.add_argument_group("stop detection")
    g.add_argument("--stop-speed-kn", dest="stop.max_speed_kn", help="stop speed ceiling, knots (default 1.0)")
    g.add_argument("--stop-min-minutes", dest="stop.min_duration_min", help="minimum stop duration (default 60)")
    g.add_argument("--stop-radius-m", dest="stop.radius_m", help="stop radius around centroid, m (default 300)")
    g.add_argument("--max-gap-minutes", dest="stop.max_gap_min", help="split at silences longer than this (default 30)")
    g.add_argument("--min-trip-points", dest="stop.min_trip_points", help="shortest trip kept (default 10)")


def _add_feature_flags(p):
    g = p.add_argument_group("features")
    g.add_argument("--speed-bins", dest="features.entropy_bins_speed", help="speed entropy bins (default 10)")
    g.add_argument("--course-bins", dest="features.entropy_bins_course", help="course entropy bins (default 36)")
    g.add_argument("--low-speed-kn", dest="features.low_speed_kn", help="low-speed threshold (default 2.0)")
    g.add_argument("--high-speed-kn", dest="features.high_speed_kn", help="high-speed threshold (default 8.0)")
    g.add_argument("--optimal-low-kn", dest="features.optimal_low_kn", help="optimal band lower edge (default 4.0)")
    g.add_argument("--optimal-high-kn", dest="features.optimal_high_kn", help="optimal band upper edge (default 8.0)")
    g.add_argument("--min-direct-km", dest="features.min_direct_km",
                   help="sinuosity undefined below this displacement (default 0.05)")


def _add_model_flags(p, with_family=True):
    g = p.add_argument_group("model")
    if with_family:
        g.add_argument("--model", dest="model.family", choices=FAMILIES, help="model family (default poisson)")
    g.add_argument("--l2", dest="model.poisson.l2", help="poisson ridge penalty (default 1e-6)")
    g.add_argument("--poisson-tol", dest="model.poisson.tol", help="IRLS deviance tolerance (default 1e-8)")
    g.add_argument("--max-iter", dest="model.poisson.max_iter", help="IRLS iteration cap (default 100)")
    g.add_argument("--alpha", dest="model.elasticnet.alpha", help="elastic-net penalty strength (default 1.0)")
    g.add_argument("--l1-ratio", dest="model.elasticnet.l1_ratio", help="elastic-net L1 share (default 0.5)")
    g.add_argument("--enet-tol", dest="model.elasticnet.tol", help="coordinate-descent tolerance (default 1e-7)")
    g.add_argument("--max-sweeps", dest="model.elasticnet.max_sweeps", help="coordinate-descent sweeps (default 1000)")
    g.add_argument("--n-trees", dest="model.random_forest.n_trees", help="forest size (default 100)")
    g.add_argument("--mtry", dest="model.random_forest.mtry", help="features tried per split (default p/3)")
    g.add_argument("--min-leaf", dest="model.random_forest.min_leaf", help="minimum leaf size (default 1)")
    g.add_argument("--max-depth", dest="model.random_forest.max_depth", help="forest tree depth cap (default none)")
    g.add_argument("--n-estimators", dest="model.adaboost_r2.n_estimators", help="boosting rounds (default 50)")
    g.add_argument("--base-depth", dest="model.adaboost_r2.base_depth", help="boosted tree depth (default 3)")


def _add_cv_flags(p):
    p.add_argument("--k", dest="cv.k", help="number of stratified folds (default 2)")
    p.add_argument("--seed", dest="cv.seed", help="seed for folds and ensembles (default 0)")


def _add_synth_flags(p):
    g = p.add_argument_group("synthetic data")
    g.add_argument("--n-samples", dest="synth.n_samples", help="number of trips (default 200)")
    g.add_argument("--synth-seed", dest="synth.seed", help="generator seed (default 0)")
    g.add_argument("--base-speed-kn", dest="synth.base_speed_kn", help="empty-tow speed (default 6.0)")
    g.add_argument("--course-noise", dest="synth.course_noise_scale", help="course noise scale, deg (default 20)")
    g.add_argument("--speed-noise", dest="synth.speed_noise_scale", help="speed noise CV scale (default 0.15)")
    g.add_argument("--ping-interval-s", dest="synth.ping_interval_s", help="seconds between pings (default 60)")
    g.add_argument("--skew", dest="synth.skew", help="favour small tows (default true)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bargecount",
                                     description="Barge-count estimation from AIS trajectories.")
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--no-timestamps", action="store_true", help="omit generation time from outputs")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("ingest", help="AIS CSV -> cleaned record store", formatter_class=fmt)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--schema", default=None, help="overrides like lat=Latitude,lon=Longitude")
    p.add_argument("--vessels", default=None, help="comma-separated MMSI allow-list or @file")
    p.add_argument("--diagnostics", default=None, help="CSV of skipped rows")

    p = sub.add_parser("trips", help="record store -> trips CSV", formatter_class=fmt)
    p.add_argument("--store", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--stops-output", default=None)
    _add_stop_flags(p)

    p = sub.add_parser("features", help="trips -> feature CSV (or labeled CSV with --labels)",
                       formatter_class=fmt)
    p.add_argument("--store", required=True)
    p.add_argument("--trips", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--labels", default=None, help="CSV with vessel_id, trip_index, barge_count[, detection_id]")
    p.add_argument("--imputation-report", default=None)
    _add_feature_flags(p)

    p = sub.add_parser("match", help="detections + AIS -> labeled CSV", formatter_class=fmt)
    p.add_argument("--detections", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--trips", required=True)
    p.add_argument("--output", required=True, help="labeled dataset CSV")
    p.add_argument("--matches", default=None, help="per-detection match diagnostics CSV")
    p.add_argument("--unlabeled-output", default=None)
    p.add_argument("--imputation-report", default=None)
    p.add_argument("--window-seconds", dest="fusion.window_s", help="time window half-width (default 120)")
    _add_feature_flags(p)

    p = sub.add_parser("train", help="labeled CSV -> model JSON + CV report", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--output", default=None, help="model JSON")
    p.add_argument("--report", default=None, help="CV report JSON")
    p.add_argument("--features", default=None, help="comma-separated subset")
    p.add_argument("--selection", default=None, help="RFECV JSON whose selected subset to use")
    _add_model_flags(p)
    _add_cv_flags(p)

    p = sub.add_parser("select", help="labeled CSV -> RFECV result JSON", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--features", default=None, help="comma-separated starting set (default all 39)")
    _add_model_flags(p)
    _add_cv_flags(p)

    p = sub.add_parser("evaluate", help="labeled CSV + model -> CV report", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--report", default=None)
    _add_cv_flags(p)

    p = sub.add_parser("predict", help="feature rows + model -> predictions CSV", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--imputation-report", default=None, help="medians for missing values")
    p.add_argument("--round", action="store_true", help="round predictions to whole barges")

    p = sub.add_parser("synth", help="write a synthetic dataset", formatter_class=fmt)
    p.add_argument("--output-dir", required=True)
    _add_synth_flags(p)
    _add_feature_flags(p)

    p = sub.add_parser("report", help="RFECV results -> selection-frequency table", formatter_class=fmt)
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--output", default=None, help="CSV of feature, count")
    return parser


# -- helpers ------------------------------------------------------------------

def _headers(args, cfg, prefixes) -> list[str]:
    lines = [f"bargecount {args.command}"]
    if not args.no_timestamps:
        lines.append("generated_at=" + datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"))
    return lines + C.header_lines(cfg, prefixes)


def _meta(args, cfg, prefixes) -> dict:
    meta = {"command": args.command, "config": {k: cfg[k] for k in sorted(cfg) if k.startswith(prefixes)}}
    if not args.no_timestamps:
        meta["generated_at"] = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return meta


def _dump_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _load_store(path):
    return clean_records(read_records(path))


def _features_for_trips(trips_by_vessel, fcfg):
    vectors, rows = {}, []
    for vessel_id, trips in trips_by_vessel.items():
        for trip in trips:
            fv = extract_all(trip, fcfg)
            vectors[(vessel_id, trip.trip_index)] = fv
            rows.append(FeatureRow(vessel_id, trip.trip_index, trip.start_time, trip.end_time, fv, {}))
    return vectors, rows


def _print_cv(report: CvReport) -> None:
    rows = [(f.fold, f.n, "error: " + f.error if f.mae is None else f"{f.mae:.4f}") for f in report.per_fold]
    print(format_table(rows, ("fold", "n", "mae")))
    print(f"{report.family}: mean MAE {report.mean_mae:.4f} over {report.k} folds "
          f"({len(report.features)} features)")


def _feature_subset(args):
    if getattr(args, "selection", None):
        with open(args.selection, encoding="utf-8") as fh:
            return list(json.load(fh)["selected_features"])
    if args.features:
        names = [n.strip() for n in args.features.split(",") if n.strip()]
        unknown = sorted(set(names) - set(FEATURE_NAMES))
        if unknown:
            raise DomainError(f"unknown feature names: {unknown}")
        return names
    return list(FEATURE_NAMES)


# -- subcommands --------------------------------------------------------------

def cmd_ingest(args, cfg):
    schema = None
    if args.schema:
        schema = dict(item.split("=", 1) for item in args.schema.split(","))
    records, diag = parse_ais_csv(args.input, schema)
    groups = clean_records(records)
    if args.vessels:
        spec = args.vessels
        if spec.startswith("@"):
            spec = ",".join(Path(spec[1:]).read_text(encoding="utf-8").split())
        groups = filter_vessels(groups, [v.strip() for v in spec.split(",") if v.strip()])
    flat = [r for recs in groups.values() for r in recs]
    write_records(args.output, flat, _headers(args, cfg, ()))
    if args.diagnostics:
        with open(args.diagnostics, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "reason"])
            w.writerows(diag.skipped)
    print(f"{diag.summary()}; {len(flat)} records kept for {len(groups)} vessels")


def cmd_trips(args, cfg):
    groups = _load_store(args.store)
    params = C.stop_params(cfg)
    trips = reconstruct_trips(groups, params)
    write_trips_csv(args.output, [t for ts in trips.values() for t in ts], _headers(args, cfg, ("stop.",)))
    if args.stops_output:
        with open(args.stops_output, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vessel_id", "start_time", "end_time", "lat", "lon", "point_count"])
            for vessel_id, recs in groups.items():
                for s in detect_stops(recs, params):
                    w.writerow([vessel_id, s.start_time.strftime("%Y-%m-%dT%H:%M:%S"),
                                s.end_time.strftime("%Y-%m-%dT%H:%M:%S"), repr(s.centroid.lat),
                                repr(s.centroid.lon), s.point_count])
    n = sum(len(t) for t in trips.values())
    print(f"{n} trips from {len(groups)} vessels")


def _read_labels(path):
    labels = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for col in ("vessel_id", "trip_index", "barge_count"):
            if col not in (reader.fieldnames or ()):
                raise SchemaError(f"{path}: missing column {col!r}")
        for row in reader:
            key = (row["vessel_id"], int(row["trip_index"]))
            det = row.get("detection_id") or f"{key[0]}-{key[1]}"
            labels[key] = (int(row["barge_count"]), det)
    return labels


def cmd_features(args, cfg):
    groups = _load_store(args.store)
    trips = read_trips_csv(args.trips, groups)
    fcfg = C.feature_config(cfg)
    vectors, rows = _features_for_trips(trips, fcfg)
    headers = _headers(args, cfg, ("features.",))
    if not args.labels:
        write_feature_csv(args.output, rows, headers)
        print(f"{len(rows)} feature rows written")
        return
    labels = _read_labels(args.labels)
    keyed = [(key, labels[key]) for key in vectors if key in labels]
    if not keyed:
        raise DomainError("empty training set: no labeled trip found")
    medians, all_missing = imputation_medians([vectors[k] for k, _ in keyed])
    report = ImputationReport(medians, [], all_missing)
    samples = []
    for key, (count, det) in sorted(keyed, key=lambda kv: kv[1][1]):
        filled, flagged = impute(vectors[key], medians)
        report.imputed.extend((det, name) for name in flagged)
        trip = next(t for t in trips[key[0]] if t.trip_index == key[1])
        samples.append(LabeledSample(det, key[0], key[1], filled, count, trip.start_time, trip.end_time))
    write_labeled_csv(args.output, samples, headers)
    _dump_json(args.imputation_report or args.output + ".imputation.json", report.to_dict())
    print(f"{len(samples)} labeled rows written ({len(report.imputed)} values imputed)")


def cmd_match(args, cfg):
    groups = _load_store(args.store)
    trips = read_trips_csv(args.trips, groups)
    detections = read_detections_geojson(args.detections)
    matches = match_all(detections, groups, trips, cfg["fusion.window_s"])
    vectors, _ = _features_for_trips(trips, C.feature_config(cfg))
    labeled, unlabeled, report = build_labeled_dataset(detections, matches, vectors)
    headers = _headers(args, cfg, ("features.", "fusion."))
    write_labeled_csv(args.output, labeled, headers)
    if args.unlabeled_output:
        write_labeled_csv(args.unlabeled_output, unlabeled, headers)
    _dump_json(args.imputation_report or args.output + ".imputation.json", report.to_dict())
    if args.matches:
        with open(args.matches, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["detection_id", "vessel_id", "trip_index", "within_window", "intersects",
                        "matched", "n_candidates", "candidates"])
            for det_id, m in matches.items():
                if m is None:
                    w.writerow([det_id, "", "", 0, 0, 0, 0, ""])
                    continue
                cands = ";".join(f"{c.vessel_id}:{int(c.intersects)}:{c.time_offset_s:g}" for c in m.candidates)
                w.writerow([det_id, m.vessel_id, "" if m.trip is None else m.trip.trip_index,
                            int(m.within_window), int(m.intersects), int(m.is_match),
                            len(m.candidates), cands])
    n_match = sum(1 for m in matches.values() if m is not None and m.is_match)
    print(f"{n_match}/{len(detections)} detections matched; {len(labeled)} labeled, "
          f"{len(unlabeled)} unlabeled")


def _labeled_design(path, names):
    return samples_to_design(read_labeled_csv(path), names)


def cmd_train(args, cfg):
    family = cfg["model.family"]
    hyper = C.model_hyperparams(cfg, family)
    data = _labeled_design(args.data, _feature_subset(args))
    folds = stratified_kfold(data.y, cfg["cv.k"], cfg["cv.seed"])
    report = cross_validate(data, family, hyper, folds)
    model = fit(family, data, **hyper)
    prefixes = ("cv.", f"model.{family}.", "model.family")
    model.meta = _meta(args, cfg, prefixes)
    _print_cv(report)
    if args.output:
        save_model(model, args.output)
    if args.report:
        doc = report.to_dict()
        doc["importance"] = feature_importance(model)
        doc["meta"] = _meta(args, cfg, prefixes)
        _dump_json(args.report, doc)


def cmd_select(args, cfg):
    family = cfg["model.family"]
    hyper = C.model_hyperparams(cfg, family)
    data = _labeled_design(args.data, _feature_subset(args))
    result = rfecv(data, family, hyper, cfg["cv.k"], cfg["cv.seed"])
    folds = stratified_kfold(data.y, cfg["cv.k"], cfg["cv.seed"])
    report = cross_validate(data.subset(columns=result.selected), family, hyper, folds)
    rows = [(s.n_features, f"{-s.score:.4f}", s.eliminated or "") for s in result.trace]
    print(format_table(rows, ("n_features", "cv_mae", "eliminated_next")))
    print(f"{family}: selected {result.n_selected} features: {', '.join(result.selected)}")
    if args.output:
        doc = report.to_dict()
        doc.update(result.to_dict())
        doc["meta"] = _meta(args, cfg, ("cv.", f"model.{family}.", "model.family"))
        _dump_json(args.output, doc)


def cmd_evaluate(args, cfg):
    model = load_model(args.model_file)
    data = _labeled_design(args.data, model.feature_names)
    hyper = dict(model.hyperparams)
    if model.family in ("random_forest", "adaboost_r2"):
        hyper["seed"] = model.seed
    folds = stratified_kfold(data.y, cfg["cv.k"], cfg["cv.seed"])
    report = cross_validate(data, model.family, hyper, folds)
    _print_cv(report)
    if args.report:
        doc = report.to_dict()
        doc["meta"] = _meta(args, cfg, ("cv.",))
        _dump_json(args.report, doc)


def cmd_predict(args, cfg):
    model = load_model(args.model_file)
    rows, _ = read_feature_csv(args.data)
    medians = None
    if args.imputation_report:
        with open(args.imputation_report, encoding="utf-8") as fh:
            medians = ImputationReport.from_dict(json.load(fh)).medians
    X = []
    for r in rows:
        fv = r.features
        if medians is not None:
            fv, _ = impute(fv, medians)
        missing = [n for n in model.feature_names if fv[n] is None]
        if missing:
            raise DomainError(f"{r.vessel_id}/{r.trip_index}: missing {missing}; pass --imputation-report")
        X.append([fv[n] for n in model.feature_names])
    X = np.array(X, dtype=float).reshape(len(rows), len(model.feature_names))
    preds = predict(model, X, model.feature_names, round_counts=args.round)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        for line in _headers(args, cfg, ()):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vessel_id", "trip_index", "detection_id", "predicted_barges"])
        for r, yhat in zip(rows, preds):
            w.writerow([r.vessel_id, r.trip_index, r.extra.get("detection_id", ""), repr(float(yhat))])
    print(f"{len(rows)} predictions written")


def cmd_synth(args, cfg):
    scfg = C.synth_config(cfg)
    fcfg = C.feature_config(cfg)
    ds = generate_labeled_dataset(scfg, fcfg)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    headers = _headers(args, cfg, ("synth.", "features."))
    write_records(out / "ais.csv", [r for recs in ds.tracks.values() for r in recs], headers)
    write_trips_csv(out / "trips.csv", ds.trips, headers)
    write_detections_geojson(out / "detections.geojson", ds.detections)
    with open(out / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vessel_id", "trip_index", "barge_count", "detection_id"])
        for s in ds.samples:
            w.writerow([s.vessel_id, s.trip_index, s.barge_count, s.detection_id])
    rows = [FeatureRow(t.vessel_id, t.trip_index, t.start_time, t.end_time, extract_all(t, fcfg), {})
            for t in ds.trips]
    write_feature_csv(out / "features.csv", rows, headers)
    write_labeled_csv(out / "labeled.csv", ds.samples, headers)
    print(f"{len(ds.samples)} synthetic samples written to {out}")


def cmd_report(args, cfg):
    results = []
    for path in args.inputs:
        with open(path, encoding="utf-8") as fh:
            results.append(RfecvResult.from_dict(json.load(fh)))
    table = selection_frequency(results)
    print(format_table(table, ("feature", "n_models")))
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature", "n_models"])
            w.writerows(table)


COMMANDS = {"ingest": cmd_ingest, "trips": cmd_trips, "features": cmd_features, "match": cmd_match,
            "train": cmd_train, "select": cmd_select, "evaluate": cmd_evaluate, "predict": cmd_predict,
            "synth": cmd_synth, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_values = C.parse_config_file(args.config) if args.config else None
        cli_values = {k: v for k, v in vars(args).items() if "." in k}
        cfg = C.resolve(cli_values, file_values)
        COMMANDS[args.command](args, cfg)
    except (BargeCountError, OSError, ValueError, KeyError) as exc:
        print(f"bargecount {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
