import json
import subprocess
import sys

import pytest

from bargecount.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> ingest -> trips -> features/match -> train/select, all with --no-timestamps."""
    d = tmp_path_factory.mktemp("pipe")
    nt = "--no-timestamps"
    assert run(nt, "synth", "--output-dir", d / "syn", "--n-samples", 40, "--synth-seed", 3) == 0
    assert run(nt, "ingest", "--input", d / "syn/ais.csv", "--output", d / "store.csv",
               "--diagnostics", d / "diag.csv") == 0
    assert run(nt, "trips", "--store", d / "store.csv", "--output", d / "trips.csv",
               "--stop-speed-kn", 1.0, "--stop-min-minutes", 60, "--stop-radius-m", 300,
               "--stops-output", d / "stops.csv") == 0
    assert run(nt, "features", "--store", d / "store.csv", "--trips", d / "trips.csv",
               "--output", d / "features.csv") == 0
    assert run(nt, "features", "--store", d / "store.csv", "--trips", d / "trips.csv",
               "--labels", d / "syn/labels.csv", "--output", d / "labeled_f.csv") == 0
    assert run(nt, "match", "--detections", d / "syn/detections.geojson", "--store", d / "store.csv",
               "--trips", d / "trips.csv", "--window-seconds", 120, "--output", d / "labeled.csv",
               "--matches", d / "matches.csv") == 0
    assert run(nt, "train", "--data", d / "labeled.csv", "--model", "poisson", "--k", 2, "--seed", 42,
               "--output", d / "model.json", "--report", d / "cv.json") == 0
    assert run(nt, "select", "--data", d / "labeled.csv", "--model", "elasticnet", "--alpha", 0.05,
               "--output", d / "sel_enet.json") == 0
    assert run(nt, "select", "--data", d / "labeled.csv", "--model", "poisson",
               "--output", d / "sel_pois.json") == 0
    return d


def test_pipeline_artifacts(pipeline):
    d = pipeline
    assert (d / "trips.csv").read_text().count("\n") > 40
    def body(name):
        return [line for line in (d / name).read_text().splitlines() if not line.startswith("#")]
    assert body("labeled.csv") == body("labeled_f.csv")
    matches = (d / "matches.csv").read_text().splitlines()
    assert len(matches) == 41 and all(",1,1,1," in line for line in matches[1:])
    cv = json.loads((d / "cv.json").read_text())
    assert cv["family"] == "poisson" and cv["k"] == 2 and cv["seed"] == 42
    assert len(cv["per_fold"]) == 2 and "generated_at" not in cv["meta"]
    assert "stop.radius_m=300.0" in (d / "trips.csv").read_text()


def test_train_is_byte_identical_on_rerun(pipeline, tmp_path):
    d = pipeline
    assert run("--no-timestamps", "train", "--data", d / "labeled.csv", "--model", "poisson", "--k", 2,
               "--seed", 42, "--output", tmp_path / "model.json", "--report", tmp_path / "cv.json") == 0
    assert (tmp_path / "model.json").read_bytes() == (d / "model.json").read_bytes()
    assert (tmp_path / "cv.json").read_bytes() == (d / "cv.json").read_bytes()


def test_timestamps_appear_without_flag(pipeline, tmp_path):
    assert run("train", "--data", pipeline / "labeled.csv", "--report", tmp_path / "cv.json") == 0
    assert "generated_at" in json.loads((tmp_path / "cv.json").read_text())["meta"]


def test_evaluate_predict_report(pipeline, tmp_path, capsys):
    d = pipeline
    assert run("--no-timestamps", "evaluate", "--data", d / "labeled.csv", "--model-file", d / "model.json",
               "--k", 2, "--seed", 42, "--report", tmp_path / "ev.json") == 0
    ev = json.loads((tmp_path / "ev.json").read_text())
    cv = json.loads((d / "cv.json").read_text())
    assert ev["mean_mae"] == cv["mean_mae"]
    assert run("--no-timestamps", "predict", "--data", d / "features.csv", "--model-file", d / "model.json",
               "--imputation-report", d / "labeled.csv.imputation.json", "--output", tmp_path / "p.csv",
               "--round") == 0
    lines = [line for line in (tmp_path / "p.csv").read_text().splitlines() if not line.startswith("#")]
    assert lines[0] == "vessel_id,trip_index,detection_id,predicted_barges" and len(lines) == 41
    assert all(float(line.rsplit(",", 1)[1]).is_integer() for line in lines[1:])
    capsys.readouterr()
    assert run("report", "--inputs", d / "sel_enet.json", d / "sel_pois.json",
               "--output", tmp_path / "freq.csv") == 0
    out = capsys.readouterr().out
    assert "feature" in out and "n_models" in out
    rows = (tmp_path / "freq.csv").read_text().splitlines()
    counts = [int(r.split(",")[1]) for r in rows[1:]]
    assert counts == sorted(counts, reverse=True) and set(counts) <= {1, 2}


def test_train_with_selection(pipeline, tmp_path):
    d = pipeline
    assert run("--no-timestamps", "train", "--data", d / "labeled.csv", "--selection", d / "sel_pois.json",
               "--output", tmp_path / "m.json") == 0
    model = json.loads((tmp_path / "m.json").read_text())
    sel = json.loads((d / "sel_pois.json").read_text())
    assert model["feature_names"] == sel["selected_features"]


def test_config_file_is_honoured(pipeline, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model.family = elasticnet\ncv.seed = 5\n")
    assert run("--no-timestamps", "--config", cfg, "train", "--data", pipeline / "labeled.csv",
               "--report", tmp_path / "cv.json") == 0
    doc = json.loads((tmp_path / "cv.json").read_text())
    assert doc["family"] == "elasticnet" and doc["seed"] == 5
    assert run("--no-timestamps", "--config", cfg, "train", "--data", pipeline / "labeled.csv",
               "--model", "poisson", "--report", tmp_path / "cv2.json") == 0
    assert json.loads((tmp_path / "cv2.json").read_text())["family"] == "poisson"


def test_domain_errors_exit_1(tmp_path, capsys):
    assert run("ingest", "--input", tmp_path / "missing.csv", "--output", tmp_path / "o.csv") == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("MMSI,BaseDateTime,LAT,LON,SOG\n")
    assert run("ingest", "--input", bad, "--output", tmp_path / "o.csv") == 1
    assert "COG" in capsys.readouterr().err
    assert run("--config", tmp_path / "missing.cfg", "synth", "--output-dir", tmp_path) == 1


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["train", "--data", "x", "--no-such-flag"])
    assert exc.value.code == 2


def test_module_entry_point_help():
    out = subprocess.run([sys.executable, "-m", "bargecount", "trips", "--help"],
                         capture_output=True, text=True, check=True).stdout
    assert "--stop-radius-m" in out and "default 300" in out
    res = subprocess.run([sys.executable, "-m", "bargecount"], capture_output=True, text=True)
    assert res.returncode == 2
