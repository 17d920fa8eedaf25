"""Command-line behavior: reports, determinism, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from flavorbench.cli import main
from flavorbench.corpus import load_embeddings
from flavorbench.providers import TranscriptStore, request_key
from flavorbench.synth import fixture_match_entries, fixture_match_names

from conftest import make_matrix


def run(*argv):
    return main([str(a) for a in argv])


# ---------------------------------------------------------------- demo, pairs

def test_demo_writes_workspace(tmp_path, capsys):
    out = tmp_path / "ws"
    assert run("demo", "--out", out) == 0
    assert capsys.readouterr().out.strip() == str(out)
    assert (out / "embeddings.tsv").exists()
    assert (out / "labels" / "sweet.json").exists()


def test_pairs_row_count(fixture_ws, tmp_path):
    out = tmp_path / "pairs.csv"
    assert run("pairs", "--embeddings", fixture_ws / "embeddings.tsv",
               "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "id_a,id_b,cosine"
    assert len(lines) - 1 == 34 * 33 // 2


# ----------------------------------------------------------------- consolidate

def test_consolidate_with_report(fixture_ws, tmp_path):
    out = tmp_path / "merged.tsv"
    report = tmp_path / "report.json"
    assert run("consolidate",
               "--embeddings", fixture_ws / "embeddings.tsv",
               "--map", fixture_ws / "map.csv",
               "--catalog", fixture_ws / "catalog.csv",
               "--out", out, "--report", report) == 0
    merged = load_embeddings(out)
    assert len(merged.ids) == 29
    doc = json.loads(report.read_text())
    assert doc["n_original"] == 34
    assert doc["n_canonical"] == 29
    assert doc["n_removed"] == 2
    assert set(doc["inputs"]) == {"embeddings", "map", "catalog"}


def test_consolidate_applies_overrides(fixture_ws, tmp_path):
    merged = load_embeddings(fixture_ws / "embeddings.tsv")
    overrides = tmp_path / "overrides.json"
    overrides.write_text(json.dumps({"actions": [
        {"action": "remove", "original_id": 1},
    ]}))
    out = tmp_path / "merged.tsv"
    assert run("consolidate",
               "--embeddings", fixture_ws / "embeddings.tsv",
               "--map", fixture_ws / "map.csv",
               "--catalog", fixture_ws / "catalog.csv",
               "--overrides", overrides,
               "--out", out) == 0
    assert len(load_embeddings(out).ids) == 28
    assert "sugar" not in load_embeddings(out).names


# ------------------------------------------------------ deterministic reports

def _noise_args(fixture_ws, out, seed=0):
    return ("noise", "--embeddings", fixture_ws / "embeddings.tsv",
            "--map", fixture_ws / "map.csv",
            "--catalog", fixture_ws / "catalog.csv",
            "--seed", seed, "--out", out)


def test_noise_deterministic_and_ranked(fixture_ws, tmp_path):
    out1, out2 = tmp_path / "n1.json", tmp_path / "n2.json"
    assert run(*_noise_args(fixture_ws, out1)) == 0
    assert run(*_noise_args(fixture_ws, out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    # the planted orthogonal variant makes beef the noisiest group
    assert doc["entries"][0]["name"] == "beef"
    assert doc["entries"][0]["min_cosine"] < 0.1


def test_crossval_deterministic_and_seed_sensitive(fixture_ws, tmp_path):
    args = ("crossval",
            "--embeddings", fixture_ws / "embeddings.tsv",
            "--labels", fixture_ws / "labels" / "sweet.json",
            "--k", 5, "--repeats", 3)
    out1, out2, out3 = (tmp_path / f"c{i}.json" for i in range(3))
    assert run(*args, "--seed", 7, "--out", out1) == 0
    assert run(*args, "--seed", 7, "--out", out2) == 0
    assert run(*args, "--seed", 8, "--out", out3) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_bytes() != out3.read_bytes()
    doc = json.loads(out1.read_text())
    assert doc["seed"] == 7
    assert len(doc["fold_values"]) <= 15


def test_culture_deterministic(fixture_ws, tmp_path):
    args = ("culture",
            "--embeddings", fixture_ws / "embeddings.tsv",
            "--tags", fixture_ws / "cuisine_tags.json",
            "--k", 5, "--subsample", 20, "--iterations", 5, "--seed", 3)
    out1, out2 = tmp_path / "k1.json", tmp_path / "k2.json"
    assert run(*args, "--out", out1) == 0
    assert run(*args, "--out", out2) == 0
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    assert len(doc["purity"]["per_cluster"]) == 7
    assert "subsampled" in doc


# ----------------------------------------------------------- analyze, geometry

def test_analyze_ordinal_with_cv(fixture_ws, tmp_path):
    out = tmp_path / "sweet.json"
    assert run("analyze",
               "--embeddings", fixture_ws / "embeddings.tsv",
               "--labels", fixture_ws / "labels" / "sweet.json",
               "--cv", "--k", 5, "--repeats", 2, "--seed", 1,
               "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["analysis"] == "ordinal_projection"
    assert -1.0 <= doc["rho"] <= 1.0
    assert "fold_values" in doc["cv"]
    assert doc["params"]["cv"] is True


def test_analyze_categorical_dispatch(fixture_ws, tmp_path):
    out = tmp_path / "profile.json"
    assert run("analyze",
               "--embeddings", fixture_ws / "embeddings.tsv",
               "--labels", fixture_ws / "labels" / "flavor_profile.json",
               "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["analysis"] == "categorical_delta"


def test_geometry_two_axes(fixture_ws, tmp_path):
    out = tmp_path / "geo.json"
    assert run("geometry",
               "--embeddings", fixture_ws / "embeddings.tsv",
               "--axis-labels",
               fixture_ws / "labels" / "sweet.json",
               fixture_ws / "labels" / "umami.json",
               "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["axis_names"] == ["sweet", "umami"]
    assert len(doc["layout"]) == 2
    assert doc["partial"]["sweet"]["covariates"] == ["umami"]


# --------------------------------------------------------------------- match

def _write_match_fixture(tmp_path):
    names = tmp_path / "names.txt"
    names.write_text("\n".join(fixture_match_names()) + "\n# comment\n")
    db = tmp_path / "db.csv"
    with db.open("w") as fh:
        fh.write("entry_id,description,nutrient,amount,units\n")
        for entry in fixture_match_entries():
            if not entry.measurements:
                fh.write(f"{entry.entry_id},\"{entry.description}\",,,\n")
            for nutrient, (amount, units) in entry.measurements.items():
                fh.write(f"{entry.entry_id},\"{entry.description}\",{nutrient},{amount},{units}\n")
    return names, db


def test_match_offline_rule_layer(tmp_path):
    names, db = _write_match_fixture(tmp_path)
    out = tmp_path / "matches.csv"
    report = tmp_path / "match_report.json"
    assert run("match", "--names", names, "--db", db,
               "--out", out, "--report", report) == 0
    doc = json.loads(report.read_text())
    assert doc["n_names"] == 20
    # coriander needs the variant tier, so no map leaves 16 of 20 matched
    assert doc["n_matched"] == 16
    assert doc["by_layer"]["rule"] == 16
    assert doc["by_layer"]["embed"] == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "ingredient,entry_id,layer,score"
    assert len(rows) - 1 == 20


def test_match_with_variant_map(tmp_path):
    from flavorbench.curation import save_consolidation_map
    from flavorbench.synth import fixture_match_map

    names, db = _write_match_fixture(tmp_path)
    map_csv = tmp_path / "map.csv"
    catalog_csv = tmp_path / "catalog.csv"
    save_consolidation_map(fixture_match_map(), map_csv, catalog_csv)
    out = tmp_path / "matches.csv"
    report = tmp_path / "rep.json"
    assert run("match", "--names", names, "--db", db,
               "--map", map_csv, "--catalog", catalog_csv,
               "--out", out, "--report", report) == 0
    doc = json.loads(report.read_text())
    assert doc["n_matched"] == 17
    assert doc["match_rate"] == pytest.approx(17 / 20)
    # coriander claims the cilantro entry through the variant tier
    row = [ln for ln in out.read_text().splitlines() if ln.startswith("coriander")][0]
    assert row.split(",")[1] == "E049"


def test_match_join_writes_labels(tmp_path):
    names = tmp_path / "names.txt"
    names.write_text("apple\nbeef\n")
    db = tmp_path / "db.csv"
    db.write_text(
        "entry_id,description,nutrient,amount,units\n"
        "E1,\"apple, raw\",sugars,10.4,g\n"
        "E2,\"beef, ground\",protein,25.9,g\n"
        "E2,\"beef, ground\",sugars,0.5,g\n"
    )
    emb = tmp_path / "emb.tsv"
    from flavorbench.corpus import save_embeddings

    save_embeddings(make_matrix(2, 4, names=("apple", "beef")), emb)
    out = tmp_path / "matches.csv"
    join_out = tmp_path / "sugars.json"
    assert run("match", "--names", names, "--db", db,
               "--join", "sugars", "--join-out", join_out,
               "--embeddings", emb, "--out", out) == 0
    doc = json.loads(join_out.read_text())
    assert doc["dimension"] == "sugars"
    assert doc["units"] == "g"
    assert doc["labels"] == {"apple": 10.4, "beef": 0.5}


# ----------------------------------------------------------------------- tag

def test_tag_replay_provider(fixture_ws, tmp_path):
    schema_doc = {
        "name": "toy",
        "prompt": "Rate {batch}",
        "fields": [{"name": "heat", "kind": "ordinal", "values": ["low", "high"]}],
    }
    schema_path = tmp_path / "toy.json"
    schema_path.write_text(json.dumps(schema_doc))

    names = tmp_path / "names.txt"
    names.write_text("sugar\ncayenne\n")

    # record the one exchange the run will need, then replay offline
    from flavorbench.tagger import load_schema, render_prompt

    prompt = render_prompt(load_schema(schema_path), ["sugar", "cayenne"])
    store = TranscriptStore(tmp_path / "tapes")
    key = request_key("chat", "replay", prompt)
    store.put(key, {"kind": "chat", "model": "replay", "prompt": prompt},
              json.dumps([{"name": "sugar", "heat": "low"},
                          {"name": "cayenne", "heat": "high"}]))
    provider = tmp_path / "provider.json"
    provider.write_text(json.dumps({"mode": "replay", "transcript_dir": "tapes"}))

    out_dir = tmp_path / "labels"
    report = tmp_path / "tag_report.json"
    assert run("tag", "--names", names, "--schema", schema_path,
               "--provider", provider,
               "--embeddings", fixture_ws / "embeddings.tsv",
               "--out-dir", out_dir, "--report", report) == 0
    doc = json.loads((out_dir / "heat.json").read_text())
    assert doc["labels"] == {"sugar": "low", "cayenne": "high"}
    assert json.loads(report.read_text())["attempts"][0]["requested"] == 2


def test_tag_replay_miss_is_exit_1(fixture_ws, tmp_path, capsys):
    schema_doc = {
        "name": "toy", "prompt": "Rate {batch}",
        "fields": [{"name": "heat", "kind": "ordinal", "values": ["low", "high"]}],
    }
    (tmp_path / "toy.json").write_text(json.dumps(schema_doc))
    (tmp_path / "names.txt").write_text("sugar\n")
    (tmp_path / "tapes").mkdir()
    provider = tmp_path / "provider.json"
    provider.write_text(json.dumps({"mode": "replay", "transcript_dir": "tapes"}))
    code = run("tag", "--names", tmp_path / "names.txt",
               "--schema", tmp_path / "toy.json", "--provider", provider,
               "--embeddings", fixture_ws / "embeddings.tsv",
               "--out-dir", tmp_path / "out")
    assert code == 1
    assert "error:" in capsys.readouterr().err


# ----------------------------------------------------------------- exit codes

def test_data_error_is_exit_1(tmp_path, capsys):
    code = run("analyze", "--embeddings", tmp_path / "missing.tsv",
               "--labels", tmp_path / "missing.json", "--out", tmp_path / "o.json")
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


def test_usage_error_is_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        run("no-such-command")
    assert exc.value.code == 2
    capsys.readouterr()


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "flavorbench.cli", "demo", "--out", str(tmp_path / "ws")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "ws" / "embeddings.tsv").exists()
