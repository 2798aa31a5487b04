import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from barcode_grad import Barcode, build_complex, validate_filter
from barcode_grad.cli import main, resolve_config
from barcode_grad.errors import ConfigError
from barcode_grad.io import (
    complex_from_dict,
    complex_to_dict,
    format_number,
    load_complex,
    read_barcodes_csv,
    read_image_csv,
    write_barcodes_csv,
    write_image_csv,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


# io

def test_complex_roundtrip():
    K = build_complex([[0, 1, 2]])
    f = validate_filter(K, np.arange(len(K), dtype=float))
    K2, f2, coords = complex_from_dict(complex_to_dict(K, f, [[0, 0], [1, 0], [0, 1]]))
    assert K2.simplices == K.simplices
    assert np.array_equal(f2.values, f.values)
    assert coords.shape == (3, 2)


def test_values_follow_listed_order():
    K, f, _ = complex_from_dict({"simplices": [[0, 1], [1], [0]], "values": [2, 1, 0]})
    assert f.values[K.index[(0, 1)]] == 2 and f.values[K.index[(0,)]] == 0


def test_values_on_closed_complex():
    K, f, _ = complex_from_dict({"simplices": [[0, 1]], "values": [0, 1, 2]})
    assert f.values.tolist() == [0, 1, 2]


@pytest.mark.parametrize(
    "doc",
    [
        {},
        {"simplices": "abc"},
        {"simplices": [[1, 0]]},
        {"simplices": [[0, 1]], "values": [0, 1]},
        {"simplices": [[0, 1]], "values": [[0, 1, 2]]},
        {"simplices": [[0, 1]], "coordinates": [[0, 0]]},
    ],
)
def test_complex_from_dict_rejects(doc):
    with pytest.raises(ConfigError):
        complex_from_dict(doc)


def test_load_complex_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_complex(str(p))


def test_barcode_csv_roundtrip(tmp_path):
    bars = [(1, Barcode.from_pairs([(0.5, 1.25)], [2.0])), (0, Barcode.from_pairs([(0.1, 0.3), (0.0, 1.0)], [0.0]))]
    path = tmp_path / "b.csv"
    write_barcodes_csv(str(path), bars)
    lines = path.read_text().splitlines()
    assert lines[0] == "degree,birth,death"
    assert lines[1:] == ["0,0.0,1.0", "0,0.0,inf", "0,0.1,0.3", "1,0.5,1.25", "1,2.0,inf"]
    back = read_barcodes_csv(str(path))
    assert back[0] == bars[1][1] and back[1] == bars[0][1]


def test_format_number():
    assert format_number(math.inf) == "inf" and format_number(0.1) == "0.1"


def test_image_csv_roundtrip(tmp_path):
    vals = np.arange(9) / 7.0
    write_image_csv(str(tmp_path / "img.csv"), vals, 3)
    assert np.array_equal(read_image_csv(str(tmp_path / "img.csv")).reshape(-1), vals)


# persistence command

def test_cli_persistence_segment(capsys):
    assert main(["persistence", str(CONFIGS / "segment.json")]) == 0
    assert capsys.readouterr().out.splitlines() == ["degree,birth,death", "0,0.0,inf", "0,1.0,2.0"]


def test_cli_persistence_triangle_boundary(capsys):
    assert main(["persistence", str(CONFIGS / "triangle_boundary.json"), "--degrees", "1"]) == 0
    assert capsys.readouterr().out.splitlines() == ["degree,birth,death", "1,1.0,inf"]


def test_cli_persistence_out(tmp_path, capsys):
    assert main(["persistence", str(CONFIGS / "segment.json"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "barcodes.csv").read_text().splitlines()[1:] == ["0,0.0,inf", "0,1.0,2.0"]
    tmpl = json.loads((tmp_path / "template.json").read_text())["templates"]
    assert tmpl["0"] == {"pairs": [[[1], [0, 1]]], "unpaired": [[0]]}


def test_cli_persistence_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert main(["persistence", str(bad)]) == 2
    assert main(["persistence", str(CONFIGS / "segment.json"), "--degrees", "5"]) == 2
    assert main(["persistence", write_json(tmp_path / "nf.json", {"simplices": [[0, 1]], "values": [0, 1, 0.5]})]) == 2
    assert main(["persistence", str(tmp_path / "missing.json")]) == 2


# optimize command

def test_cli_optimize_continuation(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["optimize", str(CONFIGS / "continuation.json"), "--out", str(out)]) == 0
    recs = [json.loads(l) for l in (out / "trace.jsonl").read_text().splitlines()]
    assert len(recs) == 31 and recs[-1]["loss"] < recs[0]["loss"]
    assert (out / "final_barcode.csv").exists() and (out / "barcodes" / "iter_00030.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "max_iters"


def test_cli_optimize_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["optimize", str(CONFIGS / "continuation.json"), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "trace.jsonl").read_bytes() == (tmp_path / "b" / "trace.jsonl").read_bytes()
    assert (tmp_path / "a" / "final_barcode.csv").read_bytes() == (tmp_path / "b" / "final_barcode.csv").read_bytes()


def test_cli_optimize_simplification_writes_filter(tmp_path, capsys):
    out = tmp_path / "simp"
    assert main(["optimize", str(CONFIGS / "simplification.json"), "--out", str(out)]) == 0
    K, f, _ = load_complex(str(out / "final_filter.json"))
    summary = json.loads((out / "summary.json").read_text())
    assert summary["final_loss"] < summary["initial_loss"]
    assert f.values[2] >= f.values[1] >= f.values[0]


def test_cli_optimize_zero_iters(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "continuation.json").read_text())
    cfg["optimizer"]["max_iters"] = 0
    assert main(["optimize", write_json(tmp_path / "c.json", cfg), "--out", str(tmp_path / "o")]) == 0
    assert len((tmp_path / "o" / "trace.jsonl").read_text().splitlines()) == 1


def test_cli_print_config(capsys):
    assert main(["optimize", str(CONFIGS / "simplification.json"), "--print-config"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["optimizer"]["schedule"] == "constant" and cfg["optimizer"]["armijo_halvings"] == 10
    assert cfg["parametrization"]["tol"] == 1e-9 and cfg["loss"]["terms"][0]["weight"] == 1.0


@pytest.mark.parametrize(
    "mutate",
    [
        lambda c: c.pop("loss"),
        lambda c: c["parametrization"].update(kind="torus"),
        lambda c: c["optimizer"].update(rate=-1),
        lambda c: c["loss"]["terms"][0].update(simplify_eps=0.1),
        lambda c: c["loss"]["terms"][0].update(degree=7),
        lambda c: c.update(extra=1),
        lambda c: c["parametrization"].update(theta0=[1.0, 2.0]),
    ],
)
def test_cli_optimize_rejects_bad_config(tmp_path, capsys, mutate):
    cfg = json.loads((CONFIGS / "continuation.json").read_text())
    mutate(cfg)
    assert main(["optimize", write_json(tmp_path / "c.json", cfg), "--out", str(tmp_path / "o")]) == 2


def test_resolve_config_is_idempotent():
    cfg = json.loads((CONFIGS / "continuation.json").read_text())
    once = resolve_config(cfg)
    assert resolve_config(once) == once


def test_cli_optimize_tied_start(tmp_path, capsys):
    cfg = {
        "parametrization": {"kind": "raw_filter", "complex": {"simplices": [[0], [1], [0, 1]], "values": [0, 0, 1]}},
        "loss": {"terms": [{"kind": "total_persistence", "degree": 0}]},
        "optimizer": {"max_iters": 3},
    }
    assert main(["optimize", write_json(tmp_path / "c.json", cfg), "--out", str(tmp_path / "o")]) == 0
    first = json.loads((tmp_path / "o" / "trace.jsonl").read_text().splitlines()[0])
    assert first["smooth"] is False


# verify command

def test_cli_verify_stability(tmp_path, capsys):
    assert main(["verify", "stability", "--seed", "7", "--count", "50", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["passed"] and rep["failures"] == []


def test_cli_verify_oracle(tmp_path, capsys):
    assert main(["verify", "oracle", "--seed", "1", "--count", "20", "--out", str(tmp_path)]) == 0


def test_cli_verify_unknown_suite(tmp_path, capsys):
    assert main(["verify", "nonsense", "--out", str(tmp_path)]) == 2


def test_cli_no_command(capsys):
    assert main([]) == 2


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "barcode_grad.cli", "persistence", str(CONFIGS / "segment.json")],
                       capture_output=True, text=True, check=True)
    assert r.stdout.splitlines()[2] == "0,1.0,2.0"
