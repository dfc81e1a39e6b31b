import csv
import json

import pytest

from alr import cli
from alr.cli import CSV_COLUMNS, ExperimentSpec, ResultRecord, ValidationError, load_spec, main, run

SMALL = {
    "schema": "alr-experiment/1",
    "kind": "sweep",
    "name": "small",
    "geometry": {"R": 2.0, "core": True},
    "cases": [{"q": 3.0}],
    "source": {"power": 2, "K": 12},
    "eta": {"decades": [1, 3], "per_decade": 1},
}


@pytest.fixture(autouse=True)
def cache(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("ALR_CACHE_DIR", str(d))
    return d


def write(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_recipes_listed(capsys):
    names = set(cli.recipes())
    assert {"radial-critical", "appendix", "sandwich", "eccentric", "conformal"} <= names
    assert main(["recipes"]) == 0
    out = capsys.readouterr().out
    assert "radial-critical" in out and "appendix-check" in out


def test_all_recipes_validate():
    for name, path in cli.recipes().items():
        spec = load_spec(path)
        assert spec.name == name


def test_run_writes_csv_with_fixed_columns(tmp_path):
    rec = run(write(tmp_path, SMALL), tmp_path / "out")
    text = (tmp_path / "out" / "small.csv").read_text(encoding="utf-8")
    rows = list(csv.reader(text.splitlines()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 4
    assert [float(r[0]) for r in rows[1:]] == [0.1, 0.01, 0.001]
    assert float(rows[1][1]) == rec.cases[0]["rows"][0]["value"]
    # %.17g round-trips exactly
    assert rows[1][1] == "%.17g" % rec.cases[0]["rows"][0]["value"]


def test_determinism_identical_bytes(tmp_path):
    p = write(tmp_path, SMALL)
    run(p, tmp_path / "a", use_cache=False)
    run(p, tmp_path / "b", use_cache=False)
    assert (tmp_path / "a" / "small.csv").read_bytes() == (tmp_path / "b" / "small.csv").read_bytes()


def test_parallel_matches_serial(tmp_path):
    spec = ExperimentSpec.from_dict(SMALL)
    assert cli.execute(spec, jobs=2).cases == cli.execute(spec, jobs=1).cases


def test_hash_depends_on_content_only():
    a = ExperimentSpec.from_dict(SMALL)
    b = ExperimentSpec.from_dict(json.loads(json.dumps(SMALL)))
    c = ExperimentSpec.from_dict({**SMALL, "source": {"power": 2, "K": 13}})
    assert a.hash == b.hash != c.hash
    assert len(a.hash) == 16


def test_cache_hit_does_not_recompute(tmp_path, monkeypatch, cache):
    p = write(tmp_path, SMALL)
    first = run(p, tmp_path / "out")
    assert not first.cached
    assert (cache / f"{ExperimentSpec.from_dict(SMALL).hash}.json").exists()

    def boom(*a, **k):
        raise AssertionError("recomputed on a cache hit")

    monkeypatch.setattr(cli, "execute", boom)
    second = run(p, tmp_path / "out")
    assert second.cached
    assert second.cases == json.loads(first.to_json())["cases"]


def test_no_cache_recomputes_and_matches(tmp_path, monkeypatch):
    p = write(tmp_path, SMALL)
    cached = run(p, tmp_path / "out")
    calls = []
    real = cli.execute
    monkeypatch.setattr(cli, "execute", lambda *a, **k: calls.append(1) or real(*a, **k))
    fresh = run(p, tmp_path / "out", use_cache=False)
    assert calls and not fresh.cached
    assert json.loads(fresh.to_json())["cases"] == json.loads(cached.to_json())["cases"]


def test_record_json_round_trip(tmp_path):
    rec = run(write(tmp_path, SMALL), tmp_path / "out")
    back = ResultRecord.from_json(rec.to_json())
    assert back.to_json() == rec.to_json()
    on_disk = json.loads((tmp_path / "out" / "small.record.json").read_text())
    assert on_disk["spec_hash"] == rec.spec_hash
    assert on_disk["spec"]["etas"] == [0.1, 0.01, 0.001]


def test_svg_written(tmp_path):
    run(write(tmp_path, SMALL), tmp_path / "out", svg=True)
    svg = (tmp_path / "out" / "small.svg").read_text()
    assert svg.startswith("<svg") and "<path" in svg


# ---------------------------------------------------------------- validation and exit codes


def test_empty_eta_grid_rejected(tmp_path, capsys):
    p = write(tmp_path, {**SMALL, "eta": []})
    with pytest.raises(ValidationError) as info:
        load_spec(p)
    assert any("eta grid is empty" in v for v in info.value.violations)
    assert main(["run", str(p), "--out", str(tmp_path)]) == 2
    assert "eta grid is empty" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch,needle",
    [
        ({"schema": "v0"}, "schema"),
        ({"kind": "nope"}, "kind"),
        ({"eta": [1e-3, 1e-2]}, "decreasing"),
        ({"eta": [0.1, -1.0]}, "positive"),
        ({"eta": [0.1]}, "two eta"),
        ({"source": {}}, "source"),
        ({"cases": [{"q": 1.5}]}, "1 < R < q"),
    ],
)
def test_validation_messages(patch, needle):
    with pytest.raises(ValidationError) as info:
        ExperimentSpec.from_dict({**SMALL, **patch})
    assert any(needle in v for v in info.value.violations)


def test_primal_inside_critical_radius_names_condition():
    doc = {**SMALL, "kind": "primal-cert", "cases": [{"q": 2.5}]}
    with pytest.raises(ValidationError) as info:
        ExperimentSpec.from_dict(doc)
    assert any("q <= R^(3/2)" in v for v in info.value.violations)


def test_eccentric_inadmissible_names_condition():
    doc = {**SMALL, "kind": "eccentric-cert", "geometry": {}, "cases": [{"R": 1.1, "q": 1.4, "rho": 0.97, "z0": 0.01}]}
    with pytest.raises(ValidationError) as info:
        ExperimentSpec.from_dict(doc)
    assert any("rho^2" in v for v in info.value.violations)


def test_missing_file_is_validation_error(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == 2


def test_bad_json_is_validation_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["run", str(p)]) == 2


def test_numerical_gate_exit_code(tmp_path, capsys):
    doc = {
        "schema": "alr-experiment/1",
        "kind": "eccentric-solve",
        "name": "gate",
        "geometry": {"R": 1.05, "q": 1.25, "rho": 0.99, "z0": 0.005},
        "source": {"power": 2, "K": 20},
        "eta": [1e-2],
        "tolerances": {"max_cond": 10.0},
    }
    assert main(["run", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 3
    assert "numerical gate failed" in capsys.readouterr().err


def test_success_exit_code(tmp_path, capsys):
    assert main(["run", str(write(tmp_path, SMALL)), "--out", str(tmp_path / "o")]) == 0
    assert "verdict" in capsys.readouterr().out


# ---------------------------------------------------------------- bundled recipes


def test_appendix_recipe_table(tmp_path):
    rec = run("appendix", tmp_path)
    (case,) = rec.cases
    assert case["verdict"] == "ok"
    rows = case["rows"]
    assert len(rows) == 2 * 3 * 10
    for r in rows:
        if r["n"] == 3:
            assert r["residual"] == pytest.approx(-(r["R"] ** (r["l"] - 1)), rel=1e-14)
        else:
            assert r["residual"] == 0.0
    header = (tmp_path / "appendix.csv").read_text().splitlines()[0]
    assert header == ",".join(cli.APPENDIX_COLUMNS)
    assert case["extra"]["root_n3_l1"]["root"] == pytest.approx(-2.0, abs=1e-12)


def test_radial_critical_recipe_runs(tmp_path):
    rec = run("radial-critical", tmp_path)
    assert [c["label"] for c in rec.cases] == ["q2.5", "q3.0"]
    for c in rec.cases:
        assert len(c["rows"]) == 6
        assert all(r["verdict"] == c["verdict"] for r in c["rows"])
    assert (tmp_path / "radial-critical__q2.5.csv").exists()


def test_radial_critical_recipe_verdicts(tmp_path):
    rec = run("radial-critical", tmp_path)
    assert [c["verdict"] for c in rec.cases] == ["resonant", "non-resonant"]
