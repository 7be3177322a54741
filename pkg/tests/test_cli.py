import csv
import json

import pytest

from facereid.cli import main
from facereid.core import FrameBatch, Observation
from facereid.io import write_assignments, write_stream
from conftest import unit
from fixtures import TABLE1, crafted_run

SYNTH = "seed = 1\ndim = 16\nn_identities = 3\nframes = 60\ncentroid_min_distance = 1.2\n"
RUN = "t_d = 1.0\nt_n = 3\nghost_min_frames = 1\n"


@pytest.fixture
def files(tmp_path):
    (tmp_path / "synth.cfg").write_text(SYNTH)
    (tmp_path / "run.cfg").write_text(RUN)
    return tmp_path


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_synth(files):
    assert main(["synth", str(files / "synth.cfg"), str(files / "a.jsonl")]) == 0
    assert main(["synth", str(files / "synth.cfg"), str(files / "b.jsonl")]) == 0
    first = (files / "a.jsonl").read_text().splitlines()[0]
    assert json.loads(first) == {"dim": 16}
    assert (files / "a.jsonl").read_bytes() == (files / "b.jsonl").read_bytes()


def test_unknown_key_is_usage_error(files, capsys):
    (files / "bad.cfg").write_text("dim = 4\nwat = 1\n")
    assert main(["synth", str(files / "bad.cfg"), str(files / "x.jsonl")]) == 1
    assert "line 2" in capsys.readouterr().err


def test_bad_arguments_exit_1():
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 1


def test_run_then_eval(files, capsys):
    s, a, out = files / "s.jsonl", files / "a.jsonl", files / "ev"
    main(["synth", str(files / "synth.cfg"), str(s)])
    assert main(["run", str(s), str(files / "run.cfg"), str(a)]) == 0
    assert (files / "a.gallery.jsonl").exists()
    assert main(["eval", str(a), str(s), "--out-dir", str(out)]) == 0
    rows = _csv(out / "metrics.csv")
    assert [r["fold"] for r in rows] == ["1", "pooled"]
    # 3 faces, T_n - 1 = 2 warm-up unknowns each
    assert int(rows[0]["tp"]) == 180 - 6 and int(rows[0]["fa"]) == 0
    assert "accuracy=" in capsys.readouterr().out


def test_perfect_crafted_run_scores_one(tmp_path):
    s, a = tmp_path / "s.jsonl", tmp_path / "a.jsonl"
    write_stream(s, [FrameBatch(f, (Observation(f, 1, unit(1, 0), "P"),)) for f in range(4)], 2)
    assigned, _ = crafted_run({"P": {1: 4}})
    write_assignments(a, assigned)
    assert main(["eval", str(a), str(s), "--out-dir", str(tmp_path)]) == 0
    assert float(_csv(tmp_path / "metrics.csv")[0]["accuracy"]) == 1.0


def test_table1_crafted_files(tmp_path):
    assigned, truth = crafted_run(TABLE1)
    batches = [FrameBatch(f, (Observation(f, t, unit(1, 0), truth[(f, t)]),)) for f, t in sorted(truth)]
    write_stream(tmp_path / "s.jsonl", batches, 2)
    write_assignments(tmp_path / "a.jsonl", assigned)
    assert main(["eval", str(tmp_path / "a.jsonl"), str(tmp_path / "s.jsonl"),
                 "--out-dir", str(tmp_path)]) == 0
    row = _csv(tmp_path / "metrics.csv")[0]
    assert (row["tp"], row["fa"], row["fr"]) == ("356", "4", "37")
    assert float(row["accuracy"]) == pytest.approx(0.89672, abs=1e-5)
    header = (tmp_path / "ccm_1.csv").read_text().splitlines()[0]
    assert header == "actual,4,1,3,2,unknown"


def test_eval_missing_truth_is_data_error(tmp_path, capsys):
    write_stream(tmp_path / "s.jsonl", [FrameBatch(0, (Observation(0, 1, unit(1, 0), "P"),))], 2)
    (tmp_path / "a.jsonl").write_text('{"frame": 5, "track": 2, "status": "unknown", "id": null}\n')
    assert main(["eval", str(tmp_path / "a.jsonl"), str(tmp_path / "s.jsonl"),
                 "--out-dir", str(tmp_path)]) == 2
    assert "frame=5 track=2" in capsys.readouterr().err


def test_run_empty_stream(tmp_path):
    (tmp_path / "s.jsonl").write_text('{"dim": 4}\n')
    (tmp_path / "c.cfg").write_text("")
    assert main(["run", str(tmp_path / "s.jsonl"), str(tmp_path / "c.cfg"),
                 str(tmp_path / "a.jsonl"), "--checkpoint", str(tmp_path / "g.jsonl")]) == 0
    assert (tmp_path / "a.jsonl").read_text() == ""
    assert (tmp_path / "g.jsonl").read_text() == ""


def test_run_immediate_first_frame(tmp_path):
    obs = tuple(Observation(0, t, unit(*v), None) for t, v in
                enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1)], start=1))
    write_stream(tmp_path / "s.jsonl", [FrameBatch(0, obs)], 3)
    (tmp_path / "c.cfg").write_text("admission = immediate\nghost_min_frames = 1\n")
    main(["run", str(tmp_path / "s.jsonl"), str(tmp_path / "c.cfg"), str(tmp_path / "a.jsonl")])
    recs = [json.loads(l) for l in (tmp_path / "a.jsonl").read_text().splitlines()]
    assert [(r["status"], r["id"]) for r in recs] == [("new", 1), ("new", 2), ("new", 3)]


def test_run_dim_mismatch_with_gallery(files):
    s = files / "s.jsonl"
    main(["synth", str(files / "synth.cfg"), str(s)])
    main(["run", str(s), str(files / "run.cfg"), str(files / "a.jsonl")])
    write_stream(files / "t.jsonl", [FrameBatch(0, (Observation(0, 1, unit(1, 0)),))], 2)
    assert main(["run", str(files / "t.jsonl"), str(files / "run.cfg"), str(files / "b.jsonl"),
                 "--gallery", str(files / "a.gallery.jsonl")]) == 2


def test_sweep(files):
    s = files / "s.jsonl"
    main(["synth", str(files / "synth.cfg"), str(s)])
    main(["run", str(s), str(files / "run.cfg"), str(files / "a.jsonl")])
    args = ["sweep", str(s), "t_d=0.05,0.1,1.0", None, "--config", str(files / "run.cfg"),
            "--gallery", str(files / "a.gallery.jsonl"), "--frozen"]
    outs = []
    for name in ("w1.csv", "w2.csv"):
        args[3] = str(files / name)
        assert main(args) == 0
        outs.append((files / name).read_bytes())
    assert outs[0] == outs[1]
    rows = _csv(files / "w1.csv")
    assert len(rows) == 3
    matched = [int(r["matched"]) for r in rows]
    assert matched == sorted(matched)
    assert main(["sweep", str(s), "admission=x", str(files / "w3.csv")]) == 1


def test_bench_small(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--sizes", "0,120", "--dim", "32", "--repetitions", "5",
                 "--backend", "both", "--out", str(out)]) == 0
    rows = _csv(out)
    assert {r["gallery_size"] for r in rows} == {"0", "120"}
    assert all(float(r["median_s"]) >= 0 for r in rows)
