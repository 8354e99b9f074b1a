import csv
import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import write_dataset
from oldetect.cli import main


def run(cfg, out, *stage_args):
    return main([*stage_args, "--config", str(cfg), "--out", str(out), "--threads", "1"])


def tree_digests(root: Path) -> dict:
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("full")
    cfg = write_dataset(root)
    assert main(["run", "--config", str(cfg), "--out", str(root / "out"), "--threads", "1"]) == 0
    return cfg, root / "out"


def test_full_tree(full_run):
    cfg, out = full_run
    g = out / "graph"
    for m in ("deepwalk", "node2vec", "asne-lite"):
        assert (g / "embeddings" / f"{m}.olem").exists() and (g / "embeddings" / f"{m}.csv").exists()
    ranks = sorted(p.name for p in (g / "rankings").glob("*.csv") if ".top." not in p.name)
    assert len(ranks) == 7  # 3 embeddings x 2 rankers + leaderrank
    top = list(csv.reader((g / "rankings" / "deepwalk+nlcrank.top.csv").open()))
    assert top[0] == ["rank", "external_id", "score", "method"] and len(top) == 6
    assert len(list((g / "sir").glob("*.json"))) == 7
    combined = json.loads((g / "combined.json").read_text())
    assert len(combined["asnerank_part"]) == 5 and len(combined["nlcrank_part"]) == 10
    assert combined["attitudes"] is not None
    assert (g / "attitudes.csv").read_text().startswith("group,support,reject,irrelevant\n")
    rep = json.loads((out / "report.json").read_text())
    assert all(rep["stages"][k] is not None for k in ("ingest", "embed", "rank", "sir", "combine"))
    assert rep["stages"]["temporal"] is None
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["timings"]) == {"ingest", "embed", "rank", "sir", "combine", "report"}
    for rel, dg in man["files"].items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == dg
    assert rep["digests"] == {k: v for k, v in man["files"].items() if not k.startswith("report.")}


def test_embedding_shapes(full_run):
    _, out = full_run
    from oldetect.embeddings.io import from_olem
    dims = {m: from_olem((out / "graph" / "embeddings" / f"{m}.olem").read_bytes()).vectors.shape
            for m in ("deepwalk", "node2vec", "asne-lite")}
    assert dims == {"deepwalk": (120, 64), "node2vec": (120, 128), "asne-lite": (120, 60)}


def test_determinism(full_run, tmp_path):
    cfg, out = full_run
    assert run(cfg, tmp_path / "again", "run") == 0
    assert tree_digests(out) == tree_digests(tmp_path / "again")
    # re-running into the same tree is a no-op, not a conflict
    assert run(cfg, out, "ingest") == 0


def test_overwrite_guard(full_run, tmp_path, capsys):
    cfg, out = full_run
    copy = tmp_path / "copy"
    assert run(cfg, copy, "ingest") == 0
    assert run(cfg, copy, "embed") == 0
    before = (copy / "graph/embeddings/deepwalk.olem").read_bytes()
    assert main(["embed", "--config", str(cfg), "--out", str(copy), "--threads", "1", "--seed", "5"]) == 1
    assert "--force" in capsys.readouterr().err
    assert (copy / "graph/embeddings/deepwalk.olem").read_bytes() == before
    assert main(["embed", "--config", str(cfg), "--out", str(copy), "--threads", "1", "--seed", "5",
                 "--force"]) == 0
    assert (copy / "graph/embeddings/deepwalk.olem").read_bytes() != before


def test_stage_preconditions(tmp_path, capsys):
    cfg = write_dataset(tmp_path / "d")
    out = tmp_path / "o"
    assert run(cfg, out, "embed") == 2
    assert "oldetect ingest" in capsys.readouterr().err
    assert run(cfg, out, "report") == 2
    assert run(cfg, out, "ingest") == 0
    assert run(cfg, out, "rank") == 2
    assert "deepwalk+nlcrank" in capsys.readouterr().err
    # partial run: report carries explicit nulls
    assert run(cfg, out, "report") == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["stages"]["ingest"]["graph"]["nodes"] == 120
    assert rep["stages"]["embed"] is None and rep["stages"]["sir"] is None


def test_missing_edge_file(tmp_path, capsys):
    cfg = write_dataset(tmp_path)
    (tmp_path / "edges.txt").unlink()
    assert run(cfg, tmp_path / "o", "ingest") == 2
    assert "edges.txt" in capsys.readouterr().err


def test_asne_without_attributes(tmp_path, capsys):
    cfg = write_dataset(tmp_path, attributes=False)
    cfg.write_text(cfg.read_text().replace('methods = ["deepwalk", "node2vec"]', 'methods = ["asne-lite"]'))
    assert run(cfg, tmp_path / "o", "ingest") == 0
    assert run(cfg, tmp_path / "o", "embed") == 1
    assert "attribute" in capsys.readouterr().err


def test_leaderrank_alone_and_bad_sir_n(tmp_path):
    cfg = write_dataset(tmp_path, attributes=False)
    cfg.write_text(cfg.read_text() + '\n[ranking]\nmethods = ["leaderrank"]\n')
    out = tmp_path / "o"
    assert run(cfg, out, "ingest") == 0
    assert run(cfg, out, "rank") == 0
    assert [p.name for p in (out / "graph/rankings").glob("*.csv")] != []
    assert not (out / "graph/embeddings").exists()
    cfg.write_text(cfg.read_text().replace("n = 10", "n = 500"))
    assert run(cfg, out, "sir") == 1
    cfg.write_text(cfg.read_text().replace("n = 500", "n = 10"))
    assert run(cfg, out, "sir") == 0
    assert run(cfg, out, "combine") == 1  # needs both ranker families


def test_nonconvergence_exit_code(tmp_path):
    cfg = write_dataset(tmp_path, attributes=False)
    cfg.write_text(cfg.read_text() + '\n[ranking]\nmethods = ["leaderrank"]\nleaderrank_max_iter = 1\n')
    assert run(cfg, tmp_path / "o", "ingest") == 0
    assert run(cfg, tmp_path / "o", "rank") == 3


def test_no_attitudes_marked_absent(tmp_path):
    cfg = write_dataset(tmp_path, attributes=False)
    out = tmp_path / "o"
    assert run(cfg, out, "run") == 0
    doc = json.loads((out / "graph/combined.json").read_text())
    assert doc["attitudes"] is None and doc["attitudes_absent"] == "no attitude data"
    assert not (out / "graph/attitudes.csv").exists()


def test_five_snapshots(tmp_path):
    cfg = write_dataset(tmp_path, n=80, attributes=False, weeks=5)
    out = tmp_path / "o"
    assert run(cfg, out, "run") == 0
    for w in range(5):
        assert (out / f"week{w}" / "combined.csv").exists()
    pers = out / "temporal" / "deepwalk+nlcrank.persistence.csv"
    header = pers.read_text().splitlines()[0]
    assert header == "external_id,appearances," + ",".join(f"rank_week{w}" for w in range(5))
    jac = (out / "temporal" / "combined.jaccard.csv").read_text().splitlines()
    assert len(jac) == 5
    rep = json.loads((out / "report.json").read_text())
    assert rep["snapshots"] == [f"week{w}" for w in range(5)] and rep["stages"]["temporal"]


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "oldetect.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("ingest", "embed", "rank", "sir", "combine", "report"):
        assert cmd in out.stdout
