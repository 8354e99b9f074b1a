import pytest

from oldetect.config import PRESETS, config_from_dict, load_config, parse_toml
from oldetect.errors import DataIOError, ParseError, ValidationError

BASE = {"data": {"edges": "e.txt"}}


def test_defaults_follow_twitter_regime():
    cfg = config_from_dict(BASE)
    assert (cfg.embedding.deepwalk.walk_length, cfg.embedding.deepwalk.num_walks) == (80, 10)
    assert cfg.embedding.deepwalk.window == 10 and cfg.embedding.deepwalk.dim == 64
    n2v = cfg.embedding.node2vec
    assert (n2v.dim, n2v.p, n2v.q) == (128, 0.25, 4.0)
    a = cfg.embedding.asne_lite
    assert (a.d_struct, a.d_attr_emb, a.batch, a.lr) == (20, 40, 128, 0.001)
    assert (cfg.sir.tau, cfg.sir.gamma, cfg.sir.repetitions, cfg.sir.n) == (0.015, 1.0, 50, 100)
    assert (cfg.combine.n, cfg.combine.ratio, cfg.combine.outlier_percentile) == (15, [1, 2], 10.0)
    assert cfg.ranking.report_n == 5


def test_twitch_preset_and_override():
    cfg = config_from_dict({"preset": "twitch-style", **BASE, "embedding": {"deepwalk": {"dim": 32}}})
    dw = cfg.embedding.deepwalk
    assert (dw.walk_length, dw.num_walks, dw.window, dw.dim) == (40, 80, 10, 32)
    assert cfg.embedding.node2vec.dim == 64
    assert cfg.embedding.asne_lite.d_struct == 60
    assert cfg.sir.direction == "undirected"
    assert set(PRESETS) == {"twitter-style", "twitch-style"}


def test_easy_regime_override():
    cfg = config_from_dict({**BASE, "sir": {"tau": 0.5}})
    assert cfg.sir.tau == 0.5 and cfg.sir.gamma == 1.0


@pytest.mark.parametrize("raw", [
    {"data": {"edges": "e", "snapshots": "s"}},
    {"data": {}},
    {**BASE, "bogus": 1},
    {**BASE, "embedding": {"deepwalk": {"walk_len": 3}}},
    {**BASE, "embedding": {"methods": ["line"]}},
    {**BASE, "embedding": {"node2vec": {"p": 0}}},
    {**BASE, "ranking": {"damping": 1.0}},
    {**BASE, "sir": {"tau": 1.5}},
    {**BASE, "sir": {"gamma": 0}},
    {**BASE, "sir": {"n": 0}},
    {**BASE, "combine": {"ratio": [1]}},
    {**BASE, "combine": {"outlier_percentile": 100}},
    {**BASE, "rng_seed": -1},
    {**BASE, "preset": "weibo"},
])
def test_validation_errors(raw):
    with pytest.raises(ValidationError):
        config_from_dict(raw)


def test_parse_errors_and_paths(tmp_path, monkeypatch):
    with pytest.raises(ParseError):
        parse_toml("a = = 1", "x.toml")
    p = tmp_path / "c.toml"
    p.write_text('[data]\nedges = "e.txt"\n')
    with pytest.raises(DataIOError, match="e.txt"):
        load_config(p)
    assert load_config(p, validate_paths=False).data.edges == "e.txt"
    # falls back to $OLD_DATA_DIR
    data = tmp_path / "datadir"
    data.mkdir()
    (data / "e.txt").write_text("a b\n")
    monkeypatch.setenv("OLD_DATA_DIR", str(data))
    assert load_config(p).data.edges == "e.txt"
    with pytest.raises(DataIOError):
        load_config(tmp_path / "missing.toml")
