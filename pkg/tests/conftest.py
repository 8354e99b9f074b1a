import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oldetect import _backend
from oldetect.graph import DirectedGraph


@pytest.fixture(params=_backend.available())
def backend(request):
    """Run a test once per available kernel backend."""
    prev = _backend.name()
    _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend(prev)


def make_graph(n, edges):
    edges = list(edges)
    src = [a for a, _ in edges]
    dst = [b for _, b in edges]
    return DirectedGraph.from_edges(src, dst, [f"n{i}" for i in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_dataset(root, n=120, seed=0, attributes=True, weeks=0):
    """Small synthetic follower graph plus config, for CLI tests.

    Returns the config path. With ``weeks > 0`` a snapshot manifest with that
    many weekly edge lists is written instead of a single edge list.
    """
    import networkx as nx

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    def edges_for(s):
        g = nx.scale_free_graph(n, seed=s)
        return sorted({(a, b) for a, b in g.edges() if a != b})

    def attrs_text():
        rows = ["id,age,verified,support,reject,irrelevant"]
        for i in range(n):
            s = rng.dirichlet([1, 1, 1])
            rows.append(f"u{i},{rng.integers(18, 70)},{rng.random() < 0.3},{float(s[0])!r},{float(s[1])!r},{float(s[2])!r}")
        return "\n".join(rows) + "\n"

    lines = ['preset = "twitter-style"', "rng_seed = 42", "[data]"]
    if weeks:
        man = []
        for w in range(weeks):
            (root / f"week{w}.txt").write_text("".join(f"u{a} u{b}\n" for a, b in edges_for(seed + w)))
            entry = f'[[snapshot]]\nlabel = "week{w}"\nedges = "week{w}.txt"\n'
            if attributes:
                (root / f"week{w}.csv").write_text(attrs_text())
                entry += f'attributes = "week{w}.csv"\n'
            man.append(entry)
        (root / "snapshots.toml").write_text("\n".join(man))
        lines.append('snapshots = "snapshots.toml"')
    else:
        (root / "edges.txt").write_text("# follower followee\n" + "".join(f"u{a} u{b}\n" for a, b in edges_for(seed)))
        lines.append('edges = "edges.txt"')
        if attributes:
            (root / "attrs.csv").write_text(attrs_text())
            lines.append('attributes = "attrs.csv"')
    if not attributes:
        lines += ["[embedding]", 'methods = ["deepwalk", "node2vec"]']
    lines += ["[embedding.deepwalk]", "walk_length = 20", "num_walks = 3",
              "[embedding.node2vec]", "walk_length = 20", "num_walks = 3",
              "[embedding.asne-lite]", "epochs = 2",
              "[sir]", "repetitions = 5", "n = 10"]
    cfg = root / "config.toml"
    cfg.write_text("\n".join(lines) + "\n")
    return cfg


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        status, text = mod.RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {text}")
