"""Command-line pipeline: ingest -> embed -> rank -> sir -> combine -> report.

Every stage reads the artifacts of earlier stages from the output directory
and records what it writes in ``manifest.json`` together with a SHA-256
digest. Stages refuse to replace an artifact whose content would change
unless ``--force`` is given.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
import zlib
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .analysis import (CombineConfig, attitude_summary, attitudes_to_csv, combine_leaders, combined_to_csv,
                       jaccard, jaccard_to_csv, merge_same_ranker, outlier_mask, persistence_to_csv,
                       temporal_overlap)
from .config import PipelineConfig, load_config
from .embeddings import deepwalk, node2vec, train_asne_lite
from .embeddings.io import from_olem, to_csv as embedding_to_csv, to_olem
from .errors import DataIOError, OLDError, ValidationError
from .graph import (EdgeListFormat, attributes_from_bytes, attributes_to_bytes, graph_from_bytes, graph_to_bytes,
                    k_shell, load_attributes, load_edge_list, load_snapshots, resolve_data_path)
from .ranking import (PageRankParams, asne_rank, leader_rank, nlc_rank, ranking_from_csv, ranking_to_csv,
                      ranking_to_json)
from .sir import SIRConfig, evaluate_seeds, summary_to_csv, summary_to_json

log = logging.getLogger("oldetect")

MANIFEST = "manifest.json"
STAGES = ("ingest", "embed", "rank", "sir", "combine", "report")


class ArtifactConflict(OLDError):
    """An artifact on disk differs from what the stage would write."""


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


class Store:
    """Output directory with a digest inventory."""

    def __init__(self, root: Path, force: bool = False):
        self.root = root
        self.force = force
        path = root / MANIFEST
        if path.exists():
            try:
                self.manifest = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, ValueError) as exc:
                raise DataIOError(f"cannot read {path}: {exc}") from exc
        else:
            self.manifest = {}
        self.manifest.setdefault("files", {})
        self.manifest.setdefault("timings", {})

    @property
    def files(self) -> dict:
        return self.manifest["files"]

    def write(self, rel: str, data: bytes | str) -> None:
        if isinstance(data, str):
            data = data.encode("utf-8")
        path = self.root / rel
        new = _digest(data)
        if path.exists():
            old = _digest(path.read_bytes())
            if old != new and not self.force:
                raise ArtifactConflict(f"{path} exists with different content; rerun with --force to replace it")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
        except OSError as exc:
            raise DataIOError(f"cannot write {path}: {exc.strerror}") from exc
        self.files[rel] = new

    def has(self, rel: str) -> bool:
        return (self.root / rel).is_file()

    def read(self, rel: str, missing: str) -> bytes:
        path = self.root / rel
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise DataIOError(f"{path} not found: {missing}") from None
        except OSError as exc:
            raise DataIOError(f"cannot read {path}: {exc.strerror}") from exc

    def save(self, cfg: PipelineConfig) -> None:
        self.manifest.update({"tool": "oldetect", "version": __version__, "config": cfg.echo(),
                              "backend": _backend.name()})
        self.manifest["files"] = dict(sorted(self.files.items()))
        path = self.root / MANIFEST
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            path.write_text(_json(self.manifest), encoding="utf-8")
        except OSError as exc:
            raise DataIOError(f"cannot write {path}: {exc.strerror}") from exc


class Context:
    def __init__(self, cfg: PipelineConfig, store: Store, threads: int):
        self.cfg = cfg
        self.store = store
        self.threads = threads
        self._graphs = {}

    def labels(self) -> list[str]:
        labels = self.store.manifest.get("snapshots")
        if not labels:
            raise DataIOError(f"no ingested graph in {self.store.root}: run `oldetect ingest` first")
        return labels

    def graph(self, label: str):
        if label not in self._graphs:
            rel = f"{label}/graph.olgr"
            data = self.store.read(rel, "run `oldetect ingest` first")
            self._graphs[label] = graph_from_bytes(data, rel)
        return self._graphs[label]

    def attributes(self, label: str):
        rel = f"{label}/attributes.olat"
        if not self.store.has(rel):
            return None
        return attributes_from_bytes(self.store.read(rel, "run `oldetect ingest` first"), rel)

    def seed(self, *names: str) -> int:
        """Per-task seed derived from the global seed and task names."""
        key = tuple(zlib.crc32(x.encode("utf-8")) for x in names)
        return int(np.random.SeedSequence(self.cfg.rng_seed, spawn_key=key).generate_state(1, np.uint64)[0])

    def pairs(self) -> list[str]:
        out = []
        for ranker in self.cfg.ranking.methods:
            if ranker == "leaderrank":
                out.append("leaderrank")
            else:
                out.extend(f"{emb}+{ranker}" for emb in self.cfg.embedding.methods)
        return out


# ---------------------------------------------------------------------------
# stages


def cmd_ingest(ctx: Context) -> None:
    cfg = ctx.cfg
    d = cfg.data
    fmt = EdgeListFormat(separator=d.separator, header=d.header)
    if d.snapshots is not None:
        series = load_snapshots(resolve_data_path(d.snapshots, cfg.base_dir), fmt=fmt,
                                attribute_columns=d.attribute_columns, id_column=d.id_column)
        items = [(s.label, s.graph, s.attributes) for s in series]
    else:
        g = load_edge_list(resolve_data_path(d.edges, cfg.base_dir), fmt)
        attrs = None
        if d.attributes is not None:
            attrs = load_attributes(resolve_data_path(d.attributes, cfg.base_dir), g, d.attribute_columns,
                                    id_column=d.id_column)
        items = [("graph", g, attrs)]
    for label, g, attrs in items:
        rep = {"nodes": g.node_count, "edges": g.edge_count, **vars(g.ingest), "attributes": None}
        ctx.store.write(f"{label}/graph.olgr", graph_to_bytes(g))
        if attrs is not None:
            ctx.store.write(f"{label}/attributes.olat", attributes_to_bytes(attrs))
            rep["attributes"] = {"columns": list(attrs.columns), "nodes_without_row": len(attrs.missing),
                                 "unknown_ids": len(attrs.unknown_ids),
                                 "nodes_with_attitude": int(attrs.has_attitude.sum())}
        ctx.store.write(f"{label}/ingest.json", _json(rep))
        print(f"{label}: {g.node_count} nodes, {g.edge_count} edges "
              f"(read {g.ingest.edges_read}, dropped {g.ingest.duplicates} duplicates "
              f"and {g.ingest.self_loops} self-loops)")
    ctx.store.manifest["snapshots"] = [x[0] for x in items]


def cmd_embed(ctx: Context) -> None:
    cfg = ctx.cfg
    labels = ctx.labels()
    methods = cfg.embedding.methods
    if "asne-lite" in methods:
        lacking = [x for x in labels if not ctx.store.has(f"{x}/attributes.olat")]
        if lacking:
            raise ValidationError(f"asne-lite needs an attribute file; none ingested for {lacking}")
    for label in labels:
        g = ctx.graph(label)
        for method in methods:
            seed = ctx.seed(label, method)
            if method == "asne-lite":
                a = cfg.embedding.asne_lite
                emb = train_asne_lite(g, ctx.attributes(label), a.d_struct, a.d_attr_emb, a.epochs, a.batch, a.lr,
                                      rng_seed=seed, negatives=a.negatives)
            else:
                w = getattr(cfg.embedding, method)
                common = dict(walk_length=w.walk_length, num_walks=w.num_walks, window=w.window, dim=w.dim,
                              negatives=w.negatives, epochs=w.epochs, lr=w.lr, direction=w.direction,
                              rng_seed=seed, threads=ctx.threads)
                emb = deepwalk(g, **common) if method == "deepwalk" else node2vec(g, p=w.p, q=w.q, **common)
            base = f"{label}/embeddings/{method}"
            ctx.store.write(base + ".olem", to_olem(emb))
            ctx.store.write(base + ".csv", embedding_to_csv(emb, g.ids))
            ctx.store.write(base + ".json", _json({"method": method, "nodes": emb.node_count, "dim": emb.dim,
                                                   "seed": seed, "info": emb.info}))
            print(f"{label}: {method} -> {emb.node_count}x{emb.dim}")


def _load_embedding(ctx: Context, label: str, method: str, pair: str):
    rel = f"{label}/embeddings/{method}.olem"
    data = ctx.store.read(rel, f"embedding for pair {pair!r} is missing; run `oldetect embed` first")
    return from_olem(data, method)


def cmd_rank(ctx: Context) -> None:
    cfg = ctx.cfg
    rc = cfg.ranking
    params = PageRankParams(rc.damping, rc.tolerance, rc.max_iter)
    for label in ctx.labels():
        g = ctx.graph(label)
        metrics = None
        for pair in ctx.pairs():
            emb_name, _, ranker = pair.rpartition("+")
            if ranker == "leaderrank":
                res = leader_rank(g, rc.leaderrank_tolerance, rc.leaderrank_max_iter)
            else:
                emb = _load_embedding(ctx, label, emb_name, pair)
                if emb.node_count != g.node_count:
                    raise ValidationError(f"embedding {emb_name} has {emb.node_count} rows, graph has {g.node_count}")
                if ranker == "nlcrank":
                    metrics = metrics if metrics is not None else k_shell(g)
                    res = nlc_rank(g, emb, metrics, rc.hops, ctx.threads)
                else:
                    res = asne_rank(g, emb, params, rc.normalize)
            base = f"{label}/rankings/{pair}"
            ctx.store.write(base + ".csv", ranking_to_csv(res, g.ids))
            k = min(rc.report_n, g.node_count)
            ctx.store.write(base + ".top.csv", ranking_to_csv(res, g.ids, k))
            ctx.store.write(base + ".top.json", ranking_to_json(res, g.ids, k))
            head = ", ".join(g.ids[v] for v in res.order[:k].tolist())
            print(f"{label}: {pair} top-{k}: {head}")


def _load_ranking(ctx: Context, label: str, pair: str):
    rel = f"{label}/rankings/{pair}.csv"
    text = ctx.store.read(rel, f"ranking {pair!r} is missing; run `oldetect rank` first").decode("utf-8")
    return ranking_from_csv(text, ctx.graph(label))


def cmd_sir(ctx: Context) -> None:
    sc = ctx.cfg.sir
    for label in ctx.labels():
        g = ctx.graph(label)
        if sc.n > g.node_count:
            raise ValidationError(f"sir.n={sc.n} seeds requested but {label!r} has {g.node_count} nodes")
        for pair in ctx.pairs():
            res = _load_ranking(ctx, label, pair)
            seeds = res.order[:sc.n].tolist()
            scfg = SIRConfig(sc.tau, sc.gamma, seeds, sc.repetitions, ctx.cfg.rng_seed, sc.direction)
            summary = evaluate_seeds(g, scfg, ctx.threads)
            base = f"{label}/sir/{pair}"
            ctx.store.write(base + ".csv", summary_to_csv(summary))
            ctx.store.write(base + ".json", summary_to_json(summary, method=pair,
                                                            seed_ids=[g.ids[v] for v in seeds]))
            print(f"{label}: {pair} mean final infected-ever {summary.mean_final:.2f} "
                  f"(sd {summary.std_final:.2f}, {sc.repetitions} runs)")


def _families(ctx: Context):
    asne = [p for p in ctx.pairs() if p.endswith("+asnerank")]
    nlc = [p for p in ctx.pairs() if p.endswith("+nlcrank")]
    if not asne or not nlc:
        raise ValidationError("combine needs both asnerank and nlcrank rankings configured")
    return asne, nlc


def cmd_combine(ctx: Context) -> None:
    cc = ctx.cfg.combine
    ccfg = CombineConfig(cc.n, tuple(cc.ratio), cc.outlier_percentile)
    asne_pairs, nlc_pairs = _families(ctx)
    labels = ctx.labels()
    leaders_by_label = {}
    for label in labels:
        g = ctx.graph(label)
        a_lists = [_load_ranking(ctx, label, p) for p in asne_pairs]
        n_lists = [_load_ranking(ctx, label, p) for p in nlc_pairs]
        mask = outlier_mask(g.in_degree, g.out_degree, ccfg.outlier_percentile)
        leaders = combine_leaders(merge_same_ranker(a_lists, mask), merge_same_ranker(n_lists, mask), ccfg,
                                  a_lists, n_lists)
        leaders_by_label[label] = [g.ids[v] for v in leaders.all]
        ctx.store.write(f"{label}/combined.csv", combined_to_csv(leaders, g.ids))

        attrs = ctx.attributes(label)
        groups, absent = None, None
        if attrs is None or not attrs.has_attitude.any():
            absent = "no attitude data"
        else:
            try:
                groups = {"asnerank": attitude_summary(leaders.asnerank_part, attrs),
                          "nlcrank": attitude_summary(leaders.nlcrank_part, attrs),
                          "combined": attitude_summary(leaders.all, attrs),
                          "overall": attitude_summary(np.flatnonzero(attrs.has_attitude), attrs)}
            except ValidationError as exc:
                absent = str(exc)
        if groups is not None:
            ctx.store.write(f"{label}/attitudes.csv", attitudes_to_csv(groups))
        doc = {"n": ccfg.n, "ratio": list(ccfg.ratio), "outlier_percentile": ccfg.outlier_percentile,
               "outliers_removed": int(mask.sum()),
               "asnerank_part": [g.ids[v] for v in leaders.asnerank_part],
               "nlcrank_part": [g.ids[v] for v in leaders.nlcrank_part],
               "provenance": {g.ids[v]: list(p) for v, p in leaders.provenance.items()},
               "attitudes": None if groups is None else {k: {"support": s.support, "reject": s.reject,
                                                             "irrelevant": s.irrelevant, "count": s.count}
                                                         for k, s in groups.items()},
               "attitudes_absent": absent}
        ctx.store.write(f"{label}/combined.json", _json(doc))
        print(f"{label}: {len(leaders.asnerank_part)} ASNERank + {len(leaders.nlcrank_part)} NLCRank leaders"
              + ("" if absent is None else f" (attitudes absent: {absent})"))

    if len(labels) >= 2:
        for pair in ctx.pairs():
            series = [(x, _load_ranking(ctx, x, pair), ctx.graph(x).ids) for x in labels]
            k = min([ccfg.n] + [r.node_count for _, r, _ in series])
            rep = temporal_overlap(series, k)
            ctx.store.write(f"temporal/{pair}.persistence.csv", persistence_to_csv(rep))
            ctx.store.write(f"temporal/{pair}.jaccard.csv", jaccard_to_csv(rep))
        rows = ["from,to,jaccard"]
        for a, b in zip(labels, labels[1:]):
            rows.append(f"{a},{b},{jaccard(leaders_by_label[a], leaders_by_label[b])!r}")
        ctx.store.write("temporal/combined.jaccard.csv", "\n".join(rows) + "\n")


def _stage_docs(ctx: Context, labels, pattern: str, key=None):
    """``{label: {name: parsed json}}`` for artifacts matching ``label/pattern``; None if there are none."""
    head, tail = pattern.split("*")
    out = {}
    for label in labels:
        found = {}
        prefix = f"{label}/{head}"
        for rel in sorted(ctx.store.files):
            if rel.startswith(prefix) and rel.endswith(tail) and ctx.store.has(rel):
                doc = json.loads(ctx.store.read(rel, "").decode("utf-8"))
                found[rel[len(prefix):len(rel) - len(tail)]] = key(doc) if key else doc
        if found:
            out[label] = found
    return out or None


def cmd_report(ctx: Context) -> None:
    store = ctx.store
    if not store.files:
        raise DataIOError(f"no artifacts in {store.root}: run the pipeline stages first")
    for rel, dg in store.files.items():
        if rel.startswith("report."):
            continue
        if _digest(store.read(rel, "listed in the manifest but missing")) != dg:
            raise DataIOError(f"{store.root / rel} does not match its manifest digest")
    labels = store.manifest.get("snapshots") or []
    ingest = {x: json.loads(store.read(f"{x}/ingest.json", "").decode()) for x in labels
              if store.has(f"{x}/ingest.json")} or None
    embed = _stage_docs(ctx, labels, "embeddings/*.json",
                        lambda d: {"nodes": d["nodes"], "dim": d["dim"], "seed": d["seed"]})
    rank = _stage_docs(ctx, labels, "rankings/*.top.json",
                       lambda d: [{"external_id": r["external_id"], "score": r["score"]} for r in d["ranking"]])
    sir = _stage_docs(ctx, labels, "sir/*.json",
                      lambda d: {"mean_final_infected_ever": d["mean_final_infected_ever"],
                                 "std_final_infected_ever": d["std_final_infected_ever"],
                                 "tau": d["config"]["tau"], "gamma": d["config"]["gamma"],
                                 "repetitions": d["config"]["repetitions"], "seeds": len(d["seed_ids"])})
    combine = {x: json.loads(store.read(f"{x}/combined.json", "").decode()) for x in labels
               if store.has(f"{x}/combined.json")} or None
    temporal = sorted(r for r in store.files if r.startswith("temporal/")) or None
    digests = {r: d for r, d in sorted(store.files.items()) if not r.startswith("report.")}
    doc = {"tool": "oldetect", "version": __version__, "config": ctx.cfg.echo(), "snapshots": labels,
           "stages": {"ingest": ingest, "embed": embed, "rank": rank, "sir": sir, "combine": combine,
                      "temporal": temporal},
           "digests": digests}
    text = _report_text(doc)
    store.write("report.json", _json(doc))
    store.write("report.txt", text)
    sys.stdout.write(text)


def _report_text(doc) -> str:
    lines = [f"oldetect {doc['version']} report", ""]
    st = doc["stages"]
    for label in doc["snapshots"]:
        lines.append(f"[{label}]")
        ing = (st["ingest"] or {}).get(label)
        lines.append(f"  graph: {ing['nodes']} nodes, {ing['edges']} edges" if ing else "  graph: (not ingested)")
        emb = (st["embed"] or {}).get(label)
        lines.append("  embeddings: " + (", ".join(f"{m} {v['nodes']}x{v['dim']}" for m, v in emb.items())
                                          if emb else "(none)"))
        for pair, head in ((st["rank"] or {}).get(label) or {}).items():
            lines.append(f"  {pair}: " + ", ".join(r["external_id"] for r in head))
        for pair, s in ((st["sir"] or {}).get(label) or {}).items():
            lines.append(f"  SIR {pair}: mean {s['mean_final_infected_ever']:.3f} "
                         f"sd {s['std_final_infected_ever']:.3f} (tau={s['tau']}, {s['repetitions']} runs)")
        comb = (st["combine"] or {}).get(label)
        if comb:
            lines.append("  leaders (asnerank part): " + ", ".join(comb["asnerank_part"]))
            lines.append("  leaders (nlcrank part): " + ", ".join(comb["nlcrank_part"]))
            if comb["attitudes"]:
                for grp, a in comb["attitudes"].items():
                    lines.append(f"  attitude {grp}: support {a['support']:.3f} reject {a['reject']:.3f} "
                                 f"irrelevant {a['irrelevant']:.3f}")
            else:
                lines.append(f"  attitudes: absent ({comb['attitudes_absent']})")
        lines.append("")
    missing = [k for k, v in st.items() if v is None and (k != "temporal" or len(doc["snapshots"]) > 1)]
    if missing:
        lines.append("stages without artifacts: " + ", ".join(missing))
    return "\n".join(lines) + "\n"


COMMANDS = {"ingest": cmd_ingest, "embed": cmd_embed, "rank": cmd_rank, "sir": cmd_sir,
            "combine": cmd_combine, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="pipeline config (TOML)")
    common.add_argument("--seed", type=int, help="override rng_seed")
    common.add_argument("--threads", type=int, help="worker threads (default: CPU count; 1 = fully deterministic)")
    common.add_argument("--force", action="store_true", help="replace artifacts whose content changes")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="oldetect", description="Opinion-leader detection pipeline.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in STAGES:
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__name__.replace("cmd_", "") + " stage")
    sub.add_parser("run", parents=[common], help="all stages in order")
    return p


def _context(args) -> Context:
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ValidationError("--seed must be an unsigned 64-bit integer")
        cfg.rng_seed = args.seed
    threads = args.threads if args.threads is not None else (cfg.threads or os.cpu_count() or 1)
    if threads < 1:
        raise ValidationError("--threads must be >= 1")
    out = Path(args.out) if args.out else Path(cfg.base_dir) / cfg.out
    return Context(cfg, Store(out, args.force), threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ctx = _context(args)
        stages = STAGES if args.command == "run" else (args.command,)
        for stage in stages:
            t0 = time.perf_counter()
            try:
                COMMANDS[stage](ctx)
                ctx.store.manifest["timings"][stage] = round(time.perf_counter() - t0, 6)
            finally:
                # keep the inventory in step with whatever reached the disk
                ctx.store.save(ctx.cfg)
    except OLDError as exc:
        print(f"oldetect: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"oldetect: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
