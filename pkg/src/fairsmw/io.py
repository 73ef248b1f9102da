"""Edge lists, group files, datasets, benchmark configs and the metrics CSV."""
from __future__ import annotations

import csv
import gzip
import hashlib
import logging
import shutil
import threading
import urllib.request
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fairness import GroupPartition
from .graph import Graph, from_arrays, largest_component

log = logging.getLogger(__name__)

METRICS_HEADER = (
    "dataset", "algorithm", "variant", "k", "seed", "avg_balance", "min_balance", "ncut", "error",
    "constraint_residual", "total_s", "eigs_s", "kmeans_s", "restarts", "matvecs",
)
_INT_FIELDS = {"k", "seed", "restarts", "matvecs"}
_STR_FIELDS = {"dataset", "algorithm", "variant"}


class DataFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


@dataclass
class RawEdges:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    ids: list  # ids[i] is the original id of vertex i

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def id_map(self) -> dict:
        return {orig: i for i, orig in enumerate(self.ids)}


def _parse_id(tok: str, path, lineno: int) -> int:
    try:
        val = float(tok)
    except ValueError:
        raise DataFormatError(f"{path}:{lineno}: vertex id {tok!r} is not a number") from None
    if val < 0 or val != int(val):
        raise DataFormatError(f"{path}:{lineno}: vertex id {tok!r} is not a non-negative integer")
    return int(val)


def load_edge_list(path, skip_header: bool = False) -> RawEdges:
    """Parse ``u v [w]`` lines (whitespace or comma separated).

    ``#`` starts a comment; blank lines are skipped. Ids are remapped to
    ``0..n-1`` in order of first appearance; the default weight is 1.
    """
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    remap: dict[int, int] = {}
    us, vs, ws = [], [], []
    header_pending = skip_header
    with opener(path, "rt") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].replace(",", " ").strip()
            if not line:
                continue
            if header_pending:
                header_pending = False
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise DataFormatError(f"{path}:{lineno}: expected 'u v [w]', got {line!r}")
            a = _parse_id(parts[0], path, lineno)
            b = _parse_id(parts[1], path, lineno)
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise DataFormatError(f"{path}:{lineno}: weight {parts[2]!r} is not a number") from None
                if w < 0:
                    raise DataFormatError(f"{path}:{lineno}: negative weight {w}")
            else:
                w = 1.0
            for x in (a, b):
                if x not in remap:
                    remap[x] = len(remap)
            us.append(remap[a])
            vs.append(remap[b])
            ws.append(w)
    return RawEdges(np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64), np.array(ws), list(remap))


def edges_to_graph(raw: RawEdges, n: int | None = None, drop_self_loops: bool = True,
                   deduplicate: bool = True) -> Graph:
    """Undirected graph from raw edges; repeated (u, v)/(v, u) pairs count once when ``deduplicate``."""
    u, v, w = raw.u, raw.v, raw.w
    keep = u != v if drop_self_loops else np.ones(u.size, dtype=bool)
    u, v, w = u[keep], v[keep], w[keep]
    keep_w = w > 0
    u, v, w = u[keep_w], v[keep_w], w[keep_w]
    if deduplicate and u.size:
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        _, first = np.unique(lo * (raw.n + 1) + hi, return_index=True)
        u, v, w = lo[first], hi[first], w[first]
    return from_arrays(u, v, w, n or raw.n)


def load_groups(path, n: int, id_map: dict | None = None) -> GroupPartition:
    """Read ``node_id,group_id`` rows (optional header) covering all ``n`` vertices."""
    path = Path(path)
    group_of: dict[int, str] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 2:
                raise DataFormatError(f"{path}:{lineno}: expected 'node_id,group_id'")
            try:
                node = _parse_id(row[0].strip(), path, lineno)
            except DataFormatError:
                if lineno == 1:
                    continue  # header
                raise
            idx = id_map.get(node) if id_map is not None else node
            if idx is None or not 0 <= idx < n:
                raise DataFormatError(f"{path}:{lineno}: unknown vertex id {node}")
            group_of[idx] = row[1].strip()
    missing = sorted(set(range(n)) - set(group_of))
    if missing:
        raise DataFormatError(f"{path}: no group for {len(missing)} vertices (first: {missing[0]})")
    labels = [group_of[i] for i in range(n)]
    if len(set(labels)) < 2:
        raise DataFormatError(f"{path}: only one protected group present; need h >= 2")
    return GroupPartition.from_labels(np.array(labels))


# ---------------------------------------------------------------- datasets


@dataclass
class DatasetBundle:
    graph: Graph
    groups: GroupPartition
    name: str
    notes: list = field(default_factory=list)
    ids: np.ndarray | None = None  # original id of each retained vertex


@dataclass(frozen=True)
class DatasetSource:
    name: str
    urls: tuple
    edges: str
    groups: str
    group_column: str = ""


SNAP = "https://snap.stanford.edu/data/"
SOURCES = {
    "facebooknet": DatasetSource(
        "facebooknet",
        ("http://www.sociopatterns.org/wp-content/uploads/2015/07/Facebook-known-pairs_y_2013.csv.gz",
         "http://www.sociopatterns.org/wp-content/uploads/2015/09/metadata_2013.txt"),
        edges="Facebook-known-pairs_y_2013.csv.gz", groups="metadata_2013.txt"),
    "lastfm": DatasetSource("lastfm", (SNAP + "lastfm_asia.zip",),
                            edges="lastfm_asia/lastfm_asia_edges.csv",
                            groups="lastfm_asia/lastfm_asia_target.csv", group_column="target"),
    "deezer": DatasetSource("deezer", (SNAP + "deezer_europe.zip",),
                            edges="deezer_europe/deezer_europe_edges.csv",
                            groups="deezer_europe/deezer_europe_target.csv", group_column="target"),
    "german": DatasetSource(
        "german",
        ("https://raw.githubusercontent.com/yushundong/Graph-Mining-Fairness-Data/main/dataset/german/german_edges.txt",
         "https://raw.githubusercontent.com/yushundong/Graph-Mining-Fairness-Data/main/dataset/german/german.csv"),
        edges="german_edges.txt", groups="german.csv", group_column="Gender"),
}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def fetch_dataset(name: str, data_dir, timeout: float = 60.0) -> Path:
    """Download one dataset into ``data_dir/name`` and verify it against ``SHA256SUMS``.

    The first successful download writes ``SHA256SUMS``; later fetches must
    reproduce those digests.
    """
    src = SOURCES[name]
    target = Path(data_dir) / name
    target.mkdir(parents=True, exist_ok=True)
    sums_path = target / "SHA256SUMS"
    known = {}
    if sums_path.exists():
        for line in sums_path.read_text().splitlines():
            digest, fname = line.split(maxsplit=1)
            known[fname] = digest
    for url in src.urls:
        fname = url.rsplit("/", 1)[1]
        dest = target / fname
        if not dest.exists():
            log.info("downloading %s", url)
            with urllib.request.urlopen(url, timeout=timeout) as resp, open(dest, "wb") as out:
                shutil.copyfileobj(resp, out)
        digest = _sha256(dest)
        if fname in known and known[fname] != digest:
            raise DataFormatError(f"checksum mismatch for {dest}: {digest} != {known[fname]}")
        known[fname] = digest
        if fname.endswith(".zip"):
            with zipfile.ZipFile(dest) as zf:
                zf.extractall(target)
    sums_path.write_text("".join(f"{d}  {f}\n" for f, d in sorted(known.items())))
    return target


def dataset_available(name: str, data_dir) -> bool:
    src = SOURCES[name]
    base = Path(data_dir) / name
    return (base / src.edges).exists() and (base / src.groups).exists()


def _read_table(path: Path, column: str) -> dict[int, str]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        id_col = reader.fieldnames[0]
        return {int(float(row[id_col])): row[column] for row in reader}


def load_dataset(name: str, data_dir, largest_cc: bool = True) -> DatasetBundle:
    """Load one of the four benchmark networks after :func:`fetch_dataset`."""
    if name not in SOURCES:
        raise KeyError(f"unknown dataset {name!r}; choose from {sorted(SOURCES)}")
    src = SOURCES[name]
    base = Path(data_dir) / name
    if not dataset_available(name, data_dir):
        raise FileNotFoundError(f"dataset {name!r} not found under {base}; run `fairsmw fetch-datasets`")
    notes = []
    if name == "facebooknet":
        raw = load_edge_list(base / src.edges)
        # third column flags whether the pair are Facebook friends
        friends = raw.w > 0
        raw = RawEdges(raw.u[friends], raw.v[friends], np.ones(int(friends.sum())), raw.ids)
        meta = {}
        for line in (base / src.groups).read_text().splitlines():
            parts = line.split()
            if len(parts) >= 3:
                meta[int(parts[0])] = parts[2]
        labels_by_id = {i: g for i, g in meta.items() if g in ("F", "M")}
        notes.append("kept Facebook-friend pairs (flag 1); dropped students of unknown gender")
    else:
        raw = load_edge_list(base / src.edges, skip_header=name != "german")
        if name == "german":
            # german.csv has no id column: row order is the vertex id
            with open(base / src.groups, newline="") as fh:
                labels_by_id = {i: row[src.group_column] for i, row in enumerate(csv.DictReader(fh))}
        else:
            labels_by_id = _read_table(base / src.groups, src.group_column)
    notes.append("ids remapped to 0..n-1 in first-appearance order")

    # vertices: every labelled id, including those without edges
    ids = list(raw.ids) + sorted(set(labels_by_id) - set(raw.ids))
    keep_ids = [i for i in ids if i in labels_by_id]
    index = {orig: j for j, orig in enumerate(keep_ids)}
    old_to_new = np.array([index.get(orig, -1) for orig in raw.ids], dtype=np.int64)
    nu = old_to_new[raw.u] if raw.u.size else raw.u
    nv = old_to_new[raw.v] if raw.v.size else raw.v
    ok = (nu >= 0) & (nv >= 0)
    if (~ok).any():
        notes.append(f"dropped {int((~ok).sum())} edges touching unlabelled vertices")
    graph = edges_to_graph(RawEdges(nu[ok], nv[ok], raw.w[ok], keep_ids), n=len(keep_ids))
    labels = np.array([labels_by_id[i] for i in keep_ids])
    kept_ids = np.array(keep_ids)
    if largest_cc and graph.n_components() > 1:
        graph, keep = largest_component(graph)
        notes.append(f"reduced to largest connected component ({graph.n} of {len(keep_ids)} vertices)")
        labels = labels[keep]
        kept_ids = kept_ids[keep]
    for note in notes:
        log.info("%s: %s", name, note)
    return DatasetBundle(graph, GroupPartition.from_labels(labels), name, notes, kept_ids)


# ---------------------------------------------------------------- metrics


def _fmt(key, value):
    if key in _STR_FIELDS:
        return "" if value is None else str(value)
    if key in _INT_FIELDS:
        return str(int(value))
    return f"{float(value):.10g}"


def _row(r, dataset=""):
    if isinstance(r, dict):
        return r
    return r.to_row(dataset)


class MetricsWriter:
    """Streams metric rows to a CSV file; safe to share across worker threads."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", newline="") as fh:
            fh.write(",".join(METRICS_HEADER) + "\n")

    def write(self, result, dataset: str = "") -> None:
        row = _row(result, dataset)
        line = ",".join(_fmt(key, row.get(key, "")) for key in METRICS_HEADER)
        with self._lock, open(self.path, "a", newline="") as fh:
            fh.write(line + "\n")


def write_metrics(results, path, dataset: str = "") -> Path:
    w = MetricsWriter(path)
    for r in results:
        w.write(r, dataset)
    return w.path


def read_metrics(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_HEADER:
            raise DataFormatError(f"{path}: unexpected header {reader.fieldnames}")
        out = []
        for row in reader:
            parsed = {}
            for key, val in row.items():
                if key in _STR_FIELDS:
                    parsed[key] = val
                elif key in _INT_FIELDS:
                    parsed[key] = int(val)
                else:
                    parsed[key] = float(val)
            out.append(parsed)
        return out


# ---------------------------------------------------------------- configs


def _parse_int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class BenchmarkConfig:
    dataset: str = "sbm"
    data_dir: str = "data"
    edges: str = ""
    groups: str = ""
    sbm_n: int = 1000
    sbm_k: int = 2
    sbm_h: int = 2
    sbm_a: float = 8.0
    sbm_b: float = 1.0
    sbm_group_mode: str = "proportional"
    sbm_connectivity_fix: bool = True
    sbm_p_in: float | None = None
    sbm_p_out: float | None = None
    sizes: list = field(default_factory=list)
    algorithms: list = field(default_factory=lambda: ["all"])
    ks: list = field(default_factory=lambda: [2])
    seeds: list = field(default_factory=lambda: [0])
    sigma: float = 3.0
    tol: float = 1e-8
    max_restarts: int = 1000
    kmeans_restarts: int = 10
    warmup: int = 1
    variants: list = field(default_factory=lambda: ["sym", "rw", "aff", "deflated"])


_CONFIG_KEYS = {
    "dataset": str, "data_dir": str, "edges": str, "groups": str,
    "sbm_n": int, "sbm_k": int, "sbm_h": int, "sbm_a": float, "sbm_b": float,
    "sbm_group_mode": str, "sbm_connectivity_fix": _parse_bool,
    "sbm_p_in": float, "sbm_p_out": float,
    "sizes": _parse_int_list, "k": _parse_int_list, "seeds": _parse_int_list,
    "algorithms": lambda s: [a.strip() for a in s.split(",") if a.strip()],
    "variants": lambda s: [a.strip() for a in s.split(",") if a.strip()],
    "sigma": float, "tol": float, "max_restarts": int, "kmeans_restarts": int, "warmup": int,
}


def parse_config(text: str) -> BenchmarkConfig:
    """Parse ``key = value`` lines; ``#`` comments and blank lines are ignored."""
    cfg = BenchmarkConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            parsed = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        setattr(cfg, "ks" if key == "k" else key, parsed)
    from .algorithms import ALL, PIPELINES

    if not cfg.algorithms:
        raise ConfigError("algorithm list is empty")
    algs = []
    for a in cfg.algorithms:
        if a == "all":
            algs.extend(ALL)
        elif a in PIPELINES:
            algs.append(a)
        else:
            raise ConfigError(f"unknown algorithm {a!r}")
    cfg.algorithms = list(dict.fromkeys(algs))
    if not cfg.ks or min(cfg.ks) < 1:
        raise ConfigError("k must list positive integers")
    if not cfg.seeds:
        raise ConfigError("seed list is empty")
    if cfg.dataset not in ("sbm", "file", *SOURCES):
        raise ConfigError(f"unknown dataset {cfg.dataset!r}; use sbm, file or one of {sorted(SOURCES)}")
    if cfg.dataset == "file" and not (cfg.edges and cfg.groups):
        raise ConfigError("dataset=file needs both edges= and groups=")
    bad = set(cfg.variants) - {"sym", "rw", "aff", "deflated"}
    if bad:
        raise ConfigError(f"unknown operator variants {sorted(bad)}")
    return cfg


def load_config(path) -> BenchmarkConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
