"""
Cascade Lifecycle: Cascade Data Model
Ingestion, validation and temporal partitioning of reshare cascades.

A cascade is an ordered sequence of (source, target, t) reshares. For network
analysis it is cut into subsequences that each close once a fixed number of
new nodes has joined, and consecutive subsequences are paired into
overlapping windows that are densified with prior-diffusion (history) edges.

Event log columns:   cascade_id, source, target, t   (t in minutes or ISO-8601)
History graph:       two node columns per row (source, target)
"""

import logging
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd

from exceptions import IngestError

logger = logging.getLogger(__name__)

# ==========================================
# 1. DEFAULTS
# ==========================================
EVENT_COLUMNS = ["cascade_id", "source", "target", "t"]
HISTORY_COLUMNS = ["source", "target"]
DEFAULT_NODE_COUNT = 40       # |V^tau'| used for every cascade
DEFAULT_MIN_SIZE = 300        # cascades below this many reshares are dropped
EPOCH = pd.Timestamp("1970-01-01", tz="UTC")


def edge_key(u, v):
    """Undirected edge as an ordered pair."""
    return (u, v) if u <= v else (v, u)


# ==========================================
# 2. DOMAIN TYPES
# ==========================================
@dataclass(frozen=True)
class ReshareEvent:
    source: str
    target: str
    time: float

    def __post_init__(self):
        if self.time < 0:
            raise ValueError(f"reshare time must be >= 0, got {self.time}")
        if self.source == self.target:
            raise ValueError(f"self reshare by {self.source}")


@dataclass(frozen=True)
class Cascade:
    id: str
    events: tuple

    @property
    def size(self):
        return len(self.events)

    @property
    def span(self):
        if not self.events:
            return 0.0
        return self.events[-1].time - self.events[0].time

    @cached_property
    def times(self):
        return np.array([e.time for e in self.events], dtype=float)

    def cumulative_size(self, t):
        """S[t]: number of reshares at or before t."""
        return int(np.searchsorted(self.times, t, side="right"))


@dataclass(frozen=True, eq=False)
class HistoryGraph:
    nodes: frozenset
    edges: frozenset

    @classmethod
    def from_edges(cls, pairs, nodes=()):
        edges = set()
        all_nodes = set(nodes)
        for u, v in pairs:
            if u == v:
                continue
            edges.add(edge_key(u, v))
            all_nodes.update((u, v))
        return cls(frozenset(all_nodes), frozenset(edges))

    @classmethod
    def empty(cls):
        return cls(frozenset(), frozenset())

    @cached_property
    def adjacency(self):
        adj = {n: set() for n in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def __contains__(self, node):
        return node in self.nodes

    def degree(self, node):
        return len(self.adjacency.get(node, ()))

    def edges_among(self, nodes):
        """History edges with both endpoints inside `nodes`."""
        nodes = set(nodes)
        found = set()
        for u in nodes:
            for v in self.adjacency.get(u, ()):
                if v in nodes:
                    found.add(edge_key(u, v))
        return found


@dataclass(frozen=True)
class Subsequence:
    index: int
    nodes: frozenset
    edges: frozenset
    start: float
    end: float
    events: tuple
    terminal: bool = False


@dataclass(frozen=True)
class TemporalWindow:
    index: int
    nodes: frozenset
    edges: frozenset
    start: float
    end: float
    first_events: tuple          # reshares of the first constituent subsequence
    subsequences: tuple          # indices of the two constituents
    terminal: bool = False


@dataclass
class IngestReport:
    cascades: list
    dropped_small: list = field(default_factory=list)
    row_errors: list = field(default_factory=list)

    @property
    def dropped_count(self):
        return len(self.dropped_small)


# ==========================================
# 3. READERS / WRITERS
# ==========================================
def read_event_log(path):
    """Load a delimited (csv/tsv) or line-JSON event log as string columns."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    ext = os.path.splitext(path)[1].lower()
    if ext in (".jsonl", ".json", ".ndjson"):
        df = pd.read_json(path, lines=True, dtype=False)
    else:
        sep = "\t" if ext in (".tsv", ".tab") else ","
        df = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False, na_values=[""])
    missing = [c for c in EVENT_COLUMNS if c not in df.columns]
    if missing:
        raise IngestError(0, f"event log lacks columns {missing}")
    df = df[EVENT_COLUMNS].copy()
    for col in EVENT_COLUMNS:
        df[col] = df[col].where(df[col].isna(), df[col].astype(str))
    return df


def read_history_graph(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    sep = "\t" if os.path.splitext(path)[1].lower() in (".tsv", ".tab") else ","
    df = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False, header=None)
    if df.shape[1] < 2:
        raise IngestError(0, "history graph needs two node columns")
    # optional header row
    if len(df) and [str(v).strip().lower() for v in df.iloc[0, :2]] == HISTORY_COLUMNS:
        df = df.iloc[1:]
    pairs = zip(df.iloc[:, 0], df.iloc[:, 1])
    return HistoryGraph.from_edges((u, v) for u, v in pairs if u and v)


def write_event_log(cascades, path):
    rows = [
        {"cascade_id": c.id, "source": e.source, "target": e.target, "t": e.time}
        for c in cascades for e in c.events
    ]
    pd.DataFrame(rows, columns=EVENT_COLUMNS).to_csv(path, index=False)


def write_history_graph(graph, path):
    rows = sorted(graph.edges)
    pd.DataFrame(rows, columns=HISTORY_COLUMNS).to_csv(path, index=False)


def _to_float(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return np.nan


def _parse_minutes(raw):
    """Numeric minutes, or ISO timestamps converted to minutes since the epoch."""
    minutes = raw.map(_to_float).astype(float)
    pending = minutes.isna() & raw.notna()
    if pending.any():
        stamps = pd.to_datetime(raw[pending], errors="coerce", utc=True, format="ISO8601")
        minutes.loc[pending] = (stamps - EPOCH).dt.total_seconds() / 60.0
    return minutes


# ==========================================
# 4. INGESTION
# ==========================================
def ingest_cascades(event_log, min_size=DEFAULT_MIN_SIZE):
    """
    Build cascades from an event log (DataFrame or path).

    Malformed rows are rejected one by one and reported with their 1-based data
    row number; cascades with fewer than `min_size` events are dropped.
    """
    df = read_event_log(event_log) if isinstance(event_log, (str, os.PathLike)) else event_log
    report = IngestReport(cascades=[])
    if df is None or len(df) == 0:
        return report

    df = df.reset_index(drop=True).copy()
    df["minutes"] = _parse_minutes(df["t"])

    valid = np.ones(len(df), dtype=bool)
    for col in ("cascade_id", "source", "target"):
        bad = df[col].isna() | (df[col].astype(str).str.strip() == "")
        for i in np.flatnonzero(bad.to_numpy() & valid):
            report.row_errors.append(IngestError(i + 1, f"missing {col}"))
        valid &= ~bad.to_numpy()
    bad_time = ~np.isfinite(df["minutes"].to_numpy(dtype=float))
    for i in np.flatnonzero(bad_time & valid):
        report.row_errors.append(IngestError(i + 1, f"unparseable time {df.at[i, 't']!r}"))
    valid &= ~bad_time
    loops = (df["source"] == df["target"]).to_numpy()
    for i in np.flatnonzero(loops & valid):
        report.row_errors.append(IngestError(i + 1, "source equals target"))
    valid &= ~loops

    report.row_errors.sort(key=lambda err: err.row)
    for err in report.row_errors:
        logger.warning("rejected event-log %s", err)

    good = df[valid]
    for cascade_id, rows in sorted(good.groupby("cascade_id", sort=False), key=lambda kv: str(kv[0])):
        rows = rows.sort_values("minutes", kind="stable")
        t0 = rows["minutes"].iloc[0]
        events = tuple(
            ReshareEvent(str(s), str(t), float(m - t0))
            for s, t, m in zip(rows["source"], rows["target"], rows["minutes"])
        )
        cascade = Cascade(str(cascade_id), events)
        if cascade.size < min_size:
            report.dropped_small.append(cascade.id)
            continue
        report.cascades.append(cascade)

    logger.info("ingested %d cascades, dropped %d below min size %d, rejected %d rows",
                len(report.cascades), report.dropped_count, min_size, len(report.row_errors))
    return report


# ==========================================
# 5. TEMPORAL PARTITIONING
# ==========================================
def build_subsequences(cascade, history, node_count=DEFAULT_NODE_COUNT):
    """
    Cut a cascade into subsequences of `node_count` newly joined nodes.

    A node joins at its first appearance as a reshare target; roots (sources
    never seen as targets) belong to the first subsequence. Each undirected edge
    is assigned to the first subsequence it appears in, so edge sets are
    disjoint. A trailing partial subsequence is kept and flagged terminal.
    """
    if node_count < 2:
        raise ValueError("node_count must be >= 2")

    targets = {e.target for e in cascade.events}
    roots = []
    for e in cascade.events:
        if e.source not in targets and e.source not in roots:
            roots.append(e.source)
    if len(roots) > node_count:
        logger.warning("cascade %s has %d roots, more than node_count=%d",
                       cascade.id, len(roots), node_count)

    joined = set(roots)
    assigned = set()
    subsequences = []
    current_nodes = set(roots)
    current_events = []

    def close(terminal):
        reshare = {edge_key(e.source, e.target) for e in current_events}
        edges = (reshare | history.edges_among(current_nodes)) - assigned
        assigned.update(edges)
        subsequences.append(Subsequence(
            index=len(subsequences) + 1,
            nodes=frozenset(current_nodes),
            edges=frozenset(edges),
            start=current_events[0].time,
            end=current_events[-1].time,
            events=tuple(current_events),
            terminal=terminal,
        ))

    for e in cascade.events:
        current_events.append(e)
        if e.target not in joined:
            joined.add(e.target)
            current_nodes.add(e.target)
        if len(current_nodes) >= node_count:
            close(terminal=False)
            current_nodes, current_events = set(), []

    if current_events:
        close(terminal=True)
        if len(subsequences) == 1:
            logger.warning("cascade %s has fewer than %d distinct nodes; single terminal subsequence",
                           cascade.id, node_count)
    return subsequences


def build_windows(subsequences, history):
    """Overlapping windows N_i = tau'_{i-1} U tau'_i for i >= 2, plus history edges.

    Edges keep both endpoints inside the window node set, so a reshare from a
    node that joined two or more subsequences earlier is left out.
    """
    if len(subsequences) < 2:
        logger.warning("fewer than 2 subsequences; no temporal windows")
        return []

    windows = []
    for prev, cur in zip(subsequences, subsequences[1:]):
        nodes = prev.nodes | cur.nodes
        edges = {(u, v) for u, v in prev.edges | cur.edges | history.edges_among(nodes)
                 if u in nodes and v in nodes}
        windows.append(TemporalWindow(
            index=cur.index,
            nodes=nodes,
            edges=frozenset(edges),
            start=prev.start,
            end=cur.end,
            first_events=prev.events,
            subsequences=(prev.index, cur.index),
            terminal=cur.terminal,
        ))
    return windows


def subsequence_at(subsequences, t):
    """Index of the subsequence whose events span time t (last one started at or before t)."""
    chosen = subsequences[0].index
    for sub in subsequences:
        if sub.start <= t:
            chosen = sub.index
    return chosen


def event_window(windows, subsequences, t):
    """First window containing the subsequence that holds time t, or None."""
    if not windows:
        return None
    sub_index = subsequence_at(subsequences, t)
    for w in windows:
        if sub_index in w.subsequences:
            return w
    return None
