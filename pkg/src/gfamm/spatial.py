"""Neighbourhood graphs over areal units and their MRF precision matrices."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DuplicatePoints, MalformedLine, UnknownLabel

#: relative tolerance for a point on the Gabriel disc boundary (it blocks)
GABRIEL_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SpatialGraph:
    """Undirected simple graph on labelled nodes ``0..M-1``.

    ``edges`` holds pairs ``(i, j)`` with ``i < j``.
    """

    labels: tuple
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("graph labels must be unique")
        clean = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.M and 0 <= j < self.M):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.M - 1}")
            clean.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(clean))

    @property
    def M(self):
        return len(self.labels)

    def adjacency(self):
        A = np.zeros((self.M, self.M))
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1.0
        return A

    def degrees(self):
        return self.adjacency().sum(axis=1).astype(int)

    def index(self, label):
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise UnknownLabel(f"unknown node label {label!r}") from None

    def edge_labels(self):
        """Edges as label pairs, each pair and the list sorted lexicographically."""
        pairs = [tuple(sorted((self.labels[i], self.labels[j]))) for i, j in self.edges]
        return sorted(pairs)


def gabriel_graph(coords, labels=None):
    """Gabriel graph of planar points.

    Points ``s`` and ``s'`` are joined unless some third point ``z`` lies in
    the closed disc with diameter ``s s'``, i.e. unless
    ``d(s,z)^2 + d(s',z)^2 <= d(s,s')^2``.  Points on the boundary (equality
    up to ``GABRIEL_TIE_RTOL``) block the edge.
    """
    P = np.asarray(coords, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2 or P.shape[0] < 2:
        raise ValueError(f"need an (M, 2) array with M >= 2, got shape {P.shape}")
    M = P.shape[0]
    if labels is None:
        labels = [str(i) for i in range(M)]
    d2 = ((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=-1)
    off = d2[~np.eye(M, dtype=bool)]
    if np.any(off == 0):
        i, j = np.argwhere((d2 == 0) & ~np.eye(M, dtype=bool))[0]
        raise DuplicatePoints(f"points {i} and {j} coincide")
    edges = set()
    for i in range(M - 1):
        # s[j, z] = d(i,z)^2 + d(j,z)^2 for candidate partners j > i
        s = d2[i][None, :] + d2[i + 1:]
        s[:, i] = np.inf
        s[np.arange(M - i - 1), np.arange(i + 1, M)] = np.inf
        limit = d2[i, i + 1:] * (1 + GABRIEL_TIE_RTOL)
        blocked = (s <= limit[:, None]).any(axis=1)
        edges.update((i, int(j)) for j in np.flatnonzero(~blocked) + i + 1)
    return SpatialGraph(tuple(labels), frozenset(edges))


def mrf_precision(graph):
    """Intrinsic MRF precision: degree matrix minus adjacency matrix."""
    A = graph.adjacency()
    return np.diag(A.sum(axis=1)) - A


def read_adjacency(source, labels=None):
    """Parse an edge list with one ``labelA labelB`` pair per line.

    ``source`` is a path or the text itself.  Blank lines and lines starting
    with ``#`` are skipped and duplicate edges are merged.  If ``labels`` is
    None the node set is the sorted set of labels appearing in the list.
    """
    path = None
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).is_file()):
        path = str(source)
        text = Path(source).read_text()
    else:
        text = source
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 2:
            raise MalformedLine(lineno, f"expected two labels, got {len(fields)} fields", path)
        if fields[0] == fields[1]:
            raise MalformedLine(lineno, f"self-loop on {fields[0]!r}", path)
        pairs.append((lineno, fields[0], fields[1]))
    if labels is None:
        labels = sorted({a for _, a, _ in pairs} | {b for _, _, b in pairs})
    labels = tuple(str(s) for s in labels)
    where = {s: k for k, s in enumerate(labels)}
    edges = set()
    for lineno, a, b in pairs:
        for s in (a, b):
            if s not in where:
                loc = f"{path}:{lineno}" if path else f"line {lineno}"
                raise UnknownLabel(f"{loc}: unknown label {s!r}")
        i, j = where[a], where[b]
        edges.add((min(i, j), max(i, j)))
    return SpatialGraph(labels, frozenset(edges))


def format_adjacency(graph):
    """Edge list text with edges sorted lexicographically by label."""
    return "".join(f"{a} {b}\n" for a, b in graph.edge_labels())


def write_adjacency(graph, path):
    Path(path).write_text(format_adjacency(graph))
