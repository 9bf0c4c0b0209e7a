"""Interaction graph: grounded scene objects as nodes, action verbs as
directed edges, and the stage-dependent candidate-goal filters built on it.

The graph is immutable after construction; every ordering it exposes derives
from node ids, which are assigned in object-list order at build time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .geometry import OrientedBox, ValidationError, obb_from_points

# A node's stored center may sit at most this far outside its cloud's AABB.
CENTER_SLACK = 0.05

GRAPH_SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class ObjectNode:
    """A grounded scene object: name, world-frame center and point cloud."""

    id: int
    name: str
    center: np.ndarray
    point_cloud: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        cloud = np.asarray(self.point_cloud, dtype=float)
        if cloud.ndim != 2 or cloud.shape[1] != 3 or cloud.shape[0] == 0:
            raise ValidationError(f"node {self.name!r}: point cloud must be non-empty (n, 3)")
        lo = cloud.min(axis=0) - CENTER_SLACK
        hi = cloud.max(axis=0) + CENTER_SLACK
        if np.any(center < lo) or np.any(center > hi):
            raise ValidationError(f"node {self.name!r}: center lies outside the cloud bounds")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "point_cloud", cloud)

    @cached_property
    def obb(self) -> OrientedBox:
        return obb_from_points(self.point_cloud)


@dataclass(frozen=True, order=True)
class InteractionEdge:
    """Directed edge: ``source`` acts on ``target`` via ``verb``."""

    source: int
    target: int
    verb: str


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    nodes: tuple[ObjectNode, ...]
    edges: tuple[InteractionEdge, ...]
    diagnostics: tuple[str, ...] = field(default=())

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValidationError("node ids must be unique")
        known = set(ids)
        for e in self.edges:
            if e.source not in known or e.target not in known:
                raise ValidationError(f"edge {e} references a missing node")
            if e.source == e.target:
                raise ValidationError(f"edge {e} is self-referential")

    @cached_property
    def _by_id(self) -> dict[int, ObjectNode]:
        return {n.id: n for n in self.nodes}

    def node(self, node_id: int) -> ObjectNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise ValidationError(f"unknown node id {node_id}") from None

    def node_by_name(self, name: str) -> ObjectNode:
        folded = name.casefold()
        for n in self.nodes:
            if n.name.casefold() == folded:
                return n
        raise ValidationError(f"unknown object name {name!r}")

    def out_neighbors(self, node_id: int) -> list[int]:
        self.node(node_id)
        return sorted({e.target for e in self.edges if e.source == node_id})

    def out_degree(self, node_id: int) -> int:
        return sum(1 for e in self.edges if e.source == node_id)

    def to_json_dict(self) -> dict:
        """Canonical JSON document (geometry payloads are not interchanged)."""
        return {
            "version": GRAPH_SCHEMA_VERSION,
            "nodes": [
                {"id": n.id, "name": n.name, "center": [float(c) for c in n.center]}
                for n in self.nodes
            ],
            "edges": [
                {"source": e.source, "target": e.target, "verb": e.verb}
                for e in self.edges
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "InteractionGraph":
        if doc.get("version") != GRAPH_SCHEMA_VERSION:
            raise ValidationError(f"unsupported graph schema version {doc.get('version')!r}")
        nodes = tuple(
            ObjectNode(
                id=int(n["id"]),
                name=str(n["name"]),
                center=np.asarray(n["center"], dtype=float),
                point_cloud=np.asarray([n["center"]], dtype=float),
            )
            for n in sorted(doc["nodes"], key=lambda n: int(n["id"]))
        )
        edges = tuple(sorted(
            InteractionEdge(int(e["source"]), int(e["target"]), str(e["verb"]))
            for e in doc["edges"]
        ))
        return cls(nodes=nodes, edges=edges)


def build_graph(objects: Sequence[ObjectNode],
                triplets: Sequence[tuple[str, str, str]]) -> InteractionGraph:
    """Assemble the graph from grounded objects and (A, verb, B) triplets.

    Node ids are (re)assigned in object-list order. Object names must be
    unique after case folding (they are the join key); triplet names are
    matched case-insensitively. Triplets that name unknown objects, repeat an
    existing edge, or point an object at itself are dropped and reported in
    the graph's diagnostics.
    """
    folded = [o.name.casefold() for o in objects]
    if len(set(folded)) != len(folded):
        raise ValidationError("object names must be unique after case folding")
    nodes = tuple(replace(obj, id=i) for i, obj in enumerate(objects))
    by_name = {n.name.casefold(): n.id for n in nodes}

    diagnostics: list[str] = []
    edges: set[InteractionEdge] = set()
    for a, verb, b in triplets:
        sid = by_name.get(str(a).casefold())
        tid = by_name.get(str(b).casefold())
        if sid is None or tid is None:
            missing = a if sid is None else b
            diagnostics.append(f"dropped triplet ({a}, {verb}, {b}): unknown object {missing!r}")
            continue
        if sid == tid:
            diagnostics.append(f"dropped triplet ({a}, {verb}, {b}): self-referential")
            continue
        edge = InteractionEdge(sid, tid, str(verb))
        if edge in edges:
            diagnostics.append(f"dropped triplet ({a}, {verb}, {b}): duplicate")
            continue
        edges.add(edge)
    return InteractionGraph(nodes=nodes, edges=tuple(sorted(edges)),
                            diagnostics=tuple(diagnostics))


def grasp_stage_goals(graph: InteractionGraph) -> list[int]:
    """Candidate goals while nothing is held: nodes with outgoing edges,
    i.e. objects that can act on something. Ordered by id."""
    return sorted({e.source for e in graph.edges})


def interaction_stage_goals(graph: InteractionGraph, grasped: int) -> list[int]:
    """Candidate goals while ``grasped`` is held: its out-neighbors, by id."""
    return graph.out_neighbors(grasped)
