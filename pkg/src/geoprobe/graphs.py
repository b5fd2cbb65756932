"""Labeled directed knowledge graphs and graph edit distance.

A graph is a set of typed entities plus typed directed relations between
them. Edit distance between two graphs is the minimum total cost of node
insertions/deletions/substitutions and edge insertions/deletions/
substitutions that turn one into the other. Two solvers are provided:

* ``ged_exact`` — branch-and-bound over injective node mappings, capped
  at a combined node count so it stays interactive;
* ``ged_approx`` — a bipartite assignment over the node sets using local
  edge structure (solved with the Hungarian method), whose induced edit
  path is evaluated exactly, so the result is always an upper bound on
  the true distance.

``parse_verifier_report`` ingests the structured extraction document an
engine verifier emits (entities, relations with confidence scores, and a
contradiction flag) and ``report_to_graph`` turns it into a normalized
graph ready for scoring.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CapacityError, IntegrityError, ParseError, SchemaError

__all__ = [
    "Entity",
    "Relation",
    "KnowledgeGraph",
    "VerifierReport",
    "EditCosts",
    "DEFAULT_CONFIDENCE_FLOOR",
    "parse_verifier_report",
    "report_to_wire",
    "report_to_json",
    "report_to_graph",
    "graph_to_wire",
    "graph_from_wire",
    "ged_exact",
    "ged_approx",
    "iso_score",
    "graph_diff",
    "normalize_entity_id",
]

DEFAULT_CONFIDENCE_FLOOR = 0.5
DEFAULT_EXACT_NODE_CAP = 16


@dataclass(frozen=True)
class Entity:
    entity_id: str
    entity_type: str
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.entity_id:
            raise IntegrityError("entity_id must be nonempty")

    @property
    def label(self) -> tuple[str, str]:
        """Matching label: id plus type. Attributes never affect cost."""
        return (self.entity_id, self.entity_type)


@dataclass(frozen=True)
class Relation:
    source: str
    target: str
    relation_type: str
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise IntegrityError(
                f"relation confidence out of [0, 1]: {self.confidence}"
            )

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.source, self.target, self.relation_type)


class KnowledgeGraph:
    """Immutable labeled directed graph.

    Relations must reference existing entities and the
    (source, target, relation_type) triples must be unique.
    """

    def __init__(self, entities: Iterable[Entity], relations: Iterable[Relation] = ()):
        ents: dict[str, Entity] = {}
        for e in entities:
            if e.entity_id in ents:
                raise IntegrityError(f"duplicate entity_id: {e.entity_id!r}")
            ents[e.entity_id] = e
        rels: list[Relation] = []
        seen: set[tuple[str, str, str]] = set()
        for r in relations:
            for endpoint in (r.source, r.target):
                if endpoint not in ents:
                    raise IntegrityError(
                        f"relation references unknown entity {endpoint!r}"
                    )
            if r.triple in seen:
                raise IntegrityError(f"duplicate relation triple: {r.triple}")
            seen.add(r.triple)
            rels.append(r)
        self._entities = ents
        self._relations = tuple(rels)

    @property
    def entities(self) -> Mapping[str, Entity]:
        return self._entities

    @property
    def relations(self) -> tuple[Relation, ...]:
        return self._relations

    @property
    def size(self) -> int:
        """Combined node and edge count, the normalizer for iso scores."""
        return len(self._entities) + len(self._relations)

    def triples(self) -> frozenset[tuple[str, str, str]]:
        return frozenset(r.triple for r in self._relations)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            {k: v.label for k, v in self._entities.items()}
            == {k: v.label for k, v in other._entities.items()}
            and self.triples() == other.triples()
        )

    def __repr__(self) -> str:
        return f"KnowledgeGraph(|V|={len(self._entities)}, |E|={len(self._relations)})"


@dataclass(frozen=True)
class VerifierReport:
    """Validated extraction document: entities, relations, anomaly flag."""

    extracted_entities: tuple[Entity, ...]
    extracted_relations: tuple[Relation, ...]
    critical_anomaly: bool
    anomaly_reason: str | None = None

    def __post_init__(self) -> None:
        if self.critical_anomaly and not self.anomaly_reason:
            raise IntegrityError(
                "critical_anomaly is set but anomaly_reason is missing"
            )


@dataclass(frozen=True)
class EditCosts:
    """Nonnegative costs for the six edit operations.

    Substituting a node or edge whose label already matches is free by
    definition; the *_substitute costs apply to label changes only.
    """

    node_insert: float = 1.0
    node_delete: float = 1.0
    node_substitute: float = 1.0
    edge_insert: float = 1.0
    edge_delete: float = 1.0
    edge_substitute: float = 1.0

    def __post_init__(self) -> None:
        for name in (
            "node_insert", "node_delete", "node_substitute",
            "edge_insert", "edge_delete", "edge_substitute",
        ):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")


# --------------------------------------------------------------------------
# Wire parsing

_REQUIRED_REPORT_KEYS = ("extracted_entities", "extracted_relations", "critical_anomaly")
_ENTITY_KEYS = ("entity_id", "entity_type")
_RELATION_KEYS = ("source_entity", "target_entity", "relation_type", "confidence_score")


def parse_verifier_report(
    doc: str | Mapping,
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
) -> VerifierReport:
    """Parse and validate a verifier output document.

    ``doc`` may be raw JSON text or an already-decoded mapping. Relations
    whose confidence falls below ``confidence_floor`` are dropped; all
    relations (dropped or kept) must reference declared entities.
    """
    if isinstance(doc, str):
        try:
            data = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"verifier output is not valid JSON: {exc}") from exc
    else:
        data = doc
    if not isinstance(data, Mapping):
        raise ParseError(f"verifier output must be an object, got {type(data).__name__}")

    for key in _REQUIRED_REPORT_KEYS:
        if key not in data:
            raise SchemaError(f"verifier output missing required key: {key!r}")

    raw_entities = data["extracted_entities"]
    raw_relations = data["extracted_relations"]
    if not isinstance(raw_entities, Sequence) or isinstance(raw_entities, str):
        raise SchemaError("extracted_entities must be a list")
    if not isinstance(raw_relations, Sequence) or isinstance(raw_relations, str):
        raise SchemaError("extracted_relations must be a list")
    anomaly = data["critical_anomaly"]
    if not isinstance(anomaly, bool):
        raise SchemaError("critical_anomaly must be a boolean")

    entities = []
    ids = set()
    for i, item in enumerate(raw_entities):
        if not isinstance(item, Mapping):
            raise SchemaError(f"extracted_entities[{i}] must be an object")
        for key in _ENTITY_KEYS:
            if key not in item:
                raise SchemaError(f"extracted_entities[{i}] missing required key: {key!r}")
        attrs = item.get("attributes", {})
        if not isinstance(attrs, Mapping):
            raise SchemaError(f"extracted_entities[{i}].attributes must be an object")
        entity = Entity(
            entity_id=str(item["entity_id"]),
            entity_type=str(item["entity_type"]),
            attributes={str(k): str(v) for k, v in attrs.items()},
        )
        if entity.entity_id in ids:
            raise IntegrityError(f"duplicate entity_id in report: {entity.entity_id!r}")
        ids.add(entity.entity_id)
        entities.append(entity)

    relations = []
    for i, item in enumerate(raw_relations):
        if not isinstance(item, Mapping):
            raise SchemaError(f"extracted_relations[{i}] must be an object")
        for key in _RELATION_KEYS:
            if key not in item:
                raise SchemaError(f"extracted_relations[{i}] missing required key: {key!r}")
        conf = item["confidence_score"]
        if isinstance(conf, bool) or not isinstance(conf, (int, float)):
            raise SchemaError(f"extracted_relations[{i}].confidence_score must be a number")
        relation = Relation(
            source=str(item["source_entity"]),
            target=str(item["target_entity"]),
            relation_type=str(item["relation_type"]),
            confidence=float(conf),
        )
        for endpoint in (relation.source, relation.target):
            if endpoint not in ids:
                raise IntegrityError(
                    f"extracted_relations[{i}] references undeclared entity {endpoint!r}"
                )
        if relation.confidence >= confidence_floor:
            relations.append(relation)

    reason = data.get("anomaly_reason")
    if reason is not None and not isinstance(reason, str):
        raise SchemaError("anomaly_reason must be a string or null")
    return VerifierReport(
        extracted_entities=tuple(entities),
        extracted_relations=tuple(relations),
        critical_anomaly=anomaly,
        anomaly_reason=reason,
    )


def report_to_wire(report: VerifierReport) -> dict:
    """Serialize a report back to its wire shape (dict form)."""
    return {
        "extracted_entities": [
            {
                "entity_id": e.entity_id,
                "entity_type": e.entity_type,
                "attributes": dict(e.attributes),
            }
            for e in report.extracted_entities
        ],
        "extracted_relations": [
            {
                "source_entity": r.source,
                "target_entity": r.target,
                "relation_type": r.relation_type,
                "confidence_score": r.confidence,
            }
            for r in report.extracted_relations
        ],
        "critical_anomaly": report.critical_anomaly,
        "anomaly_reason": report.anomaly_reason,
    }


def report_to_json(report: VerifierReport) -> str:
    return json.dumps(report_to_wire(report), sort_keys=True, separators=(",", ":"))


def normalize_entity_id(raw: str, aliases: Mapping[str, str] | None = None) -> str:
    """Case-fold and trim an entity id, then resolve through the alias table."""
    norm = " ".join(raw.casefold().split())
    if aliases:
        norm = aliases.get(norm, norm)
    return norm


def report_to_graph(
    report: VerifierReport,
    aliases: Mapping[str, str] | None = None,
) -> KnowledgeGraph:
    """Build a normalized knowledge graph from a validated report.

    Entity ids are case-folded, whitespace-trimmed, and resolved through
    the alias table; entities collapsing to the same id must agree on
    type. Duplicate relation triples keep the highest-confidence copy.
    """
    norm_aliases = None
    if aliases:
        norm_aliases = {
            " ".join(k.casefold().split()): " ".join(v.casefold().split())
            for k, v in aliases.items()
        }

    merged: dict[str, Entity] = {}
    for e in report.extracted_entities:
        nid = normalize_entity_id(e.entity_id, norm_aliases)
        if nid in merged:
            if merged[nid].entity_type != e.entity_type:
                raise IntegrityError(
                    f"entities normalize to {nid!r} with conflicting types: "
                    f"{merged[nid].entity_type!r} vs {e.entity_type!r}"
                )
            continue  # first occurrence wins; attributes carry no cost
        merged[nid] = Entity(nid, e.entity_type, dict(e.attributes))

    best: dict[tuple[str, str, str], Relation] = {}
    for r in report.extracted_relations:
        rel = Relation(
            source=normalize_entity_id(r.source, norm_aliases),
            target=normalize_entity_id(r.target, norm_aliases),
            relation_type=r.relation_type,
            confidence=r.confidence,
        )
        prev = best.get(rel.triple)
        if prev is None or rel.confidence > prev.confidence:
            best[rel.triple] = rel
    return KnowledgeGraph(merged.values(), best.values())


def graph_to_wire(graph: KnowledgeGraph) -> dict:
    return {
        "entities": [
            {
                "entity_id": e.entity_id,
                "entity_type": e.entity_type,
                "attributes": dict(e.attributes),
            }
            for e in graph.entities.values()
        ],
        "relations": [
            {
                "source_entity": r.source,
                "target_entity": r.target,
                "relation_type": r.relation_type,
                "confidence_score": r.confidence,
            }
            for r in graph.relations
        ],
    }


def graph_from_wire(data: Mapping) -> KnowledgeGraph:
    """Load a graph document with the same entity/relation shape as reports."""
    for key in ("entities", "relations"):
        if key not in data:
            raise SchemaError(f"graph document missing required key: {key!r}")
    entities = [
        Entity(
            entity_id=str(item["entity_id"]),
            entity_type=str(item["entity_type"]),
            attributes={str(k): str(v) for k, v in item.get("attributes", {}).items()},
        )
        for item in data["entities"]
    ]
    relations = [
        Relation(
            source=str(item["source_entity"]),
            target=str(item["target_entity"]),
            relation_type=str(item["relation_type"]),
            confidence=float(item.get("confidence_score", 1.0)),
        )
        for item in data["relations"]
    ]
    return KnowledgeGraph(entities, relations)


# --------------------------------------------------------------------------
# Graph edit distance

def _edge_types(graph: KnowledgeGraph, index: Mapping[str, int]) -> dict[tuple[int, int], set[str]]:
    out: dict[tuple[int, int], set[str]] = {}
    for r in graph.relations:
        out.setdefault((index[r.source], index[r.target]), set()).add(r.relation_type)
    return out


def _typeset_cost(s1: set[str], s2: set[str], costs: EditCosts) -> float:
    """Cheapest way to edit one set of edge types into another.

    Matching types are free; leftovers pair up as substitutions when that
    beats delete+insert, and the remainder is deleted or inserted.
    """
    common = len(s1 & s2)
    r1 = len(s1) - common
    r2 = len(s2) - common
    paired = min(r1, r2)
    pair_cost = min(costs.edge_substitute, costs.edge_delete + costs.edge_insert)
    return (
        paired * pair_cost
        + (r1 - paired) * costs.edge_delete
        + (r2 - paired) * costs.edge_insert
    )


def _mapping_cost(
    labels1: Sequence[tuple[str, str]],
    labels2: Sequence[tuple[str, str]],
    edges1: Mapping[tuple[int, int], set[str]],
    edges2: Mapping[tuple[int, int], set[str]],
    mapping: Sequence[int | None],
    costs: EditCosts,
) -> float:
    """Exact edit cost of the path induced by a complete node mapping.

    ``mapping[i]`` is the target index for node i of graph 1 or None for
    deletion; every unassigned graph-2 node is inserted.
    """
    n2 = len(labels2)
    mapped_targets = {j for j in mapping if j is not None}
    total = 0.0
    for i, j in enumerate(mapping):
        if j is None:
            total += costs.node_delete
        elif labels1[i] != labels2[j]:
            total += costs.node_substitute
    total += (n2 - len(mapped_targets)) * costs.node_insert

    covered: set[tuple[int, int]] = set()
    for (a, b), types1 in edges1.items():
        ja, jb = mapping[a], mapping[b]
        if ja is None or jb is None:
            total += len(types1) * costs.edge_delete
        else:
            covered.add((ja, jb))
            total += _typeset_cost(types1, edges2.get((ja, jb), set()), costs)
    for pair, types2 in edges2.items():
        if pair not in covered:
            total += len(types2) * costs.edge_insert
    return total


def _graph_arrays(g1: KnowledgeGraph, g2: KnowledgeGraph):
    ids1 = list(g1.entities)
    ids2 = list(g2.entities)
    idx1 = {eid: i for i, eid in enumerate(ids1)}
    idx2 = {eid: i for i, eid in enumerate(ids2)}
    labels1 = [g1.entities[eid].label for eid in ids1]
    labels2 = [g2.entities[eid].label for eid in ids2]
    return labels1, labels2, _edge_types(g1, idx1), _edge_types(g2, idx2)


def ged_exact(
    g1: KnowledgeGraph,
    g2: KnowledgeGraph,
    costs: EditCosts | None = None,
    node_cap: int = DEFAULT_EXACT_NODE_CAP,
) -> float:
    """Minimum edit cost between two graphs by branch and bound.

    Search is over injective partial node mappings; the edge cost of a
    pair of assigned nodes is final once both endpoints are decided, so
    the accumulated partial cost is a valid pruning bound. Instances
    above ``node_cap`` combined nodes raise CapacityError; use
    ``ged_approx`` for those.
    """
    costs = costs or EditCosts()
    n1, n2 = len(g1.entities), len(g2.entities)
    if n1 + n2 > node_cap:
        raise CapacityError(
            f"combined node count {n1 + n2} exceeds exact-solver cap {node_cap}; "
            "use ged_approx"
        )
    # Search depth equals the mapped side's node count, so map from the
    # smaller graph; swapping the roles swaps deletions and insertions.
    if n1 > n2:
        swapped = EditCosts(
            node_insert=costs.node_delete,
            node_delete=costs.node_insert,
            node_substitute=costs.node_substitute,
            edge_insert=costs.edge_delete,
            edge_delete=costs.edge_insert,
            edge_substitute=costs.edge_substitute,
        )
        return ged_exact(g2, g1, swapped, node_cap)

    labels1, labels2, edges1, edges2 = _graph_arrays(g1, g2)

    # Most-constrained-first: decide high-degree nodes early so edge costs
    # accumulate (and prune) as soon as possible.
    degree = [0] * n1
    for (a, b), types in edges1.items():
        degree[a] += len(types)
        degree[b] += len(types)
    order = sorted(range(n1), key=lambda i: -degree[i])
    position = {orig: k for k, orig in enumerate(order)}
    labels1 = [labels1[i] for i in order]
    edges1 = {
        (position[a], position[b]): types for (a, b), types in edges1.items()
    }

    # The bipartite upper bound is a valid incumbent and usually tight,
    # so the search mostly just proves optimality.
    best = min(
        n1 * costs.node_delete
        + n2 * costs.node_insert
        + sum(len(t) for t in edges1.values()) * costs.edge_delete
        + sum(len(t) for t in edges2.values()) * costs.edge_insert,
        ged_approx(g1, g2, costs),
    )

    # Suffix label counts for the admissible remaining-node bound, plus
    # suffix edge-type counts for the remaining-edge bound: a graph-1 edge
    # is charged once its later endpoint (in search order) is decided.
    suffix_labels: list[Counter] = [Counter() for _ in range(n1 + 1)]
    for i in range(n1 - 1, -1, -1):
        suffix_labels[i] = suffix_labels[i + 1].copy()
        suffix_labels[i][labels1[i]] += 1
    charge_level: dict[tuple[int, int], int] = {
        pair: max(pair) for pair in edges1
    }
    suffix_edge_types: list[Counter] = [Counter() for _ in range(n1 + 1)]
    for i in range(n1 - 1, -1, -1):
        suffix_edge_types[i] = suffix_edge_types[i + 1].copy()
        for pair, types in edges1.items():
            if charge_level[pair] == i:
                for t in types:
                    suffix_edge_types[i][t] += 1
    cap2_types = Counter()
    for types in edges2.values():
        for t in types:
            cap2_types[t] += 1

    avail2 = Counter(labels2)
    pair_cost_node = min(costs.node_substitute, costs.node_delete + costs.node_insert)
    pair_cost_edge = min(costs.edge_substitute, costs.edge_delete)

    def remaining_bound(i: int, used_count: int) -> float:
        """Admissible lower bound on cost still to be paid from level i.

        Node side: remaining graph-1 nodes pair with available graph-2
        labels for free at best; pairings beyond the label matches cost at
        least a substitution, and count imbalances force deletions or
        insertions. Edge side: uncharged graph-1 edges of a type that
        graph 2 cannot supply at all must each pay at least the cheaper of
        substitution and deletion.
        """
        rem1 = n1 - i
        rem2 = n2 - used_count
        matched = 0
        for label, count in suffix_labels[i].items():
            matched += min(count, avail2[label])
        pairs = min(rem1, rem2)
        bound = (
            (pairs - min(matched, pairs)) * pair_cost_node
            + max(rem1 - pairs, 0) * costs.node_delete
            + max(rem2 - pairs, 0) * costs.node_insert
        )
        for etype, count in suffix_edge_types[i].items():
            excess = count - cap2_types[etype]
            if excess > 0:
                bound += excess * pair_cost_edge
        return bound

    out1: dict[int, list[tuple[int, set[str]]]] = {}
    in1: dict[int, list[tuple[int, set[str]]]] = {}
    for (a, b), types in edges1.items():
        out1.setdefault(a, []).append((b, types))
        in1.setdefault(b, []).append((a, types))

    mapping: list[int | None] = [None] * n1
    used = [False] * n2
    typeset_memo: dict[tuple, float] = {}

    def pair_edge_cost(types: set[str], jpair: tuple[int, int]) -> float:
        key = (id(types), jpair)
        cached = typeset_memo.get(key)
        if cached is None:
            cached = _typeset_cost(types, edges2.get(jpair, set()), costs)
            typeset_memo[key] = cached
        return cached

    def edge_delta(i: int, j: int | None) -> float:
        # Cost of graph-1 edges between node i and already-decided nodes.
        delta = 0.0
        for b, types in out1.get(i, ()):
            if b <= i:
                jb = j if b == i else mapping[b]
                if j is None or jb is None:
                    delta += len(types) * costs.edge_delete
                else:
                    delta += pair_edge_cost(types, (j, jb))
        for a, types in in1.get(i, ()):
            if a < i:
                ja = mapping[a]
                if j is None or ja is None:
                    delta += len(types) * costs.edge_delete
                else:
                    delta += pair_edge_cost(types, (ja, j))
        return delta

    def leaf_insert_cost() -> float:
        covered = set()
        for (a, b) in edges1:
            ja, jb = mapping[a], mapping[b]
            if ja is not None and jb is not None:
                covered.add((ja, jb))
        total = sum(costs.node_insert for j in range(n2) if not used[j])
        for pair, types in edges2.items():
            if pair not in covered:
                total += len(types) * costs.edge_insert
        # Graph-2 edges whose pair is covered were already charged when the
        # covering assignment was made.
        return total

    nonlocal_best = [float(best)]
    used_count = [0]

    def search(i: int, acc: float) -> None:
        if acc + remaining_bound(i, used_count[0]) >= nonlocal_best[0]:
            return
        if i == n1:
            total = acc + leaf_insert_cost()
            if total < nonlocal_best[0]:
                nonlocal_best[0] = total
            return
        # Try label-equal targets first for tight early bounds.
        candidates = sorted(
            (j for j in range(n2) if not used[j]),
            key=lambda j: labels2[j] != labels1[i],
        )
        for j in candidates:
            node_cost = 0.0 if labels1[i] == labels2[j] else costs.node_substitute
            step = node_cost + edge_delta(i, j)
            mapping[i] = j
            used[j] = True
            used_count[0] += 1
            avail2[labels2[j]] -= 1
            search(i + 1, acc + step)
            avail2[labels2[j]] += 1
            used_count[0] -= 1
            used[j] = False
            mapping[i] = None
        step = costs.node_delete + edge_delta(i, None)
        mapping[i] = None
        search(i + 1, acc + step)

    search(0, 0.0)
    return nonlocal_best[0]


def ged_approx(
    g1: KnowledgeGraph,
    g2: KnowledgeGraph,
    costs: EditCosts | None = None,
) -> float:
    """Upper-bound edit distance via bipartite node assignment.

    Builds the (n1+n2) x (n1+n2) cost matrix of node substitutions,
    deletions, and insertions with local edge-structure estimates, solves
    the rectangular assignment in O(n^3), then evaluates the exact cost
    of the edit path the assignment induces. Because the true distance
    minimizes over all mappings, the induced-path cost can never
    undershoot it.
    """
    costs = costs or EditCosts()
    labels1, labels2, edges1, edges2 = _graph_arrays(g1, g2)
    n1, n2 = len(labels1), len(labels2)
    if n1 == 0 and n2 == 0:
        return 0.0

    out_types1: dict[int, set[str]] = {}
    in_types1: dict[int, set[str]] = {}
    for (a, b), types in edges1.items():
        out_types1.setdefault(a, set()).update(types)
        in_types1.setdefault(b, set()).update(types)
    out_types2: dict[int, set[str]] = {}
    in_types2: dict[int, set[str]] = {}
    for (a, b), types in edges2.items():
        out_types2.setdefault(a, set()).update(types)
        in_types2.setdefault(b, set()).update(types)

    def degree1(i: int) -> int:
        return sum(len(t) for (a, b), t in edges1.items() if a == i or b == i)

    def degree2(j: int) -> int:
        return sum(len(t) for (a, b), t in edges2.items() if a == j or b == j)

    big = 1e18
    size = n1 + n2
    matrix = np.full((size, size), big)
    for i in range(n1):
        for j in range(n2):
            local = 0.0 if labels1[i] == labels2[j] else costs.node_substitute
            local += _typeset_cost(out_types1.get(i, set()), out_types2.get(j, set()), costs)
            local += _typeset_cost(in_types1.get(i, set()), in_types2.get(j, set()), costs)
            matrix[i, j] = local
        matrix[i, n2 + i] = costs.node_delete + degree1(i) * costs.edge_delete
    for j in range(n2):
        matrix[n1 + j, j] = costs.node_insert + degree2(j) * costs.edge_insert
    matrix[n1:, n2:] = 0.0

    rows, cols = linear_sum_assignment(matrix)
    mapping: list[int | None] = [None] * n1
    for r, c in zip(rows, cols):
        if r < n1 and c < n2:
            mapping[r] = c
    return _mapping_cost(labels1, labels2, edges1, edges2, mapping, costs)


def iso_score(
    g_gen: KnowledgeGraph,
    g_true: KnowledgeGraph,
    costs: EditCosts | None = None,
    node_cap: int = DEFAULT_EXACT_NODE_CAP,
) -> float:
    """Attribution fidelity: 1 - GED normalized by the combined graph size.

    Uses the exact solver when the instance fits under the cap, the
    bipartite upper bound otherwise. The combined size |V1|+|E1|+|V2|+|E2|
    upper-bounds unit-cost GED, so the score lands in [0, 1]; two empty
    graphs score 1.0.
    """
    costs = costs or EditCosts()
    denom = g_gen.size + g_true.size
    if denom == 0:
        return 1.0
    if len(g_gen.entities) + len(g_true.entities) <= node_cap:
        ged = ged_exact(g_gen, g_true, costs, node_cap)
    else:
        ged = ged_approx(g_gen, g_true, costs)
    return min(1.0, max(0.0, 1.0 - ged / denom))


def graph_diff(g_true: KnowledgeGraph, g_gen: KnowledgeGraph) -> dict:
    """Disjoint difference sets between ground truth and a generated graph.

    Entities compare by id: present only in truth (missing), only in the
    generated graph (fabricated), or in both with different types
    (mismatched). Relations compare by (source, target) pair: a pair in
    both graphs with no shared relation type is mismatched; otherwise
    per-triple differences are missing or fabricated.
    """
    true_ids = set(g_true.entities)
    gen_ids = set(g_gen.entities)
    mismatched_entities = sorted(
        eid for eid in true_ids & gen_ids
        if g_true.entities[eid].entity_type != g_gen.entities[eid].entity_type
    )

    true_pairs: dict[tuple[str, str], set[str]] = {}
    for r in g_true.relations:
        true_pairs.setdefault((r.source, r.target), set()).add(r.relation_type)
    gen_pairs: dict[tuple[str, str], set[str]] = {}
    for r in g_gen.relations:
        gen_pairs.setdefault((r.source, r.target), set()).add(r.relation_type)

    missing_relations = []
    fabricated_relations = []
    mismatched_relations = []
    for pair in sorted(set(true_pairs) | set(gen_pairs)):
        t_types = true_pairs.get(pair, set())
        g_types = gen_pairs.get(pair, set())
        if t_types and g_types and not (t_types & g_types):
            mismatched_relations.append(list(pair))
            continue
        for typ in sorted(t_types - g_types):
            missing_relations.append([pair[0], pair[1], typ])
        for typ in sorted(g_types - t_types):
            fabricated_relations.append([pair[0], pair[1], typ])

    return {
        "missing_entities": sorted(true_ids - gen_ids),
        "fabricated_entities": sorted(gen_ids - true_ids),
        "mismatched_entities": mismatched_entities,
        "missing_relations": missing_relations,
        "fabricated_relations": fabricated_relations,
        "mismatched_relations": mismatched_relations,
    }
