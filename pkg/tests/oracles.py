"""Independent reference implementations used only by the tests.

Each function here recomputes a quantity the package produces by a
different algorithm, from first principles and with different data
structures, so agreement is meaningful.
"""
from __future__ import annotations

import itertools
import math


def edge_label_brute_force(tree, j: int, i: int) -> str | None:
    """Dependence class of edge (j, i) by explicit context enumeration.

    For every assignment of the predecessors of variable i other than j,
    partition the levels of variable j by stage equality.  A context whose
    partition is a single block shows full independence there; a block of
    size at least two (but not all levels) shows a partial pattern.  With
    neither pattern anywhere, the edge is local when some stage recurs at
    two different levels of variable j, else total.  Returns None when the
    stage vector never depends on variable j at all (no edge).
    """
    space = tree.space
    sizes = space.level_counts
    symbols = tree.symbols_at(i)
    others = [q for q in range(i) if q != j]

    def symbol_at(assignment: dict) -> object:
        idx = 0
        for q in range(i):
            idx = idx * sizes[q] + assignment[q]
        return symbols[idx]

    full_context, partial_context = False, False
    merged_everywhere = True
    level_sets: dict[object, set[int]] = {}
    for values in itertools.product(*(range(sizes[q]) for q in others)):
        assignment = dict(zip(others, values))
        blocks: dict[object, list[int]] = {}
        for xj in range(sizes[j]):
            assignment[j] = xj
            sym = symbol_at(assignment)
            blocks.setdefault(sym, []).append(xj)
            level_sets.setdefault(sym, set()).add(xj)
        if len(blocks) == 1:
            full_context = True
        else:
            merged_everywhere = False
        if any(1 < len(b) < sizes[j] for b in blocks.values()):
            partial_context = True
    if merged_everywhere:
        return None
    if full_context and partial_context:
        return "context/partial"
    if full_context:
        return "context"
    if partial_context:
        return "partial"
    if any(len(levels) > 1 for levels in level_sets.values()):
        return "local"
    return "total"


def dag_edges_brute_force(tree) -> set[tuple[int, int]]:
    """Edges of the minimal DAG: (j, i) present iff the label is not None."""
    return {(j, i)
            for i in range(1, tree.p)
            for j in range(i)
            if edge_label_brute_force(tree, j, i) is not None}


def bic_by_hand(tree, data) -> float:
    """BIC from scratch: group configurations by stage with plain dicts."""
    space = data.space
    n = 0
    cell = {}
    for idx, config in enumerate(space.configurations()):
        c = int(data.counts[idx])
        cell[config] = c
        n += c
    log_lik = 0.0
    df = 0
    for depth in range(space.p):
        groups: dict[object, dict[int, int]] = {}
        for config, c in cell.items():
            prefix = config[:depth]
            pos = 0
            for q, v in enumerate(prefix):
                pos = pos * space.level_counts[q] + v
            sym = tree.symbols_at(depth)[pos]
            groups.setdefault(sym, {})
            tally = groups[sym]
            tally[config[depth]] = tally.get(config[depth], 0) + c
        df += len(groups) * (space.level_counts[depth] - 1)
        for tally in groups.values():
            total = sum(tally.values())
            if total == 0:
                continue
            for c in tally.values():
                if c > 0:
                    log_lik += c * math.log(c / total)
    return -2.0 * log_lik + df * math.log(n)


def d_separated_by_paths(dag, a, b, c) -> bool:
    """d-separation by enumerating every simple path and testing blocking."""
    a, b, c = set(a), set(b), set(c)
    if not a or not b:
        return True
    children: dict[int, set[int]] = {v: set() for v in range(dag.p)}
    neighbors: dict[int, set[int]] = {v: set() for v in range(dag.p)}
    for j, i in dag.edges:
        children[j].add(i)
        neighbors[j].add(i)
        neighbors[i].add(j)

    def descendants(v: int) -> set[int]:
        out, todo = {v}, [v]
        while todo:
            u = todo.pop()
            for w in children[u]:
                if w not in out:
                    out.add(w)
                    todo.append(w)
        return out

    def blocked(path: list[int]) -> bool:
        for k in range(1, len(path) - 1):
            prev, node, nxt = path[k - 1], path[k], path[k + 1]
            collider = node in children[prev] and node in children[nxt]
            if collider:
                if not (descendants(node) & c):
                    return True
            elif node in c:
                return True
        return False

    def paths(start: int, goal: int):
        stack = [[start]]
        while stack:
            path = stack.pop()
            if path[-1] == goal:
                yield path
                continue
            for w in sorted(neighbors[path[-1]]):
                if w not in path:
                    stack.append(path + [w])

    for s in sorted(a):
        for t in sorted(b):
            for path in paths(s, t):
                if not blocked(path):
                    return False
    return True
