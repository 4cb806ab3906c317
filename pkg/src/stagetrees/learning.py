"""Greedy score-guided search over stagings and DAGs.

All searches are steepest-ascent per level with deterministic tie-breaking
(smallest score delta first, then the smallest affected stage ids), a strict
improvement threshold of 1e-9 on the score delta, and per-level sweeps run
to their local fixpoint.  Scores decompose over levels, so a per-level
fixpoint is a fixpoint of the whole model.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .conversion import dag_to_staged_tree, staged_tree_to_aldag
from .core import (
    Dag,
    Dataset,
    InvalidArgumentError,
    SampleSpace,
    StagedTree,
    StageVector,
    canonical_symbols,
)
from .scoring import FitConfig, _stage_loglik, score

__all__ = [
    "UnsupportedSizeError",
    "SearchConfig",
    "TraceStep",
    "SearchTrace",
    "bhc",
    "hc",
    "csbhc",
    "refine_dag",
    "learn_dag",
    "enumerate_orders",
]

IMPROVEMENT_EPS = 1e-9


class UnsupportedSizeError(ValueError):
    """A size guard was exceeded."""


@dataclass(frozen=True)
class SearchConfig:
    """Knobs shared by every search.

    score : "bic" or "aic".
    max_iter : cap on accepted moves per level (None = until fixpoint).
    rng_seed : reserved for tie-breaking; the deterministic lexicographic
        policy leaves no ties to randomize, so the value never changes the
        result.  Kept so callers can pin it in configuration files.
    scope : depths to search (subset of 1..p-1); other levels pass through
        untouched.
    """

    score: str = "bic"
    max_iter: int | None = None
    rng_seed: int = 0
    scope: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.score not in ("bic", "aic"):
            raise InvalidArgumentError(f"unknown score {self.score!r}")
        if self.max_iter is not None and self.max_iter < 1:
            raise InvalidArgumentError("max_iter must be positive")
        if self.scope is not None:
            object.__setattr__(self, "scope", tuple(sorted(set(self.scope))))


@dataclass(frozen=True)
class TraceStep:
    level: int
    kind: str  # "join", "split" or "column-join"
    stages: tuple
    score_before: float
    score_after: float


@dataclass(frozen=True)
class SearchTrace:
    """Accepted moves in order; scores strictly improve step to step."""

    steps: tuple[TraceStep, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def final_score(self) -> float | None:
        return self.steps[-1].score_after if self.steps else None


def _check_search_inputs(start: StagedTree, data: Dataset) -> None:
    if start.space != data.space:
        raise InvalidArgumentError("start tree and dataset use different sample spaces")
    if data.n < 1:
        raise InvalidArgumentError("cannot search on an empty dataset")


def _penalty_unit(cfg: SearchConfig, n: int) -> float:
    # score = -2 logL + df * unit
    return math.log(n) if cfg.score == "bic" else 2.0


def _initial_score(tree: StagedTree, data: Dataset, cfg: SearchConfig) -> float:
    report = score(tree, data, FitConfig())
    return report.bic if cfg.score == "bic" else report.aic


def _levels_to_search(p: int, cfg: SearchConfig):
    levels = range(1, p)
    if cfg.scope is None:
        return list(levels)
    bad = [d for d in cfg.scope if d not in levels]
    if bad:
        raise InvalidArgumentError(f"scope depths {bad} outside 1..{p - 1}")
    return list(cfg.scope)


class _LevelState:
    """Count vectors and log-likelihood terms per stage at one depth."""

    def __init__(self, table: np.ndarray, symbols):
        self.table = table
        self.symbols = list(symbols)
        self.counts: dict[int, np.ndarray] = {}
        for row, sym in zip(table, self.symbols):
            if sym in self.counts:
                self.counts[sym] = self.counts[sym] + row
            else:
                self.counts[sym] = row.copy()
        self.loglik = {sym: _stage_loglik(c) for sym, c in self.counts.items()}

    def merge(self, survivor: int, removed) -> None:
        merged = self.counts[survivor].copy()
        for sym in removed:
            merged += self.counts.pop(sym)
            del self.loglik[sym]
        self.counts[survivor] = merged
        self.loglik[survivor] = _stage_loglik(merged)
        removed_set = set(removed)
        self.symbols = [survivor if s in removed_set else s for s in self.symbols]

    def reassign(self, vertex: int, dest: int) -> None:
        src = self.symbols[vertex]
        row = self.table[vertex]
        remaining = self.counts[src] - row
        if remaining.sum() == 0 and not any(
                s == src for v, s in enumerate(self.symbols) if v != vertex):
            del self.counts[src]
            del self.loglik[src]
        else:
            self.counts[src] = remaining
            self.loglik[src] = _stage_loglik(remaining)
        if dest in self.counts:
            self.counts[dest] = self.counts[dest] + row
        else:
            self.counts[dest] = row.copy()
        self.loglik[dest] = _stage_loglik(self.counts[dest])
        self.symbols[vertex] = dest


def _best_pair_merge(state: _LevelState, per_stage_penalty: float):
    best = None
    for s1, s2 in itertools.combinations(sorted(state.counts), 2):
        gain = (_stage_loglik(state.counts[s1] + state.counts[s2])
                - state.loglik[s1] - state.loglik[s2])
        delta = -2.0 * gain - per_stage_penalty
        key = (delta, (s1, s2))
        if delta < -IMPROVEMENT_EPS and (best is None or key < best):
            best = key
    return best


def _best_reassignment(state: _LevelState, per_stage_penalty: float):
    # moving a vertex into another stage, or out into a fresh singleton
    best = None
    fresh = max(state.counts) + 1
    members: dict[int, int] = {}
    for s in state.symbols:
        members[s] = members.get(s, 0) + 1
    for vertex, src in enumerate(state.symbols):
        row = state.table[vertex]
        base = state.loglik[src]
        rest = _stage_loglik(state.counts[src] - row)
        singleton = members[src] == 1
        for dest in sorted(state.counts):
            if dest == src:
                continue
            gain = (rest + _stage_loglik(state.counts[dest] + row)
                    - base - state.loglik[dest])
            delta = -2.0 * gain - (per_stage_penalty if singleton else 0.0)
            key = (delta, vertex, dest)
            if delta < -IMPROVEMENT_EPS and (best is None or key < best):
                best = key
        if not singleton:
            gain = rest + _stage_loglik(row) - base
            delta = -2.0 * gain + per_stage_penalty
            key = (delta, vertex, fresh)
            if delta < -IMPROVEMENT_EPS and (best is None or key < best):
                best = key
    return best, fresh


def _column_merge_groups(sizes_prefix, symbols):
    """Stage sets appearing together in one context column of some reshape."""
    groups = set()
    a = list(symbols)
    for j in range(len(sizes_prefix) - 1, -1, -1):
        m = sizes_prefix[j]
        ncols = len(a) // m
        for k in range(ncols):
            col = set(a[k * m:(k + 1) * m])
            if len(col) > 1:
                groups.add(tuple(sorted(col)))
        a = [a[k * m + u] for u in range(m) for k in range(ncols)]
    return sorted(groups)


def _best_column_merge(state: _LevelState, sizes_prefix, per_stage_penalty: float):
    best = None
    for group in _column_merge_groups(sizes_prefix, state.symbols):
        merged = state.counts[group[0]].copy()
        for sym in group[1:]:
            merged += state.counts[sym]
        gain = _stage_loglik(merged) - sum(state.loglik[s] for s in group)
        delta = -2.0 * gain - (len(group) - 1) * per_stage_penalty
        key = (delta, group)
        if delta < -IMPROVEMENT_EPS and (best is None or key < best):
            best = key
    return best


def _run_search(kind: str, start: StagedTree, data: Dataset, cfg: SearchConfig):
    _check_search_inputs(start, data)
    unit = _penalty_unit(cfg, data.n)
    current = _initial_score(start, data, cfg)
    steps: list[TraceStep] = []
    vectors = {d: list(canonical_symbols(start.symbols_at(d))) for d in range(1, start.p)}
    for depth in _levels_to_search(start.p, cfg):
        k = start.space.level_counts[depth]
        per_stage_penalty = (k - 1) * unit
        state = _LevelState(data.level_table(depth), vectors[depth])
        sizes_prefix = start.space.level_counts[:depth]
        accepted = 0
        while cfg.max_iter is None or accepted < cfg.max_iter:
            if kind == "bhc":
                found = _best_pair_merge(state, per_stage_penalty)
                if found is None:
                    break
                delta, (s1, s2) = found
                state.merge(s1, (s2,))
                move = TraceStep(depth, "join", (s1, s2), current, current + delta)
            elif kind == "csbhc":
                found = _best_column_merge(state, sizes_prefix, per_stage_penalty)
                if found is None:
                    break
                delta, group = found
                state.merge(group[0], group[1:])
                move = TraceStep(depth, "column-join", group, current, current + delta)
            else:  # hc
                found, fresh = _best_reassignment(state, per_stage_penalty)
                if found is None:
                    break
                delta, vertex, dest = found
                src = state.symbols[vertex]
                state.reassign(vertex, dest)
                move = TraceStep(depth, "split" if dest == fresh else "join",
                                 (src, dest), current, current + delta)
            current = move.score_after
            steps.append(move)
            accepted += 1
        vectors[depth] = state.symbols
    tree = StagedTree(start.space, tuple(
        StageVector(d, canonical_symbols(vectors[d])) for d in range(1, start.p)))
    return tree, SearchTrace(tuple(steps))


def bhc(start: StagedTree, data: Dataset, cfg: SearchConfig = SearchConfig()):
    """Backward hill-climb: repeatedly join the best pair of stages per level.

    Join-only, so the result is always a coarsening of the start
    (staging_refines(start, result) holds).
    """
    return _run_search("bhc", start, data, cfg)


def hc(start: StagedTree, data: Dataset, cfg: SearchConfig = SearchConfig()):
    """Hill-climb by moving single vertices between stages.

    The neighborhood of one move reassigns a depth-d vertex to any other
    existing stage at that depth or to a fresh singleton stage.
    """
    return _run_search("hc", start, data, cfg)


def csbhc(start: StagedTree, data: Dataset, cfg: SearchConfig = SearchConfig()):
    """Context-specific backward hill-climb.

    Candidate moves merge all stages appearing in one context column of the
    reshaped stage vector (every reshape of the level is scanned); the best
    strictly improving candidate of each pass is applied.  Merging a full
    column makes that column constant, so the result never exhibits a local
    dependence pattern when started from the saturated staging.
    """
    return _run_search("csbhc", start, data, cfg)


def default_start(algo: str, space: SampleSpace) -> StagedTree:
    """The conventional starting tree: fully merged for hc, saturated otherwise."""
    if algo == "hc":
        return StagedTree.one_stage(space)
    if algo in ("bhc", "csbhc"):
        return StagedTree.saturated(space)
    raise InvalidArgumentError(f"unknown search algorithm {algo!r}")


_SEARCHES = {"bhc": bhc, "hc": hc, "csbhc": csbhc}


def refine_dag(dag: Dag, data: Dataset, algo: str = "bhc",
               cfg: SearchConfig = SearchConfig()):
    """Refine a DAG into a staged tree and convert back to a labeled DAG.

    Expands the DAG into its staged tree, coarsens it with the chosen
    join-only search, and classifies the result.  The returned ALDAG's edge
    set is always a subset of the input DAG's.
    """
    if algo not in ("bhc", "csbhc"):
        raise InvalidArgumentError("refinement uses the join-only searches bhc or csbhc")
    tree, _ = _SEARCHES[algo](dag_to_staged_tree(dag, data.space), data, cfg)
    aldag, _ = staged_tree_to_aldag(tree)
    return tree, aldag


def _family_score(data: Dataset, child: int, parents: tuple[int, ...], unit: float) -> float:
    # parents all precede child, so after marginalizing the child axis is last
    sizes = data.space.level_counts
    keep = sorted(parents) + [child]
    drop = tuple(ax for ax in range(data.space.p) if ax not in keep)
    t = data.tensor().astype(np.float64)
    if drop:
        t = t.sum(axis=drop)
    t = t.reshape(-1, sizes[child])
    log_lik = sum(_stage_loglik(row) for row in t)
    df = math.prod(sizes[j] for j in parents) * (sizes[child] - 1)
    return -2.0 * log_lik + df * unit


def learn_dag(data: Dataset, cfg: SearchConfig = SearchConfig(),
              sink: int | None = None) -> Dag:
    """Greedy score search over DAGs that respect the variable order.

    Moves toggle one edge (j, i) with j < i; steepest descent until no
    toggle improves the score.  Edge direction is fixed by the variable
    order, so adds and deletes exhaust the neighborhood.  A `sink` variable,
    if given, is blocked from having outgoing edges.
    """
    if data.n < 1:
        raise InvalidArgumentError("cannot search on an empty dataset")
    p = data.space.p
    if sink is not None and not 0 <= sink < p:
        raise InvalidArgumentError(f"sink {sink} out of range")
    unit = _penalty_unit(cfg, data.n)
    parents: dict[int, set[int]] = {i: set() for i in range(p)}
    family = {i: _family_score(data, i, (), unit) for i in range(p)}
    while True:
        best = None
        for i in range(p):
            for j in range(i):
                if sink is not None and j == sink:
                    continue
                candidate = tuple(sorted(parents[i] ^ {j}))
                delta = _family_score(data, i, candidate, unit) - family[i]
                key = (delta, i, j)
                if delta < -IMPROVEMENT_EPS and (best is None or key < best):
                    best = key
        if best is None:
            break
        _, i, j = best
        parents[i] ^= {j}
        family[i] = _family_score(data, i, tuple(sorted(parents[i])), unit)
    return Dag(p, frozenset((j, i) for i in range(p) for j in parents[i]))


def enumerate_orders(data: Dataset, fixed_last: int | str | None = None,
                     algo: str = "bhc", cfg: SearchConfig = SearchConfig()):
    """Exhaustive search over variable orders; returns (best order, its tree).

    Every permutation (honoring `fixed_last`) is searched from the
    algorithm's default start; the best final score wins, ties going to the
    lexicographically smallest order.  Guarded to p <= 8.
    """
    p = data.space.p
    if p > 8:
        raise UnsupportedSizeError(
            f"p = {p} exceeds the exhaustive order enumeration guard (p <= 8)")
    if algo not in _SEARCHES:
        raise InvalidArgumentError(f"unknown search algorithm {algo!r}")
    last = None
    if fixed_last is not None:
        last = data.space.index_of(fixed_last) if isinstance(fixed_last, str) else int(fixed_last)
        if not 0 <= last < p:
            raise InvalidArgumentError(f"fixed_last {fixed_last!r} out of range")
    free = [i for i in range(p) if i != last]
    best = None
    for perm in itertools.permutations(free):
        order = perm + (last,) if last is not None else perm
        reordered = data.reorder(order)
        tree, trace = _SEARCHES[algo](default_start(algo, reordered.space), reordered, cfg)
        final = trace.final_score
        if final is None:
            final = _initial_score(tree, reordered, cfg)
        key = (final, order)
        if best is None or key < best[0]:
            best = (key, tree)
    (final, order), tree = best
    return tuple(data.space.names[i] for i in order), tree
