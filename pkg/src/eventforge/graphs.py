"""Small graph helpers: union-find components and DAG cycle breaking."""
from __future__ import annotations

from collections import defaultdict
from typing import Hashable, Iterable, TypeVar

N = TypeVar("N", bound=Hashable)


class UnionFind:
    def __init__(self) -> None:
        self.parent: dict = {}
        self.rank: dict = {}

    def add(self, x) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b) -> None:
        self.add(a)
        self.add(b)
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


def connected_components(nodes: Iterable[N], edges: Iterable[tuple[N, N]]) -> list[list[N]]:
    """Components of an undirected graph, each sorted, ordered by smallest member."""
    uf = UnionFind()
    for n in nodes:
        uf.add(n)
    for a, b in edges:
        uf.union(a, b)
    groups: dict = defaultdict(list)
    for n in uf.parent:
        groups[uf.find(n)].append(n)
    comps = [sorted(g) for g in groups.values()]
    comps.sort(key=lambda c: c[0])
    return comps


def break_cycles(edges: Iterable[tuple[N, N]]) -> tuple[set[tuple[N, N]], list[tuple[N, N]]]:
    """Drop back edges found by a DFS visiting nodes and successors in sorted order.

    Returns the acyclic edge set and the dropped edges.
    """
    succ: dict = defaultdict(set)
    nodes = set()
    for a, b in edges:
        succ[a].add(b)
        nodes.update((a, b))
    white, grey, black = 0, 1, 2
    color = dict.fromkeys(nodes, white)
    dropped: list = []
    for root in sorted(nodes):
        if color[root] != white:
            continue
        color[root] = grey
        stack = [(root, iter(sorted(succ[root])))]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = black
                stack.pop()
            elif color[nxt] == grey:
                dropped.append((node, nxt))
            elif color[nxt] == white:
                color[nxt] = grey
                stack.append((nxt, iter(sorted(succ[nxt]))))
    kept = {(a, b) for a in succ for b in succ[a]} - set(dropped)
    return kept, dropped


def ancestors(start: N, parents: dict) -> set:
    """All nodes reachable from ``start`` following ``parents`` (excluding start unless cyclic)."""
    seen: set = set()
    stack = list(parents.get(start, ()))
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        stack.extend(parents.get(n, ()))
    return seen
