"""Augmenting-path max-flow with persistent search trees.

Two search trees (one rooted at the source, one at the sink) are grown,
augmented through and repaired by orphan adoption.  Terminal arcs are stored
as one signed residual per node (positive: residual from the source,
negative: residual to the sink), so changing a node's terminal capacities
after a solve never violates the current flow and the next solve resumes
from the previous flow and trees.
"""
from __future__ import annotations

from collections import deque

TERMINAL = -1
ORPHAN = -2
NO_PARENT = -3
_INF_DIST = 1 << 60


class FlowGraph:
    """Directed graph with per-node terminal capacities.

    Capacities are floats; a residual capacity is treated as saturated when it
    is ``<= eps``.
    """

    def __init__(self, num_nodes: int, eps: float = 1e-12):
        self.n = num_nodes
        self.eps = eps
        self.tr = [0.0] * num_nodes
        self.adj = [[] for _ in range(num_nodes)]
        self.head = []
        self.rcap = []
        self.flow = 0.0
        # search-tree state
        self.parent = [NO_PARENT] * num_nodes
        self.is_sink = [False] * num_nodes
        self.ts = [0] * num_nodes
        self.dist = [0] * num_nodes
        self.time = 0
        self._active = deque()
        self._in_active = [False] * num_nodes
        self._orphans = deque()
        self._marked = []
        self._is_marked = [False] * num_nodes
        self._solved_once = False

    # -- construction ----------------------------------------------------

    def add_edge(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> int:
        """Add arc ``u->v`` with capacity ``cap`` (and ``v->u`` with ``rev_cap``)."""
        a = len(self.head)
        self.head.append(v)
        self.rcap.append(float(cap))
        self.head.append(u)
        self.rcap.append(float(rev_cap))
        self.adj[u].append(a)
        self.adj[v].append(a + 1)
        return a

    def add_tweights(self, v: int, cap_source: float, cap_sink: float) -> None:
        """Add terminal capacities; the common part is pushed immediately."""
        delta = self.tr[v]
        if delta > 0:
            cap_source += delta
        else:
            cap_sink -= delta
        self.flow += min(cap_source, cap_sink)
        self.tr[v] = cap_source - cap_sink
        self.mark(v)

    def shift_terminal(self, v: int, delta: float) -> None:
        """Add ``delta`` to the net source-minus-sink residual of ``v``."""
        self.tr[v] += delta
        self.mark(v)

    def mark(self, v: int) -> None:
        if not self._is_marked[v]:
            self._is_marked[v] = True
            self._marked.append(v)

    # -- tree helpers ----------------------------------------------------

    def _set_active(self, v: int) -> None:
        if not self._in_active[v]:
            self._in_active[v] = True
            self._active.append(v)

    def _next_active(self):
        active = self._active
        in_active = self._in_active
        parent = self.parent
        while active:
            v = active.popleft()
            in_active[v] = False
            if parent[v] != NO_PARENT:
                return v
        return None

    # -- initialisation --------------------------------------------------

    def _init_fresh(self) -> None:
        eps = self.eps
        self._active.clear()
        self._in_active = [False] * self.n
        self._orphans.clear()
        self.time = 0
        for v in range(self.n):
            self.ts[v] = 0
            t = self.tr[v]
            if t > eps:
                self.is_sink[v] = False
                self.parent[v] = TERMINAL
                self._set_active(v)
                self.dist[v] = 1
            elif t < -eps:
                self.is_sink[v] = True
                self.parent[v] = TERMINAL
                self._set_active(v)
                self.dist[v] = 1
            else:
                self.parent[v] = NO_PARENT
        for v in self._marked:
            self._is_marked[v] = False
        self._marked = []

    def _init_reuse(self) -> None:
        eps = self.eps
        parent, is_sink, head, rcap = self.parent, self.is_sink, self.head, self.rcap
        self._orphans.clear()
        self.time += 1
        marked = self._marked
        self._marked = []
        for i in marked:
            self._is_marked[i] = False
            self._set_active(i)
            t = self.tr[i]
            if -eps <= t <= eps:
                if parent[i] != NO_PARENT:
                    parent[i] = ORPHAN
                    self._orphans.append(i)
                continue
            if t > 0:
                if parent[i] == NO_PARENT or is_sink[i]:
                    is_sink[i] = False
                    for a in self.adj[i]:
                        j = head[a]
                        if not self._is_marked[j]:
                            if parent[j] == (a ^ 1):
                                parent[j] = ORPHAN
                                self._orphans.append(j)
                            if parent[j] not in (NO_PARENT, ORPHAN) and is_sink[j] and rcap[a] > eps:
                                self._set_active(j)
            else:
                if parent[i] == NO_PARENT or not is_sink[i]:
                    is_sink[i] = True
                    for a in self.adj[i]:
                        j = head[a]
                        if not self._is_marked[j]:
                            if parent[j] == (a ^ 1):
                                parent[j] = ORPHAN
                                self._orphans.append(j)
                            if parent[j] not in (NO_PARENT, ORPHAN) and not is_sink[j] and rcap[a ^ 1] > eps:
                                self._set_active(j)
            parent[i] = TERMINAL
            self.ts[i] = self.time
            self.dist[i] = 1
        self._adopt_all()

    # -- main loop ---------------------------------------------------------

    def maxflow(self, reuse_trees: bool = True) -> float:
        if reuse_trees and self._solved_once:
            self._init_reuse()
        else:
            self._init_fresh()
        self._solved_once = True

        eps = self.eps
        parent, is_sink, head, rcap, adj = self.parent, self.is_sink, self.head, self.rcap, self.adj
        ts, dist = self.ts, self.dist
        current = None
        while True:
            i = current
            if i is not None and parent[i] == NO_PARENT:
                i = None
            if i is None:
                i = self._next_active()
                if i is None:
                    break
            middle = -1
            if not is_sink[i]:
                for a in adj[i]:
                    if rcap[a] > eps:
                        j = head[a]
                        pj = parent[j]
                        if pj == NO_PARENT:
                            is_sink[j] = False
                            parent[j] = a ^ 1
                            ts[j] = ts[i]
                            dist[j] = dist[i] + 1
                            self._set_active(j)
                        elif is_sink[j]:
                            middle = a
                            break
                        elif ts[j] <= ts[i] and dist[j] > dist[i]:
                            parent[j] = a ^ 1
                            ts[j] = ts[i]
                            dist[j] = dist[i] + 1
            else:
                for a in adj[i]:
                    if rcap[a ^ 1] > eps:
                        j = head[a]
                        pj = parent[j]
                        if pj == NO_PARENT:
                            is_sink[j] = True
                            parent[j] = a ^ 1
                            ts[j] = ts[i]
                            dist[j] = dist[i] + 1
                            self._set_active(j)
                        elif not is_sink[j]:
                            middle = a ^ 1
                            break
                        elif ts[j] <= ts[i] and dist[j] > dist[i]:
                            parent[j] = a ^ 1
                            ts[j] = ts[i]
                            dist[j] = dist[i] + 1
            self.time += 1
            if middle >= 0:
                current = i
                self._augment(middle)
                self._adopt_all()
            else:
                current = None
        return self.flow

    def _augment(self, middle: int) -> None:
        eps = self.eps
        parent, head, rcap, tr = self.parent, self.head, self.rcap, self.tr
        orphans = self._orphans

        bottleneck = rcap[middle]
        i = head[middle ^ 1]
        while True:
            a = parent[i]
            if a == TERMINAL:
                break
            if rcap[a ^ 1] < bottleneck:
                bottleneck = rcap[a ^ 1]
            i = head[a]
        if tr[i] < bottleneck:
            bottleneck = tr[i]
        i = head[middle]
        while True:
            a = parent[i]
            if a == TERMINAL:
                break
            if rcap[a] < bottleneck:
                bottleneck = rcap[a]
            i = head[a]
        if -tr[i] < bottleneck:
            bottleneck = -tr[i]

        rcap[middle ^ 1] += bottleneck
        rcap[middle] -= bottleneck
        i = head[middle ^ 1]
        while True:
            a = parent[i]
            if a == TERMINAL:
                break
            rcap[a] += bottleneck
            rcap[a ^ 1] -= bottleneck
            if rcap[a ^ 1] <= eps:
                parent[i] = ORPHAN
                orphans.appendleft(i)
            i = head[a]
        tr[i] -= bottleneck
        if tr[i] <= eps:
            parent[i] = ORPHAN
            orphans.appendleft(i)
        i = head[middle]
        while True:
            a = parent[i]
            if a == TERMINAL:
                break
            rcap[a ^ 1] += bottleneck
            rcap[a] -= bottleneck
            if rcap[a] <= eps:
                parent[i] = ORPHAN
                orphans.appendleft(i)
            i = head[a]
        tr[i] += bottleneck
        if tr[i] >= -eps:
            parent[i] = ORPHAN
            orphans.appendleft(i)
        self.flow += bottleneck

    def _adopt_all(self) -> None:
        orphans = self._orphans
        while orphans:
            i = orphans.popleft()
            if self.is_sink[i]:
                self._process_orphan(i, True)
            else:
                self._process_orphan(i, False)

    def _process_orphan(self, i: int, sink: bool) -> None:
        eps = self.eps
        parent, is_sink, head, rcap, adj = self.parent, self.is_sink, self.head, self.rcap, self.adj
        ts, dist = self.ts, self.dist
        time = self.time
        best_arc = NO_PARENT
        best_d = _INF_DIST
        for a0 in adj[i]:
            cap = rcap[a0] if sink else rcap[a0 ^ 1]
            if cap <= eps:
                continue
            j = head[a0]
            if is_sink[j] != sink or parent[j] in (NO_PARENT,):
                continue
            if parent[j] == ORPHAN:
                continue
            # check that j descends from a terminal
            d = 0
            k = j
            while True:
                if ts[k] == time:
                    d += dist[k]
                    break
                a = parent[k]
                d += 1
                if a == TERMINAL:
                    ts[k] = time
                    dist[k] = 1
                    break
                if a == ORPHAN or a == NO_PARENT:
                    d = _INF_DIST
                    break
                k = head[a]
            if d < _INF_DIST:
                if d < best_d:
                    best_arc = a0
                    best_d = d
                k = j
                while ts[k] != time:
                    ts[k] = time
                    dist[k] = d
                    d -= 1
                    k = head[parent[k]]
        if best_arc != NO_PARENT:
            parent[i] = best_arc
            ts[i] = time
            dist[i] = best_d + 1
            return
        parent[i] = NO_PARENT
        for a0 in adj[i]:
            j = head[a0]
            a = parent[j]
            if is_sink[j] != sink or a == NO_PARENT:
                continue
            cap = rcap[a0] if sink else rcap[a0 ^ 1]
            if cap > eps:
                self._set_active(j)
            if a != TERMINAL and a != ORPHAN and head[a] == i:
                parent[j] = ORPHAN
                self._orphans.append(j)

    # -- queries -----------------------------------------------------------

    def source_set(self) -> list:
        """Nodes reachable from the source in the residual graph (booleans).

        This is the source side of the minimum cut with the smallest source
        set, independent of the order in which augmenting paths were found.
        """
        eps = self.eps
        seen = [False] * self.n
        stack = [v for v in range(self.n) if self.tr[v] > eps]
        for v in stack:
            seen[v] = True
        head, rcap, adj = self.head, self.rcap, self.adj
        while stack:
            v = stack.pop()
            for a in adj[v]:
                if rcap[a] > eps:
                    w = head[a]
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
        return seen
