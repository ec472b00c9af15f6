"""Coloring state with incrementally maintained conflict bookkeeping.

Tracked quantities (all exact integers):

* ``mono_edge_count``  edges whose endpoints currently share a color;
* ``iso_edge_count``   monochromatic components that consist of a single edge
  (an "isolated pair": both endpoints have exactly one same-colored neighbor);
* ``e_ip``             graph edges joining an isolated-pair endpoint to a
  properly colored vertex;
* ``phi_num``          100*D*mono + 10*D*iso + e_ip with D = max degree, so the
  progress potential mono + iso/10 + e_ip/(100*D) equals phi_num/(100*D)
  exactly and all comparisons can stay in integer arithmetic.

``recolor`` updates everything incrementally, touching only the recolored
vertex, its neighbors, and isolated-pair partners at distance two.
``recompute_all`` rebuilds the same quantities from scratch and serves as the
correctness oracle for the incremental path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class StepDelta:
    """Signed change of every tracked quantity caused by one recolor call."""

    vertex: int
    old_color: int
    new_color: int
    d_mono: int
    d_iso: int
    d_eip: int
    d_phi_num: int


@dataclass(frozen=True)
class DerivedSnapshot:
    """All derived quantities of a coloring, as recomputed from scratch."""

    conflicted: tuple[int, ...]
    mono_edge_count: int
    iso_edge_count: int
    e_ip: int
    phi_num: int


@dataclass(frozen=True)
class Component:
    """One connected component of the subgraph of monochromatic edges."""

    vertices: tuple[int, ...]
    edge_count: int
    color: int

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def average_degree(self) -> Fraction:
        return Fraction(2 * self.edge_count, len(self.vertices))

    @property
    def is_isolated_edge(self) -> bool:
        return len(self.vertices) == 2


@dataclass(frozen=True)
class ComponentView:
    """Decomposition of the conflicted vertices into monochromatic components."""

    components: tuple[Component, ...]

    @property
    def total_vertices(self) -> int:
        return sum(c.size for c in self.components)


class ColoringState:
    """Mutable coloring of an immutable graph plus derived conflict data.

    Owned by exactly one run at a time; distinct states may share the graph.
    """

    __slots__ = (
        "graph",
        "k",
        "_color",
        "_conflict_deg",
        "_conf_dense",
        "_conf_pos",
        "mono_edge_count",
        "e_ip",
        "_in_pair",
        "_pair_vertex_count",
    )

    def __init__(self, graph: Graph, k: int, colors: list[int]):
        if k < 1:
            raise ValueError("palette size k must be >= 1")
        if len(colors) != graph.n:
            raise ValueError(f"expected {graph.n} colors, got {len(colors)}")
        for v, c in enumerate(colors):
            if not 1 <= c <= k:
                raise ValueError(f"vertex {v}: color {c} outside 1..{k}")
        self.graph = graph
        self.k = k
        self._color = list(colors)
        self._init_derived()

    # -- construction -----------------------------------------------------

    def _init_derived(self) -> None:
        g = self.graph
        n = g.n
        color = self._color
        cd = [0] * n
        mono = 0
        for u, w in g.edges:
            if color[u] == color[w]:
                cd[u] += 1
                cd[w] += 1
                mono += 1
        in_pair = bytearray(n)
        for u, w in g.edges:
            if color[u] == color[w] and cd[u] == 1 and cd[w] == 1:
                in_pair[u] = 1
                in_pair[w] = 1
        e_ip = 0
        for u, w in g.edges:
            if (in_pair[u] and cd[w] == 0) or (cd[u] == 0 and in_pair[w]):
                e_ip += 1
        self._conflict_deg = cd
        self._conf_dense = [v for v in range(n) if cd[v] > 0]
        pos = [-1] * n
        for i, v in enumerate(self._conf_dense):
            pos[v] = i
        self._conf_pos = pos
        self.mono_edge_count = mono
        self.e_ip = e_ip
        self._in_pair = in_pair
        self._pair_vertex_count = sum(in_pair)

    def copy(self) -> "ColoringState":
        new = ColoringState.__new__(ColoringState)
        new.graph = self.graph
        new.k = self.k
        new._color = self._color.copy()
        new._conflict_deg = self._conflict_deg.copy()
        new._conf_dense = self._conf_dense.copy()
        new._conf_pos = self._conf_pos.copy()
        new.mono_edge_count = self.mono_edge_count
        new.e_ip = self.e_ip
        new._in_pair = bytearray(self._in_pair)
        new._pair_vertex_count = self._pair_vertex_count
        return new

    # -- read access -------------------------------------------------------

    @property
    def colors(self) -> tuple[int, ...]:
        return tuple(self._color)

    def color_of(self, v: int) -> int:
        return self._color[v]

    @property
    def iso_edge_count(self) -> int:
        return self._pair_vertex_count // 2

    @property
    def phi_num(self) -> int:
        d = self.graph.max_degree
        return 100 * d * self.mono_edge_count + 10 * d * self.iso_edge_count + self.e_ip

    @property
    def conflicted_count(self) -> int:
        return len(self._conf_dense)

    def conflicted_at(self, i: int) -> int:
        """Entry ``i`` of the dense conflicted array (for O(1) uniform picks)."""
        return self._conf_dense[i]

    def conflicted_vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self._conf_dense))

    def is_proper(self) -> bool:
        return not self._conf_dense

    def is_properly_colored(self, v: int) -> bool:
        return self._conflict_deg[v] == 0

    def properly_colored_neighbor_count(self, v: int) -> int:
        cd = self._conflict_deg
        return sum(1 for w in self.graph.adjacency[v] if cd[w] == 0)

    def neighbor_colors(self, v: int) -> set[int]:
        color = self._color
        return {color[w] for w in self.graph.adjacency[v]}

    def potential(self) -> Fraction:
        """The exact progress potential; 0 if and only if the coloring is proper."""
        d = self.graph.max_degree
        if d == 0:
            return Fraction(0)
        return Fraction(self.phi_num, 100 * d)

    def snapshot(self) -> DerivedSnapshot:
        return DerivedSnapshot(
            conflicted=self.conflicted_vertices(),
            mono_edge_count=self.mono_edge_count,
            iso_edge_count=self.iso_edge_count,
            e_ip=self.e_ip,
            phi_num=self.phi_num,
        )

    # -- conflicted set maintenance ----------------------------------------

    def _conf_add(self, v: int) -> None:
        self._conf_pos[v] = len(self._conf_dense)
        self._conf_dense.append(v)

    def _conf_remove(self, v: int) -> None:
        dense, pos = self._conf_dense, self._conf_pos
        i = pos[v]
        last = dense[-1]
        dense[i] = last
        pos[last] = i
        dense.pop()
        pos[v] = -1

    # -- recoloring ---------------------------------------------------------

    def recolor(self, v: int, c: int) -> StepDelta:
        """Set the color of ``v`` to ``c`` and update all derived quantities.

        Work is confined to v, its neighbors, and the isolated-pair partners
        of those neighbors, so a step costs O(max_degree^2) at worst and much
        less once conflicts are sparse.
        """
        if not 0 <= v < self.graph.n:
            raise ValueError(f"vertex {v} out of range")
        if not 1 <= c <= self.k:
            raise ValueError(f"color {c} outside 1..{self.k}")
        old = self._color[v]
        if c == old:
            return StepDelta(v, old, c, 0, 0, 0, 0)

        color = self._color
        cd = self._conflict_deg
        adjacency = self.graph.adjacency
        dec: list[int] = []  # neighbors losing their monochromatic edge to v
        inc: list[int] = []  # neighbors gaining one
        for w in adjacency[v]:
            cw = color[w]
            if cw == old:
                dec.append(w)
            elif cw == c:
                inc.append(w)
        d_mono = len(inc) - len(dec)

        before_cd = {v: cd[v]}
        for w in dec:
            before_cd[w] = cd[w]
        for w in inc:
            before_cd[w] = cd[w]

        color[v] = c
        for w in dec:
            nw = cd[w] - 1
            cd[w] = nw
            if nw == 0:
                self._conf_remove(w)
        for w in inc:
            if cd[w] == 0:
                self._conf_add(w)
            cd[w] += 1
        old_cd_v = before_cd[v]
        new_cd_v = len(inc)
        cd[v] = new_cd_v
        if old_cd_v == 0 and new_cd_v > 0:
            self._conf_add(v)
        elif old_cd_v > 0 and new_cd_v == 0:
            self._conf_remove(v)
        self.mono_edge_count += d_mono

        # Membership in the isolated-pair set or the properly-colored set can
        # only change for vertices whose conflict degree crossed the 0/1
        # boundary, or for pair partners of such vertices.
        seeds = [u for u, b in before_cd.items() if b <= 1 or cd[u] <= 1]
        d_eip = 0
        d_pair = 0
        if seeds:
            d_eip, d_pair = self._apply_membership_changes(v, dec, inc, before_cd, seeds)
        d_iso = d_pair // 2
        d = self.graph.max_degree
        d_phi_num = 100 * d * d_mono + 10 * d * d_iso + d_eip
        return StepDelta(v, old, c, d_mono, d_iso, d_eip, d_phi_num)

    def _partner_now(self, u: int) -> int:
        """The unique same-colored neighbor of ``u`` under the current coloring."""
        color = self._color
        cu = color[u]
        for x in self.graph.adjacency[u]:
            if color[x] == cu:
                return x
        raise AssertionError(f"vertex {u} has no monochromatic neighbor")

    def _apply_membership_changes(self, v, dec, inc, before_cd, seeds):
        """Resolve isolated-pair / properly-colored transitions around ``v``.

        Returns the resulting change of (e_ip, pair-vertex count). Called
        after colors and conflict degrees have been updated; ``_in_pair``
        still reflects the previous step and is rewritten here.
        """
        cd = self._conflict_deg
        color = self._color
        in_pair = self._in_pair
        adjacency = self.graph.adjacency
        inc_set = set(inc)

        # u -> (pair_before, proper_before, pair_after, proper_after)
        trans: dict[int, tuple[bool, bool, bool, bool]] = {}
        extras: set[int] = set()
        for u in seeds:
            b = before_cd[u]
            a = cd[u]
            pair_b = bool(in_pair[u])
            if pair_b and u in inc_set:
                # u's former partner kept its conflict degree but may still
                # leave the pair set; under the previous coloring v never
                # qualified as that partner, so skip it in the scan.
                cu = color[u]
                for x in adjacency[u]:
                    if x != v and color[x] == cu:
                        if x not in before_cd:
                            extras.add(x)
                        break
            if a == 1:
                if u == v:
                    partner = inc[0]
                elif u in inc_set:
                    partner = v
                else:
                    partner = self._partner_now(u)
                pair_a = cd[partner] == 1
                if partner not in before_cd:
                    extras.add(partner)
            else:
                pair_a = False
            proper_b = b == 0
            proper_a = a == 0
            if pair_b != pair_a or proper_b != proper_a:
                trans[u] = (pair_b, proper_b, pair_a, proper_a)
        for t in extras:
            pair_b = bool(in_pair[t])
            pair_a = cd[t] == 1 and cd[self._partner_now(t)] == 1
            if pair_a != pair_b:
                proper = cd[t] == 0
                trans[t] = (pair_b, proper, pair_a, proper)

        d_eip = 0
        d_pair = 0
        for u, (pair_b, proper_b, pair_a, proper_a) in trans.items():
            for x in adjacency[u]:
                tx = trans.get(x)
                if tx is not None:
                    if x < u:
                        continue  # each changed-changed edge counted once
                    xpair_b, xproper_b, xpair_a, xproper_a = tx
                else:
                    xpair_b = xpair_a = bool(in_pair[x])
                    xproper_b = xproper_a = cd[x] == 0
                d_eip += ((pair_a and xproper_a) or (proper_a and xpair_a)) - (
                    (pair_b and xproper_b) or (proper_b and xpair_b)
                )
            if pair_a != pair_b:
                in_pair[u] = 1 if pair_a else 0
                d_pair += 1 if pair_a else -1
        self._pair_vertex_count += d_pair
        self.e_ip += d_eip
        return d_eip, d_pair

    # -- batch recoloring (simultaneous updates) ----------------------------

    def apply_batch(self, vertices, new_colors) -> None:
        """Assign colors to many vertices at once, then refresh derived data.

        Used by the simultaneous-recoloring dynamics, where the whole frozen
        set changes in one round and an incremental walk would touch the full
        graph anyway.
        """
        color = self._color
        for v, c in zip(vertices, new_colors):
            if not 1 <= c <= self.k:
                raise ValueError(f"color {c} outside 1..{self.k}")
            color[v] = c
        self._refresh_from_colors()

    def _refresh_from_colors(self) -> None:
        g = self.graph
        n = g.n
        if g.m == 0:
            return
        col = np.asarray(self._color, dtype=np.int64)
        eu, ev = g.edge_arrays
        mono = col[eu] == col[ev]
        cd = np.bincount(eu[mono], minlength=n) + np.bincount(ev[mono], minlength=n)
        iso = mono & (cd[eu] == 1) & (cd[ev] == 1)
        in_pair = np.zeros(n, dtype=bool)
        in_pair[eu[iso]] = True
        in_pair[ev[iso]] = True
        proper = cd == 0
        e_ip = int(((in_pair[eu] & proper[ev]) | (proper[eu] & in_pair[ev])).sum())
        self._conflict_deg = cd.tolist()
        self.mono_edge_count = int(mono.sum())
        self.e_ip = e_ip
        self._in_pair = bytearray(in_pair.astype(np.uint8).tobytes())
        self._pair_vertex_count = int(in_pair.sum())
        dense = np.nonzero(cd)[0].tolist()
        self._conf_dense = dense
        pos = [-1] * n
        for i, u in enumerate(dense):
            pos[u] = i
        self._conf_pos = pos

    # -- oracles -------------------------------------------------------------

    def recompute_all(self) -> DerivedSnapshot:
        """Recompute every derived quantity from scratch in O(n + m).

        Deliberately written as plain edge scans (including the direct
        edge-by-edge count behind ``e_ip``) so it stays independent of the
        incremental update path it is used to check.
        """
        g = self.graph
        color = self._color
        cd = [0] * g.n
        mono = 0
        for u, w in g.edges:
            if color[u] == color[w]:
                cd[u] += 1
                cd[w] += 1
                mono += 1
        in_pair = [False] * g.n
        iso = 0
        for u, w in g.edges:
            if color[u] == color[w] and cd[u] == 1 and cd[w] == 1:
                in_pair[u] = True
                in_pair[w] = True
                iso += 1
        e_ip = 0
        for u, w in g.edges:
            if (in_pair[u] and cd[w] == 0) or (cd[u] == 0 and in_pair[w]):
                e_ip += 1
        d = g.max_degree
        return DerivedSnapshot(
            conflicted=tuple(v for v in range(g.n) if cd[v] > 0),
            mono_edge_count=mono,
            iso_edge_count=iso,
            e_ip=e_ip,
            phi_num=100 * d * mono + 10 * d * iso + e_ip,
        )

    def monochromatic_components(self) -> ComponentView:
        """Connected components of the monochromatic-edge subgraph.

        Components partition the conflicted vertices; each has at least two
        vertices, at least one edge, and a single shared color. Computed on
        demand by a traversal over same-colored neighbors; cost is linear in
        the conflicted region.
        """
        color = self._color
        cd = self._conflict_deg
        adjacency = self.graph.adjacency
        seen: set[int] = set()
        comps: list[Component] = []
        for root in sorted(self._conf_dense):
            if root in seen:
                continue
            cu = color[root]
            members = [root]
            seen.add(root)
            queue = [root]
            while queue:
                u = queue.pop()
                for w in adjacency[u]:
                    if color[w] == cu and w not in seen:
                        seen.add(w)
                        members.append(w)
                        queue.append(w)
            members.sort()
            edge_count = sum(cd[u] for u in members) // 2
            comps.append(Component(vertices=tuple(members), edge_count=edge_count, color=cu))
        return ComponentView(components=tuple(comps))


def init_random(g: Graph, k: int, rng) -> ColoringState:
    """Color every vertex independently and uniformly from 1..k.

    Consumes one bulk draw of ``n`` integers, in ascending vertex order.
    """
    if k < 1:
        raise ValueError("palette size k must be >= 1")
    colors = rng.integers(1, k + 1, size=g.n)
    return ColoringState(g, k, [int(c) for c in colors])


def init_fixed(g: Graph, k: int, assignment) -> ColoringState:
    """Build a state with exactly the given per-vertex colors."""
    return ColoringState(g, k, list(assignment))
