"""Exact verification of the one-step drift inequalities and bound calculators.

The oracle enumerates every (vertex, color) outcome of a single recoloring
step on a scratch copy of the state and averages the tracked quantities with
exact rational weights. Claim checks compare that oracle against the proven
bounds in big-integer rational arithmetic; the bounds are theorems for
k = max_degree + 1, so a negative margin always means an implementation bug.

Floats appear only in the drift/tail bound calculators, which evaluate
analytic formulas rather than inequalities on simulated data. Logarithms are
natural throughout.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .state import ColoringState, Component

CLAIM_COMPONENT_EDGES = "component_edge_drift"
CLAIM_ISOLATED_GENERAL = "isolated_edge_growth"
CLAIM_ISOLATED_PAIR = "isolated_edge_pair_drift"
CLAIM_SANDWICH_LOWER = "potential_sandwich_lower"
CLAIM_SANDWICH_UPPER = "potential_sandwich_upper"
CLAIM_MULTIPLICATIVE = "multiplicative_decay"
CLAIM_BIPARTITE_PAIR = "bipartite_pair_drift"


@dataclass(frozen=True)
class ExactExpectation:
    """Conditional expectations of the tracked quantities after one step."""

    mono_edges: Fraction
    iso_edges: Fraction
    e_ip: Fraction
    phi: Fraction


@dataclass(frozen=True)
class AuditEntry:
    """One checked inequality: satisfied means margin = rhs - lhs >= 0."""

    claim: str
    lhs: Fraction
    rhs: Fraction
    margin: Fraction
    satisfied: bool
    detail: dict = field(default_factory=dict)


def _component_is_current(state: ColoringState, component: Component) -> bool:
    cu = component.color
    members = set(component.vertices)
    for u in component.vertices:
        if state.color_of(u) != cu or state.is_properly_colored(u):
            return False
    view_member = None
    for comp in state.monochromatic_components().components:
        if component.vertices[0] in comp.vertices:
            view_member = comp
            break
    return view_member is not None and set(view_member.vertices) == members


def exact_step_expectations(
    state: ColoringState, component: Component | None = None
) -> ExactExpectation:
    """Average the tracked quantities over every (vertex, color) outcome.

    Vertex weights are uniform over the component's vertices when one is
    given, otherwise uniform over all conflicted vertices (the two-stage
    component pick composes to exactly that law). Colors are uniform over
    1..k. Each outcome is evaluated by recoloring a scratch copy.
    """
    if component is not None:
        if not _component_is_current(state, component):
            raise ValueError("component is stale for this state")
        vertices = component.vertices
    else:
        if state.conflicted_count == 0:
            raise ValueError("whole-state expectation needs at least one conflicted vertex")
        vertices = state.conflicted_vertices()
    k = state.k
    mono_sum = 0
    iso_sum = 0
    eip_sum = 0
    phi_sum = 0
    for v in vertices:
        for c in range(1, k + 1):
            scratch = state.copy()
            scratch.recolor(v, c)
            mono_sum += scratch.mono_edge_count
            iso_sum += scratch.iso_edge_count
            eip_sum += scratch.e_ip
            phi_sum += scratch.phi_num
    outcomes = len(vertices) * k
    d = state.graph.max_degree
    return ExactExpectation(
        mono_edges=Fraction(mono_sum, outcomes),
        iso_edges=Fraction(iso_sum, outcomes),
        e_ip=Fraction(eip_sum, outcomes),
        phi=Fraction(phi_sum, outcomes * 100 * d),
    )


def combine_component_expectations(
    view_components: tuple[Component, ...], expectations: list[ExactExpectation]
) -> ExactExpectation:
    """Mix component-scoped expectations by vertex-count weights.

    By the law of total expectation this equals the whole-state oracle
    exactly; the equality is asserted in tests.
    """
    total = sum(c.size for c in view_components)
    mono = iso = eip = phi = Fraction(0)
    for comp, e in zip(view_components, expectations):
        w = Fraction(comp.size, total)
        mono += w * e.mono_edges
        iso += w * e.iso_edges
        eip += w * e.e_ip
        phi += w * e.phi
    return ExactExpectation(mono, iso, eip, phi)


def check_claim_edges(
    state: ColoringState,
    component: Component,
    expectation: ExactExpectation | None = None,
) -> AuditEntry:
    """Expected monochromatic edges after recoloring inside the component.

    Bound: current count minus the component's average degree, plus
    1 - 1/(max_degree + 1).
    """
    e = expectation or exact_step_expectations(state, component)
    d = state.graph.max_degree
    rhs = (
        Fraction(state.mono_edge_count)
        - component.average_degree
        + 1
        - Fraction(1, d + 1)
    )
    margin = rhs - e.mono_edges
    return AuditEntry(
        claim=CLAIM_COMPONENT_EDGES,
        lhs=e.mono_edges,
        rhs=rhs,
        margin=margin,
        satisfied=margin >= 0,
        detail={"component": list(component.vertices)},
    )


def check_claim_isolated(
    state: ColoringState,
    component: Component,
    expectation: ExactExpectation | None = None,
) -> list[AuditEntry]:
    """Expected isolated-pair count after recoloring inside the component.

    Always: at most the current count plus average degree plus one. For a
    component that is itself an isolated pair uw, additionally: at most the
    current count minus D/(D+1) plus the properly colored neighborhoods of u
    and w averaged over the two picks, D being the max degree.
    """
    e = expectation or exact_step_expectations(state, component)
    d = state.graph.max_degree
    iso_now = Fraction(state.iso_edge_count)
    rhs1 = iso_now + component.average_degree + 1
    entries = [
        AuditEntry(
            claim=CLAIM_ISOLATED_GENERAL,
            lhs=e.iso_edges,
            rhs=rhs1,
            margin=rhs1 - e.iso_edges,
            satisfied=rhs1 - e.iso_edges >= 0,
            detail={"component": list(component.vertices)},
        )
    ]
    if component.is_isolated_edge:
        u, w = component.vertices
        pu = state.properly_colored_neighbor_count(u)
        pw = state.properly_colored_neighbor_count(w)
        rhs2 = iso_now - Fraction(d, d + 1) + Fraction(pu + pw, 2 * (d + 1))
        entries.append(
            AuditEntry(
                claim=CLAIM_ISOLATED_PAIR,
                lhs=e.iso_edges,
                rhs=rhs2,
                margin=rhs2 - e.iso_edges,
                satisfied=rhs2 - e.iso_edges >= 0,
                detail={"component": list(component.vertices)},
            )
        )
    return entries


def check_claim_mono_phi(state: ColoringState) -> list[AuditEntry]:
    """Sandwich: mono count <= potential <= twice the mono count, exactly."""
    phi = state.potential()
    mono = Fraction(state.mono_edge_count)
    lower = AuditEntry(
        claim=CLAIM_SANDWICH_LOWER,
        lhs=mono,
        rhs=phi,
        margin=phi - mono,
        satisfied=phi - mono >= 0,
    )
    upper = AuditEntry(
        claim=CLAIM_SANDWICH_UPPER,
        lhs=phi,
        rhs=2 * mono,
        margin=2 * mono - phi,
        satisfied=2 * mono - phi >= 0,
    )
    return [lower, upper]


def check_claim_mult(
    state: ColoringState, expectation: ExactExpectation | None = None
) -> AuditEntry:
    """Whole-state expected potential decays by a factor 1 - 1/(1000 n)."""
    phi = state.potential()
    if phi <= 0:
        raise ValueError("multiplicative decay check needs a positive potential")
    e = expectation or exact_step_expectations(state)
    n = state.graph.n
    rhs = phi * (1 - Fraction(1, 1000 * n))
    margin = rhs - e.phi
    ratio = e.phi / phi
    return AuditEntry(
        claim=CLAIM_MULTIPLICATIVE,
        lhs=e.phi,
        rhs=rhs,
        margin=margin,
        satisfied=margin >= 0,
        detail={"decay_ratio": f"{ratio.numerator}/{ratio.denominator}"},
    )


def check_claim_bipartite_isolated(
    state: ColoringState,
    component: Component,
    expectation: ExactExpectation | None = None,
) -> AuditEntry:
    """Sharper pair bound on complete bipartite graphs with a full palette.

    Properly colored vertices on opposite sides must use different colors
    there, which caps the pair-creating neighborhoods and yields a drift of
    at least D/(2(D+1)) on every isolated pair.
    """
    if not component.is_isolated_edge:
        raise ValueError("bipartite refinement applies to isolated pairs only")
    e = expectation or exact_step_expectations(state, component)
    d = state.graph.max_degree
    rhs = Fraction(state.iso_edge_count) - Fraction(d, 2 * (d + 1))
    margin = rhs - e.iso_edges
    return AuditEntry(
        claim=CLAIM_BIPARTITE_PAIR,
        lhs=e.iso_edges,
        rhs=rhs,
        margin=margin,
        satisfied=margin >= 0,
        detail={"component": list(component.vertices)},
    )


def audit_state(state: ColoringState, bipartite: bool = False) -> list[AuditEntry]:
    """Run every applicable claim check, sharing one enumeration per component."""
    entries = check_claim_mono_phi(state)
    if state.conflicted_count == 0:
        return entries
    view = state.monochromatic_components()
    expectations = []
    for comp in view.components:
        e = exact_step_expectations(state, comp)
        expectations.append(e)
        entries.append(check_claim_edges(state, comp, expectation=e))
        entries.extend(check_claim_isolated(state, comp, expectation=e))
        if bipartite and comp.is_isolated_edge:
            entries.append(check_claim_bipartite_isolated(state, comp, expectation=e))
    whole = combine_component_expectations(view.components, expectations)
    entries.append(check_claim_mult(state, expectation=whole))
    return entries


def state_digest(state: ColoringState) -> str:
    """Stable identifier of (graph, palette, coloring) for replayable reports."""
    payload = {
        "n": state.graph.n,
        "k": state.k,
        "colors": list(state.colors),
        "edges": [[u, v] for u, v in state.graph.edges],
    }
    blob = json.dumps(payload, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- drift and tail bound calculators ---------------------------------------


def additive_drift_bound(x0: float, delta: float) -> float:
    """Expected hitting time of 0 under a constant per-step drift of delta."""
    if delta <= 0:
        raise ValueError("drift delta must be > 0")
    if x0 < 0:
        raise ValueError("initial value must be >= 0")
    return x0 / delta


def multiplicative_drift_bound(s0: float, smin: float, delta: float) -> float:
    """Expected hitting time under per-step decay by a factor (1 - delta)."""
    if delta <= 0:
        raise ValueError("drift delta must be > 0")
    if not s0 >= smin > 0:
        raise ValueError("need s0 >= smin > 0")
    return (1 + math.log(s0 / smin)) / delta


def multiplicative_tail(r: float, s0: float, smin: float, delta: float) -> tuple[int, float]:
    """Time threshold and overshoot probability for multiplicative decay.

    Returns (ceil((r + ln(s0/smin)) / delta), exp(-r)); the hitting time
    exceeds the threshold with probability below the second entry.
    """
    if r < 0:
        raise ValueError("tail parameter r must be >= 0")
    if delta <= 0:
        raise ValueError("drift delta must be > 0")
    if not s0 >= smin > 0:
        raise ValueError("need s0 >= smin > 0")
    threshold = math.ceil((r + math.log(s0 / smin)) / delta)
    return threshold, math.exp(-r)


def additive_tail(r: float, x0: float, delta: float, step_bound_c: float) -> float:
    """Overshoot probability exp(-r delta^2 / (8 c^2)) for bounded steps.

    Valid only for r >= 2 x0 / delta; below that threshold no bound is given
    and the call is rejected.
    """
    if delta <= 0:
        raise ValueError("drift delta must be > 0")
    if step_bound_c <= 0:
        raise ValueError("step bound c must be > 0")
    if r < 2 * x0 / delta:
        raise ValueError("additive tail bound requires r >= 2*x0/delta")
    return math.exp(-r * delta * delta / (8 * step_bound_c * step_bound_c))


def psi_value(phi: Fraction, n: int, max_degree: int) -> float:
    """Clamped log potential: max(ln(max_degree * phi / n), 0)."""
    if max_degree < 1:
        return 0.0
    scaled = Fraction(max_degree, n) * phi
    if scaled <= 1:
        return 0.0
    return math.log(float(scaled))


def psi_potential(state: ColoringState) -> float:
    """Log-scale progress measure used to turn decay rates into flat drift.

    Zero whenever the potential is at or below n / max_degree (including the
    proper coloring), natural log of (max_degree * potential / n) above.
    """
    return psi_value(state.potential(), state.graph.n, state.graph.max_degree)
