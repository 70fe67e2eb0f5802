"""Production-system problem solving over structure or recognition states.

A problem is a start state, a goal expressed as a micro-situation over
subject recognitions, and a set of productions (guard plus effect).  Search
is best-first on cost plus heuristic; with the zero heuristic it degenerates
to uniform-cost and returns minimum-length plans.  Undesired micro-situations
are hard constraints.  Solved problems feed a cache keyed by a
morphism-abstracted (start, goal) pair, replayed by guard re-grounding.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from .config import DEFAULT, Config
from .derivation import MorphismMask, apply_morphism
from .rules import MicroSituation, Recognition, eval_micro_situation
from .schema import Schema, execute
from .structure import (
    Structure,
    StructureError,
    TypeCatalog,
    canonical_form,
    occurrences,
)


class SolverError(StructureError):
    pass


@dataclass(frozen=True)
class RecognitionState:
    """Atemporal state given directly by subject recognitions."""
    recognitions: tuple[tuple[str, float], ...]

    @classmethod
    def of(cls, items) -> "RecognitionState":
        if isinstance(items, dict):
            items = items.items()
        return cls(tuple(sorted((str(s), float(v)) for s, v in items)))

    def scores(self) -> dict[str, float]:
        return dict(self.recognitions)


State = Union[Structure, RecognitionState]


@dataclass(frozen=True)
class StructRecognizer:
    """Subject fires (score 1) when the pattern occurs inside the state."""
    subject: str
    pattern: Structure
    mask: Optional[MorphismMask] = None


@dataclass(frozen=True)
class SetEffect:
    add: tuple[tuple[str, float], ...] = ()
    remove: tuple[str, ...] = ()


@dataclass(frozen=True)
class Production:
    name: str
    guard: Union[MicroSituation, Structure]   # micro-situation or pattern
    effect: object                            # Schema, SetEffect or callable


@dataclass(frozen=True)
class ProblemSpec:
    start: State
    goal: MicroSituation
    productions: tuple[Production, ...]
    recognizers: tuple[StructRecognizer, ...] = ()
    heuristic: Optional[Callable[[State], float]] = None
    undesired: tuple[MicroSituation, ...] = ()
    catalog: Optional[TypeCatalog] = None
    threshold: float = 0.5

    def __post_init__(self):
        if not self.productions:
            raise SolverError("a problem needs at least one production")


@dataclass(frozen=True)
class SearchResult:
    plan: tuple[str, ...]
    visited: int
    cost: int
    status: str          # solved | unsolvable | budget-exhausted


# ---------------------------------------------------------------------------
# state inspection
# ---------------------------------------------------------------------------

def state_recognitions(state: State, spec: ProblemSpec) -> list[Recognition]:
    if isinstance(state, RecognitionState):
        return [Recognition(s, v, 0) for s, v in state.recognitions]
    recs = []
    for rec in spec.recognizers:
        target = state
        if rec.mask is not None:
            target = apply_morphism(state, rec.mask, spec.catalog)
        hit = bool(occurrences(target, rec.pattern, spec.catalog))
        if hit:
            recs.append(Recognition(rec.subject, 1.0, 0))
    return recs


def goal_satisfied(state: State, goal: MicroSituation,
                   spec: ProblemSpec) -> bool:
    """Abstract goals match every concrete state carrying the subjects."""
    recs = state_recognitions(state, spec)
    return eval_micro_situation(goal, recs, 0) >= spec.threshold


def _matches_any(state: State, situations, spec: ProblemSpec) -> bool:
    if not situations:
        return False
    recs = state_recognitions(state, spec)
    return any(eval_micro_situation(ms, recs, 0) >= spec.threshold
               for ms in situations)


def _guard_holds(state: State, prod: Production, spec: ProblemSpec) -> bool:
    if isinstance(prod.guard, MicroSituation):
        recs = state_recognitions(state, spec)
        return eval_micro_situation(prod.guard, recs, 0) >= spec.threshold
    if isinstance(prod.guard, Structure):
        if not isinstance(state, Structure):
            return False
        return bool(occurrences(state, prod.guard, spec.catalog))
    raise SolverError(f"unsupported guard on production {prod.name}")


def _apply_effect(state: State, prod: Production) -> State:
    eff = prod.effect
    if isinstance(eff, Schema):
        if not isinstance(state, Structure):
            raise SolverError(f"schema effect of {prod.name} needs a "
                              "structure state")
        return execute(eff, state)
    if isinstance(eff, SetEffect):
        if not isinstance(state, RecognitionState):
            raise SolverError(f"set effect of {prod.name} needs a "
                              "recognition state")
        scores = state.scores()
        for s in eff.remove:
            scores.pop(s, None)
        for s, v in eff.add:
            scores[s] = v
        return RecognitionState.of(scores)
    if callable(eff):
        return eff(state)
    raise SolverError(f"unsupported effect on production {prod.name}")


def expand(state: State, spec: ProblemSpec
           ) -> tuple[list[tuple[str, State]], list[tuple[str, str]]]:
    """Successors for every production whose guard holds.

    An effect failure poisons only its own production; it lands in the
    error list and the others go through.
    """
    successors = []
    errors = []
    for prod in spec.productions:
        try:
            if not _guard_holds(state, prod, spec):
                continue
            successors.append((prod.name, _apply_effect(state, prod)))
        except StructureError as exc:
            errors.append((prod.name, str(exc)))
    return successors, errors


def _state_key(state: State, spec: ProblemSpec) -> str:
    if isinstance(state, RecognitionState):
        return "rec:" + repr(state.recognitions)
    return "struct:" + canonical_form(state, spec.catalog)


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

def solve(spec: ProblemSpec, budget: Optional[int] = None,
          cfg: Config = DEFAULT) -> SearchResult:
    """Best-first search; zero heuristic means uniform cost and minimal plans.

    Heuristics may cost optimality, never validity: any returned plan
    replays from the start to a goal state.  Deterministic tie-breaking by
    insertion order.
    """
    budget = budget if budget is not None else cfg.solve_budget_default
    if budget <= 0:
        raise SolverError("budget must be positive")
    h = spec.heuristic or (lambda state: 0.0)
    if _matches_any(spec.start, spec.undesired, spec):
        return SearchResult((), 0, 0, "unsolvable")
    counter = itertools.count()
    start_key = _state_key(spec.start, spec)
    heap = [(h(spec.start), next(counter), spec.start, ())]
    best_cost = {start_key: 0}
    expanded = 0
    while heap:
        f, _, state, plan = heapq.heappop(heap)
        key = _state_key(state, spec)
        if best_cost.get(key, len(plan)) < len(plan):
            continue
        if goal_satisfied(state, spec.goal, spec):
            return SearchResult(tuple(plan), expanded, len(plan), "solved")
        if expanded >= budget:
            return SearchResult((), expanded, len(plan), "budget-exhausted")
        expanded += 1
        successors, _errors = expand(state, spec)
        for name, succ in successors:
            if _matches_any(succ, spec.undesired, spec):
                continue
            skey = _state_key(succ, spec)
            cost = len(plan) + 1
            if skey in best_cost and best_cost[skey] <= cost:
                continue
            best_cost[skey] = cost
            heapq.heappush(heap, (cost + h(succ), next(counter), succ,
                                  plan + (name,)))
    return SearchResult((), expanded, 0, "unsolvable")


def replay(spec: ProblemSpec, plan: Sequence[str]) -> State:
    """Walk the plan from the start, enforcing guards; returns the end state."""
    by_name = {p.name: p for p in spec.productions}
    state = spec.start
    for name in plan:
        prod = by_name.get(name)
        if prod is None:
            raise SolverError(f"plan names unknown production {name}")
        if not _guard_holds(state, prod, spec):
            raise SolverError(f"guard of {name} does not hold during replay")
        state = _apply_effect(state, prod)
        if _matches_any(state, spec.undesired, spec):
            raise SolverError(f"replay entered an undesired state after {name}")
    if not goal_satisfied(state, spec.goal, spec):
        raise SolverError("replay did not reach a goal state")
    return state


# ---------------------------------------------------------------------------
# solution cache
# ---------------------------------------------------------------------------

@dataclass
class CacheEntry:
    plan: tuple[str, ...]
    hits: int = 0
    misses: int = 0

    @property
    def p(self) -> float:
        return (self.hits + 1) / (self.hits + self.misses + 2)


class SolutionCache:
    """Ready-made plans keyed by the abstracted (start, goal) pair.

    Abstraction reuses the derivation machinery: structure starts are pushed
    through a morphism mask before canonicalization, so any instance that
    coincides under the mask shares the entry.
    """

    def __init__(self, mask: Optional[MorphismMask] = None,
                 catalog: Optional[TypeCatalog] = None):
        self.mask = mask
        self.catalog = catalog if catalog is not None else TypeCatalog()
        self.entries: dict[tuple[str, str], CacheEntry] = {}

    def abstract_state(self, state: State) -> str:
        if isinstance(state, RecognitionState):
            return "rec:" + ",".join(s for s, _ in state.recognitions)
        target = state
        if self.mask is not None:
            target = apply_morphism(state, self.mask, self.catalog)
        return "struct:" + canonical_form(target, self.catalog)

    @staticmethod
    def abstract_goal(goal: MicroSituation) -> str:
        bits = sorted(f"{'+' if m.positive else '-'}{m.subject}"
                      for m in goal.members + goal.relations)
        return "&".join(bits)

    def key_for(self, spec: ProblemSpec) -> tuple[str, str]:
        return (self.abstract_state(spec.start), self.abstract_goal(spec.goal))

    def store(self, spec: ProblemSpec, plan: tuple[str, ...]):
        key = self.key_for(spec)
        if key not in self.entries:
            self.entries[key] = CacheEntry(plan)


def solve_with_cache(spec: ProblemSpec, cache: SolutionCache,
                     budget: Optional[int] = None,
                     cfg: Config = DEFAULT) -> SearchResult:
    """Replay a cached skeleton when the abstracted problem is known.

    Replay re-grounds each step through the production guards; zero nodes are
    expanded on success.  Any failure falls back to a fresh search, and the
    outcome statistics update either way.
    """
    key = cache.key_for(spec)
    entry = cache.entries.get(key)
    if entry is not None:
        try:
            replay(spec, entry.plan)
        except SolverError:
            entry.misses += 1
        else:
            entry.hits += 1
            return SearchResult(entry.plan, 0, len(entry.plan), "solved")
    result = solve(spec, budget, cfg)
    if result.status == "solved":
        if entry is None:
            cache.store(spec, result.plan)
        else:
            entry.plan = result.plan
    return result
