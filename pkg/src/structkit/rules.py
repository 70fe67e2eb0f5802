"""Regularity detection and temporal associative rules over recognition logs.

Repetition shows up four ways: identical portions across a population, small
edit distance between two structures, coincidence after a derivation recipe,
and a common operator stepping through a sequence.  Associative rules bind a
small timed micro-situation of subject recognitions to predicted consequents
with a frequentist, Laplace-smoothed probability; mining recovers such rules
from a tick-stamped log, including purely negative conditions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .config import DEFAULT, Config
from .derivation import MorphismMask, apply_morphism, canonical_partitions, quotient
from .schema import Schema, execute
from .structure import (
    Relation,
    Structure,
    StructureError,
    TypeCatalog,
    canonical_form,
    induced,
    isomorphic,
    _connected_subsets,
    _key_map,
)


class RuleError(StructureError):
    pass


# ---------------------------------------------------------------------------
# recognitions and micro-situations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Recognition:
    subject: str
    score: float
    t: int

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise RuleError("recognition score must lie in [0, 1]")
        if self.t < 0:
            raise RuleError("ticks are non-negative")


@dataclass(frozen=True)
class MsMember:
    subject: str
    positive: bool = True
    min_score: float = 0.5
    window: tuple[int, int] = (0, 0)    # inclusive tick offsets from "now"

    def __post_init__(self):
        if self.window[0] > self.window[1]:
            raise RuleError("member window must satisfy lo <= hi")


@dataclass(frozen=True)
class MicroSituation:
    members: tuple[MsMember, ...]
    relations: tuple[MsMember, ...] = ()   # relation subjects, always positive

    def __post_init__(self):
        if not 1 <= len(self.members) <= 8:
            raise RuleError("a micro-situation holds between 1 and 8 members")


@dataclass(frozen=True)
class Consequent:
    subject: str
    window: tuple[int, int] = (1, 1)    # strictly positive offsets if predictive

    def __post_init__(self):
        if self.window[0] > self.window[1]:
            raise RuleError("consequent window must satisfy lo <= hi")


@dataclass(frozen=True)
class AssociativeRule:
    condition: MicroSituation
    consequents: tuple[Consequent, ...]
    n_cond: int = 0
    n_hit: int = 0
    smoothed: bool = True
    threshold: float = 0.5

    @property
    def p(self) -> float:
        if self.smoothed:
            return (self.n_hit + 1) / (self.n_cond + 2)
        return self.n_hit / self.n_cond if self.n_cond else 0.0

    @property
    def support(self) -> int:
        return self.n_cond


@dataclass(frozen=True)
class Prediction:
    subject: str
    window: tuple[int, int]     # absolute ticks
    confidence: float


def _member_score(m: MsMember, log: Sequence[Recognition], now: int) -> float:
    lo, hi = now + m.window[0], now + m.window[1]
    best = 0.0
    for rec in log:
        if rec.subject == m.subject and lo <= rec.t <= hi:
            best = max(best, rec.score)
    if m.positive:
        return best if best >= m.min_score else 0.0
    return 1.0 - best


def eval_micro_situation(ms: MicroSituation, log: Sequence[Recognition],
                         now: int) -> float:
    """Goedel semantics: conjunction is min, negation is 1 - best match."""
    score = 1.0
    for m in list(ms.members) + list(ms.relations):
        score = min(score, _member_score(m, log, now))
        if score == 0.0:
            break
    return score


def eval_rule(rule: AssociativeRule, log: Sequence[Recognition],
              now: int) -> Optional[list[Prediction]]:
    """Predictions when the condition fires at `now`, else None."""
    cond = eval_micro_situation(rule.condition, log, now)
    if cond < rule.threshold:
        return None
    return [Prediction(c.subject, (now + c.window[0], now + c.window[1]),
                       cond * rule.p)
            for c in rule.consequents]


# ---------------------------------------------------------------------------
# mining
# ---------------------------------------------------------------------------

def mine_rules(log: Sequence[Recognition], window: int = 5,
               min_support: int = 10, min_p: float = 0.7,
               cfg: Config = DEFAULT) -> list[AssociativeRule]:
    """Frequent timed implications, negative literals included.

    A condition occurs at tick t when every positive literal was recognized
    inside (t-window, t] (one of them exactly at t, anchoring the match) and
    no negative literal was.  A consequent hits when it is recognized inside
    (t, t+window].  Probability is Laplace smoothed.
    """
    if not log:
        raise RuleError("cannot mine an empty log")
    if window < 1:
        raise RuleError("window must be at least one tick")
    t0 = min(r.t for r in log)
    t1 = max(r.t for r in log)
    ticks = range(t0, t1 + 1)
    subjects = sorted({r.subject for r in log})
    strong = [r for r in log if r.score >= cfg.recognition_min_score]

    at: dict[str, set[int]] = {s: set() for s in subjects}
    in_window: dict[str, set[int]] = {s: set() for s in subjects}
    future: dict[str, set[int]] = {s: set() for s in subjects}
    for r in strong:
        at[r.subject].add(r.t)
        for t in range(r.t, min(r.t + window, t1 + 1)):
            in_window[r.subject].add(t)
        for t in range(max(r.t - window, t0), r.t):
            future[r.subject].add(t)

    all_ticks = set(ticks)
    literals = [(s, True) for s in subjects] + [(s, False) for s in subjects]
    found: list[tuple] = []
    max_k = min(cfg.mining_max_condition, len(subjects))
    for k in range(1, max_k + 1):
        for combo in itertools.combinations(literals, k):
            named = [s for s, _ in combo]
            if len(set(named)) != k:
                continue
            pos = [s for s, sign in combo if sign]
            neg = [s for s, sign in combo if not sign]
            occur = set(all_ticks)
            for s in pos:
                occur &= in_window[s]
            if pos:
                anchors = set()
                for s in pos:
                    anchors |= at[s]
                occur &= anchors
            for s in neg:
                occur -= in_window[s]
            n_cond = len(occur)
            if n_cond < min_support:
                continue
            for target in subjects:
                if target in named:
                    continue
                n_hit = len(occur & future[target])
                p = (n_hit + 1) / (n_cond + 2)
                if p < min_p:
                    continue
                members = tuple(
                    MsMember(s, sign, cfg.recognition_min_score,
                             (-(window - 1), 0))
                    for s, sign in sorted(combo, key=lambda x: (x[0], not x[1])))
                rule = AssociativeRule(
                    MicroSituation(members),
                    (Consequent(target, (1, window)),),
                    n_cond=n_cond, n_hit=n_hit,
                    threshold=cfg.rule_threshold)
                sort_key = (-rule.p, -rule.support,
                            tuple((m.subject, m.positive) for m in members),
                            target)
                found.append((sort_key, rule))
    found.sort(key=lambda kv: kv[0])
    return [rule for _, rule in found]


# ---------------------------------------------------------------------------
# subjects and legitimacy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Subject:
    """A recognizable information unit; legitimate once rules depend on it."""
    id: str
    recognizer: object = None     # Signature, (Structure, mask) or Schema
    lineage: tuple[str, ...] = ()
    legitimacy: int = 0
    candidate_only: bool = True


def recognize(subject: Subject, observation,
              catalog: Optional[TypeCatalog] = None,
              fuel: Optional[int] = None) -> float:
    """Converge the subject's checks into a single score.

    Signature recognizers score an assertion list; template recognizers
    score 1.0 when the pattern occurs in the observed structure (after the
    mask, if any); schema detectors run on the structure and report 1.0 when
    the output carries a part typed "1".
    """
    from .pixels import Signature, evaluate_signature
    from .structure import occurrences
    rec = subject.recognizer
    if rec is None:
        raise RuleError(f"subject {subject.id} carries no recognizer")
    if isinstance(rec, Signature):
        return evaluate_signature(rec, observation)[0]
    if isinstance(rec, Schema):
        out = execute(rec, observation, fuel)
        return 1.0 if "1" in out.part_types else 0.0
    if isinstance(rec, tuple) and len(rec) == 2:
        pattern, mask = rec
        target = observation
        if mask is not None:
            target = apply_morphism(observation, mask, catalog)
        return 1.0 if occurrences(target, pattern, catalog) else 0.0
    raise RuleError(f"subject {subject.id} has an unsupported recognizer")


def rule_subjects(rule: AssociativeRule) -> set[str]:
    out = {m.subject for m in rule.condition.members}
    out |= {m.subject for m in rule.condition.relations}
    out |= {c.subject for c in rule.consequents}
    return out


def update_legitimacy(subjects: Sequence[Subject],
                      rules: Sequence[AssociativeRule],
                      validations: Sequence[tuple[AssociativeRule, bool]],
                      cfg: Config = DEFAULT) -> list[Subject]:
    """Count, per subject, the validated rules that reference it.

    A rule counts as validated when its Laplace-smoothed hit rate over the
    supplied outcomes reaches the validation threshold.  Subjects left at
    zero stay flagged as candidates: their emergence is not established.
    """
    tallies: dict[int, list[int]] = {}
    order: dict[int, AssociativeRule] = {}
    for rule, outcome in validations:
        key = id(rule)
        order[key] = rule
        hits, n = tallies.get(key, [0, 0])
        tallies[key] = [hits + (1 if outcome else 0), n + 1]
    validated: list[AssociativeRule] = []
    for key, (hits, n) in tallies.items():
        if (hits + 1) / (n + 2) >= cfg.validation_threshold:
            validated.append(order[key])
    out = []
    for subj in subjects:
        count = sum(1 for rule in validated if subj.id in rule_subjects(rule))
        out.append(replace(subj, legitimacy=count, candidate_only=count == 0))
    return out


# ---------------------------------------------------------------------------
# regularity detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    case: str
    evidence: dict


def detect_regularity_case1(pop: Sequence[Structure], k_max: int = 3,
                            catalog: Optional[TypeCatalog] = None,
                            cfg: Config = DEFAULT) -> list[RegularityReport]:
    """Connected motifs of up to k_max parts occurring in >= 2 members."""
    if k_max > cfg.motif_size_cap:
        raise RuleError(f"k_max exceeds the motif cap of {cfg.motif_size_cap}")
    hits: dict[str, dict[int, list[tuple[str, ...]]]] = {}
    for idx, s in enumerate(pop):
        for size in range(1, min(k_max, s.n) + 1):
            for members in _connected_subsets(s, size):
                sub = induced(s, members)
                key = canonical_form(sub, catalog)
                hits.setdefault(key, {}).setdefault(idx, []).append(
                    tuple(sorted(members)))
    reports = []
    for key in sorted(hits):
        witnesses = hits[key]
        if len(witnesses) < 2:
            continue
        reports.append(RegularityReport("identical-portions", {
            "motif": key,
            "witnesses": [(idx, sorted(witnesses[idx]))
                          for idx in sorted(witnesses)],
        }))
    return reports


def _element_count(s: Structure) -> int:
    return s.n + len(s.relations) + sum(len(r.attrs) for r in s.relations)


def edit_distance(a: Structure, b: Structure,
                  catalog: Optional[TypeCatalog] = None
                  ) -> Optional[tuple[int, list[str]]]:
    """Exact minimal edit script over part-type substitutions and relation
    insert/delete/relabel, found by search over all part bijections.

    None when the part counts differ (parts are never added or removed)."""
    if a.n != b.n or a.oriented != b.oriented:
        return None
    keys_a = _key_map(a, catalog)
    keys_b = _key_map(b, catalog)
    parts_b = list(b.parts)
    best: Optional[tuple[int, list[str]]] = None
    for perm in itertools.permutations(parts_b):
        mapping = dict(zip(a.parts, perm))
        cost = 0
        script = []
        for p in a.parts:
            if keys_a[p] != keys_b[mapping[p]]:
                cost += 1
                script.append(f"retype {p} -> type of {mapping[p]}")
        pair_a: dict[tuple, list[Relation]] = {}
        pair_b: dict[tuple, list[Relation]] = {}
        for r in a.relations:
            ends = (mapping[r.a], mapping[r.b])
            if not a.oriented:
                ends = tuple(sorted(ends))
            pair_a.setdefault(ends, []).append(r)
        for r in b.relations:
            ends = (r.a, r.b) if b.oriented else tuple(sorted((r.a, r.b)))
            pair_b.setdefault(ends, []).append(r)
        for ends in set(pair_a) | set(pair_b):
            ra = pair_a.get(ends, [])
            rb = pair_b.get(ends, [])
            tags_a = sorted((r.label, r.attrs) for r in ra)
            tags_b = sorted((r.label, r.attrs) for r in rb)
            shared = 0
            tb = list(tags_b)
            for t in tags_a:
                if t in tb:
                    tb.remove(t)
                    shared += 1
            unmatched_a = len(tags_a) - shared
            unmatched_b = len(tags_b) - shared
            relabels = min(unmatched_a, unmatched_b)
            cost += relabels + abs(unmatched_a - unmatched_b)
            for _ in range(relabels):
                script.append(f"relabel relation {ends}")
            for _ in range(abs(unmatched_a - unmatched_b)):
                script.append(f"adjust relation {ends}")
        if best is None or cost < best[0]:
            best = (cost, script)
            if cost == 0:
                break
    return best


def detect_regularity_case2(a: Structure, b: Structure, eps: float = None,
                            catalog: Optional[TypeCatalog] = None,
                            cfg: Config = DEFAULT) -> Optional[RegularityReport]:
    """Near-identity: the minimal edit stays under the eps fraction."""
    eps = cfg.edit_eps if eps is None else eps
    if not 0 < eps <= 0.5:
        raise RuleError("eps must lie in (0, 0.5]")
    found = edit_distance(a, b, catalog)
    if found is None:
        return None
    cost, script = found
    budget = eps * max(_element_count(a), _element_count(b))
    if cost > budget:
        return None
    return RegularityReport("near-identical", {
        "distance": cost, "budget": budget, "script": script})


@dataclass(frozen=True)
class Recipe:
    partition_rank: Optional[int]
    mask_indices: tuple[int, ...]

    def describe(self) -> str:
        steps = []
        if self.partition_rank is not None:
            steps.append(f"quotient by canonical partition {self.partition_rank}")
        if self.mask_indices:
            steps.append("mask " + "+".join(str(i) for i in self.mask_indices))
        return "; ".join(steps) if steps else "identity"


def detect_regularity_case3(pop: Sequence[Structure],
                            masks: Sequence[MorphismMask] = (),
                            catalog: Optional[TypeCatalog] = None,
                            partition_ranks: int = 2,
                            cfg: Config = DEFAULT) -> list[RegularityReport]:
    """Derivation recipes (quotient rank x mask subset) that make members
    coincide.  The search space is capped; overflow flags partial results."""
    catalog = catalog if catalog is not None else TypeCatalog()
    recipes: list[Recipe] = []
    mask_subsets = []
    for k in range(0, len(masks) + 1):
        mask_subsets.extend(itertools.combinations(range(len(masks)), k))
    for rank in [None] + list(range(partition_ranks)):
        for subset in mask_subsets:
            recipes.append(Recipe(rank, tuple(subset)))
    partial = len(recipes) > cfg.recipe_cap
    recipes = recipes[:cfg.recipe_cap]

    reports = []
    for recipe in recipes:
        forms: dict[str, list[int]] = {}
        for idx, s in enumerate(pop):
            derived = s
            try:
                if recipe.partition_rank is not None:
                    parts = canonical_partitions(derived, catalog, cfg)
                    if recipe.partition_rank >= len(parts):
                        continue
                    derived = quotient(derived, parts[recipe.partition_rank],
                                       catalog)
                mask = MorphismMask.make()
                for i in recipe.mask_indices:
                    mask = mask.union(masks[i])
                if not mask.is_empty():
                    derived = apply_morphism(derived, mask, catalog)
            except StructureError:
                continue
            forms.setdefault(canonical_form(derived, catalog), []).append(idx)
        for key in sorted(forms):
            members = forms[key]
            if len(members) >= 2:
                reports.append(RegularityReport("derived-coincidence", {
                    "recipe": recipe.describe(),
                    "members": members,
                    "partial": partial,
                }))
    return reports


def verify_regularity_case4(seq: Sequence[Structure], op: Schema,
                            fuel: Optional[int] = None) -> bool:
    """True when the operator maps each element onto the next, up to
    isomorphism.  Discovery is out of scope; only verification is offered."""
    if len(seq) < 2:
        raise RuleError("need at least two structures to verify an operator")
    for cur, nxt in zip(seq, seq[1:]):
        out = execute(op, cur, fuel)
        if isomorphic(out, nxt) is None:
            return False
    return True
