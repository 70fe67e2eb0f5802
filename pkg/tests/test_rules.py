import itertools
import random

import pytest

from structkit.derivation import MorphismMask
from structkit.rules import (
    AssociativeRule,
    Consequent,
    MicroSituation,
    MsMember,
    Recognition,
    RuleError,
    Subject,
    detect_regularity_case1,
    detect_regularity_case2,
    detect_regularity_case3,
    edit_distance,
    eval_micro_situation,
    eval_rule,
    mine_rules,
    update_legitimacy,
    verify_regularity_case4,
)
from structkit.schema import Binding, schema
from structkit.structure import TypeCatalog, isomorphic, structure

from loggen import absence_rule_log, independent_noise, planted_implication
from oracles import iso_oracle, random_structure


def path(n, types=None, ids=None, label="L"):
    ids = ids or [f"p{i}" for i in range(n)]
    types = types or {p: "T" for p in ids}
    rels = [(ids[i], ids[i + 1], label) for i in range(n - 1)]
    return structure(types, rels)


# --- rule evaluation ----------------------------------------------------------

POT_RULE = AssociativeRule(
    MicroSituation((
        MsMember("A", True, 0.7, (-3, 0)),
        MsMember("B", True, 0.7, (-3, 0)),
        MsMember("C", False, 0.5, (-3, 0)),
    )),
    (Consequent("X", (1, 4)),),
    n_cond=80, n_hit=64,
)


def test_rule_fires_and_predicts_window():
    log = [Recognition("A", 0.9, 3), Recognition("B", 0.85, 4)]
    preds = eval_rule(POT_RULE, log, now=4)
    assert preds is not None
    (p,) = preds
    assert p.subject == "X"
    assert p.window == (5, 8)
    assert abs(p.confidence - 0.85 * (65 / 82)) < 1e-9


def test_negation_annihilates():
    log = [Recognition("A", 0.9, 3), Recognition("B", 0.85, 4),
           Recognition("C", 1.0, 4)]
    assert eval_rule(POT_RULE, log, now=4) is None
    assert eval_micro_situation(POT_RULE.condition, log, 4) == 0.0


def test_chained_windows_fire_in_order():
    heats = AssociativeRule(
        MicroSituation((MsMember("pot-on-fire", True, 0.6, (-1, 0)),)),
        (Consequent("water-heats", (1, 3)),), n_cond=50, n_hit=48)
    boils = AssociativeRule(
        MicroSituation((MsMember("water-heats", True, 0.6, (-1, 0)),)),
        (Consequent("water-boils", (1, 5)),), n_cond=50, n_hit=45)
    log = [Recognition("pot-on-fire", 0.95, 10)]
    (p1,) = eval_rule(heats, log, now=10)
    assert p1.subject == "water-heats" and p1.window[0] == 11
    log.append(Recognition("water-heats", 0.9, 12))
    (p2,) = eval_rule(boils, log, now=12)
    assert p2.subject == "water-boils"
    assert p2.window[0] > p1.window[0] - 1   # strictly later chain


def test_condition_monotone_in_member_scores():
    base = [Recognition("A", 0.75, 0), Recognition("B", 0.8, 0),
            Recognition("C", 0.3, 0)]
    cond = POT_RULE.condition
    s0 = eval_micro_situation(cond, base, 0)
    raised_pos = [Recognition("A", 0.95, 0)] + base[1:]
    assert eval_micro_situation(cond, raised_pos, 0) >= s0
    raised_neg = base[:2] + [Recognition("C", 0.9, 0)]
    assert eval_micro_situation(cond, raised_neg, 0) <= s0


def test_negation_window_explicit():
    m = MsMember("C", False, 0.5, (-4, -1))
    ms = MicroSituation((m,))
    assert eval_micro_situation(ms, [], 10) == 1.0
    inside = [Recognition("C", 0.8, 7)]
    outside = [Recognition("C", 0.8, 10)]     # at now, outside [-4,-1]
    assert eval_micro_situation(ms, inside, 10) == pytest.approx(0.2)
    assert eval_micro_situation(ms, outside, 10) == 1.0


def test_micro_situation_size_bounds():
    with pytest.raises(RuleError):
        MicroSituation(())
    with pytest.raises(RuleError):
        MicroSituation(tuple(MsMember(f"s{i}") for i in range(9)))


# --- mining --------------------------------------------------------------------

def find_rule(rules, pos=(), neg=(), target=None):
    for r in rules:
        got_pos = {m.subject for m in r.condition.members if m.positive}
        got_neg = {m.subject for m in r.condition.members if not m.positive}
        tgt = {c.subject for c in r.consequents}
        if got_pos == set(pos) and got_neg == set(neg) \
                and (target is None or tgt == {target}):
            return r
    return None


def test_planted_rule_recovered():
    log = planted_implication(seed=71, n_triggers=250, p=0.8, window=5)
    rules = mine_rules(log, window=5, min_support=30, min_p=0.6)
    rule = find_rule(rules, pos=("A",), target="X")
    assert rule is not None
    assert abs(rule.p - 0.8) <= 0.05


def test_always_rule_near_certain():
    log = planted_implication(seed=5, n_triggers=100, p=1.0, window=5)
    rules = mine_rules(log, window=5, min_support=30, min_p=0.9)
    rule = find_rule(rules, pos=("A",), target="X")
    assert rule is not None
    assert rule.n_hit == rule.n_cond
    assert rule.p == pytest.approx((rule.n_cond + 1) / (rule.n_cond + 2))


def test_independent_noise_yields_nothing():
    log = independent_noise(seed=2033)
    rules = mine_rules(log, window=5, min_support=30, min_p=0.7)
    assert rules == []


def test_absence_rule_mined_and_fires():
    log = absence_rule_log(seed=9)
    rules = mine_rules(log, window=4, min_support=30, min_p=0.8)
    rule = find_rule(rules, neg=("W",), target="D")
    assert rule is not None and rule.p > 0.9
    held_out = absence_rule_log(seed=77)
    wet_tick = 5
    dry_tick = 18 + 6     # inside the first dry spell
    assert eval_rule(rule, held_out, wet_tick) is None
    preds = eval_rule(rule, held_out, dry_tick)
    assert preds and preds[0].subject == "D"


def test_time_translation_invariance():
    log = planted_implication(seed=13, n_triggers=60, p=0.9, window=4)
    shifted = [Recognition(r.subject, r.score, r.t + 500) for r in log]
    a = mine_rules(log, window=4, min_support=20, min_p=0.6)
    b = mine_rules(shifted, window=4, min_support=20, min_p=0.6)
    assert a == b


def test_laplace_estimate_properties():
    rng = random.Random(42)
    true_p = 0.65
    n = 1000
    hits = sum(1 for _ in range(n) if rng.random() < true_p)
    rule = AssociativeRule(MicroSituation((MsMember("A"),)),
                           (Consequent("X"),), n_cond=n, n_hit=hits)
    assert 0.0 < rule.p < 1.0
    assert abs(rule.p - hits / n) < 0.01


def test_mined_condition_arity_capped():
    log = planted_implication(seed=3, n_triggers=80, p=1.0, window=4)
    rules = mine_rules(log, window=4, min_support=10, min_p=0.5)
    assert all(len(r.condition.members) <= 3 for r in rules)
    assert all(c.window[0] >= 1 for r in rules for c in r.consequents)


# --- subject recognizers ----------------------------------------------------------

def test_subject_recognizers_all_three_kinds():
    from structkit.pixels import Signature, SignatureAtom, PropertyAssertion
    from structkit.rules import recognize

    sig = Subject("closed-shape", Signature(
        "closed-shape", (SignatureAtom("is-closed-cycle", True),)))
    assertions = [PropertyAssertion(("structure",), "is-closed-cycle", True)]
    assert recognize(sig, assertions) == 1.0
    assert recognize(sig, []) == 0.0

    template = Subject("has-ab-edge",
                       (structure({"u": "A", "v": "B"}, [("u", "v", "L")]), None))
    world = path(3, {"p0": "A", "p1": "B", "p2": "C"})
    assert recognize(template, world) == 1.0
    assert recognize(template, path(3)) == 0.0

    detector = schema([
        ("m1", Binding("MOVE", literal="first")),
        ("st", Binding("MEM_STORE", slot="m")),
        ("m2", Binding("MOVE", literal="last")),
        ("cp", Binding("COMPARE", slot="m")),
        ("b1", Binding("BIND", slot="r", literal="1")),
        ("e1", Binding("COPY", slot="r", fresh=True)),
    ], [("m1", "st", "next"), ("st", "m2", "next"), ("m2", "cp", "next"),
        ("cp", "b1", "then"), ("b1", "e1", "next")])
    same_ends = Subject("ends-match", detector)
    assert recognize(same_ends, path(3)) == 1.0
    assert recognize(same_ends, path(2, {"p0": "A", "p1": "B"})) == 0.0

    with pytest.raises(RuleError):
        recognize(Subject("bare"), path(2))


def test_catalog_reports_unresolved_type_ids():
    cat = TypeCatalog()
    cat.add_atomic("red")
    s = path(2, {"p0": "red", "p1": "mystery"})
    assert cat.unresolved(s) == ["mystery"]
    cat.add_atomic("mystery")
    assert cat.unresolved(s) == []


# --- legitimacy -----------------------------------------------------------------

def test_legitimacy_counts_validated_rules():
    rule = AssociativeRule(MicroSituation((MsMember("A"),)),
                           (Consequent("X"),), n_cond=40, n_hit=36)
    subjects = [Subject("A"), Subject("X"), Subject("Z")]
    validations = [(rule, True)] * 9 + [(rule, False)]
    out = update_legitimacy(subjects, [rule], validations)
    by_id = {s.id: s for s in out}
    assert by_id["A"].legitimacy == 1 and not by_id["A"].candidate_only
    assert by_id["X"].legitimacy == 1
    assert by_id["Z"].legitimacy == 0 and by_id["Z"].candidate_only


def test_refuted_rule_confers_nothing():
    rule = AssociativeRule(MicroSituation((MsMember("A"),)),
                           (Consequent("X"),), n_cond=40, n_hit=4)
    out = update_legitimacy([Subject("A")], [rule], [(rule, False)] * 10)
    assert out[0].legitimacy == 0 and out[0].candidate_only


def test_negative_polarity_subject_gains_legitimacy():
    dry_rule = AssociativeRule(
        MicroSituation((MsMember("water", False, 0.5, (-6, 0)),)),
        (Consequent("plants-dry", (1, 6)),), n_cond=50, n_hit=47)
    subjects = [Subject("water"), Subject("plants-dry")]
    out = update_legitimacy(subjects, [dry_rule], [(dry_rule, True)] * 8)
    assert all(s.legitimacy == 1 for s in out)


# --- regularity case 1 -----------------------------------------------------------

def motif_oracle(pop, k_max):
    """Exhaustive subgraph scan + pairwise isomorphism grouping."""
    from structkit.structure import induced
    found = []
    for idx, s in enumerate(pop):
        for size in range(1, min(k_max, s.n) + 1):
            for combo in itertools.combinations(s.parts, size):
                sub = induced(s, combo)
                if size > 1:
                    seen = {combo[0]}
                    frontier = [combo[0]]
                    while frontier:
                        cur = frontier.pop()
                        for r in sub.relations:
                            for a, b in ((r.a, r.b), (r.b, r.a)):
                                if a == cur and b not in seen:
                                    seen.add(b)
                                    frontier.append(b)
                    if len(seen) != size:
                        continue
                found.append((idx, frozenset(combo), sub))
    groups = []
    for idx, combo, sub in found:
        for g in groups:
            if iso_oracle(g[0][2], sub):
                g.append((idx, combo, sub))
                break
        else:
            groups.append([(idx, combo, sub)])
    out = []
    for g in groups:
        members = {idx for idx, _, _ in g}
        if len(members) >= 2:
            out.append(sorted((idx, tuple(sorted(combo))) for idx, combo, _ in g))
    return sorted(out)


def reports_to_witness_patterns(reports):
    out = []
    for rep in reports:
        pattern = []
        for idx, occs in rep.evidence["witnesses"]:
            pattern.extend((idx, tuple(occ)) for occ in occs)
        out.append(sorted(pattern))
    return sorted(out)


def test_case1_shared_typed_path():
    a = path(4, {"p0": "A", "p1": "B", "p2": "A", "p3": "C"})
    b = path(3, {"p0": "C", "p1": "A", "p2": "B"}, ids=["p0", "p1", "p2"])
    reports = detect_regularity_case1([a, b], k_max=3)
    assert reports
    assert any(len(r.evidence["witnesses"]) == 2 for r in reports)


def test_case1_disjoint_alphabets_empty():
    a = path(3, {"p0": "A", "p1": "A", "p2": "A"})
    b = path(3, {"p0": "Z", "p1": "Z", "p2": "Z"})
    assert detect_regularity_case1([a, b], k_max=3) == []


def test_case1_structure_with_itself_reports_everything():
    s = path(3, {"p0": "A", "p1": "B", "p2": "A"})
    reports = detect_regularity_case1([s, s], k_max=3)
    # every connected motif of s occurs in both copies
    assert reports_to_witness_patterns(reports) == motif_oracle([s, s], 3)


def test_case1_matches_exhaustive_oracle_random():
    rng = random.Random(321)
    for _ in range(6):
        pop = [random_structure(rng, max_n=8) for _ in range(rng.randint(2, 6))]
        got = reports_to_witness_patterns(detect_regularity_case1(pop, k_max=3))
        assert got == motif_oracle(pop, 3)


def test_case1_cap():
    with pytest.raises(RuleError):
        detect_regularity_case1([path(2)], k_max=6)


# --- regularity case 2 -----------------------------------------------------------

def test_case2_identical_distance_zero():
    s = path(5)
    rep = detect_regularity_case2(s, s, eps=0.1)
    assert rep is not None and rep.evidence["distance"] == 0


def test_case2_single_substitution_on_eleven_elements():
    a = path(6)                                   # 6 parts + 5 relations = 11
    b = path(6, {f"p{i}": ("T" if i != 2 else "S") for i in range(6)})
    rep = detect_regularity_case2(a, b, eps=0.10)
    assert rep is not None
    assert rep.evidence["distance"] == 1
    assert any("retype" in step for step in rep.evidence["script"])


def test_case2_path_vs_complete_graph_rejected():
    a = path(5)
    rels = [(f"p{i}", f"p{j}", "L") for i in range(5) for j in range(i + 1, 5)]
    b = structure({f"p{i}": "T" for i in range(5)}, rels)
    assert detect_regularity_case2(a, b, eps=0.10) is None


def test_case2_distance_symmetric():
    rng = random.Random(8)
    for _ in range(20):
        a = random_structure(rng, max_n=5)
        b = random_structure(rng, max_n=5)
        da = edit_distance(a, b)
        db = edit_distance(b, a)
        assert (da is None) == (db is None)
        if da is not None:
            assert da[0] == db[0]


def test_case2_eps_bounds():
    with pytest.raises(RuleError):
        detect_regularity_case2(path(2), path(2), eps=0.9)


# --- regularity case 3 -----------------------------------------------------------

def test_case3_already_isomorphic_empty_recipe():
    a = path(3)
    b = path(3, ids=["x", "y", "z"])
    reports = detect_regularity_case3([a, b])
    assert any(r.evidence["recipe"] == "identity"
               and r.evidence["members"] == [0, 1] for r in reports)


def test_case3_mask_recipe():
    a = path(3, {"p0": "A", "p1": "A", "p2": "B"})
    b = path(3, {"p0": "B", "p1": "B", "p2": "B"})
    merge = MorphismMask.make(merge_types={"A": "B"})
    reports = detect_regularity_case3([a, b], masks=[merge])
    assert any("mask 0" in r.evidence["recipe"]
               and r.evidence["members"] == [0, 1] for r in reports)
    assert not any(r.evidence["recipe"] == "identity" for r in reports)


def test_case3_quotient_rank_recipe():
    a = path(6, {f"p{i}": ("A" if i < 3 else "B") for i in range(6)})
    b = path(6, {f"p{i}": ("B" if i < 3 else "A") for i in range(6)})
    cat = TypeCatalog()
    reports = detect_regularity_case3([a, b], catalog=cat)
    assert any("quotient by canonical partition 0" == r.evidence["recipe"]
               and r.evidence["members"] == [0, 1] for r in reports)


# --- regularity case 4 -----------------------------------------------------------

APPEND = schema([
    ("b", Binding("BIND", slot="t", literal="T")),
    ("m", Binding("MOVE", literal="last")),
    ("c", Binding("COPY", slot="t")),
], [("b", "m", "next"), ("m", "c", "next")])


def test_case4_growing_paths_verified():
    seq = [path(n, label="adj") for n in range(2, 6)]
    assert verify_regularity_case4(seq, APPEND)


def test_case4_wrong_operator_refuted():
    noop = schema([("m", Binding("MOVE", literal="first"))])
    seq = [path(n, label="adj") for n in range(2, 6)]
    assert not verify_regularity_case4(seq, noop)


def test_case4_hidden_generator_recovered():
    from structkit.schema import execute
    append2 = schema([
        ("b", Binding("BIND", slot="t", literal="T")),
        ("m", Binding("MOVE", literal="last")),
        ("c1", Binding("COPY", slot="t")),
        ("m2", Binding("MOVE", literal="last")),
        ("c2", Binding("COPY", slot="t")),
    ], [("b", "m", "next"), ("m", "c1", "next"),
        ("c1", "m2", "next"), ("m2", "c2", "next")])
    seq = [path(2, label="adj")]
    for _ in range(3):
        seq.append(execute(append2, seq[-1]))
    assert verify_regularity_case4(seq, append2)
    assert not verify_regularity_case4(seq, APPEND)


def test_case4_needs_two():
    with pytest.raises(RuleError):
        verify_regularity_case4([path(2)], APPEND)
