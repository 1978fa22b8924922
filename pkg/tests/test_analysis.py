import math

import pytest

from corpus_util import load_corpus
from ooprompt import errors
from ooprompt.analysis import (
    build_static_report,
    detect_semantic_conflicts,
    detect_structural_conflicts,
    estimate_tokens,
    jaccard,
    safety_scan,
    template_similarity,
    whitespace_token_count,
)
from ooprompt.assistants.gateway import Gateway, mock_gateway
from ooprompt.deployment import DeploymentArtifact, render_nl
from ooprompt.mapping import Mapper
from ooprompt.model import PromptObject, PropertySpec, add_property
from ooprompt.templates import TemplateLibrary, seed_templates


def build(*specs, title="Test"):
    obj = PromptObject(id="po-0001", title=title)
    for i, sp in enumerate(specs, 1):
        if isinstance(sp, tuple):
            sp = PropertySpec(name=sp[0], value=sp[1])
        obj = add_property(obj, sp, f"pr-{i:04d}")
    return obj


def artifact(text):
    return DeploymentArtifact("po-0001", 1, "natural_language", text)


class TestStructuralConflicts:
    def test_include_exclude_collision(self):
        # The mutation API refuses duplicate names, so hand-build the fixture.
        obj = PromptObject.from_dict({
            "id": "po-0001", "title": "Contradiction", "version": 1,
            "properties": [
                {"id": "pr-0001", "name": "happy tone",
                 "value": {"kind": "text", "text": "lots"}},
                {"id": "pr-0002", "name": " Happy Tone ", "polarity": "exclude",
                 "value": {"kind": "text", "text": "none"}},
            ],
        })
        conflicts = detect_structural_conflicts(obj)
        assert [c.kind for c in conflicts] == ["include_exclude"]
        assert set(conflicts[0].prop_ids) == {"pr-0001", "pr-0002"}

    def test_sequential_gap(self):
        from ooprompt.model import Relation

        obj = build(
            PropertySpec(name="a", value="1", relation=Relation.sequential("g", 1)),
            PropertySpec(name="b", value="2", relation=Relation.sequential("g", 3)),
        )
        conflicts = detect_structural_conflicts(obj)
        assert [c.kind for c in conflicts] == ["sequential_gap"]

    def test_clean_corpus_has_zero_false_positives(self):
        for name, obj, registry, expected in load_corpus("clean"):
            assert expected == []
            conflicts = detect_structural_conflicts(obj, registry)
            assert conflicts == [], f"false positive in {name}: {conflicts}"

    def test_defect_corpus_fully_detected(self):
        for name, obj, registry, expected in load_corpus("defects"):
            kinds = {c.kind for c in detect_structural_conflicts(obj, registry)}
            assert kinds == set(expected), f"{name}: {kinds} != {expected}"


class TestSemanticConflicts:
    def test_happy_tone_bad_ending(self):
        obj = build(("tone", "humorous, happy"), ("ending", "bad ending"))
        conflicts = detect_semantic_conflicts(obj, mock_gateway())
        assert len(conflicts) == 1
        assert set(conflicts[0].prop_ids) == {"pr-0001", "pr-0002"}
        assert conflicts[0].suggested_fix

    def test_horror_for_children(self):
        obj = build(("style", "horror"), ("audience", "children"))
        conflicts = detect_semantic_conflicts(obj, mock_gateway())
        assert len(conflicts) == 1

    def test_single_property_short_circuits(self):
        obj = build(("style", "horror"))
        assert detect_semantic_conflicts(obj, Gateway(None)) == []


class TestTokens:
    def test_empty_artifact(self):
        assert estimate_tokens(artifact("")) == 0

    def test_formula(self):
        assert estimate_tokens(artifact("x" * 400)) == 100
        assert estimate_tokens(artifact("x" * 401)) == 101

    def test_within_band_of_word_count_oracle_on_corpus(self):
        for name, obj, registry, _ in load_corpus("clean"):
            if not obj.properties:
                continue
            text = render_nl(obj, registry).text
            estimate = estimate_tokens(artifact(text))
            # Standard conversion: three words of prose per four model tokens.
            oracle = math.ceil(whitespace_token_count(text) * 4 / 3)
            assert oracle > 0
            ratio = estimate / oracle
            assert 0.75 <= ratio <= 1.25, f"{name}: ratio {ratio:.3f}"


class TestSimilarity:
    @pytest.fixture
    def library(self):
        return TemplateLibrary(seed_templates())

    def test_untouched_template_instance_scores_one(self, library):
        from ooprompt.templates import instantiate_selective

        obj = PromptObject(id="po-0001", title="From template")
        for i, spec in enumerate(instantiate_selective(library.get("trip-planner")), 1):
            obj = add_property(obj, spec, f"pr-{i:04d}")
        ranked = template_similarity(obj, library)
        assert ranked[0] == ("trip-planner", 1.0)

    def test_partial_overlap_matches_hand_computation(self):
        from ooprompt.templates import Template, TemplateDefault

        library = TemplateLibrary([Template(
            id="t", display_name="t",
            defaults=[TemplateDefault(n) for n in ("a", "b", "c", "d")],
        )])
        obj = build(("a", "1"), ("b", "2"), ("x", "3"), ("y", "4"))
        [(tid, score)] = template_similarity(obj, library)
        assert tid == "t"
        assert math.isclose(score, 2 / 6, rel_tol=0, abs_tol=1e-12)

    def test_disjoint_names_score_zero(self, library):
        obj = build(("zzz", "1"), ("qqq", "2"))
        scores = dict(template_similarity(obj, library))
        assert scores["code-generator"] == 0.0

    def test_sorted_descending_with_id_tiebreak(self, library):
        obj = build(("zzz", "1"))
        ranked = template_similarity(obj, library)
        scores = [s for _, s in ranked]
        assert scores == sorted(scores, reverse=True)
        assert [t for t, _ in ranked] == sorted(t for t, _ in ranked)

    def test_empty_library(self):
        with pytest.raises(errors.EmptyLibrary):
            template_similarity(build(("a", "1")), TemplateLibrary())

    def test_jaccard_properties(self):
        assert jaccard({"a"}, {"a"}) == 1.0
        assert jaccard({"a"}, {"b"}) == 0.0
        assert jaccard({"a", "b"}, {"b", "c"}) == jaccard({"b", "c"}, {"a", "b"})


class TestSafety:
    def test_horror_for_children_rule_tier(self):
        obj = build(("style", "horror"), ("audience", "children"))
        scan = safety_scan(obj, gateway=None)
        assert [f.category for f in scan.flags] == ["dark_theme_for_children"]
        assert scan.flags[0].prop_id == "pr-0001"

    def test_no_audience_no_rule_flags(self):
        obj = build(("Destination", "LA"), ("Interests", "food"))
        scan = safety_scan(obj, gateway=None)
        assert scan.flags == []

    def test_blocklist_is_configurable(self):
        obj = build(("theme", "melancholy"), ("audience", "for children"))
        assert safety_scan(obj, ["gore"], gateway=None).flags == []
        scan = safety_scan(obj, ["melancholy"], gateway=None)
        assert len(scan.flags) == 1

    def test_provider_down_keeps_rule_tier_and_marks_skip(self):
        obj = build(("style", "horror"), ("audience", "children"))
        scan = safety_scan(obj, gateway=Gateway(None))
        assert len(scan.flags) == 1
        assert scan.semantic_skipped and scan.skip_reason == "provider_unavailable"

    def test_semantic_tier_merges_assistant_flags(self):
        obj = build(("style", "horror"), ("audience", "children"))
        scan = safety_scan(obj, gateway=mock_gateway())
        categories = sorted(f.category for f in scan.flags)
        assert categories == ["dark_theme", "dark_theme_for_children"]


class TestReport:
    @pytest.fixture
    def library(self):
        return TemplateLibrary(seed_templates())

    def _trip(self):
        for name, obj, registry, _ in load_corpus("clean"):
            if name == "trip_nested":
                return obj, registry
        raise AssertionError("trip fixture missing")

    def test_mock_mode_trip_report(self, library):
        obj, registry = self._trip()
        gateway = mock_gateway()
        report = build_static_report(
            obj, library, render_nl(obj, registry),
            gateway=gateway, mapper=Mapper(gateway), objects=registry,
        )
        assert report.structural_conflicts == []
        assert report.template_similarity[0][0] == "trip-planner"
        assert report.completeness_suggestions is not None
        assert report.token_estimate > 0
        assert report.skipped == []

    def test_offline_degradation_labels_skips(self, library):
        obj, registry = self._trip()
        report = build_static_report(
            obj, library, render_nl(obj, registry),
            gateway=None, mapper=None, objects=registry,
        )
        assert report.structural_conflicts == []
        assert report.token_estimate > 0
        assert report.template_similarity
        skipped = {s["section"] for s in report.skipped}
        assert skipped == {"semantic_conflicts", "semantic_safety",
                           "completeness_suggestions"}

    def test_unconfigured_provider_marks_sections(self, library):
        obj, registry = self._trip()
        gateway = Gateway(None)
        report = build_static_report(
            obj, library, render_nl(obj, registry),
            gateway=gateway, mapper=Mapper(gateway), objects=registry,
        )
        reasons = {s["section"]: s["reason"] for s in report.skipped}
        assert reasons == {
            "semantic_conflicts": "provider_unavailable",
            "semantic_safety": "provider_unavailable",
            "completeness_suggestions": "provider_unavailable",
        }

    def test_report_prop_ids_resolve(self, library):
        obj = build(("style", "horror"), ("audience", "children"),
                    ("tone", "humorous, happy"), ("ending", "bad ending"))
        gateway = mock_gateway()
        report = build_static_report(
            obj, library, render_nl(obj), gateway=gateway, mapper=Mapper(gateway),
            objects={obj.id: obj},
        )
        known = {p.id for p in obj.properties}
        for conflict in report.semantic_conflicts:
            assert set(conflict.prop_ids) <= known
        for flag in report.safety_flags:
            assert flag.prop_id is None or flag.prop_id in known


JACCARD_ORACLE_PAIRS = [
    ({"a"}, {"a"}, 1.0),
    ({"a"}, {"b"}, 0.0),
    ({"a", "b"}, {"a"}, 1 / 2),
    ({"a", "b"}, {"b", "c"}, 1 / 3),
    ({"a", "b", "c"}, {"a", "b", "c"}, 1.0),
    ({"a", "b", "c"}, {"a"}, 1 / 3),
    ({"a", "b", "c", "d"}, {"c", "d", "e"}, 2 / 5),
    ({"x"}, set(), 0.0),
    (set(), set(), 1.0),
    ({"a", "b"}, {"a", "b", "c", "d"}, 1 / 2),
    ({"p", "q", "r"}, {"q", "r", "s"}, 2 / 4),
    ({"1", "2", "3", "4", "5"}, {"3", "4", "5", "6"}, 3 / 6),
    ({"m"}, {"m", "n"}, 1 / 2),
    ({"m", "n", "o"}, {"o", "m", "n"}, 1.0),
    ({"u", "v"}, {"w", "x"}, 0.0),
    ({"a", "b", "c"}, {"b"}, 1 / 3),
    ({"d", "e", "f", "g"}, {"d", "e", "f", "g", "h", "i"}, 4 / 6),
    ({"k"}, {"k", "l", "m", "n"}, 1 / 4),
    ({"a", "z"}, {"z"}, 1 / 2),
    ({"long", "name", "set"}, {"name", "set", "longer"}, 2 / 4),
]


def test_jaccard_matches_hand_computed_oracle_pairs():
    assert len(JACCARD_ORACLE_PAIRS) == 20
    for left, right, expected in JACCARD_ORACLE_PAIRS:
        assert abs(jaccard(left, right) - expected) <= 1e-9
