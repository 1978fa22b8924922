"""Acceptance suite: one test per shipping criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``)."""

import hashlib
import itertools
import json
import math
import os
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

from corpus_util import load_corpus
from ooprompt import errors
from ooprompt.analysis import (
    detect_structural_conflicts,
    jaccard,
    whitespace_token_count,
)
from ooprompt.assistants.gateway import AssistantRequest, mock_gateway
from ooprompt.assistants.mock import write_fixture
from ooprompt.deployment import (
    enumerate_variants,
    render_hybrid,
    render_json,
    render_nl,
    variant_count,
)
from ooprompt.evaluation import Criterion, run_comparison
from ooprompt.model import (
    Polarity,
    PromptObject,
    PropertySpec,
    Tier,
    validate_object,
)
from ooprompt.templates import (
    Template,
    TemplateDefault,
    instantiate_selective,
    merge_templates,
    seed_templates,
)
from ooprompt.wire import canonical_dumps
from ooprompt.workspace import Workspace
from test_analysis import JACCARD_ORACLE_PAIRS
from walkthrough_util import GOLDEN_DIR, run_walkthrough

REPO_ROOT = Path(__file__).resolve().parent.parent


def _report(criterion: str, passed: bool = True) -> None:
    print(f"{'PASS' if passed else 'FAIL'}: {criterion}", flush=True)


# --- 1. walkthrough golden ---

def test_walkthrough_golden_reproduces_committed_files(tmp_path):
    criterion = "walkthrough golden test (byte-exact, < 5 s offline)"
    started = time.perf_counter()
    produced = run_walkthrough(tmp_path / "ws")
    elapsed = time.perf_counter() - started
    try:
        for name, content in produced.items():
            golden = (GOLDEN_DIR / name).read_text(encoding="utf-8")
            assert content == golden, f"{name} deviates from its golden file"
        assert elapsed < 5.0, f"walkthrough took {elapsed:.2f} s"
        nl = produced["walkthrough_nl.txt"]
        assert "- Destination: Los Angeles" in nl
        assert "(for example: taco trucks; BBQ)" in nl
        assert "- Schedule:" in nl and "    - Day 1:" in nl
        final_object = json.loads(produced["object_po-0001.json"])
        assert any(p["name"] == "Daily pace" for p in final_object["properties"])
        report = json.loads(produced["walkthrough_report.json"])
        names = [i["spec"]["name"] for i in
                 report["data"]["completeness_suggestions"]["items"]]
        assert names == ["Daily pace"]
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 2. model invariant suite ---

def _random_workspace_script(rng: random.Random) -> None:
    ws = Workspace.in_memory()
    obj = ws.create_object(f"Object {rng.randint(0, 10**6)}")
    counter = 0
    for _ in range(rng.randint(4, 9)):
        roll = rng.random()
        try:
            if roll < 0.40 or not obj.properties:
                counter += 1
                obj = ws.add_property(obj.id, PropertySpec(
                    name=f"p{counter}",
                    value=f"v{rng.randint(0, 99)}",
                    tier=rng.choice(list(Tier)),
                    polarity=rng.choice([Polarity.INCLUDE, Polarity.INCLUDE,
                                         Polarity.EXCLUDE]),
                ))
            elif roll < 0.60:
                target = rng.choice(obj.properties)
                obj = ws.update_property(obj.id, target.id, {
                    "value": f"w{rng.randint(0, 99)}",
                    "tier": rng.choice(list(Tier)).value,
                })
            elif roll < 0.72:
                target = rng.choice(obj.properties)
                obj = ws.remove_property(obj.id, target.id)
            elif roll < 0.84:
                ids = [p.id for p in obj.properties]
                rng.shuffle(ids)
                obj = ws.reorder_properties(obj.id, ids)
            elif roll < 0.92:
                target = rng.choice(obj.properties)
                obj, _child = ws.nest_child(obj.id, target.id)
            else:
                obj = ws.restore(obj.id, rng.randint(1, obj.version))
        except errors.OOPromptError:
            continue
        assert validate_object(obj, ws.objects) == []
        records = ws.history.records(obj.id)
        assert [r.version for r in records] == list(range(1, obj.version + 1))
    # Snapshots stay frozen while the object keeps moving.
    frozen = [json.loads(json.dumps(r.snapshot)) for r in ws.history.records(obj.id)]
    ws.add_property(obj.id, PropertySpec(name="tail", value="end"))
    for before, after in zip(frozen, ws.history.records(obj.id)):
        assert before == after.snapshot
    # restore(v) deep-equals snapshot v, modulo the advancing version counter.
    target_version = rng.randint(1, obj.version)
    snapshot = ws.history.get(obj.id, target_version).snapshot
    restored = ws.restore(obj.id, target_version)
    strip = lambda doc: {k: v for k, v in doc.items() if k != "version"}
    assert strip(restored.to_dict()) == strip(snapshot)


def test_model_invariant_suite_1000_scripts():
    criterion = "model invariant suite (1,000 randomized edit scripts, < 60 s)"
    started = time.perf_counter()
    try:
        for seed in range(1000):
            _random_workspace_script(random.Random(seed))
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"invariant suite took {elapsed:.1f} s"
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 3. inheritance laws ---

def _random_template(rng: random.Random, tid: str, pool: list[str]) -> Template:
    names = rng.sample(pool, rng.randint(1, min(8, len(pool))))
    return Template(id=tid, display_name=tid,
                    defaults=[TemplateDefault(n, f"{tid}:{n}") for n in names])


def test_inheritance_laws():
    criterion = "inheritance laws (instantiate-all, merge counts, associativity x200)"
    try:
        for template in seed_templates():
            specs = instantiate_selective(template)
            got = [(s.name, s.normalized_value().text) for s in specs]
            assert got == [(d.name, d.value) for d in template.defaults]

        rng = random.Random(2024)
        pool = [f"n{i}" for i in range(10)]
        for trial in range(200):
            a = _random_template(rng, f"a{trial}", pool)
            b = _random_template(rng, f"b{trial}", pool)
            collisions = {d.name for d in a.defaults} & {d.name for d in b.defaults}
            merged = merge_templates([a, b])
            assert len(merged) == len(a.defaults) + len(b.defaults) - len(collisions)
            by_name = {s.name: s for s in merged}
            for name in collisions:
                assert by_name[name].normalized_value().text == f"a{trial}:{name}"
                lineage = [r.uri for r in by_name[name].references]
                assert f"template:b{trial}" in lineage

        def mapping(specs):
            return {s.name: s.normalized_value().text for s in specs}

        for trial in range(200):
            a = _random_template(rng, f"x{trial}", pool)
            b = _random_template(rng, f"y{trial}", pool)
            c = _random_template(rng, f"z{trial}", pool)
            pseudo = Template(
                id="ab", display_name="ab",
                defaults=[TemplateDefault(s.name, s.normalized_value().text or "")
                          for s in merge_templates([a, b])],
            )
            assert mapping(merge_templates([a, b, c])) == \
                   mapping(merge_templates([pseudo, c]))
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 4. rendering determinism ---

_RENDER_HASH_SCRIPT = """
import hashlib, json, sys
from pathlib import Path
from ooprompt.model import PromptObject
from ooprompt.deployment import render_nl, render_json, render_hybrid

corpus = json.loads(Path(sys.argv[1]).read_text())
for name, entry in corpus.items():
    obj = PromptObject.from_dict(entry["object"])
    registry = {o["id"]: PromptObject.from_dict(o)
                for o in entry.get("children", [])}
    registry[obj.id] = obj
    for fmt, renderer in (("nl", render_nl), ("json", render_json),
                          ("hybrid", render_hybrid)):
        digest = hashlib.sha256(renderer(obj, registry).text.encode()).hexdigest()
        print(name, fmt, digest)
"""


def _corpus_bundle(tmp_path: Path) -> Path:
    bundle = {}
    for name, obj, registry, _ in load_corpus("clean"):
        bundle[name] = {
            "object": obj.to_dict(),
            "children": [o.to_dict() for oid, o in registry.items() if oid != obj.id],
        }
    walkthrough_object = json.loads(
        (GOLDEN_DIR / "object_po-0001.json").read_text(encoding="utf-8"))
    walkthrough_child = json.loads(
        (GOLDEN_DIR / "object_po-0002.json").read_text(encoding="utf-8"))
    bundle["walkthrough"] = {"object": walkthrough_object,
                             "children": [walkthrough_child]}
    path = tmp_path / "corpus.json"
    path.write_text(json.dumps(bundle), encoding="utf-8")
    return path


def test_rendering_determinism_across_process_runs(tmp_path):
    criterion = "rendering determinism (byte-identical across two process runs)"
    try:
        bundle = _corpus_bundle(tmp_path)
        outputs = []
        for _ in range(2):
            result = subprocess.run(
                [sys.executable, "-c", _RENDER_HASH_SCRIPT, str(bundle)],
                capture_output=True, text=True, cwd=REPO_ROOT, check=True,
                env=dict(os.environ, PYTHONHASHSEED=str(random.randint(0, 9999))),
            )
            outputs.append(result.stdout)
        assert outputs[0] == outputs[1]
        assert len(outputs[0].strip().splitlines()) >= 3

        for name, obj, registry, _ in load_corpus("clean"):
            hybrid = render_hybrid(obj, registry).text
            body = render_json(obj, registry).text
            head, _, rest = hybrid.partition("```json\n")
            fenced, _, closing = rest.partition("\n```")
            assert head.strip() and closing.strip()
            assert fenced == body
            nl = render_nl(obj, registry).text
            if "Do NOT include:" in nl:
                marker = nl.index("Do NOT include:")
                for prop in obj.properties:
                    if prop.polarity is Polarity.EXCLUDE:
                        assert prop.name not in nl[:marker]
                        assert prop.name in nl[marker:]
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 5. variant enumeration ---

def test_variant_enumeration_against_bruteforce_oracle():
    criterion = "variant enumeration (count law + canonical order, 100 random objects)"
    rng = random.Random(99)
    try:
        for trial in range(100):
            obj = PromptObject(id="po-0001", title=f"V{trial}")
            for i in range(rng.randint(1, 5)):
                from ooprompt.model import add_property

                obj = add_property(obj, PropertySpec(
                    name=f"p{i}", value=f"v{i}",
                    candidates=[f"c{i}.{j}" for j in range(rng.randint(0, 3))],
                ), f"pr-{i:04d}")
            cap = rng.randint(1, 12)
            artifacts = enumerate_variants(obj, cap=cap, fmt="json")

            axes = [(p.id, 1 + len(p.candidates)) for p in obj.properties]
            combos = list(itertools.product(*(range(n) for _, n in axes)))
            assert variant_count(obj) == len(combos)
            assert len(artifacts) == min(cap, len(combos))
            expected = [
                ",".join(f"{pid}={idx}"
                         for (pid, _), idx in zip(axes, combo) if idx)
                for combo in combos[:cap]
            ]
            assert [a.variant_key for a in artifacts] == expected
            again = enumerate_variants(obj, cap=cap, fmt="json")
            assert [a.text for a in again] == [a.text for a in artifacts]
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 6. conflict detection ---

def test_conflict_detection_on_both_corpora():
    criterion = "conflict detection (100% on seeded defects, 0 false positives)"
    try:
        for name, obj, registry, expected in load_corpus("clean"):
            found = detect_structural_conflicts(obj, registry)
            assert found == [], f"false positive in {name}: {found}"
        for name, obj, registry, expected in load_corpus("defects"):
            kinds = {c.kind for c in detect_structural_conflicts(obj, registry)}
            assert kinds == set(expected), f"{name}: {kinds} != {expected}"
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 7. token estimate and similarity oracles ---

def test_token_estimate_and_jaccard_oracles():
    criterion = "token estimate within +/-25% of oracle; Jaccard matches to 1e-9"
    try:
        texts = []
        for name, obj, registry, _ in load_corpus("clean"):
            if obj.properties:
                texts.append(render_nl(obj, registry).text)
        texts.append((GOLDEN_DIR / "walkthrough_nl.txt").read_text(encoding="utf-8"))
        for text in texts:
            estimate = math.ceil(len(text) / 4)
            oracle = math.ceil(whitespace_token_count(text) * 4 / 3)
            assert 0.75 * oracle <= estimate <= 1.25 * oracle, \
                f"estimate {estimate} vs oracle {oracle}"
        assert len(JACCARD_ORACLE_PAIRS) == 20
        for left, right, expected in JACCARD_ORACLE_PAIRS:
            assert abs(jaccard(left, right) - expected) <= 1e-9
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 8. fan-out contract ---

def test_fanout_contract(tmp_path):
    criterion = "fan-out contract (parallel wall time < 450 ms; isolated failure)"
    try:
        for i, delay in enumerate((100, 200, 300)):
            write_fixture(tmp_path, "generator", f"slow{i}",
                          match={"prompt": f"task {i}"},
                          output={"text": f"done {i}"}, delay_ms=delay)
        gateway = mock_gateway([tmp_path])
        requests = [AssistantRequest(role="generator", input={"prompt": f"task {i}"})
                    for i in range(3)]
        started = time.perf_counter()
        results = gateway.fan_out(requests)
        elapsed_ms = (time.perf_counter() - started) * 1000
        assert elapsed_ms < 450, f"fan-out wall time {elapsed_ms:.0f} ms"
        assert [r.output["text"] for _, r in results] == ["done 0", "done 1", "done 2"]

        write_fixture(tmp_path, "generator", "slow1",
                      match={"prompt": "task 1"}, output={}, error="timeout")
        gateway = mock_gateway([tmp_path])
        results = gateway.fan_out(requests)
        assert results[0][1].output["text"] == "done 0"
        assert isinstance(results[1][1], errors.Timeout)
        assert results[2][1].output["text"] == "done 2"
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 9. evaluation determinism ---

def test_evaluation_determinism_and_weight_invariance(ws):
    criterion = "evaluation determinism (byte-stable report; x7 weights keep ranking)"
    try:
        obj = ws.create_object("Trip")
        ws.add_property(obj.id, PropertySpec(
            name="city", value="LA", candidates=["Tokyo", "Rome"],
        ))
        artifacts = enumerate_variants(ws.get_object(obj.id), cap=3, fmt="hybrid",
                                       objects=ws.objects)
        assert len(artifacts) == 3
        criteria = [Criterion("length-fit", "fits the length", 1.0),
                    Criterion("style-fit", "fits the style", 2.0)]
        first, _ = run_comparison(mock_gateway(), "run-0001", artifacts,
                                  criteria, ["default"])
        second, _ = run_comparison(mock_gateway(), "run-0001", artifacts,
                                   criteria, ["default"])
        assert canonical_dumps(first.to_dict()) == canonical_dumps(second.to_dict())
        scaled = [Criterion(c.id, c.description, c.weight * 7) for c in criteria]
        third, _ = run_comparison(mock_gateway(), "run-0001", artifacts,
                                  scaled, ["default"])
        assert third.ranking == first.ranking
        assert len(first.ranking) == 3
        assert all(v["justification"] for v in first.verdicts)
    except AssertionError:
        _report(criterion, passed=False)
        raise
    _report(criterion)


# --- 10. offline totality ---

_OFFLINE_DRIVER = """
import socket

def _deny(*args, **kwargs):
    raise RuntimeError("network disabled for offline totality check")

socket.socket.connect = _deny
socket.create_connection = _deny

import sys
import pytest

sys.exit(pytest.main(["-q", "-p", "no:cacheprovider", "tests/test_workspace_cli.py"]))
"""


def test_offline_totality_cli_suite_with_sockets_disabled():
    criterion = "offline totality (CLI suite green with OOPROMPT_MOCK=1, no network)"
    env = dict(os.environ, OOPROMPT_MOCK="1")
    result = subprocess.run(
        [sys.executable, "-c", _OFFLINE_DRIVER],
        capture_output=True, text=True, cwd=REPO_ROOT, env=env,
    )
    passed = result.returncode == 0
    _report(criterion, passed=passed)
    assert passed, result.stdout + result.stderr
