"""Built-in mock fixtures installed into a fresh workspace.

Each entry matches one role-input projection (see ``mock.project``) and pins
the deterministic response the offline mock returns for it. Users can edit or
extend the generated files under ``fixtures/assistants/``.
"""

from __future__ import annotations

from pathlib import Path

from .mock import write_fixture

SEED_FIXTURES = [
    {
        "role": "extractor",
        "name": "trip_raw_intent",
        "match": {"raw_text": "Plan a trip to Los Angeles"},
        "output": {
            "properties": [
                {"name": "Destination", "value": "Los Angeles", "span": [15, 26]},
            ],
        },
    },
    {
        "role": "extractor",
        "name": "classify_code_example",
        "match": {"raw_text": "a python script that renames photo files by date"},
        "output": {
            "properties": [
                {"name": "output type", "value": "code", "span": [0, 0]},
                {"name": "task", "value": "rename photo files by date", "span": [0, 0]},
            ],
        },
    },
    {
        "role": "example_generator",
        "name": "interests_street_food",
        "match": {"name": "Interests", "value": "Local street food"},
        "output": {"examples": ["taco trucks", "BBQ"]},
    },
    {
        "role": "candidate_generator",
        "name": "destination_los_angeles",
        "match": {"name": "Destination", "value": "Los Angeles"},
        "output": {
            "candidates": ["LA, California", "the Los Angeles area", "L.A."],
        },
    },
    {
        "role": "implicit_suggester",
        "name": "trip_daily_pace",
        "match": {"properties": ["Destination", "Interests", "Schedule"]},
        "output": {
            "suggestions": [
                {
                    "name": "Daily pace",
                    "value": "relaxed, two major stops per day",
                    "rationale": "Pacing shapes how many attractions fit each day.",
                },
            ],
        },
    },
    {
        "role": "implicit_suggester",
        "name": "story_audience_occasion",
        "match": {"properties": ["output type", "topic"]},
        "output": {
            "suggestions": [
                {
                    "name": "audience",
                    "value": "",
                    "rationale": "Stories land differently for kids and adults.",
                },
                {
                    "name": "occasion",
                    "value": "",
                    "rationale": "Bedtime, classroom, and campfire stories differ.",
                },
            ],
        },
    },
    {
        "role": "relation_detector",
        "name": "story_steps",
        "match": {"properties": ["beginning", "events", "ending"]},
        "output": {
            "groups": [
                {"group": "storyline", "steps": ["beginning", "events", "ending"]},
            ],
        },
    },
    {
        "role": "conflict_checker",
        "name": "happy_tone_bad_ending",
        "match": {"pairs": [["ending", "bad ending"], ["tone", "humorous, happy"]]},
        "output": {
            "conflicts": [
                {
                    "properties": ["tone", "ending"],
                    "explanation": "A humorous, happy tone is incompatible with a bad ending.",
                    "suggested_fix": "Soften the ending or shift the tone toward bittersweet.",
                },
            ],
        },
    },
    {
        "role": "conflict_checker",
        "name": "horror_for_children",
        "match": {"pairs": [["audience", "children"], ["style", "horror"]]},
        "output": {
            "conflicts": [
                {
                    "properties": ["style", "audience"],
                    "explanation": "A horror style conflicts with a children audience.",
                    "suggested_fix": "Pick a gentler style or an older audience.",
                },
            ],
        },
    },
    {
        "role": "safety_checker",
        "name": "horror_for_children",
        "match": {"pairs": [["audience", "children"], ["style", "horror"]]},
        "output": {
            "flags": [
                {
                    "property": "style",
                    "category": "dark_theme",
                    "explanation": "Horror content is unsuitable for a children audience.",
                },
            ],
        },
    },
    {
        "role": "feedback_integrator",
        "name": "suitable_for_children",
        "match": {
            "feedback": "make it suitable for children",
            "properties": ["tone", "audience"],
        },
        "output": {
            "additions": [],
            "updates": [
                {
                    "name": "tone",
                    "patch": {"value": "warm and gentle"},
                    "rationale": "A children's story needs a soft tone.",
                },
                {
                    "name": "audience",
                    "patch": {"value": "children"},
                    "rationale": "The feedback names children as the audience.",
                },
            ],
            "removals": [],
        },
    },
    {
        "role": "feedback_integrator",
        "name": "interests_too_vague",
        "match": {
            "feedback": "Interests is vague; name specific cuisines.",
            "properties": ["Destination", "Interests"],
        },
        "output": {
            "additions": [],
            "updates": [
                {
                    "name": "Interests",
                    "patch": {"value": "street food: tacos, Korean BBQ, night markets"},
                    "rationale": "Concrete cuisines give the model something to plan around.",
                },
            ],
            "removals": [],
        },
    },
]


def write_seed_fixtures(root: Path) -> None:
    for entry in SEED_FIXTURES:
        write_fixture(
            root,
            role=entry["role"],
            name=entry["name"],
            match=entry["match"],
            output=entry["output"],
        )
