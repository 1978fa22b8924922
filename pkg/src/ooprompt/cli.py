"""Command-line surface over the full prompt-object lifecycle.

Every command mirrors a module operation one-to-one; ``--json`` switches to a
machine-readable envelope that matches the HTTP service's bodies for reads.
Exit codes: 0 success, 1 user error, 2 provider or IO error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .analysis import build_static_report
from .deployment import (
    decompose_sequential_chain,
    enumerate_variants,
    render,
)
from .errors import (
    OOPromptError,
    PreconditionViolation,
    ProviderError,
    WorkspaceError,
)
from .evaluation import run_comparison, suggest_from_report
from .mapping import Mapper
from .model import Polarity, PropertySpec, Relation, Tier
from .versioning import diff_snapshots
from .wire import canonical_dumps, envelope_error, envelope_ok
from .workspace import Workspace

_FORMATS = {"nl": "natural_language", "json": "json", "hybrid": "hybrid"}


class Cli(click.Group):
    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except OOPromptError as exc:
            code = 2 if isinstance(exc, (ProviderError, WorkspaceError, OSError)) else 1
            if ctx.obj and ctx.obj.get("json"):
                click.echo(canonical_dumps(envelope_error(exc)), err=True)
            else:
                click.echo(f"error: {exc.message}", err=True)
            ctx.exit(code)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(2)


@click.group(cls=Cli)
@click.option("--workspace", "-C", "workspace_path", default=".",
              help="Workspace directory (default: current directory).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx: click.Context, workspace_path: str, as_json: bool) -> None:
    """Build, refine, analyze, and deploy structured prompt objects."""
    ctx.obj = {"root": Path(workspace_path), "json": as_json, "ws": None}


def _ws(ctx: click.Context) -> Workspace:
    if ctx.obj["ws"] is None:
        ctx.obj["ws"] = Workspace.open(ctx.obj["root"])
    return ctx.obj["ws"]


def _emit(ctx: click.Context, data, human: str | list[str]) -> None:
    if ctx.obj["json"]:
        click.echo(canonical_dumps(envelope_ok(data)))
    elif isinstance(human, list):
        for line in human:
            click.echo(line)
    else:
        click.echo(human)


def _fmt(name: str) -> str:
    if name not in _FORMATS:
        raise PreconditionViolation(f"unknown format {name!r}; use nl, json, or hybrid")
    return _FORMATS[name]


def _parse_relation(seq: str | None, parallel: bool) -> Relation | None:
    if parallel:
        return Relation.parallel()
    if seq is None:
        return None
    group, _, order = seq.rpartition(":")
    if not group or not order.isdigit():
        raise PreconditionViolation("--seq expects GROUP:ORDER, e.g. storyline:2")
    return Relation.sequential(group, int(order))


def _proposal_lines(proposal) -> list[str]:
    lines = [f"proposal {proposal.id or '(unregistered)'} "
             f"on {proposal.object_id or '(none)'} [{proposal.source}]"]
    if not proposal.items:
        lines.append("  (empty)")
    for index, item in enumerate(proposal.items):
        if item.kind == "add":
            spec = item.spec or {}
            value = spec.get("value", {}).get("text", "")
            desc = f"add {spec.get('name')!r} = {value!r}"
        elif item.kind == "update":
            desc = f"update {item.prop_id}: {canonical_dumps(item.patch or {})}"
            desc = " ".join(desc.split())
        else:
            desc = f"remove {item.prop_id}"
        note = f" ({item.rationale})" if item.rationale else ""
        lines.append(f"  [{index}] {item.status}: {desc}{note}")
    return lines


# --- workspace ---

@main.command()
@click.pass_context
def init(ctx: click.Context) -> None:
    """Create a workspace with seed templates and mock fixtures."""
    ws = Workspace.init(ctx.obj["root"])
    ctx.obj["ws"] = ws
    data = {"root": str(ws.root), "templates": [t.id for t in ws.templates.all()]}
    _emit(ctx, data, f"initialized workspace at {ws.root}")


@main.command("list")
@click.pass_context
def list_objects(ctx: click.Context) -> None:
    """List prompt objects."""
    rows = _ws(ctx).list_objects()
    human = [
        f"{row['id']}  v{row['version']}  {row['property_count']} properties"
        f"{'  [orphaned]' if row['orphaned'] else ''}  {row['title']}"
        for row in rows
    ] or ["(no objects)"]
    _emit(ctx, rows, human)


@main.command()
@click.argument("object_id")
@click.pass_context
def show(ctx: click.Context, object_id: str) -> None:
    """Show one prompt object."""
    obj = _ws(ctx).get_object(object_id)
    human = [f"{obj.id} v{obj.version}: {obj.title}"]
    if obj.notes:
        human.append(f"notes: {obj.notes}")
    for prop in obj.properties:
        value = prop.value.text if prop.value.is_text() else f"-> {prop.value.ref}"
        marks = []
        if prop.polarity is Polarity.EXCLUDE:
            marks.append("exclude")
        if prop.tier is not Tier.NORMAL:
            marks.append(prop.tier.value)
        if prop.relation.is_sequential():
            marks.append(f"{prop.relation.group}:{prop.relation.order}")
        suffix = f"  [{', '.join(marks)}]" if marks else ""
        human.append(f"  {prop.id}  {prop.name}: {value}{suffix}")
        if prop.examples:
            human.append(f"      examples: {'; '.join(prop.examples)}")
        if prop.candidates:
            human.append(f"      candidates: {'; '.join(prop.candidates)}")
    _emit(ctx, obj.to_dict(), human)


@main.command()
@click.argument("title")
@click.option("--template", "-t", "template_refs", multiple=True,
              help="Template id to inherit from (repeatable; first wins collisions).")
@click.pass_context
def new(ctx: click.Context, title: str, template_refs: tuple[str, ...]) -> None:
    """Create a prompt object, optionally inheriting template defaults."""
    obj = _ws(ctx).create_object(title, list(template_refs))
    _emit(ctx, obj.to_dict(),
          f"created {obj.id} v{obj.version} with {len(obj.properties)} properties")


@main.command()
@click.argument("source", default="-")
@click.option("--object", "object_id", default=None,
              help="Extract into this object instead of creating one.")
@click.option("--title", default=None, help="Title for the created object.")
@click.pass_context
def extract(ctx: click.Context, source: str, object_id: str | None,
            title: str | None) -> None:
    """Reify raw intent text (file or '-' for stdin) into proposed properties."""
    ws = _ws(ctx)
    raw = sys.stdin.read() if source == "-" else Path(source).read_text(encoding="utf-8")
    raw = raw.strip()
    if object_id is None:
        derived_title = title or (raw.splitlines()[0][:60] if raw else "Untitled")
        obj = ws.create_object(derived_title)
        if raw != derived_title:
            obj = ws.update_object(obj.id, notes=raw)
    else:
        obj = ws.get_object(object_id)
    proposal = ws.mapper().extract_properties(raw, obj)
    data = {"object": obj.to_dict(), "proposal": proposal.to_dict()}
    _emit(ctx, data, [f"object {obj.id} v{obj.version}"] + _proposal_lines(proposal))


# --- templates ---

@main.group()
def template() -> None:
    """Browse, apply, and grow the template library."""


@template.command("list")
@click.pass_context
def template_list(ctx: click.Context) -> None:
    templates = _ws(ctx).templates.all()
    data = [t.to_dict() for t in templates]
    human = [
        f"{t.id}  [{t.output_type}]  {len(t.defaults)} defaults  {t.display_name}"
        for t in templates
    ]
    _emit(ctx, data, human)


@template.command("search")
@click.argument("query")
@click.option("--by", type=click.Choice(["output_type", "use_case", "example"]),
              default="output_type")
@click.pass_context
def template_search(ctx: click.Context, query: str, by: str) -> None:
    ws = _ws(ctx)
    gateway = ws.gateway() if by == "example" else None
    ranked = ws.templates.search(query, by, gateway)
    data = [t.to_dict() for t in ranked]
    human = [t.id for t in ranked] or ["(no matches)"]
    _emit(ctx, data, human)


@template.command("apply")
@click.argument("template_id")
@click.option("--object", "object_id", required=True)
@click.option("--select", default=None,
              help="Comma-separated default names to inherit (default: all).")
@click.pass_context
def template_apply(ctx: click.Context, template_id: str, object_id: str,
                   select: str | None) -> None:
    selected = [s.strip() for s in select.split(",")] if select else None
    obj = _ws(ctx).apply_template(object_id, template_id, selected)
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: applied {template_id}")


@template.command("derive")
@click.argument("template_id")
@click.option("--object", "object_id", required=True)
@click.option("--description", default="")
@click.option("--output-type", default="")
@click.option("--use-case", "use_cases", multiple=True)
@click.pass_context
def template_derive(ctx: click.Context, template_id: str, object_id: str,
                    description: str, output_type: str,
                    use_cases: tuple[str, ...]) -> None:
    template = _ws(ctx).derive_template(
        object_id, template_id, description, output_type, list(use_cases),
    )
    _emit(ctx, template.to_dict(),
          f"derived template {template.id} with {len(template.defaults)} defaults")


# --- properties ---

@main.group()
def prop() -> None:
    """Add, edit, nest, and reorder intent properties."""


@prop.command("add")
@click.argument("name")
@click.argument("value", default="")
@click.option("--object", "object_id", required=True)
@click.option("--tier", type=click.Choice([t.value for t in Tier]), default="normal")
@click.option("--exclude", is_flag=True, help="State what must NOT appear.")
@click.option("--seq", default=None, help="Sequential step as GROUP:ORDER.")
@click.option("--candidate", "candidates", multiple=True)
@click.option("--example", "examples", multiple=True)
@click.pass_context
def prop_add(ctx: click.Context, name: str, value: str, object_id: str, tier: str,
             exclude: bool, seq: str | None, candidates: tuple[str, ...],
             examples: tuple[str, ...]) -> None:
    spec = PropertySpec(
        name=name,
        value=value,
        polarity=Polarity.EXCLUDE if exclude else Polarity.INCLUDE,
        tier=Tier(tier),
        relation=_parse_relation(seq, False) or Relation.parallel(),
        candidates=list(candidates),
        examples=list(examples),
    )
    obj = _ws(ctx).add_property(object_id, spec)
    prop = obj.properties[-1]
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: added {prop.id} ({prop.name})")


@prop.command("set")
@click.argument("prop_id")
@click.option("--object", "object_id", required=True)
@click.option("--name", default=None)
@click.option("--value", default=None)
@click.option("--tier", type=click.Choice([t.value for t in Tier]), default=None)
@click.option("--polarity", type=click.Choice(["include", "exclude"]), default=None)
@click.option("--seq", default=None, help="Sequential step as GROUP:ORDER.")
@click.option("--parallel", is_flag=True, help="Clear any sequential relation.")
@click.option("--candidate", "candidates", multiple=True,
              help="Replace the candidates list (repeatable).")
@click.option("--example", "examples", multiple=True,
              help="Replace the examples list (repeatable).")
@click.pass_context
def prop_set(ctx: click.Context, prop_id: str, object_id: str, name: str | None,
             value: str | None, tier: str | None, polarity: str | None,
             seq: str | None, parallel: bool, candidates: tuple[str, ...],
             examples: tuple[str, ...]) -> None:
    patch: dict = {}
    if name is not None:
        patch["name"] = name
    if value is not None:
        patch["value"] = value
    if tier is not None:
        patch["tier"] = tier
    if polarity is not None:
        patch["polarity"] = polarity
    relation = _parse_relation(seq, parallel)
    if relation is not None:
        patch["relation"] = relation
    if candidates:
        patch["candidates"] = list(candidates)
    if examples:
        patch["examples"] = list(examples)
    obj = _ws(ctx).update_property(object_id, prop_id, patch)
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: updated {prop_id}")


@prop.command("rm")
@click.argument("prop_id")
@click.option("--object", "object_id", required=True)
@click.pass_context
def prop_rm(ctx: click.Context, prop_id: str, object_id: str) -> None:
    obj = _ws(ctx).remove_property(object_id, prop_id)
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: removed {prop_id}")


@prop.command("exclude")
@click.argument("prop_id")
@click.option("--object", "object_id", required=True)
@click.pass_context
def prop_exclude(ctx: click.Context, prop_id: str, object_id: str) -> None:
    """Flip a property to exclude polarity (the "do not want" action)."""
    obj = _ws(ctx).update_property(object_id, prop_id, {"polarity": "exclude"})
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: {prop_id} now excluded")


@prop.command("tier")
@click.argument("prop_id")
@click.argument("tier", type=click.Choice([t.value for t in Tier]))
@click.option("--object", "object_id", required=True)
@click.pass_context
def prop_tier(ctx: click.Context, prop_id: str, tier: str, object_id: str) -> None:
    obj = _ws(ctx).update_property(object_id, prop_id, {"tier": tier})
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: {prop_id} tier={tier}")


@prop.command("nest")
@click.argument("prop_id")
@click.option("--object", "object_id", required=True)
@click.pass_context
def prop_nest(ctx: click.Context, prop_id: str, object_id: str) -> None:
    """Grow a text property into a child prompt object."""
    parent, child = _ws(ctx).nest_child(object_id, prop_id)
    data = {"parent": parent.to_dict(), "child": child.to_dict()}
    _emit(ctx, data, f"{parent.id} v{parent.version}: {prop_id} now nests {child.id}")


@prop.command("promote")
@click.argument("prop_id")
@click.option("--object", "object_id", required=True)
@click.pass_context
def prop_promote(ctx: click.Context, prop_id: str, object_id: str) -> None:
    """Inline a child object back into the parent."""
    obj = _ws(ctx).promote_child(object_id, prop_id)
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: promoted {prop_id}")


@prop.command("reorder")
@click.argument("permutation")
@click.option("--object", "object_id", required=True)
@click.pass_context
def prop_reorder(ctx: click.Context, permutation: str, object_id: str) -> None:
    """Reorder properties; PERMUTATION is a comma-separated list of all ids."""
    ids = [p.strip() for p in permutation.split(",") if p.strip()]
    obj = _ws(ctx).reorder_properties(object_id, ids)
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: reordered")


# --- suggestions ---

@main.group()
def suggest() -> None:
    """Ask the assistants for proposals (never auto-applied)."""


def _suggest(ctx: click.Context, make) -> None:
    proposal = make()
    _emit(ctx, proposal.to_dict(), _proposal_lines(proposal))


@suggest.command("props")
@click.option("--object", "object_id", required=True)
@click.pass_context
def suggest_props(ctx: click.Context, object_id: str) -> None:
    ws = _ws(ctx)
    _suggest(ctx, lambda: ws.mapper().suggest_implicit_properties(ws.get_object(object_id)))


@suggest.command("relations")
@click.option("--object", "object_id", required=True)
@click.pass_context
def suggest_relations(ctx: click.Context, object_id: str) -> None:
    ws = _ws(ctx)
    _suggest(ctx, lambda: ws.mapper().detect_relations(ws.get_object(object_id)))


@suggest.command("candidates")
@click.option("--object", "object_id", required=True)
@click.option("--prop", "prop_id", required=True)
@click.pass_context
def suggest_candidates(ctx: click.Context, object_id: str, prop_id: str) -> None:
    ws = _ws(ctx)
    _suggest(ctx, lambda: ws.mapper().generate_candidates(ws.get_object(object_id), prop_id))


@suggest.command("examples")
@click.option("--object", "object_id", required=True)
@click.option("--prop", "prop_id", required=True)
@click.pass_context
def suggest_examples(ctx: click.Context, object_id: str, prop_id: str) -> None:
    ws = _ws(ctx)
    _suggest(ctx, lambda: ws.mapper().generate_examples(ws.get_object(object_id), prop_id))


@main.command()
@click.argument("text")
@click.option("--object", "object_id", required=True)
@click.pass_context
def feedback(ctx: click.Context, text: str, object_id: str) -> None:
    """Turn holistic free-text feedback into a proposal."""
    ws = _ws(ctx)
    _suggest(ctx, lambda: ws.mapper().apply_holistic_feedback(ws.get_object(object_id), text))


# --- proposals ---

@main.group()
def proposal() -> None:
    """Review, apply, or dismiss pending proposals."""


@proposal.command("list")
@click.option("--object", "object_id", default=None)
@click.pass_context
def proposal_list(ctx: click.Context, object_id: str | None) -> None:
    proposals = _ws(ctx).list_proposals(object_id)
    data = [p.to_dict() for p in proposals]
    human = [
        f"{p.id}  {p.object_id}  {p.source}  "
        f"{sum(1 for i in p.items if i.status == 'pending')} pending"
        for p in proposals
    ] or ["(no proposals)"]
    _emit(ctx, data, human)


@proposal.command("show")
@click.argument("proposal_id")
@click.pass_context
def proposal_show(ctx: click.Context, proposal_id: str) -> None:
    p = _ws(ctx).get_proposal(proposal_id)
    _emit(ctx, p.to_dict(), _proposal_lines(p))


def _parse_items(items: str | None) -> list[int] | None:
    if items is None:
        return None
    return [int(i) for i in items.split(",") if i.strip()]


@proposal.command("apply")
@click.argument("proposal_id")
@click.option("--items", default=None, help="Comma-separated item indexes.")
@click.pass_context
def proposal_apply(ctx: click.Context, proposal_id: str, items: str | None) -> None:
    obj, p, errors = _ws(ctx).apply_proposal(proposal_id, _parse_items(items))
    data = {
        "object": obj.to_dict() if obj is not None else None,
        "proposal": p.to_dict(),
        "item_errors": errors,
    }
    human = []
    if obj is not None:
        human.append(f"{obj.id} v{obj.version}: applied {proposal_id}")
    else:
        human.append(f"{proposal_id}: nothing applied")
    human += [f"  item {e['item']} failed: {e['error']}" for e in errors]
    _emit(ctx, data, human)


@proposal.command("dismiss")
@click.argument("proposal_id")
@click.option("--items", default=None, help="Comma-separated item indexes.")
@click.pass_context
def proposal_dismiss(ctx: click.Context, proposal_id: str, items: str | None) -> None:
    p = _ws(ctx).dismiss_proposal(proposal_id, _parse_items(items))
    _emit(ctx, p.to_dict(), f"{proposal_id}: dismissed")


# --- analysis, rendering, deployment ---

@main.command()
@click.option("--object", "object_id", required=True)
@click.option("--format", "fmt", type=click.Choice(["nl", "json", "hybrid"]),
              default="nl", help="Render used for the token estimate.")
@click.pass_context
def analyze(ctx: click.Context, object_id: str, fmt: str) -> None:
    """Static analysis: conflicts, tokens, similarity, safety, completeness."""
    ws = _ws(ctx)
    obj = ws.get_object(object_id)
    artifact = render(obj, _fmt(fmt), ws.objects)
    report = build_static_report(
        obj,
        ws.templates,
        artifact,
        gateway=ws.gateway(),
        mapper=Mapper(ws.gateway()),
        objects=ws.objects,
        blocklist=ws.blocklist(),
    )
    data = report.to_dict()
    human = [
        f"analysis of {obj.id} v{obj.version}",
        f"  structural conflicts: {len(report.structural_conflicts)}",
        f"  semantic conflicts:   {len(report.semantic_conflicts)}",
        f"  token estimate:       {report.token_estimate} ({fmt})",
        f"  safety flags:         {len(report.safety_flags)}",
    ]
    for conflict in report.structural_conflicts:
        human.append(f"  ! {conflict.kind}: {conflict.message}")
    for conflict in report.semantic_conflicts:
        human.append(f"  ~ {', '.join(conflict.prop_ids)}: {conflict.explanation}")
    for flag in report.safety_flags:
        human.append(f"  ! safety[{flag.category}]: {flag.explanation}")
    if report.template_similarity:
        top_id, top_score = report.template_similarity[0]
        human.append(f"  closest template:     {top_id} ({top_score:.3f})")
    if report.completeness_suggestions is not None:
        names = [
            (item.spec or {}).get("name", "")
            for item in report.completeness_suggestions.items
        ]
        human.append(f"  suggested properties: {', '.join(names) or '(none)'}")
    for skip in report.skipped:
        human.append(f"  skipped {skip['section']}: {skip['reason']}")
    _emit(ctx, data, human)


@main.command("render")
@click.option("--object", "object_id", required=True)
@click.option("--format", "fmt", type=click.Choice(["nl", "json", "hybrid"]),
              required=True)
@click.option("--variants", type=int, default=None,
              help="Enumerate candidate variants up to this cap.")
@click.option("--emphasis", is_flag=True,
              help="Suffix NL lines with tier emphasis wording.")
@click.pass_context
def render_cmd(ctx: click.Context, object_id: str, fmt: str, variants: int | None,
               emphasis: bool) -> None:
    """Compile the object into a deployable prompt."""
    ws = _ws(ctx)
    obj = ws.get_object(object_id)
    if variants is None:
        artifact = render(obj, _fmt(fmt), ws.objects, emphasis)
        _emit(ctx, artifact.to_dict(), artifact.text)
        return
    artifacts = enumerate_variants(obj, variants, _fmt(fmt), ws.objects, emphasis)
    human: list[str] = []
    for artifact in artifacts:
        human.append(f"=== variant: {artifact.variant_key or 'primary'} ===")
        human.append(artifact.text)
    _emit(ctx, [a.to_dict() for a in artifacts], human)


@main.command()
@click.option("--object", "object_id", required=True)
@click.pass_context
def chain(ctx: click.Context, object_id: str) -> None:
    """Decompose sequential groups into an ordered prompt chain."""
    ws = _ws(ctx)
    obj = ws.get_object(object_id)
    steps = decompose_sequential_chain(obj, ws.objects)
    human = [f"{len(steps)} chained objects:"]
    human += [f"  {step.id}: {step.title}" for step in steps]
    _emit(ctx, [step.to_dict() for step in steps], human)


# --- history ---

@main.command()
@click.option("--object", "object_id", required=True)
@click.pass_context
def history(ctx: click.Context, object_id: str) -> None:
    """List the object's version records."""
    ws = _ws(ctx)
    ws.get_object(object_id)
    records = ws.history.records(object_id)
    data = [
        {"version": r.version, "changelog": r.changelog, "timestamp": r.timestamp}
        for r in records
    ]
    human = [f"v{r.version}  {r.timestamp}  {r.changelog}" for r in records]
    _emit(ctx, data, human)


@main.command()
@click.argument("version", type=int)
@click.option("--object", "object_id", required=True)
@click.pass_context
def restore(ctx: click.Context, version: int, object_id: str) -> None:
    """Append a new version whose content equals the target snapshot."""
    obj = _ws(ctx).restore(object_id, version)
    _emit(ctx, obj.to_dict(), f"{obj.id} v{obj.version}: restored content of v{version}")


@main.command()
@click.argument("version_a", type=int)
@click.argument("version_b", type=int)
@click.option("--object", "object_id", required=True)
@click.pass_context
def diff(ctx: click.Context, version_a: int, version_b: int, object_id: str) -> None:
    """Field-level diff between two versions."""
    ws = _ws(ctx)
    ws.get_object(object_id)
    a = ws.history.get(object_id, version_a).snapshot
    b = ws.history.get(object_id, version_b).snapshot
    delta = diff_snapshots(a, b)
    human = []
    for prop in delta["added"]:
        human.append(f"+ {prop['id']} {prop['name']}")
    for prop in delta["removed"]:
        human.append(f"- {prop['id']} {prop['name']}")
    for change in delta["changed"]:
        fields = ", ".join(change["fields"])
        human.append(f"~ {change['prop_id']} {change['name']} ({fields})")
    for fname, sides in delta["object_fields"].items():
        human.append(f"~ {fname}: {sides['from']!r} -> {sides['to']!r}")
    _emit(ctx, delta, human or ["(no differences)"])


# --- evaluation ---

@main.group("eval")
def eval_group() -> None:
    """Run prompt variants through models and judge the outputs."""


@eval_group.command("run")
@click.option("--object", "object_id", required=True)
@click.option("--format", "fmt", type=click.Choice(["nl", "json", "hybrid"]),
              default="hybrid")
@click.option("--variants", type=int, default=8, help="Variant cap (needs >= 2).")
@click.option("--model", "models", multiple=True,
              help="Generation model hint (repeatable).")
@click.option("--criterion", "criteria_opts", multiple=True,
              help="ID=DESCRIPTION[:WEIGHT]; default: workspace criteria file.")
@click.pass_context
def eval_run(ctx: click.Context, object_id: str, fmt: str, variants: int,
             models: tuple[str, ...], criteria_opts: tuple[str, ...]) -> None:
    from .evaluation import Criterion

    ws = _ws(ctx)
    obj = ws.get_object(object_id)
    artifacts = enumerate_variants(obj, variants, _fmt(fmt), ws.objects)
    if len(artifacts) < 2:
        raise PreconditionViolation(
            "comparison needs at least two variants; add candidates to a property",
        )
    if criteria_opts:
        criteria = []
        for opt in criteria_opts:
            ident, _, rest = opt.partition("=")
            desc, _, weight = rest.partition(":")
            criteria.append(Criterion(ident, desc or ident, float(weight or 1)))
    else:
        criteria = ws.criteria()
    model_list = list(models) or ["default"]
    with ws.writer():
        run_id = ws.next_id("run")
    report, outputs = run_comparison(ws.gateway(), run_id, artifacts, criteria, model_list)
    ws.save_run(report, outputs)
    human = [f"run {report.run_id}: {len(artifacts)} artifacts, "
             f"{len(criteria)} criteria, {len(model_list)} models"]
    human += [f"  {i + 1}. {key}" for i, key in enumerate(report.ranking)]
    human += [f"  error: {e['artifact_key']} ({e['code']})" for e in report.errors]
    _emit(ctx, report.to_dict(), human)


@eval_group.command("show")
@click.argument("run_id")
@click.pass_context
def eval_show(ctx: click.Context, run_id: str) -> None:
    report = _ws(ctx).load_run(run_id)
    human = [f"run {report.run_id}"]
    human += [f"  {i + 1}. {key}" for i, key in enumerate(report.ranking)]
    for verdict in report.verdicts:
        human.append(
            f"  {verdict['artifact_key']} {verdict['criterion_id']}: "
            f"{verdict['score']:.3f}",
        )
    _emit(ctx, report.to_dict(), human)


@eval_group.command("suggest")
@click.argument("run_id")
@click.pass_context
def eval_suggest(ctx: click.Context, run_id: str) -> None:
    """Turn a run's judge suggestions into a pending proposal."""
    ws = _ws(ctx)
    report = ws.load_run(run_id)
    if not report.artifacts:
        raise PreconditionViolation("run has no artifacts")
    obj = ws.get_object(report.artifacts[0]["object_id"])
    proposal = suggest_from_report(ws.mapper(), report, obj)
    _emit(ctx, proposal.to_dict(), _proposal_lines(proposal))


# --- service ---

@main.command()
@click.option("--listen", default="127.0.0.1:8787", help="HOST:PORT to bind.")
@click.pass_context
def serve(ctx: click.Context, listen: str) -> None:
    """Serve the workspace over HTTP for the web editor."""
    import uvicorn

    from .service import create_app

    ws = _ws(ctx)
    host, _, port = listen.rpartition(":")
    app = create_app(ws)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")


if __name__ == "__main__":
    main()
