/**
 * Pure HTML builders: EditorState in, markup out. No DOM access here, so the
 * whole layer unit-tests as string assertions; main.ts owns event wiring.
 */

import type { ProposalDoc } from "./api.js";
import { TIERS, itemLabel, pendingCount, type Card, type EditorState } from "./state.js";

export function esc(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function chips(values: string[], cls: string): string {
  if (values.length === 0) {
    return "";
  }
  const items = values.map((v) => `<span class="chip ${cls}">${esc(v)}</span>`).join("");
  return `<div class="chips">${items}</div>`;
}

export function renderCard(card: Card): string {
  const tierOptions = TIERS.map((tier) =>
    `<option value="${tier}"${tier === card.tier ? " selected" : ""}>${tier.replace("_", " ")}</option>`,
  ).join("");
  const value = card.isChild
    ? `<button class="drill" data-action="open-child" data-ref="${esc(card.childRef ?? "")}">` +
      `open child ${esc(card.childRef ?? "")} &rsaquo;</button>`
    : `<input class="value" data-action="edit-value" data-prop="${card.propId}"
         value="${esc(card.valueText)}">`;
  return `
  <article class="card${card.polarity === "exclude" ? " excluded" : ""}" data-card="${card.propId}">
    <header>
      <span class="name">${esc(card.name)}</span>
      <span class="badge relation">${esc(card.relationBadge)}</span>
      <span class="badge provenance">${esc(card.provenance)}</span>
    </header>
    <div class="body">${value}</div>
    ${chips(card.examples, "example")}
    ${chips(card.candidates, "candidate")}
    <footer>
      <select class="tier" data-action="set-tier" data-prop="${card.propId}">${tierOptions}</select>
      <label class="exclude-toggle">
        <input type="checkbox" data-action="toggle-exclude" data-prop="${card.propId}"
          ${card.polarity === "exclude" ? "checked" : ""}> do not want
      </label>
      ${card.isChild ? "" : `<button data-action="nest" data-prop="${card.propId}">nest</button>`}
      <button data-action="remove" data-prop="${card.propId}">delete</button>
    </footer>
  </article>`;
}

export function renderBreadcrumb(state: EditorState): string {
  if (state.breadcrumb.length === 0) {
    return "";
  }
  const crumbs = state.breadcrumb.map((crumb, index) =>
    `<button class="crumb" data-action="jump-crumb" data-index="${index}">${esc(crumb.title)}</button>`,
  );
  return `<nav class="breadcrumb">${crumbs.join(" / ")}</nav>`;
}

export function renderProposals(state: EditorState): string {
  const open = state.proposals.filter((p) => pendingCount(p) > 0);
  const panels = open.map(renderProposal).join("");
  const busy = Object.entries(state.busy)
    .filter(([, flag]) => flag)
    .map(([kind]) => `<span class="spinner">${esc(kind)} thinking...</span>`)
    .join("");
  return `
  <section class="suggestions">
    <header>
      <h2>Suggestions</h2>
      <button data-action="suggest" data-kind="props">more properties</button>
      <button data-action="suggest" data-kind="relations">detect steps</button>
      ${busy}
    </header>
    ${panels || '<p class="empty">no pending suggestions</p>'}
  </section>`;
}

function renderProposal(proposal: ProposalDoc): string {
  const rows = proposal.items
    .map((item, index) => ({ item, index }))
    .filter(({ item }) => item.status === "pending")
    .map(({ item, index }) => `
      <li>
        <span class="label">${esc(itemLabel(item))}</span>
        ${item.rationale ? `<span class="rationale">${esc(item.rationale)}</span>` : ""}
        <button data-action="apply-item" data-proposal="${proposal.id}" data-index="${index}">apply</button>
        <button data-action="dismiss-item" data-proposal="${proposal.id}" data-index="${index}">dismiss</button>
      </li>`)
    .join("");
  return `
  <div class="proposal" data-proposal="${proposal.id}">
    <header>${esc(proposal.id)} &middot; ${esc(proposal.source)}</header>
    <ul>${rows}</ul>
  </div>`;
}

export function renderHistory(state: EditorState): string {
  const rows = [...state.history].reverse().map((entry) => `
    <li class="${entry.version === state.selectedVersion ? "selected" : ""}">
      <button data-action="select-version" data-version="${entry.version}">
        v${entry.version}</button>
      <span class="changelog">${esc(entry.changelog)}</span>
    </li>`).join("");
  const diff = state.diff === null ? "" : renderDiff(state);
  return `
  <section class="history">
    <h2>History</h2>
    <ul>${rows}</ul>
    ${diff}
  </section>`;
}

function renderDiff(state: EditorState): string {
  const diff = state.diff!;
  const lines: string[] = [];
  for (const prop of diff.added) {
    lines.push(`<li class="removed">- ${esc(prop.name)} (only in current)</li>`);
  }
  for (const prop of diff.removed) {
    lines.push(`<li class="added">+ ${esc(prop.name)} (only in v${state.selectedVersion})</li>`);
  }
  for (const change of diff.changed) {
    const fields = Object.keys(change.fields).join(", ");
    lines.push(`<li class="changed">~ ${esc(change.name)}: ${esc(fields)}</li>`);
  }
  for (const [field, sides] of Object.entries(diff.object_fields)) {
    lines.push(`<li class="changed">~ ${esc(field)}: ${esc(String(sides.from))} &rarr; ${esc(String(sides.to))}</li>`);
  }
  return `
  <div class="diff">
    <h3>v${state.selectedVersion} vs current</h3>
    <ul>${lines.join("") || "<li>no differences</li>"}</ul>
    <button data-action="restore">restore v${state.selectedVersion}</button>
  </div>`;
}

export function renderPreview(state: EditorState): string {
  const body = state.preview === null
    ? '<p class="empty">choose a format to render</p>'
    : `<pre class="preview-text">${esc(state.preview.text)}</pre>
       <button data-action="copy-preview">copy to clipboard</button>`;
  return `
  <section class="preview">
    <h2>Deploy preview</h2>
    <div class="formats">
      <button data-action="preview" data-format="nl">NL</button>
      <button data-action="preview" data-format="json">JSON</button>
      <button data-action="preview" data-format="hybrid">hybrid</button>
    </div>
    ${body}
  </section>`;
}

export function renderBanners(state: EditorState): string {
  const rows = state.banners.map((banner) => `
    <div class="banner ${banner.kind}">
      ${esc(banner.message)}
      <button data-action="dismiss-banner" data-id="${banner.id}">&times;</button>
    </div>`).join("");
  const conflict = state.conflict
    ? `<div class="banner conflict">
         someone else changed this object (version conflict)
         <button data-action="reload-conflict">reload and retry</button>
       </div>`
    : "";
  return rows + conflict;
}

export function renderApp(state: EditorState): string {
  if (state.object === null) {
    return `
    <div class="start">
      ${renderBanners(state)}
      <h1>ooprompt editor</h1>
      <form data-action="extract-form">
        <textarea name="raw" placeholder="Describe what you want..."></textarea>
        <button type="submit">reify into a prompt object</button>
      </form>
    </div>`;
  }
  const cards = state.cards.map(renderCard).join("");
  return `
  <div class="editor">
    ${renderBanners(state)}
    ${renderBreadcrumb(state)}
    <header class="object-head">
      <h1>${esc(state.object.title)}</h1>
      <span class="version">v${state.objectVersion}</span>
    </header>
    <section class="cards">
      ${cards || '<p class="empty">no properties yet</p>'}
      <form class="add-card" data-action="add-form">
        <input name="name" placeholder="property name" required>
        <input name="value" placeholder="value">
        <button type="submit">add property</button>
      </form>
    </section>
    ${renderProposals(state)}
    ${renderHistory(state)}
    ${renderPreview(state)}
  </div>`;
}
