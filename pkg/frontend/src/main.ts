/**
 * Browser entry point: mounts the editor and wires DOM events to editor
 * methods through event delegation on the root element.
 *
 * Service base URL: ?api=http://host:port, else localStorage "ooprompt_api",
 * else http://127.0.0.1:8787.
 */

import { ApiClient } from "./api.js";
import { Editor } from "./editor.js";
import { renderApp } from "./render.js";

function baseUrl(): string {
  const fromQuery = new URLSearchParams(location.search).get("api");
  if (fromQuery) {
    localStorage.setItem("ooprompt_api", fromQuery);
    return fromQuery;
  }
  return localStorage.getItem("ooprompt_api") ?? "http://127.0.0.1:8787";
}

const editor = new Editor(new ApiClient(baseUrl()));
const root = document.querySelector<HTMLElement>("#app")!;

editor.onChange((state) => {
  root.innerHTML = renderApp(state);
});
root.innerHTML = renderApp(editor.state);

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target) {
    return;
  }
  const data = target.dataset;
  switch (data.action) {
    case "open-child":
      void editor.openChild(data.ref!);
      break;
    case "jump-crumb":
      void editor.jumpToCrumb(Number(data.index));
      break;
    case "nest":
      void editor.nestProperty(data.prop!);
      break;
    case "remove":
      void editor.removeProperty(data.prop!);
      break;
    case "suggest":
      void editor.requestSuggestions(data.kind as never);
      break;
    case "apply-item":
      void editor.applyProposalItem(data.proposal!, Number(data.index));
      break;
    case "dismiss-item":
      void editor.dismissProposalItem(data.proposal!, Number(data.index));
      break;
    case "select-version":
      void editor.selectVersion(Number(data.version));
      break;
    case "restore":
      void editor.restoreSelected();
      break;
    case "preview":
      void editor.previewRender(data.format!);
      break;
    case "copy-preview":
      void editor.copyPreview();
      break;
    case "dismiss-banner":
      editor.dismissBanner(Number(data.id));
      break;
    case "reload-conflict":
      void editor.reloadAfterConflict();
      break;
  }
});

root.addEventListener("change", (event) => {
  const target = event.target as HTMLInputElement | HTMLSelectElement;
  const action = target.dataset.action;
  if (action === "set-tier") {
    void editor.setTier(target.dataset.prop!, target.value);
  } else if (action === "toggle-exclude") {
    const checked = (target as HTMLInputElement).checked;
    void editor.setPolarity(target.dataset.prop!, checked ? "exclude" : "include");
  } else if (action === "edit-value") {
    void editor.setValue(target.dataset.prop!, target.value);
  }
});

root.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  event.preventDefault();
  if (form.dataset.action === "extract-form") {
    const raw = new FormData(form).get("raw");
    if (typeof raw === "string" && raw.trim()) {
      void editor.extract(raw.trim());
    }
  } else if (form.dataset.action === "add-form") {
    const fields = new FormData(form);
    const name = fields.get("name");
    const value = fields.get("value") ?? "";
    if (typeof name === "string" && name.trim()) {
      void editor.addProperty(name.trim(), String(value));
      form.reset();
    }
  }
});
