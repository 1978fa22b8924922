/**
 * Editor orchestration: every user action maps to exactly one service call,
 * and the new state is built from the server's response. Assistant results
 * only land in the suggestions panel; applying an item is a separate,
 * explicit mutation.
 */

import { ApiClient, ApiError, type SuggestionKind } from "./api.js";
import {
  emptyState,
  withObject,
  type Crumb,
  type EditorState,
} from "./state.js";

export type Listener = (state: EditorState) => void;

export class Editor {
  state: EditorState = emptyState();
  private listeners: Listener[] = [];
  private bannerSeq = 0;

  constructor(public api: ApiClient) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private set(state: EditorState): void {
    this.state = state;
    for (const listener of this.listeners) {
      listener(state);
    }
  }

  private banner(kind: "error" | "info", message: string): void {
    this.bannerSeq += 1;
    this.set({
      ...this.state,
      banners: [...this.state.banners, { id: this.bannerSeq, kind, message }],
    });
  }

  dismissBanner(id: number): void {
    this.set({
      ...this.state,
      banners: this.state.banners.filter((b) => b.id !== id),
    });
  }

  /** Shared error policy: 409 flips the conflict prompt, everything else
   *  becomes a dismissible banner; the editor always stays usable. */
  private fail(err: unknown, context: string): void {
    if (err instanceof ApiError && err.code === "version_conflict") {
      this.set({ ...this.state, conflict: true });
      return;
    }
    const message = err instanceof ApiError
      ? `${context}: ${err.message} [${err.code}]`
      : `${context}: ${err}`;
    this.banner("error", message);
  }

  // --- loading and navigation ---

  async loadObject(objectId: string, breadcrumb: Crumb[] = []): Promise<void> {
    try {
      const object = await this.api.getObject(objectId);
      const proposals = await this.api.listProposals(objectId);
      const history = await this.api.history(objectId);
      this.set({
        ...withObject(this.state, object),
        breadcrumb: [...breadcrumb, { id: object.id, title: object.title }],
        proposals,
        history,
        selectedVersion: null,
        diff: null,
        preview: null,
      });
    } catch (err) {
      this.fail(err, `load ${objectId}`);
    }
  }

  /** Drill into a nested child object; the breadcrumb tracks the path. */
  async openChild(childRef: string): Promise<void> {
    await this.loadObject(childRef, this.state.breadcrumb);
  }

  async jumpToCrumb(index: number): Promise<void> {
    const crumb = this.state.breadcrumb[index];
    if (crumb) {
      await this.loadObject(crumb.id, this.state.breadcrumb.slice(0, index));
    }
  }

  /** Re-read everything after a version conflict, then let the user retry. */
  async reloadAfterConflict(): Promise<void> {
    if (this.state.objectId) {
      await this.loadObject(
        this.state.objectId, this.state.breadcrumb.slice(0, -1),
      );
    }
  }

  async createObject(title: string, templateRefs: string[] = []): Promise<void> {
    try {
      const object = await this.api.createObject(title, templateRefs);
      await this.loadObject(object.id);
    } catch (err) {
      this.fail(err, "create object");
    }
  }

  async extract(rawText: string): Promise<void> {
    try {
      const { object, proposal } = await this.api.extract(rawText);
      await this.loadObject(object.id);
      if (proposal.items.length === 0) {
        this.banner("info", "nothing to extract from that text");
      }
    } catch (err) {
      this.fail(err, "extract");
    }
  }

  // --- card edits (direct manual mutations) ---

  private async mutate(
    action: () => Promise<import("./api.js").PromptObjectDoc>,
    context: string,
  ): Promise<void> {
    try {
      const object = await action();
      this.set(withObject(this.state, object));
    } catch (err) {
      this.fail(err, context);
    }
  }

  addProperty(name: string, value: string): Promise<void> {
    return this.mutate(
      () => this.api.addProperty(this.state.objectId!, this.state.objectVersion,
                                 { name, value }),
      `add ${name}`,
    );
  }

  setTier(propId: string, tier: string): Promise<void> {
    return this.mutate(
      () => this.api.patchProperty(this.state.objectId!, propId,
                                   this.state.objectVersion, { tier }),
      `set tier of ${propId}`,
    );
  }

  setPolarity(propId: string, polarity: "include" | "exclude"): Promise<void> {
    return this.mutate(
      () => this.api.patchProperty(this.state.objectId!, propId,
                                   this.state.objectVersion, { polarity }),
      `set polarity of ${propId}`,
    );
  }

  setValue(propId: string, text: string): Promise<void> {
    return this.mutate(
      () => this.api.patchProperty(this.state.objectId!, propId,
                                   this.state.objectVersion, { value: text }),
      `edit ${propId}`,
    );
  }

  removeProperty(propId: string): Promise<void> {
    return this.mutate(
      () => this.api.deleteProperty(this.state.objectId!, propId,
                                    this.state.objectVersion),
      `remove ${propId}`,
    );
  }

  async nestProperty(propId: string): Promise<void> {
    try {
      const { parent } = await this.api.nestProperty(
        this.state.objectId!, propId, this.state.objectVersion,
      );
      this.set(withObject(this.state, parent));
    } catch (err) {
      this.fail(err, `nest ${propId}`);
    }
  }

  // --- suggestions panel ---

  /** Ask an assistant for options. Failures show a per-panel retry banner and
   *  never block manual editing. */
  async requestSuggestions(kind: SuggestionKind, extra: Record<string, unknown> = {}): Promise<void> {
    if (!this.state.objectId) {
      return;
    }
    this.set({ ...this.state, busy: { ...this.state.busy, [kind]: true } });
    try {
      const proposal = await this.api.suggest(kind, {
        object_id: this.state.objectId,
        ...extra,
      });
      const others = this.state.proposals.filter((p) => p.id !== proposal.id);
      this.set({ ...this.state, proposals: [...others, proposal] });
    } catch (err) {
      this.fail(err, `suggestions (${kind}) failed, retry from the panel`);
    } finally {
      this.set({ ...this.state, busy: { ...this.state.busy, [kind]: false } });
    }
  }

  async applyProposalItem(proposalId: string, itemIndex?: number): Promise<void> {
    try {
      const result = await this.api.applyProposal(
        proposalId,
        this.state.objectVersion,
        itemIndex === undefined ? undefined : [itemIndex],
      );
      let next = this.state;
      if (result.object) {
        next = withObject(next, result.object);
      }
      const others = next.proposals.filter((p) => p.id !== proposalId);
      next = { ...next, proposals: [...others, result.proposal] };
      this.set(next);
      for (const itemError of result.item_errors) {
        this.banner("error", `item ${itemError.item}: ${itemError.error}`);
      }
      if (result.object) {
        const history = await this.api.history(result.object.id);
        this.set({ ...this.state, history });
      }
    } catch (err) {
      this.fail(err, `apply ${proposalId}`);
    }
  }

  async dismissProposalItem(proposalId: string, itemIndex?: number): Promise<void> {
    try {
      const proposal = await this.api.dismissProposal(
        proposalId,
        itemIndex === undefined ? undefined : [itemIndex],
      );
      const others = this.state.proposals.filter((p) => p.id !== proposalId);
      this.set({ ...this.state, proposals: [...others, proposal] });
    } catch (err) {
      this.fail(err, `dismiss ${proposalId}`);
    }
  }

  // --- history, diff, restore ---

  async refreshHistory(): Promise<void> {
    if (!this.state.objectId) {
      return;
    }
    try {
      const history = await this.api.history(this.state.objectId);
      this.set({ ...this.state, history });
    } catch (err) {
      this.fail(err, "history");
    }
  }

  /** Select a version in the history menu: shows a read-only diff against
   *  the current version plus a restore action. */
  async selectVersion(version: number): Promise<void> {
    if (!this.state.objectId) {
      return;
    }
    try {
      const diff = await this.api.diff(
        this.state.objectId, version, this.state.objectVersion,
      );
      this.set({ ...this.state, selectedVersion: version, diff });
    } catch (err) {
      this.fail(err, `diff v${version}`);
    }
  }

  async restoreSelected(): Promise<void> {
    const version = this.state.selectedVersion;
    if (!this.state.objectId || version === null) {
      return;
    }
    try {
      const object = await this.api.restore(
        this.state.objectId, version, this.state.objectVersion,
      );
      const history = await this.api.history(object.id);
      this.set({
        ...withObject(this.state, object),
        history,
        selectedVersion: null,
        diff: null,
      });
    } catch (err) {
      this.fail(err, `restore v${version}`);
    }
  }

  // --- render preview ---

  async previewRender(format: string): Promise<void> {
    if (!this.state.objectId) {
      return;
    }
    try {
      const [artifact] = await this.api.render(this.state.objectId, format);
      this.set({ ...this.state, preview: { format, text: artifact.text } });
    } catch (err) {
      this.fail(err, `render ${format}`);
    }
  }

  async copyPreview(): Promise<void> {
    if (this.state.preview && typeof navigator !== "undefined" && navigator.clipboard) {
      await navigator.clipboard.writeText(this.state.preview.text);
      this.banner("info", "prompt copied to clipboard");
    }
  }
}
