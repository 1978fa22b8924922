/**
 * Editor state: a pure projection of server responses.
 *
 * Everything here can be rebuilt from API reads alone, so a browser refresh
 * loses nothing. No field is ever edited client-side without the matching
 * server mutation having succeeded first.
 */

import type {
  DiffDoc,
  HistoryEntry,
  PromptObjectDoc,
  ProposalDoc,
  PropertyDoc,
} from "./api.js";

export const TIERS = ["slightly_wanted", "normal", "wanted", "highly_wanted"] as const;

export interface Card {
  propId: string;
  name: string;
  isChild: boolean;
  childRef: string | null;
  valueText: string;
  polarity: "include" | "exclude";
  tier: string;
  relationBadge: string;
  examples: string[];
  candidates: string[];
  provenance: string;
}

export interface Banner {
  id: number;
  kind: "error" | "info";
  message: string;
}

export interface Crumb {
  id: string;
  title: string;
}

export interface EditorState {
  objectId: string | null;
  object: PromptObjectDoc | null;
  /** Optimistic-concurrency token sent with every mutation. */
  objectVersion: number;
  cards: Card[];
  breadcrumb: Crumb[];
  proposals: ProposalDoc[];
  history: HistoryEntry[];
  selectedVersion: number | null;
  diff: DiffDoc | null;
  preview: { format: string; text: string } | null;
  banners: Banner[];
  /** Per-panel in-flight assistant indicators. */
  busy: Record<string, boolean>;
  /** A stale write was rejected; the UI offers a reload-and-retry prompt. */
  conflict: boolean;
}

export function emptyState(): EditorState {
  return {
    objectId: null,
    object: null,
    objectVersion: 0,
    cards: [],
    breadcrumb: [],
    proposals: [],
    history: [],
    selectedVersion: null,
    diff: null,
    preview: null,
    banners: [],
    busy: {},
    conflict: false,
  };
}

function relationBadge(prop: PropertyDoc): string {
  if (prop.relation.kind === "sequential") {
    return `${prop.relation.group} #${prop.relation.order}`;
  }
  return "parallel";
}

export function cardFrom(prop: PropertyDoc): Card {
  return {
    propId: prop.id,
    name: prop.name,
    isChild: prop.value.kind === "child",
    childRef: prop.value.kind === "child" ? prop.value.ref ?? null : null,
    valueText: prop.value.kind === "text" ? prop.value.text ?? "" : "",
    polarity: prop.polarity,
    tier: prop.tier,
    relationBadge: relationBadge(prop),
    examples: [...prop.examples],
    candidates: [...prop.candidates],
    provenance: prop.provenance,
  };
}

export function cardsFrom(object: PromptObjectDoc): Card[] {
  return object.properties.map(cardFrom);
}

/** Fold a fresh object document into the state after a read or mutation. */
export function withObject(state: EditorState, object: PromptObjectDoc): EditorState {
  return {
    ...state,
    objectId: object.id,
    object,
    objectVersion: object.version,
    cards: cardsFrom(object),
    conflict: false,
  };
}

export function pendingCount(proposal: ProposalDoc): number {
  return proposal.items.filter((item) => item.status === "pending").length;
}

export function itemLabel(item: ProposalDoc["items"][number]): string {
  if (item.kind === "add") {
    const name = (item.spec?.name as string) ?? "?";
    return `add "${name}"`;
  }
  if (item.kind === "update") {
    const fields = Object.keys(item.patch ?? {}).join(", ");
    return `update ${item.prop_id} (${fields})`;
  }
  return `remove ${item.prop_id}`;
}
