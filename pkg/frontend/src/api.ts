/**
 * Typed client for the ooprompt HTTP service.
 *
 * Every response is an envelope: {ok: true, data} or {ok: false, error}.
 * Failures become ApiError with the service's stable error code, so callers
 * can branch on version_conflict / unknown_object / provider errors.
 */

export interface RelationDoc {
  kind: "parallel" | "sequential";
  group?: string;
  order?: number;
}

export interface ValueDoc {
  kind: "text" | "child";
  text?: string;
  ref?: string;
}

export interface PropertyDoc {
  id: string;
  name: string;
  polarity: "include" | "exclude";
  tier: "slightly_wanted" | "normal" | "wanted" | "highly_wanted";
  relation: RelationDoc;
  value: ValueDoc;
  candidates: string[];
  examples: string[];
  references: { label: string; uri: string }[];
  provenance: string;
}

export interface PromptObjectDoc {
  schema_version: number;
  id: string;
  title: string;
  template_refs: string[];
  version: number;
  notes: string;
  properties: PropertyDoc[];
}

export interface ObjectSummary {
  id: string;
  title: string;
  version: number;
  property_count: number;
  orphaned: boolean;
}

export interface ProposalItemDoc {
  kind: "add" | "update" | "remove";
  status: "pending" | "applied" | "dismissed";
  rationale: string;
  spec?: Record<string, unknown> & { name?: string };
  prop_id?: string;
  patch?: Record<string, unknown>;
  span?: [number, number] | null;
}

export interface ProposalDoc {
  id: string;
  object_id: string;
  object_version: number;
  source: string;
  items: ProposalItemDoc[];
}

export interface HistoryEntry {
  version: number;
  changelog: string;
  timestamp: string;
}

export interface DiffDoc {
  added: PropertyDoc[];
  removed: PropertyDoc[];
  changed: { prop_id: string; name: string; fields: Record<string, { from: unknown; to: unknown }> }[];
  object_fields: Record<string, { from: unknown; to: unknown }>;
}

export interface ArtifactDoc {
  object_id: string;
  object_version: number;
  format: string;
  variant_key: string;
  text: string;
}

export interface ApplyResult {
  object: PromptObjectDoc | null;
  proposal: ProposalDoc;
  item_errors: { item: number; error: string }[];
}

export interface TemplateDoc {
  id: string;
  display_name: string;
  description: string;
  tags: { output_type: string; use_cases: string[] };
  defaults: { name: string; value: string; description: string; tier: string }[];
  seed: boolean;
}

export type SuggestionKind = "props" | "relations" | "candidates" | "examples" | "feedback";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
    public details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? {} : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("unreachable", `service unreachable: ${err}`, 0);
    }
    let doc: { ok: boolean; data?: T; error?: { code: string; message: string; details?: Record<string, unknown> } };
    try {
      doc = await response.json();
    } catch {
      throw new ApiError("bad_envelope", `non-JSON response (${response.status})`, response.status);
    }
    if (!doc.ok) {
      const error = doc.error ?? { code: "unknown", message: "unknown error" };
      throw new ApiError(error.code, error.message, response.status, error.details ?? {});
    }
    return doc.data as T;
  }

  healthz(): Promise<void> {
    return this.request<void>("GET", "/healthz");
  }

  listObjects(): Promise<ObjectSummary[]> {
    return this.request("GET", "/objects");
  }

  getObject(id: string): Promise<PromptObjectDoc> {
    return this.request("GET", `/objects/${id}`);
  }

  createObject(title: string, templateRefs: string[] = []): Promise<PromptObjectDoc> {
    return this.request("POST", "/objects", { title, template_refs: templateRefs });
  }

  addProperty(objectId: string, version: number, spec: Record<string, unknown>): Promise<PromptObjectDoc> {
    return this.request("POST", `/objects/${objectId}/properties`, {
      object_version: version,
      spec,
    });
  }

  patchProperty(
    objectId: string,
    propId: string,
    version: number,
    patch: Record<string, unknown>,
  ): Promise<PromptObjectDoc> {
    return this.request("PATCH", `/objects/${objectId}/properties/${propId}`, {
      object_version: version,
      patch,
    });
  }

  deleteProperty(objectId: string, propId: string, version: number): Promise<PromptObjectDoc> {
    return this.request("DELETE", `/objects/${objectId}/properties/${propId}?object_version=${version}`);
  }

  nestProperty(
    objectId: string,
    propId: string,
    version: number,
  ): Promise<{ parent: PromptObjectDoc; child: PromptObjectDoc }> {
    return this.request("POST", `/objects/${objectId}/nest/${propId}`, { object_version: version });
  }

  extract(rawText: string, objectId?: string): Promise<{ object: PromptObjectDoc; proposal: ProposalDoc }> {
    return this.request("POST", "/assist/extract", { raw_text: rawText, object_id: objectId });
  }

  suggest(kind: SuggestionKind, body: Record<string, unknown>): Promise<ProposalDoc> {
    return this.request("POST", `/assist/${kind === "props" ? "suggest" : kind}`, body);
  }

  listProposals(objectId: string): Promise<ProposalDoc[]> {
    return this.request("GET", `/proposals?object_id=${objectId}`);
  }

  applyProposal(proposalId: string, version: number, items?: number[]): Promise<ApplyResult> {
    return this.request("POST", `/proposals/${proposalId}/apply`, {
      object_version: version,
      items,
    });
  }

  dismissProposal(proposalId: string, items?: number[]): Promise<ProposalDoc> {
    return this.request("POST", `/proposals/${proposalId}/dismiss`, { items });
  }

  history(objectId: string): Promise<HistoryEntry[]> {
    return this.request("GET", `/objects/${objectId}/history`);
  }

  diff(objectId: string, a: number, b: number): Promise<DiffDoc> {
    return this.request("GET", `/objects/${objectId}/diff?a=${a}&b=${b}`);
  }

  restore(objectId: string, targetVersion: number, version: number): Promise<PromptObjectDoc> {
    return this.request("POST", `/objects/${objectId}/restore/${targetVersion}`, {
      object_version: version,
    });
  }

  render(objectId: string, format: string, variants?: number): Promise<ArtifactDoc[]> {
    const query = variants === undefined ? `format=${format}` : `format=${format}&variants=${variants}`;
    return this.request<{ artifacts: ArtifactDoc[] }>(
      "POST", `/objects/${objectId}/render?${query}`,
    ).then((data) => data.artifacts);
  }

  analyze(objectId: string): Promise<Record<string, unknown>> {
    return this.request("POST", `/objects/${objectId}/analyze`, {});
  }

  templates(): Promise<TemplateDoc[]> {
    return this.request("GET", "/templates");
  }
}
