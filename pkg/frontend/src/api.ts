/** Typed client for the workbench HTTP API.
 *
 * Every shape here mirrors the server's JSON verbatim; the UI never
 * recomputes anything the server already reports.
 */

export interface ClusterSummary {
  cluster_id: number;
  size: number;
  stability: number;
  top_terms: string[];
}

export interface ClustersOverview {
  stale: boolean;
  noise: number;
  total: number;
  params: { min_cluster_size: number; min_samples: number };
  clusters: ClusterSummary[];
}

export interface MemberRow {
  record_id: string;
  repo: string;
  dockerfile_path: string;
  log_tail: string;
}

export interface ClusterDetail {
  cluster_id: number;
  stability: number;
  members: MemberRow[];
}

export interface RecordDetail {
  id: string;
  repo: string;
  dockerfile_path: string;
  dockerfile: string;
  stdout: string;
  stderr: string;
  outcome: string;
  duration_s: number;
  captured_at: string;
  meta: Record<string, string>;
  cluster: number | null;
}

export type EditOpKind = "replace" | "insert_after" | "remove";

export interface EditOpWire {
  op: EditOpKind;
  target: string;
  text?: string;
}

export interface RepairRuleWire {
  id: string;
  static_re: string;
  dynamic_re: string;
  solutions: EditOpWire[][];
  src?: string | null;
  notes?: string;
  parent_cluster?: number | null;
}

export interface SuggestionWire {
  id: string;
  static_re: string;
  dynamic_re: string;
  message: string;
  target_kind?: string | null;
}

export interface RuleDbWire {
  version: number;
  repairs: RepairRuleWire[];
  suggestions: SuggestionWire[];
}

export interface DryRunRequest {
  rule: RepairRuleWire;
  kind?: "repair" | "suggestion";
  cluster_id?: number;
  preview_record?: string;
}

export type PreviewVariant =
  | { solution_index: number; diff: string }
  | { solution_index: number; error: string };

export interface DryRunResponse {
  matched_ids: string[];
  fraction: number;
  total: number;
  preview: { variants: PreviewVariant[] } | null;
}

export interface SaveResponse {
  saved: string;
  version: number;
}

export interface SearchResultWire {
  url: string;
  title: string;
  source_domain: string;
}

export interface SearchResponse {
  query: string | null;
  results: SearchResultWire[];
}

export type RepairResponse =
  | {
      outcome: "repaired";
      rule_id: string;
      variants: { solution_index: number; patched_text: string; diff: string }[];
    }
  | { outcome: "suggested"; suggestion_id: string; message: string }
  | { outcome: "search"; query: string | null; results: SearchResultWire[] };

/** Non-2xx responses carry {error, field?}; network failures get status 0. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly field: string | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function fetchJson<T>(url: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, err instanceof Error ? err.message : String(err));
  }
  let body: unknown = null;
  try {
    body = await resp.json();
  } catch {
    // non-JSON body; fall through with the status line alone
  }
  if (!resp.ok) {
    const obj = (body ?? {}) as { error?: string; field?: string };
    throw new ApiError(
      resp.status,
      obj.error ?? `HTTP ${resp.status}`,
      obj.field ?? null,
    );
  }
  return body as T;
}

function post(payload: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  };
}

export class WorkbenchApi {
  constructor(readonly baseUrl: string) {}

  clusters(): Promise<ClustersOverview> {
    return fetchJson(`${this.baseUrl}/clusters`);
  }

  cluster(id: number): Promise<ClusterDetail> {
    return fetchJson(`${this.baseUrl}/clusters/${id}`);
  }

  record(id: string): Promise<RecordDetail> {
    return fetchJson(`${this.baseUrl}/records/${encodeURIComponent(id)}`);
  }

  rules(): Promise<RuleDbWire> {
    return fetchJson(`${this.baseUrl}/rules`);
  }

  search(recordId: string): Promise<SearchResponse> {
    return fetchJson(
      `${this.baseUrl}/search?record=${encodeURIComponent(recordId)}`,
    );
  }

  dryRun(req: DryRunRequest): Promise<DryRunResponse> {
    return fetchJson(`${this.baseUrl}/rules/dry-run`, post(req));
  }

  saveRule(rule: RepairRuleWire): Promise<SaveResponse> {
    return fetchJson(`${this.baseUrl}/rules`, post({ kind: "repair", rule }));
  }

  repair(recordId: string): Promise<RepairResponse> {
    return fetchJson(
      `${this.baseUrl}/repair/${encodeURIComponent(recordId)}`,
      { method: "POST" },
    );
  }
}
