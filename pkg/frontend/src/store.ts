/** DOM-free state store for the workbench page.
 *
 * All transitions are plain method calls so the logic is testable
 * without a browser. The store never derives a number the server
 * already reports: coverage fractions, matched ids, diffs and
 * validation errors are taken verbatim from API responses.
 */
import {
  ApiError,
  ClusterDetail,
  ClustersOverview,
  DryRunResponse,
  EditOpKind,
  RepairResponse,
  RepairRuleWire,
  RuleDbWire,
  SearchResultWire,
  WorkbenchApi,
} from "./api.js";

export interface EditorState {
  draft: RepairRuleWire;
  /** true once any field was edited; dry-runs only fire after that */
  touched: boolean;
  pending: boolean;
  dryRun: DryRunResponse | null;
  /** inline validation error reported by the server, if any */
  error: string | null;
  errorField: string | null;
  /** save stays impossible until the latest dry-run came back clean */
  saveEnabled: boolean;
  saveState: "idle" | "saving" | "saved" | "error";
  saveError: string | null;
}

export interface SearchState {
  recordId: string | null;
  loading: boolean;
  query: string | null;
  results: SearchResultWire[];
  /** "no leads" is results.length === 0 with error === null */
  error: string | null;
}

export interface WorkbenchState {
  phase: "loading" | "ready" | "error";
  /** set when the server is unreachable; cleared by retry() */
  banner: string | null;
  overview: ClustersOverview | null;
  selectedCluster: number | null;
  detail: ClusterDetail | null;
  selectedMember: string | null;
  rules: RuleDbWire | null;
  editor: EditorState;
  search: SearchState;
  repairFor: string | null;
  repairResult: RepairResponse | null;
  repairError: string | null;
}

export function emptyDraft(): RepairRuleWire {
  return { id: "", static_re: "", dynamic_re: "", solutions: [[]] };
}

function initialState(): WorkbenchState {
  return {
    phase: "loading",
    banner: null,
    overview: null,
    selectedCluster: null,
    detail: null,
    selectedMember: null,
    rules: null,
    editor: {
      draft: emptyDraft(),
      touched: false,
      pending: false,
      dryRun: null,
      error: null,
      errorField: null,
      saveEnabled: false,
      saveState: "idle",
      saveError: null,
    },
    search: {
      recordId: null,
      loading: false,
      query: null,
      results: [],
      error: null,
    },
    repairFor: null,
    repairResult: null,
    repairError: null,
  };
}

/** Coverage caption: the fraction verbatim, or n/a for an empty target. */
export function coverageText(dryRun: DryRunResponse | null): string {
  if (dryRun === null) return "-";
  if (dryRun.total === 0) return "n/a (empty cluster)";
  return `${dryRun.fraction} (${dryRun.matched_ids.length} of ${dryRun.total})`;
}

export type Listener = (state: WorkbenchState) => void;

export class WorkbenchStore {
  readonly state: WorkbenchState = initialState();
  /** latest scheduled or in-flight dry-run, for tests to await */
  pendingDryRun: Promise<void> | null = null;

  private listeners = new Set<Listener>();
  private seq = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private api: WorkbenchApi,
    private debounceMs = 400,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  // --- cluster browser ---

  async init(): Promise<void> {
    this.state.phase = "loading";
    this.state.banner = null;
    this.emit();
    try {
      this.state.overview = await this.api.clusters();
      this.state.rules = await this.api.rules();
      this.state.phase = "ready";
    } catch (err) {
      this.state.phase = "error";
      this.state.banner = describe(err);
    }
    this.emit();
  }

  /** Re-run the initial load and restore the cluster selection. */
  async retry(): Promise<void> {
    const cluster = this.state.selectedCluster;
    await this.init();
    if (this.state.phase === "ready" && cluster !== null) {
      await this.selectCluster(cluster);
    }
  }

  async selectCluster(id: number): Promise<void> {
    try {
      const detail = await this.api.cluster(id);
      this.state.selectedCluster = id;
      this.state.detail = detail;
      this.state.selectedMember = null;
      this.state.banner = null;
    } catch (err) {
      this.state.banner = describe(err);
    }
    this.emit();
  }

  /** Picking a member drives the repair preview and the search panel. */
  selectMember(recordId: string): void {
    this.state.selectedMember = recordId;
    this.emit();
    if (this.state.editor.touched) this.scheduleDryRun();
    void this.loadSearch(recordId);
  }

  // --- rule editor ---

  editDraft(patch: Partial<Pick<RepairRuleWire, "id" | "static_re" | "dynamic_re">>): void {
    Object.assign(this.state.editor.draft, patch);
    this.draftChanged();
  }

  addSolution(): void {
    this.state.editor.draft.solutions.push([]);
    this.draftChanged();
  }

  removeSolution(index: number): void {
    this.state.editor.draft.solutions.splice(index, 1);
    if (this.state.editor.draft.solutions.length === 0) {
      this.state.editor.draft.solutions.push([]);
    }
    this.draftChanged();
  }

  addOp(solution: number, op: EditOpKind = "insert_after"): void {
    this.state.editor.draft.solutions[solution]?.push({
      op,
      target: "",
      text: "",
    });
    this.draftChanged();
  }

  updateOp(
    solution: number,
    index: number,
    patch: Partial<{ op: EditOpKind; target: string; text: string }>,
  ): void {
    const ops = this.state.editor.draft.solutions[solution];
    const entry = ops?.[index];
    if (entry === undefined) return;
    Object.assign(entry, patch);
    this.draftChanged();
  }

  removeOp(solution: number, index: number): void {
    this.state.editor.draft.solutions[solution]?.splice(index, 1);
    this.draftChanged();
  }

  /** Reorder one edit op within its solution (ops apply in order). */
  moveOp(solution: number, index: number, delta: -1 | 1): void {
    const ops = this.state.editor.draft.solutions[solution];
    if (ops === undefined) return;
    const target = index + delta;
    if (index < 0 || index >= ops.length || target < 0 || target >= ops.length) {
      return;
    }
    const [entry] = ops.splice(index, 1);
    ops.splice(target, 0, entry!);
    this.draftChanged();
  }

  private draftChanged(): void {
    const editor = this.state.editor;
    editor.touched = true;
    editor.saveEnabled = false;
    editor.saveState = "idle";
    editor.saveError = null;
    // any in-flight dry-run answers a draft that no longer exists
    this.seq++;
    this.emit();
    this.scheduleDryRun();
  }

  /** Debounced: bursts of edits collapse into one request. */
  private scheduleDryRun(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.pendingDryRun = this.fireDryRun();
    }, this.debounceMs);
  }

  /** Latest wins: responses for an outdated sequence number are dropped. */
  private async fireDryRun(): Promise<void> {
    const mySeq = ++this.seq;
    const editor = this.state.editor;
    editor.pending = true;
    this.emit();
    try {
      const response = await this.api.dryRun({
        rule: JSON.parse(JSON.stringify(editor.draft)),
        kind: "repair",
        ...(this.state.selectedCluster !== null
          ? { cluster_id: this.state.selectedCluster }
          : {}),
        ...(this.state.selectedMember !== null
          ? { preview_record: this.state.selectedMember }
          : {}),
      });
      if (mySeq !== this.seq) return;
      editor.dryRun = response;
      editor.error = null;
      editor.errorField = null;
      editor.saveEnabled = true;
    } catch (err) {
      if (mySeq !== this.seq) return;
      editor.dryRun = null;
      editor.saveEnabled = false;
      if (err instanceof ApiError && err.status >= 400 && err.status < 500) {
        editor.error = err.message;
        editor.errorField = err.field;
      } else {
        editor.error = null;
        editor.errorField = null;
        this.state.banner = describe(err);
      }
    } finally {
      if (mySeq === this.seq) {
        editor.pending = false;
        this.emit();
      }
    }
  }

  async save(): Promise<void> {
    const editor = this.state.editor;
    if (!editor.saveEnabled || editor.saveState === "saving") return;
    editor.saveState = "saving";
    this.emit();
    try {
      await this.api.saveRule(JSON.parse(JSON.stringify(editor.draft)));
      this.state.rules = await this.api.rules();
      editor.saveState = "saved";
      editor.saveError = null;
    } catch (err) {
      editor.saveState = "error";
      editor.saveError = describe(err);
    }
    this.emit();
  }

  // --- search panel ---

  async loadSearch(recordId: string): Promise<void> {
    const search = this.state.search;
    search.recordId = recordId;
    search.loading = true;
    search.error = null;
    this.emit();
    try {
      const response = await this.api.search(recordId);
      if (search.recordId !== recordId) return;
      search.query = response.query;
      search.results = response.results;
    } catch (err) {
      if (search.recordId !== recordId) return;
      search.query = null;
      search.results = [];
      search.error = describe(err);
    }
    search.loading = false;
    this.emit();
  }

  // --- repair ---

  async repairRecord(recordId: string): Promise<void> {
    this.state.repairFor = recordId;
    this.state.repairResult = null;
    this.state.repairError = null;
    this.emit();
    try {
      this.state.repairResult = await this.api.repair(recordId);
    } catch (err) {
      this.state.repairError = describe(err);
    }
    this.emit();
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status === 0
      ? `server unreachable: ${err.message}`
      : `server error ${err.status}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}
