import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  ApiError,
  ClusterDetail,
  ClustersOverview,
  DryRunRequest,
  DryRunResponse,
  RepairResponse,
  RepairRuleWire,
  RuleDbWire,
  SearchResponse,
  WorkbenchApi,
} from "../src/api.js";
import { WorkbenchStore, coverageText } from "../src/store.js";

function overviewFixture(): ClustersOverview {
  return {
    stale: false,
    noise: 2,
    total: 22,
    params: { min_cluster_size: 3, min_samples: 3 },
    clusters: [
      { cluster_id: 0, size: 10, stability: 11.7, top_terms: ["apt", "package"] },
      { cluster_id: 1, size: 10, stability: 28.7, top_terms: ["ruby", "bundle"] },
    ],
  };
}

function detailFixture(): ClusterDetail {
  return {
    cluster_id: 0,
    stability: 11.7,
    members: [
      {
        record_id: "a0",
        repo: "github.com/acme/a0",
        dockerfile_path: "Dockerfile",
        log_tail: "E: Unable to locate package python-pip",
      },
      {
        record_id: "a1",
        repo: "github.com/acme/a1",
        dockerfile_path: "Dockerfile",
        log_tail: "E: Unable to locate package curl",
      },
    ],
  };
}

function okDryRun(fraction = 1.0): DryRunResponse {
  return {
    matched_ids: ["a0", "a1"],
    fraction,
    total: 2,
    preview: null,
  };
}

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** In-memory stand-in for the HTTP client; each handler is swappable. */
class FakeApi {
  readonly baseUrl = "fake://workbench";

  overview = overviewFixture();
  detail = detailFixture();
  db: RuleDbWire = { version: 1, repairs: [], suggestions: [] };
  searchResponse: SearchResponse = { query: "dockerfile apt", results: [] };
  repairResponse: RepairResponse = {
    outcome: "search",
    query: null,
    results: [],
  };

  clustersFail = false;
  dryRunRequests: DryRunRequest[] = [];
  saveRequests: RepairRuleWire[] = [];

  onDryRun: (req: DryRunRequest) => Promise<DryRunResponse> = async () =>
    okDryRun();
  onSearch: (id: string) => Promise<SearchResponse> = async () =>
    this.searchResponse;
  onSave: (rule: RepairRuleWire) => Promise<{ saved: string; version: number }> =
    async (rule) => {
      this.db = {
        version: this.db.version + 1,
        repairs: [...this.db.repairs, rule],
        suggestions: this.db.suggestions,
      };
      return { saved: rule.id, version: this.db.version };
    };
  onRepair: (id: string) => Promise<RepairResponse> = async () =>
    this.repairResponse;

  async clusters(): Promise<ClustersOverview> {
    if (this.clustersFail) throw new ApiError(0, "connection refused");
    return this.overview;
  }

  async cluster(id: number): Promise<ClusterDetail> {
    if (id !== this.detail.cluster_id) {
      throw new ApiError(404, `no such cluster: ${id}`);
    }
    return this.detail;
  }

  async record(): Promise<never> {
    throw new ApiError(404, "unused in these tests");
  }

  async rules(): Promise<RuleDbWire> {
    return this.db;
  }

  search(id: string): Promise<SearchResponse> {
    return this.onSearch(id);
  }

  dryRun(req: DryRunRequest): Promise<DryRunResponse> {
    this.dryRunRequests.push(req);
    return this.onDryRun(req);
  }

  saveRule(rule: RepairRuleWire): Promise<{ saved: string; version: number }> {
    this.saveRequests.push(rule);
    return this.onSave(rule);
  }

  repair(id: string): Promise<RepairResponse> {
    return this.onRepair(id);
  }
}

function makeStore(api: FakeApi): WorkbenchStore {
  return new WorkbenchStore(api as unknown as WorkbenchApi);
}

async function settle(store: WorkbenchStore): Promise<void> {
  await vi.advanceTimersByTimeAsync(400);
  await store.pendingDryRun;
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("cluster browser", () => {
  it("loads the overview and rule db on init", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    expect(store.state.phase).toBe("ready");
    expect(store.state.overview?.clusters).toHaveLength(2);
    expect(store.state.rules?.version).toBe(1);
    expect(store.state.banner).toBeNull();
  });

  it("shows a banner when the server is down and recovers on retry", async () => {
    const api = new FakeApi();
    api.clustersFail = true;
    const store = makeStore(api);
    await store.init();
    expect(store.state.phase).toBe("error");
    expect(store.state.banner).toContain("server unreachable");

    api.clustersFail = false;
    await store.retry();
    expect(store.state.phase).toBe("ready");
    expect(store.state.banner).toBeNull();
  });

  it("retry restores the previous cluster selection", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    await store.selectCluster(0);
    expect(store.state.detail?.members).toHaveLength(2);

    await store.retry();
    expect(store.state.selectedCluster).toBe(0);
    expect(store.state.detail?.cluster_id).toBe(0);
  });

  it("selecting a cluster resets the member selection", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    await store.selectCluster(0);
    store.selectMember("a0");
    expect(store.state.selectedMember).toBe("a0");
    await store.selectCluster(0);
    expect(store.state.selectedMember).toBeNull();
  });

  it("keeps a banner instead of detail when the cluster id is unknown", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    await store.selectCluster(7);
    expect(store.state.detail).toBeNull();
    expect(store.state.banner).toContain("no such cluster");
  });
});

describe("rule editor dry-runs", () => {
  it("debounces bursts of edits into one request after 400 ms", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    store.editDraft({ id: "r1" });
    store.editDraft({ static_re: "FROM ubuntu" });
    store.editDraft({ dynamic_re: "unable to locate" });
    await vi.advanceTimersByTimeAsync(399);
    expect(api.dryRunRequests).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(1);
    await store.pendingDryRun;
    expect(api.dryRunRequests).toHaveLength(1);
    expect(store.state.editor.dryRun?.fraction).toBe(1.0);
    expect(store.state.editor.saveEnabled).toBe(true);
  });

  it("disables save the moment the draft changes again", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    store.editDraft({ id: "r1" });
    await settle(store);
    expect(store.state.editor.saveEnabled).toBe(true);
    store.editDraft({ static_re: "FROM node" });
    expect(store.state.editor.saveEnabled).toBe(false);
  });

  it("discards a stale response by sequence number (latest wins)", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    const first = deferred<DryRunResponse>();
    const second = deferred<DryRunResponse>();
    const queue = [first, second];
    api.onDryRun = () => queue.shift()!.promise;

    store.editDraft({ id: "r1" });
    await vi.advanceTimersByTimeAsync(400);
    store.editDraft({ static_re: "FROM ubuntu" });
    await vi.advanceTimersByTimeAsync(400);
    expect(api.dryRunRequests).toHaveLength(2);

    second.resolve(okDryRun(0.5));
    await store.pendingDryRun;
    expect(store.state.editor.dryRun?.fraction).toBe(0.5);

    first.resolve(okDryRun(0.9));
    await first.promise;
    await vi.advanceTimersByTimeAsync(0);
    expect(store.state.editor.dryRun?.fraction).toBe(0.5);
    expect(store.state.editor.saveEnabled).toBe(true);
  });

  it("an edit invalidates the dry-run already in flight", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    const slow = deferred<DryRunResponse>();
    api.onDryRun = () => slow.promise;

    store.editDraft({ id: "r1" });
    await vi.advanceTimersByTimeAsync(400);
    store.editDraft({ static_re: "FROM ubuntu" });

    slow.resolve(okDryRun(0.9));
    await slow.promise;
    await vi.advanceTimersByTimeAsync(0);
    expect(store.state.editor.dryRun).toBeNull();
    expect(store.state.editor.saveEnabled).toBe(false);
  });

  it("shows the server's validation error inline and blocks save", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    api.onDryRun = async () => {
      throw new ApiError(400, "invalid regex: missing ), unterminated subpattern", "static_re");
    };
    store.editDraft({ static_re: "FROM ubuntu(" });
    await settle(store);
    expect(store.state.editor.error).toContain("invalid regex");
    expect(store.state.editor.errorField).toBe("static_re");
    expect(store.state.editor.saveEnabled).toBe(false);

    await store.save();
    expect(api.saveRequests).toHaveLength(0);

    api.onDryRun = async () => okDryRun();
    store.editDraft({ static_re: "FROM ubuntu" });
    await settle(store);
    expect(store.state.editor.error).toBeNull();
    expect(store.state.editor.saveEnabled).toBe(true);
  });

  it("reports the coverage fraction verbatim", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    api.onDryRun = async () => ({
      matched_ids: ["a0"],
      fraction: 0.8333333333333334,
      total: 12,
      preview: null,
    });
    store.editDraft({ id: "r1" });
    await settle(store);
    expect(store.state.editor.dryRun?.fraction).toBe(0.8333333333333334);
    expect(coverageText(store.state.editor.dryRun)).toBe(
      "0.8333333333333334 (1 of 12)",
    );
  });

  it("treats an empty cluster as coverage n/a with save still allowed", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    api.onDryRun = async () => ({
      matched_ids: [],
      fraction: 0.0,
      total: 0,
      preview: null,
    });
    store.editDraft({ id: "r1" });
    await settle(store);
    expect(coverageText(store.state.editor.dryRun)).toBe("n/a (empty cluster)");
    expect(store.state.editor.saveEnabled).toBe(true);
  });

  it("sends the cluster and preview member with the draft", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    await store.selectCluster(0);
    store.editDraft({ id: "r1", static_re: "FROM ubuntu" });
    await settle(store);
    store.selectMember("a0");
    await settle(store);

    const last = api.dryRunRequests.at(-1)!;
    expect(last.kind).toBe("repair");
    expect(last.cluster_id).toBe(0);
    expect(last.preview_record).toBe("a0");
    expect(last.rule.static_re).toBe("FROM ubuntu");
  });

  it("raises the banner when a dry-run hits a server failure", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    api.onDryRun = async () => {
      throw new ApiError(0, "socket hang up");
    };
    store.editDraft({ id: "r1" });
    await settle(store);
    expect(store.state.banner).toContain("server unreachable");
    expect(store.state.editor.error).toBeNull();
    expect(store.state.editor.saveEnabled).toBe(false);
  });
});

describe("solutions editor", () => {
  it("keeps edit ops ordered through add, update, move and remove", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();

    store.addOp(0, "replace");
    store.updateOp(0, 0, { target: "$0", text: ":18.04" });
    store.addOp(0, "insert_after");
    store.updateOp(0, 1, { target: "FROM", text: "\nARG X=1" });
    store.moveOp(0, 1, -1);
    store.addSolution();
    store.addOp(1, "remove");
    store.updateOp(1, 0, { target: "$1" });

    expect(store.state.editor.draft.solutions).toEqual([
      [
        { op: "insert_after", target: "FROM", text: "\nARG X=1" },
        { op: "replace", target: "$0", text: ":18.04" },
      ],
      [{ op: "remove", target: "$1", text: "" }],
    ]);

    store.removeOp(0, 0);
    expect(store.state.editor.draft.solutions[0]).toEqual([
      { op: "replace", target: "$0", text: ":18.04" },
    ]);

    store.removeSolution(0);
    store.removeSolution(0);
    expect(store.state.editor.draft.solutions).toEqual([[]]);
  });

  it("every structural change schedules a dry-run", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    store.addOp(0);
    await settle(store);
    store.updateOp(0, 0, { target: "FROM" });
    await settle(store);
    expect(api.dryRunRequests).toHaveLength(2);
  });
});

describe("saving", () => {
  async function storeWithValidDraft(api: FakeApi): Promise<WorkbenchStore> {
    const store = makeStore(api);
    await store.init();
    store.editDraft({
      id: "u1",
      static_re: "FROM ubuntu",
      dynamic_re: "unable to locate package (.*)",
    });
    store.addOp(0, "insert_after");
    store.updateOp(0, 0, { target: "FROM", text: "\nARG D=1" });
    await settle(store);
    return store;
  }

  it("posts the draft and refreshes the rule list (read-your-writes)", async () => {
    const api = new FakeApi();
    const store = await storeWithValidDraft(api);
    expect(store.state.editor.saveEnabled).toBe(true);

    await store.save();
    expect(api.saveRequests).toHaveLength(1);
    expect(api.saveRequests[0]!.id).toBe("u1");
    expect(store.state.editor.saveState).toBe("saved");
    expect(store.state.rules?.repairs.map((r) => r.id)).toContain("u1");
    expect(store.state.rules?.version).toBe(2);
  });

  it("surfaces a rejected save without losing the draft", async () => {
    const api = new FakeApi();
    const store = await storeWithValidDraft(api);
    api.onSave = async () => {
      throw new ApiError(400, "duplicate rule id: u1");
    };
    await store.save();
    expect(store.state.editor.saveState).toBe("error");
    expect(store.state.editor.saveError).toContain("duplicate rule id");
    expect(store.state.editor.draft.id).toBe("u1");
  });
});

describe("search panel", () => {
  it("stores ranked leads for the selected member", async () => {
    const api = new FakeApi();
    api.searchResponse = {
      query: "dockerfile unable locate package",
      results: [
        {
          url: "https://stackoverflow.com/questions/123",
          title: "apt fails",
          source_domain: "stackoverflow.com",
        },
        {
          url: "https://github.com/moby/moby/issues/456",
          title: "moby issue",
          source_domain: "github.com/*/issues",
        },
      ],
    };
    const store = makeStore(api);
    await store.init();
    await store.loadSearch("a0");
    expect(store.state.search.results).toHaveLength(2);
    expect(store.state.search.results[0]!.source_domain).toBe(
      "stackoverflow.com",
    );
    expect(store.state.search.error).toBeNull();
  });

  it("distinguishes no leads from a backend failure", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();

    await store.loadSearch("a0");
    expect(store.state.search.results).toHaveLength(0);
    expect(store.state.search.error).toBeNull();

    api.onSearch = async () => {
      throw new ApiError(502, "search backend error: HTTP 500");
    };
    await store.loadSearch("a1");
    expect(store.state.search.error).toContain("search backend error");
  });

  it("selecting a member loads its search leads", async () => {
    const api = new FakeApi();
    const store = makeStore(api);
    await store.init();
    store.selectMember("a1");
    await vi.advanceTimersByTimeAsync(0);
    expect(store.state.search.recordId).toBe("a1");
    expect(store.state.search.loading).toBe(false);
  });
});

describe("repair", () => {
  it("records the triage outcome for a member", async () => {
    const api = new FakeApi();
    api.onRepair = async () => ({
      outcome: "repaired",
      rule_id: "u1",
      variants: [
        { solution_index: 0, patched_text: "FROM ubuntu:18.04\n", diff: "" },
      ],
    });
    const store = makeStore(api);
    await store.init();
    await store.repairRecord("a0");
    expect(store.state.repairFor).toBe("a0");
    expect(store.state.repairResult?.outcome).toBe("repaired");
  });

  it("keeps the error when repair is rejected", async () => {
    const api = new FakeApi();
    api.onRepair = async () => {
      throw new ApiError(400, "record ok0 is not a failure");
    };
    const store = makeStore(api);
    await store.init();
    await store.repairRecord("ok0");
    expect(store.state.repairResult).toBeNull();
    expect(store.state.repairError).toContain("not a failure");
  });
});
