/** Thin DOM layer: builds the page skeleton once, then patches the
 * dynamic regions on every store emit. All state transitions live in
 * the store; this file only reads state and forwards input events.
 */
import { EditOpKind, PreviewVariant } from "./api.js";
import { classifyDiff } from "./diff.js";
import { WorkbenchState, WorkbenchStore, coverageText } from "./store.js";

const OP_KINDS: EditOpKind[] = ["replace", "insert_after", "remove"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

function renderDiffInto(container: HTMLElement, diff: string): void {
  const pre = el("pre", "diff");
  for (const line of classifyDiff(diff)) {
    const row = el("span", `diff-line diff-${line.kind}`);
    if (line.instruction !== null) {
      const marker = line.text.slice(0, 1);
      const body = line.text.slice(1);
      const idx = body.indexOf(line.instruction);
      row.append(marker + body.slice(0, idx));
      row.append(el("span", "diff-instruction", line.instruction));
      row.append(body.slice(idx + line.instruction.length));
    } else {
      row.textContent = line.text;
    }
    row.append("\n");
    pre.append(row);
  }
  container.append(pre);
}

export class WorkbenchPage {
  private banner: HTMLElement;
  private staleBadge: HTMLElement;
  private clusterList: HTMLElement;
  private memberList: HTMLElement;
  private memberHeading: HTMLElement;
  private idInput: HTMLInputElement;
  private staticInput: HTMLInputElement;
  private dynamicInput: HTMLInputElement;
  private solutionsBox: HTMLElement;
  private solutionsShape = "";
  private coverageLine: HTMLElement;
  private editorError: HTMLElement;
  private previewBox: HTMLElement;
  private saveButton: HTMLButtonElement;
  private saveStatus: HTMLElement;
  private rulesBox: HTMLElement;
  private searchBox: HTMLElement;
  private repairBox: HTMLElement;

  constructor(
    private root: HTMLElement,
    private store: WorkbenchStore,
  ) {
    this.banner = el("div", "banner hidden");
    const retry = el("button", "", "retry");
    retry.addEventListener("click", () => void this.store.retry());
    this.banner.append(el("span", "banner-text"), retry);

    const header = el("header");
    header.append(el("h1", "", "build-failure workbench"));
    this.staleBadge = el("span", "stale-badge hidden", "stale clustering");
    header.append(this.staleBadge);

    this.clusterList = el("div", "cluster-list");
    const clustersPanel = el("section", "panel");
    clustersPanel.append(el("h2", "", "clusters"), this.clusterList);

    this.memberHeading = el("h2", "", "members");
    this.memberList = el("div", "member-list");
    const membersPanel = el("section", "panel");
    this.searchBox = el("div", "search-box");
    this.repairBox = el("div", "repair-box");
    membersPanel.append(
      this.memberHeading,
      this.memberList,
      el("h2", "", "search leads"),
      this.searchBox,
      el("h2", "", "repair outcome"),
      this.repairBox,
    );

    this.idInput = this.textInput("rule id", (v) =>
      this.store.editDraft({ id: v }),
    );
    this.staticInput = this.textInput("static pattern (Dockerfile)", (v) =>
      this.store.editDraft({ static_re: v }),
    );
    this.dynamicInput = this.textInput("dynamic pattern (build log)", (v) =>
      this.store.editDraft({ dynamic_re: v }),
    );
    this.solutionsBox = el("div", "solutions");
    const addSolution = el("button", "", "add solution");
    addSolution.addEventListener("click", () => this.store.addSolution());
    this.coverageLine = el("div", "coverage");
    this.editorError = el("div", "editor-error hidden");
    this.previewBox = el("div", "preview");
    this.saveButton = el("button", "save", "save rule");
    this.saveButton.disabled = true;
    this.saveButton.addEventListener("click", () => void this.store.save());
    this.saveStatus = el("span", "save-status");
    this.rulesBox = el("div", "rules-box");

    const editorPanel = el("section", "panel");
    editorPanel.append(
      el("h2", "", "rule editor"),
      this.labelled("id", this.idInput),
      this.labelled("static_re", this.staticInput),
      this.labelled("dynamic_re", this.dynamicInput),
      el("h3", "", "solutions"),
      this.solutionsBox,
      addSolution,
      this.coverageLine,
      this.editorError,
      el("h3", "", "repair preview"),
      this.previewBox,
      this.saveButton,
      this.saveStatus,
      el("h3", "", "rule database"),
      this.rulesBox,
    );

    const main = el("main", "columns");
    main.append(clustersPanel, membersPanel, editorPanel);
    this.root.append(this.banner, header, main);

    this.store.subscribe((state) => this.update(state));
  }

  private textInput(
    placeholder: string,
    onInput: (value: string) => void,
  ): HTMLInputElement {
    const input = el("input");
    input.type = "text";
    input.placeholder = placeholder;
    input.addEventListener("input", () => onInput(input.value));
    return input;
  }

  private labelled(name: string, input: HTMLElement): HTMLElement {
    const row = el("label", "field");
    row.append(el("span", "field-name", name), input);
    return row;
  }

  private update(state: WorkbenchState): void {
    this.updateBanner(state);
    this.staleBadge.classList.toggle("hidden", !state.overview?.stale);
    this.updateClusters(state);
    this.updateMembers(state);
    this.updateEditor(state);
    this.updateSearch(state);
    this.updateRepair(state);
  }

  private updateBanner(state: WorkbenchState): void {
    this.banner.classList.toggle("hidden", state.banner === null);
    const text = this.banner.querySelector(".banner-text");
    if (text) text.textContent = state.banner ?? "";
  }

  private updateClusters(state: WorkbenchState): void {
    clear(this.clusterList);
    const overview = state.overview;
    if (overview === null) {
      this.clusterList.append(el("p", "muted", "loading..."));
      return;
    }
    if (overview.total === 0) {
      this.clusterList.append(el("p", "muted", "no failing records"));
      return;
    }
    if (overview.clusters.length === 0) {
      this.clusterList.append(
        el("p", "muted", `no clusters (${overview.noise} noise records)`),
      );
      return;
    }
    for (const cluster of overview.clusters) {
      const card = el("button", "cluster-card");
      if (cluster.cluster_id === state.selectedCluster) {
        card.classList.add("selected");
      }
      card.append(
        el("span", "cluster-title", `cluster ${cluster.cluster_id}`),
        el("span", "", `${cluster.size} members`),
        el("span", "", `stability ${cluster.stability.toFixed(2)}`),
        el("span", "terms", cluster.top_terms.join(", ")),
      );
      card.addEventListener("click", () =>
        void this.store.selectCluster(cluster.cluster_id),
      );
      this.clusterList.append(card);
    }
    this.clusterList.append(
      el("p", "muted", `${overview.noise} noise of ${overview.total} failing`),
    );
  }

  private updateMembers(state: WorkbenchState): void {
    clear(this.memberList);
    const detail = state.detail;
    this.memberHeading.textContent =
      detail === null ? "members" : `members of cluster ${detail.cluster_id}`;
    if (detail === null) {
      this.memberList.append(el("p", "muted", "select a cluster"));
      return;
    }
    const matched = new Set(state.editor.dryRun?.matched_ids ?? []);
    for (const member of detail.members) {
      const row = el("div", "member");
      if (matched.has(member.record_id)) row.classList.add("matched");
      if (member.record_id === state.selectedMember) {
        row.classList.add("selected");
      }
      const head = el("div", "member-head");
      const pick = el("button", "", member.record_id);
      pick.addEventListener("click", () =>
        this.store.selectMember(member.record_id),
      );
      const fix = el("button", "", "repair");
      fix.addEventListener("click", () =>
        void this.store.repairRecord(member.record_id),
      );
      head.append(pick, el("span", "muted", member.repo), fix);
      row.append(head, el("pre", "log-tail", member.log_tail));
      this.memberList.append(row);
    }
  }

  private updateEditor(state: WorkbenchState): void {
    const editor = state.editor;
    this.pushValue(this.idInput, editor.draft.id);
    this.pushValue(this.staticInput, editor.draft.static_re);
    this.pushValue(this.dynamicInput, editor.draft.dynamic_re);
    this.updateSolutions(state);

    this.coverageLine.textContent = editor.pending
      ? `coverage: ${coverageText(editor.dryRun)} (checking...)`
      : `coverage: ${coverageText(editor.dryRun)}`;

    this.editorError.classList.toggle("hidden", editor.error === null);
    this.editorError.textContent =
      editor.error === null
        ? ""
        : editor.errorField === null
          ? editor.error
          : `${editor.errorField}: ${editor.error}`;

    clear(this.previewBox);
    const variants = editor.dryRun?.preview?.variants ?? null;
    if (variants === null) {
      this.previewBox.append(
        el("p", "muted", "pick a member to preview its patch"),
      );
    } else {
      for (const variant of variants) this.renderVariant(variant);
    }

    this.saveButton.disabled = !editor.saveEnabled;
    this.saveStatus.textContent =
      editor.saveState === "saving"
        ? "saving..."
        : editor.saveState === "saved"
          ? "saved"
          : editor.saveState === "error"
            ? `save failed: ${editor.saveError}`
            : "";

    clear(this.rulesBox);
    if (state.rules !== null) {
      const repairs = state.rules.repairs.map((r) => r.id).join(", ") || "none";
      const suggestions =
        state.rules.suggestions.map((s) => s.id).join(", ") || "none";
      this.rulesBox.append(
        el("p", "", `version ${state.rules.version}`),
        el("p", "", `repairs: ${repairs}`),
        el("p", "", `suggestions: ${suggestions}`),
      );
    }
  }

  private renderVariant(variant: PreviewVariant): void {
    const box = el("div", "variant");
    box.append(el("h4", "", `solution ${variant.solution_index}`));
    if ("error" in variant) {
      box.append(el("p", "muted", `not applicable: ${variant.error}`));
    } else {
      renderDiffInto(box, variant.diff);
    }
    this.previewBox.append(box);
  }

  /** Avoid clobbering the field the operator is typing in. */
  private pushValue(input: HTMLInputElement, value: string): void {
    if (document.activeElement !== input && input.value !== value) {
      input.value = value;
    }
  }

  private updateSolutions(state: WorkbenchState): void {
    const solutions = state.editor.draft.solutions;
    const shape = solutions.map((ops) => ops.length).join(",");
    if (shape !== this.solutionsShape) {
      this.solutionsShape = shape;
      this.rebuildSolutions(state);
      return;
    }
    // shape unchanged: refresh unfocused inputs in place
    solutions.forEach((ops, si) => {
      ops.forEach((op, oi) => {
        const row = this.solutionsBox.querySelector(
          `[data-sol="${si}"][data-op="${oi}"]`,
        );
        if (!(row instanceof HTMLElement)) return;
        const select = row.querySelector("select");
        const [target, text] = row.querySelectorAll("input");
        if (select && document.activeElement !== select) select.value = op.op;
        if (target && document.activeElement !== target) target.value = op.target;
        if (text && document.activeElement !== text) text.value = op.text ?? "";
      });
    });
  }

  private rebuildSolutions(state: WorkbenchState): void {
    clear(this.solutionsBox);
    state.editor.draft.solutions.forEach((ops, si) => {
      const block = el("div", "solution");
      const head = el("div", "solution-head");
      head.append(el("strong", "", `solution ${si}`));
      const addOp = el("button", "", "add op");
      addOp.addEventListener("click", () => this.store.addOp(si));
      const drop = el("button", "", "remove solution");
      drop.addEventListener("click", () => this.store.removeSolution(si));
      head.append(addOp, drop);
      block.append(head);

      ops.forEach((op, oi) => {
        const row = el("div", "op-row");
        row.dataset.sol = String(si);
        row.dataset.op = String(oi);
        const select = el("select");
        for (const kind of OP_KINDS) {
          const option = el("option", "", kind);
          option.value = kind;
          select.append(option);
        }
        select.value = op.op;
        select.addEventListener("change", () =>
          this.store.updateOp(si, oi, { op: select.value as EditOpKind }),
        );
        const target = el("input");
        target.placeholder = "target ($0 or FROM)";
        target.value = op.target;
        target.addEventListener("input", () =>
          this.store.updateOp(si, oi, { target: target.value }),
        );
        const text = el("input");
        text.placeholder = "text";
        text.value = op.text ?? "";
        text.addEventListener("input", () =>
          this.store.updateOp(si, oi, { text: text.value }),
        );
        const up = el("button", "", "up");
        up.addEventListener("click", () => this.store.moveOp(si, oi, -1));
        const down = el("button", "", "down");
        down.addEventListener("click", () => this.store.moveOp(si, oi, 1));
        const remove = el("button", "", "x");
        remove.addEventListener("click", () => this.store.removeOp(si, oi));
        row.append(select, target, text, up, down, remove);
        block.append(row);
      });
      this.solutionsBox.append(block);
    });
  }

  private updateSearch(state: WorkbenchState): void {
    clear(this.searchBox);
    const search = state.search;
    if (search.recordId === null) {
      this.searchBox.append(el("p", "muted", "select a member"));
      return;
    }
    this.searchBox.append(el("p", "", `record ${search.recordId}`));
    if (search.loading) {
      this.searchBox.append(el("p", "muted", "searching..."));
      return;
    }
    if (search.error !== null) {
      this.searchBox.append(el("p", "error-text", search.error));
      return;
    }
    if (search.query !== null) {
      this.searchBox.append(el("p", "muted", `query: ${search.query}`));
    }
    if (search.results.length === 0) {
      this.searchBox.append(el("p", "muted", "no leads"));
      return;
    }
    const list = el("ol");
    for (const result of search.results) {
      const item = el("li");
      const link = el("a", "", result.title || result.url);
      link.href = result.url;
      link.target = "_blank";
      link.rel = "noreferrer";
      item.append(link, el("span", "muted", ` (${result.source_domain})`));
      list.append(item);
    }
    this.searchBox.append(list);
  }

  private updateRepair(state: WorkbenchState): void {
    clear(this.repairBox);
    if (state.repairError !== null) {
      this.repairBox.append(el("p", "error-text", state.repairError));
      return;
    }
    const result = state.repairResult;
    if (result === null) {
      this.repairBox.append(
        el("p", "muted", "press repair on a member to triage it"),
      );
      return;
    }
    this.repairBox.append(el("p", "", `record ${state.repairFor}`));
    if (result.outcome === "repaired") {
      this.repairBox.append(el("p", "", `repaired by rule ${result.rule_id}`));
      for (const variant of result.variants) {
        const box = el("div", "variant");
        box.append(el("h4", "", `solution ${variant.solution_index}`));
        renderDiffInto(box, variant.diff);
        this.repairBox.append(box);
      }
    } else if (result.outcome === "suggested") {
      this.repairBox.append(
        el("p", "", `suggestion ${result.suggestion_id}: ${result.message}`),
      );
    } else {
      this.repairBox.append(
        el("p", "", `no rule matched; search query: ${result.query ?? "(none)"}`),
      );
      for (const lead of result.results) {
        const item = el("p");
        const link = el("a", "", lead.url);
        link.href = lead.url;
        item.append(link);
        this.repairBox.append(item);
      }
    }
  }
}
