/** Presentation-only classification of server-produced unified diffs.
 *
 * The server renders the diff text; this module only decides how each
 * line is styled and which Dockerfile instruction it starts with, so
 * added/removed instructions can be highlighted as such.
 */

export type DiffLineKind = "header" | "hunk" | "add" | "remove" | "context";

export interface DiffLine {
  kind: DiffLineKind;
  text: string;
  /** leading Dockerfile instruction keyword on +/- lines, if any */
  instruction: string | null;
}

const INSTRUCTIONS = new Set([
  "FROM", "RUN", "CMD", "LABEL", "MAINTAINER", "EXPOSE", "ENV", "ADD",
  "COPY", "ENTRYPOINT", "VOLUME", "USER", "WORKDIR", "ARG", "ONBUILD",
  "STOPSIGNAL", "HEALTHCHECK", "SHELL",
]);

function leadingInstruction(body: string): string | null {
  const word = body.trimStart().split(/[\s]/, 1)[0] ?? "";
  const upper = word.toUpperCase();
  return INSTRUCTIONS.has(upper) ? upper : null;
}

export function classifyDiffLine(line: string): DiffLine {
  if (line.startsWith("+++") || line.startsWith("---")) {
    return { kind: "header", text: line, instruction: null };
  }
  if (line.startsWith("@@")) {
    return { kind: "hunk", text: line, instruction: null };
  }
  if (line.startsWith("+")) {
    return { kind: "add", text: line, instruction: leadingInstruction(line.slice(1)) };
  }
  if (line.startsWith("-")) {
    return { kind: "remove", text: line, instruction: leadingInstruction(line.slice(1)) };
  }
  return { kind: "context", text: line, instruction: null };
}

export function classifyDiff(diff: string): DiffLine[] {
  if (diff === "") return [];
  return diff.replace(/\n$/, "").split("\n").map(classifyDiffLine);
}
