import { describe, expect, it } from "vitest";

import {
  argmaxIndex, barFraction, coverageTotal, freshView, messageApplied,
  messageFailed, parsePersonaLines, sessionStarted,
} from "../src/state.js";

describe("argmaxIndex", () => {
  it("picks the largest weight", () => {
    expect(argmaxIndex([0.1, 0.7, 0.2])).toBe(1);
  });

  it("breaks ties toward the lowest index", () => {
    expect(argmaxIndex([0.4, 0.4, 0.2])).toBe(0);
    expect(argmaxIndex([0.2, 0.4, 0.4])).toBe(1);
    expect(argmaxIndex([0.25, 0.25, 0.25, 0.25])).toBe(0);
  });
});

describe("barFraction", () => {
  it("scales coverage by the turn count", () => {
    expect(barFraction(0.5, 1)).toBe(0.5);
    expect(barFraction(1.5, 3)).toBe(0.5);
  });

  it("clamps to [0, 1] and handles zero turns", () => {
    expect(barFraction(0, 0)).toBe(0);
    expect(barFraction(2.5, 2)).toBe(1);
  });
});

describe("view transitions", () => {
  it("starts with zeroed coverage from the server payload", () => {
    const v = sessionStarted(["a", "b"], "sid", [0, 0]);
    expect(v.personaA.map((s) => s.coverage)).toEqual([0, 0]);
    expect(v.turns).toBe(0);
    expect(coverageTotal(v)).toBe(0);
  });

  it("echoes served coverage and attention verbatim", () => {
    let v = sessionStarted(["a", "b"], "sid", [0, 0]);
    v = messageApplied(v, "hi", "hello", [0.123456, 0.876544], [0.9, 0.1]);
    expect(v.personaA[0].coverage).toBe(0.123456);
    expect(v.personaA[1].coverage).toBe(0.876544);
    expect(v.personaA[0].attention).toBe(0.9);
    expect(v.turns).toBe(1);
    expect(v.transcript).toEqual([
      { speaker: "user", text: "hi" },
      { speaker: "model", text: "hello" },
    ]);
    expect(coverageTotal(v)).toBeCloseTo(1.0, 6);
  });

  it("marks failures and keeps the text for retry", () => {
    let v = sessionStarted(["a"], "sid", [0]);
    v = messageFailed(v, "lost message", "network failure");
    expect(v.pendingText).toBe("lost message");
    expect(v.transcript[0].failed).toBe(true);
    expect(v.status).toBe("error");
  });

  it("fresh view is the editor state", () => {
    const v = freshView();
    expect(v.sessionId).toBeNull();
    expect(v.status).toBe("editing");
    expect(v.transcript).toEqual([]);
  });
});

describe("parsePersonaLines", () => {
  it("splits non-blank trimmed lines", () => {
    expect(parsePersonaLines(" i like tea \n\n i ski \n")).toEqual(
      ["i like tea", "i ski"]);
    expect(parsePersonaLines("\n  \n")).toEqual([]);
  });
});
