// UI session state and its pure transition helpers. Every numeric field is
// copied verbatim from a server response; the only arithmetic here is
// display scaling (bar fractions, the running coverage total) and the
// argmax highlight rule.

export interface ChatTurn {
  speaker: "user" | "model";
  text: string;
  failed?: boolean;
}

export interface PersonaSentence {
  text: string;
  coverage: number;   // echoed from the latest server response
  attention: number;  // last-turn coverage-view attention weight
}

export type Status = "editing" | "idle" | "busy" | "error";

export interface UiSessionView {
  sessionId: string | null;
  status: Status;
  banner: string | null;
  personaA: PersonaSentence[];
  transcript: ChatTurn[];
  turns: number;              // successful exchanges so far
  pendingText: string | null; // message to offer a retry for
}

export function freshView(): UiSessionView {
  return { sessionId: null, status: "editing", banner: null, personaA: [],
           transcript: [], turns: 0, pendingText: null };
}

export function sessionStarted(sentences: string[], sessionId: string,
                               coverage: number[]): UiSessionView {
  return {
    sessionId,
    status: "idle",
    banner: null,
    personaA: sentences.map((text, i) => ({
      text, coverage: coverage[i] ?? 0, attention: 0,
    })),
    transcript: [],
    turns: 0,
    pendingText: null,
  };
}

export function messageApplied(view: UiSessionView, text: string, reply: string,
                               coverage: number[], attention: number[]): UiSessionView {
  return {
    ...view,
    status: "idle",
    banner: null,
    pendingText: null,
    turns: view.turns + 1,
    personaA: view.personaA.map((s, i) => ({
      ...s, coverage: coverage[i] ?? s.coverage, attention: attention[i] ?? 0,
    })),
    transcript: [...view.transcript,
                 { speaker: "user", text },
                 { speaker: "model", text: reply }],
  };
}

export function messageFailed(view: UiSessionView, text: string,
                              reason: string): UiSessionView {
  return {
    ...view,
    status: "error",
    banner: reason,
    pendingText: text,
    transcript: [...view.transcript, { speaker: "user", text, failed: true }],
  };
}

/** Sum of the served coverage values; the running-total badge. */
export function coverageTotal(view: UiSessionView): number {
  return view.personaA.reduce((acc, s) => acc + s.coverage, 0);
}

/** Bar length in [0, 1]: served coverage scaled by the current turn count. */
export function barFraction(coverage: number, turns: number): number {
  if (turns <= 0) {
    return 0;
  }
  return Math.min(1, Math.max(0, coverage / turns));
}

/** Index of the sentence to highlight; ties break toward the lowest index. */
export function argmaxIndex(weights: number[]): number {
  let best = 0;
  for (let i = 1; i < weights.length; i++) {
    if (weights[i] > weights[best]) {
      best = i;
    }
  }
  return best;
}

/** Split editor text into persona sentences (one per non-blank line). */
export function parsePersonaLines(raw: string): string[] {
  return raw.split("\n").map((s) => s.trim()).filter((s) => s.length > 0);
}
