// Chat console: persona editors, transcript, and per-sentence coverage bars.
// The app re-renders from UiSessionView after every state change; events are
// delegated from the root so re-renders never lose handlers.

import { ApiError, ChatApi } from "./api.js";
import {
  UiSessionView, argmaxIndex, barFraction, coverageTotal, freshView,
  messageApplied, messageFailed, parsePersonaLines, sessionStarted,
} from "./state.js";

function esc(text: string): string {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

export class ChatApp {
  view: UiSessionView = freshView();
  private editorA = "";
  private editorB = "";
  private editorError: string | null = null;

  constructor(private root: HTMLElement, private api: ChatApi) {
    root.addEventListener("click", (e) => this.onClick(e));
    root.addEventListener("keydown", (e) => this.onKeydown(e as KeyboardEvent));
  }

  mount(): void {
    this.render();
  }

  private onClick(e: Event): void {
    const target = e.target as HTMLElement;
    if (target.id === "start-btn") {
      void this.start();
    } else if (target.id === "send-btn") {
      void this.sendFromInput();
    } else if (target.id === "retry-btn") {
      void this.retry();
    } else if (target.id === "reset-btn") {
      void this.reset();
    }
  }

  private onKeydown(e: KeyboardEvent): void {
    const target = e.target as HTMLElement;
    if (e.key === "Enter" && target.id === "message-input") {
      e.preventDefault();
      void this.sendFromInput();
    }
  }

  private readEditors(): void {
    const a = this.root.querySelector<HTMLTextAreaElement>("#persona-a");
    const b = this.root.querySelector<HTMLTextAreaElement>("#persona-b");
    if (a) this.editorA = a.value;
    if (b) this.editorB = b.value;
  }

  async start(): Promise<void> {
    this.readEditors();
    const sentences = parsePersonaLines(this.editorA);
    if (sentences.length === 0) {
      this.editorError = "enter at least one persona sentence for speaker A";
      this.render();
      return;
    }
    this.editorError = null;
    try {
      const resp = await this.api.createSession(sentences,
                                                parsePersonaLines(this.editorB));
      this.view = sessionStarted(sentences, resp.session_id, resp.coverage);
    } catch (e) {
      this.editorError = e instanceof ApiError
        ? `server error: ${e.message}` : "could not reach the server";
    }
    this.render();
  }

  private async sendFromInput(): Promise<void> {
    const input = this.root.querySelector<HTMLInputElement>("#message-input");
    if (!input || !input.value.trim()) {
      return;
    }
    await this.send(input.value.trim());
  }

  async send(text: string): Promise<void> {
    const sessionId = this.view.sessionId;
    if (this.view.status === "busy" || !sessionId) {
      return; // one in-flight request per session
    }
    this.view = { ...this.view, status: "busy", banner: null };
    this.render();
    try {
      const resp = await this.api.sendMessage(sessionId, text);
      this.view = messageApplied(this.view, text, resp.reply,
                                 resp.coverage, resp.attention);
    } catch (e) {
      const reason = e instanceof ApiError ? e.message : "network failure";
      this.view = messageFailed(this.view, text, reason);
    }
    this.render();
  }

  async retry(): Promise<void> {
    const text = this.view.pendingText;
    if (!text) {
      return;
    }
    // drop the failed attempt before resending the same text
    this.view = {
      ...this.view,
      status: "idle",
      pendingText: null,
      transcript: this.view.transcript.filter((t) => !t.failed),
    };
    await this.send(text);
  }

  async reset(): Promise<void> {
    if (this.view.sessionId) {
      try {
        await this.api.deleteSession(this.view.sessionId); // 404s are ignored
      } catch {
        // losing the delete is fine: the editor state is what matters
      }
    }
    this.view = freshView();
    this.editorError = null;
    this.render();
  }

  render(): void {
    this.root.innerHTML = this.view.sessionId === null
      ? this.renderEditor() : this.renderChat();
  }

  private renderEditor(): string {
    return `
      <section class="editor">
        <h1>persona chat</h1>
        ${this.editorError ? `<div id="editor-error" class="banner">${esc(this.editorError)}</div>` : ""}
        <label>speaker A persona (the bot; one sentence per line)
          <textarea id="persona-a" rows="5">${esc(this.editorA)}</textarea>
        </label>
        <label>speaker B persona (you; optional)
          <textarea id="persona-b" rows="3">${esc(this.editorB)}</textarea>
        </label>
        <button id="start-btn">start chatting</button>
      </section>`;
  }

  private renderChat(): string {
    const v = this.view;
    const busy = v.status === "busy";
    const highlight = v.turns > 0 ? argmaxIndex(v.personaA.map((s) => s.attention)) : -1;
    const sentences = v.personaA.map((s, i) => {
      const width = (100 * barFraction(s.coverage, v.turns)).toFixed(1);
      return `
        <li class="persona-sentence${i === highlight ? " highlight" : ""}" data-index="${i}">
          <div class="meter"><span class="bar" style="width: ${width}%"></span></div>
          <span class="coverage-value">${s.coverage.toFixed(3)}</span>
          <span class="attention-value">${s.attention.toFixed(3)}</span>
          <span class="sentence-text">${esc(s.text)}</span>
        </li>`;
    }).join("");
    const turns = v.transcript.map((t) => `
        <li class="turn ${t.speaker}${t.failed ? " failed" : ""}">
          <span class="speaker">${t.speaker === "user" ? "you" : "bot"}</span>
          <span class="text">${esc(t.text)}</span>
          ${t.failed ? '<button id="retry-btn">retry</button>' : ""}
        </li>`).join("");
    return `
      <section class="chat">
        <header>
          <span id="coverage-total" class="badge"
                title="total served coverage; one unit per turn">
            coverage ${coverageTotal(v).toFixed(2)} / ${v.turns} turns</span>
          <button id="reset-btn">reset</button>
        </header>
        ${v.banner ? `<div id="banner" class="banner">${esc(v.banner)}</div>` : ""}
        <ul id="persona-list">${sentences}</ul>
        <ul id="transcript">${turns}</ul>
        <footer>
          <input id="message-input" type="text" placeholder="say something"
                 ${busy ? "disabled" : ""} />
          <button id="send-btn" ${busy ? "disabled" : ""}>send</button>
        </footer>
      </section>`;
  }
}
