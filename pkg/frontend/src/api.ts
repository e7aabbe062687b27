// Typed client for the chat service's four endpoints. All numbers shown in
// the UI come from these response payloads.

export interface CreateSessionResponse {
  session_id: string;
  coverage: number[];
}

export interface MessageResponse {
  reply: string;
  coverage: number[];
  attention: number[];
}

export interface TranscriptEntry {
  speaker: string;
  text: string;
}

export interface SessionState {
  session_id: string;
  persona_a: string[];
  persona_b: string[];
  transcript: TranscriptEntry[];
  coverage: number[];
  attention: number[];
  decode: { beam_size: number; max_len: number };
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "error";
  let message = `request failed with status ${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body === "object") {
      code = body.code ?? code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the generic message
  }
  return new ApiError(response.status, code, message);
}

export class ChatApi {
  constructor(private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  createSession(personaA: string[], personaB: string[]): Promise<CreateSessionResponse> {
    const body: Record<string, unknown> = { persona_a: personaA };
    if (personaB.length > 0) {
      body.persona_b = personaB;
    }
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  sendMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.request(`/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}`);
  }

  async deleteSession(sessionId: string): Promise<void> {
    try {
      await this.request<void>(`/sessions/${sessionId}`, { method: "DELETE" });
    } catch (e) {
      if (e instanceof ApiError && e.status === 404) {
        return; // already gone: deletion is idempotent from the UI's view
      }
      throw e;
    }
  }
}
