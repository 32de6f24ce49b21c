import type {
  CreateGameResponse,
  GiveUpResponse,
  ListenerId,
  RevealResponse,
  TrialExport,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public reason: string
  ) {
    super(`service error ${status}: ${reason}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the game service; all inference stays server-side. */
export function createApi(baseUrl: string, fetchFn?: FetchLike) {
  const doFetch: FetchLike = fetchFn ?? ((input, init) => fetch(input, init));

  async function request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await doFetch(`${baseUrl}${path}`, init);
    if (!res.ok) {
      let reason = res.statusText || String(res.status);
      try {
        const body = await res.json();
        reason = body?.detail?.reason ?? reason;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, reason);
    }
    return res.json() as Promise<T>;
  }

  function post<T>(path: string, payload?: unknown): Promise<T> {
    return request<T>(path, {
      method: 'POST',
      headers: payload ? { 'Content-Type': 'application/json' } : undefined,
      body: payload ? JSON.stringify(payload) : undefined,
    });
  }

  return {
    health: () => request<{ v: number; status: string }>('/healthz'),
    /** The human plays speaker, so creation asks for the target back. */
    createSpeakerGame: (listener: ListenerId, seed?: number) =>
      post<CreateGameResponse>('/games', { listener, seed: seed ?? null, role: 'speaker' }),
    reveal: (id: string, x: number, y: number, topK = 5) =>
      post<RevealResponse>(`/games/${id}/reveals`, { x, y, top_k: topK }),
    giveUp: (id: string) => post<GiveUpResponse>(`/games/${id}/giveup`),
    exportTrial: (id: string) => request<TrialExport>(`/games/${id}/export`),
  };
}

export type Api = ReturnType<typeof createApi>;
