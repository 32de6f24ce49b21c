import { Api, ApiError } from './api.js';
import type { CellContent, GridCells, Guess, ListenerId, TrialExport } from './types.js';

export type Phase = 'idle' | 'active' | 'solved' | 'given_up';

export interface ViewState {
  phase: Phase;
  listener: ListenerId;
  sessionId: string | null;
  gridSize: number;
  targetGrid: GridCells | null;
  revealed: Map<string, CellContent>;
  guesses: Guess[];
  utteranceCount: number;
  toast: string | null;
  busy: boolean;
}

export const cellKey = (x: number, y: number) => `${x},${y}`;

/**
 * All client-side session state and the update rules around it.
 *
 * Requests are serialized by the UI layer via `busy`, and every reveal
 * carries a sequence number: a response is applied only if no response
 * from a later reveal has been applied already, so a delayed reply can
 * never clobber fresher listener guesses.
 */
export class GameStore {
  state: ViewState = emptyState();
  private issued = 0;
  private applied = 0;
  private subscribers: Array<(s: ViewState) => void> = [];

  constructor(private api: Api) {}

  subscribe(fn: (s: ViewState) => void): void {
    this.subscribers.push(fn);
  }

  private update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.subscribers) fn(this.state);
  }

  async start(listener: ListenerId, seed?: number): Promise<void> {
    this.update({ ...emptyState(), busy: true, listener });
    try {
      const res = await this.api.createSpeakerGame(listener, seed);
      this.issued = 0;
      this.applied = 0;
      this.update({
        phase: 'active',
        sessionId: res.id,
        gridSize: res.grid_size,
        targetGrid: res.target_grid ?? null,
        busy: false,
      });
    } catch (err) {
      this.update({ busy: false, toast: describe(err) });
    }
  }

  /** True when clicking (x, y) should call the service at all. */
  isRevealable(x: number, y: number): boolean {
    const { phase, targetGrid, revealed } = this.state;
    if (phase !== 'active' || !targetGrid) return false;
    if (revealed.has(cellKey(x, y))) return false; // duplicate click is inert
    return targetGrid[y][x] !== null; // empty cells are inert
  }

  async clickCell(x: number, y: number): Promise<void> {
    if (!this.isRevealable(x, y) || !this.state.sessionId) return;
    const seq = ++this.issued;
    this.update({ busy: true, toast: null });
    try {
      const res = await this.api.reveal(this.state.sessionId, x, y);
      if (seq <= this.applied) return; // stale: a newer reveal already landed
      this.applied = seq;
      const revealed = new Map(this.state.revealed);
      revealed.set(cellKey(x, y), res.cell);
      this.update({
        revealed,
        guesses: res.guesses,
        utteranceCount: revealed.size,
        phase: res.solved ? 'solved' : 'active',
        busy: false,
      });
    } catch (err) {
      this.update({ busy: false, toast: describe(err) }); // board unchanged
    }
  }

  async giveUp(): Promise<void> {
    if (this.state.phase !== 'active' || !this.state.sessionId) return;
    this.update({ busy: true });
    try {
      const res = await this.api.giveUp(this.state.sessionId);
      this.update({ phase: 'given_up', targetGrid: res.grid, busy: false });
    } catch (err) {
      this.update({ busy: false, toast: describe(err) });
    }
  }

  /** Trial record for download; only terminal sessions can export. */
  async exportTrial(): Promise<TrialExport | null> {
    if (this.state.phase === 'active' || this.state.phase === 'idle' || !this.state.sessionId) {
      this.update({ toast: 'finish the game before exporting' });
      return null;
    }
    try {
      return await this.api.exportTrial(this.state.sessionId);
    } catch (err) {
      this.update({ toast: describe(err) });
      return null;
    }
  }
}

function emptyState(): ViewState {
  return {
    phase: 'idle',
    listener: 'J0',
    sessionId: null,
    gridSize: 7,
    targetGrid: null,
    revealed: new Map(),
    guesses: [],
    utteranceCount: 0,
    toast: null,
    busy: false,
  };
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return err instanceof Error ? err.message : String(err);
}
