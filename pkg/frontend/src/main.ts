import { Api, createApi } from './api.js';
import { cellKey, GameStore, ViewState } from './state.js';
import { renderGrid, renderGuesses, renderStatus } from './render.js';
import { LISTENER_IDS, ListenerId } from './types.js';

/**
 * Build the speaker UI inside `root` and wire it to the service.
 *
 * The page exposes: a listener selector, start / give-up / export
 * controls, the secret target board (the human is the speaker and needs
 * to see it), and the listener's live top guesses. All probabilities are
 * whatever the service returned; nothing is computed client-side.
 */
export function initApp(root: HTMLElement, api: Api): GameStore {
  const doc = root.ownerDocument!;
  root.innerHTML = `
    <div class="controls">
      <select id="listener"></select>
      <button id="start">Start game</button>
      <button id="giveup">Give up</button>
      <button id="export">Export trial</button>
    </div>
    <div id="banner" class="banner"></div>
    <div id="toast" class="toast"></div>
    <div class="panes">
      <div>
        <h3>Your secret pattern</h3>
        <div id="board" class="board"></div>
      </div>
      <div>
        <h3>Listener's guesses</h3>
        <div id="guesses" class="guesses"></div>
      </div>
    </div>`;

  const select = root.querySelector('#listener') as HTMLSelectElement;
  for (const id of LISTENER_IDS) {
    const opt = doc.createElement('option');
    opt.value = id;
    opt.textContent = id;
    select.appendChild(opt);
  }

  const store = new GameStore(api);
  const board = root.querySelector('#board') as HTMLElement;
  const guesses = root.querySelector('#guesses') as HTMLElement;
  const banner = root.querySelector('#banner') as HTMLElement;
  const toast = root.querySelector('#toast') as HTMLElement;

  const redraw = (state: ViewState) => {
    renderGrid(board, state.targetGrid, state.gridSize, {
      revealed: state.revealed,
      clickable: (x, y) => !state.busy && store.isRevealable(x, y),
      onClick: (x, y) => void store.clickCell(x, y),
    });
    renderGuesses(guesses, state.phase === 'active' || state.phase === 'solved' ? state.guesses : [], state.gridSize);
    renderStatus(banner, state);
    toast.textContent = state.toast ?? '';
    toast.style.display = state.toast ? 'block' : 'none';
  };
  store.subscribe(redraw);
  redraw(store.state);

  (root.querySelector('#start') as HTMLButtonElement).addEventListener('click', () => {
    void store.start(select.value as ListenerId);
  });
  (root.querySelector('#giveup') as HTMLButtonElement).addEventListener('click', () => {
    void store.giveUp();
  });
  (root.querySelector('#export') as HTMLButtonElement).addEventListener('click', () => {
    void store.exportTrial().then((trial) => {
      if (trial) downloadJson(doc, trial, `trial-${store.state.sessionId}.json`);
    });
  });

  return store;
}

function downloadJson(doc: Document, payload: unknown, filename: string): void {
  const blob = new Blob([JSON.stringify(payload)], { type: 'application/json' });
  const url = URL.createObjectURL(blob);
  const a = doc.createElement('a');
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}

export function defaultBaseUrl(doc: Document): string {
  const meta = doc.querySelector('meta[name="gridsynth-base-url"]') as HTMLMetaElement | null;
  return meta?.content || 'http://127.0.0.1:8000';
}

export { createApi, GameStore, cellKey };
