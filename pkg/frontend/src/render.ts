import { cellKey, ViewState } from './state.js';
import type { CellContent, GridCells, Guess } from './types.js';

// Palette mirrors the DSL: colour indices are red/green/blue; pebbles are
// colourless and drawn grey.
const COLOURS = ['#d9534f', '#5cb85c', '#428bca'];
const GLYPHS: Record<CellContent['object'], string> = { chicken: 'C', pig: 'P', pebble: '●' };

export function cellBackground(cell: CellContent | null): string {
  if (!cell) return '#1c1c1c';
  if (cell.object === 'pebble') return '#9e9e9e';
  return COLOURS[cell.colour] ?? '#9e9e9e';
}

function el(parent: Element, tag: string, className?: string): HTMLElement {
  const node = parent.ownerDocument!.createElement(tag);
  if (className) node.className = className;
  parent.appendChild(node);
  return node;
}

export function renderGrid(
  container: HTMLElement,
  grid: GridCells | null,
  size: number,
  opts: {
    revealed?: Map<string, CellContent>;
    onClick?: (x: number, y: number) => void;
    clickable?: (x: number, y: number) => boolean;
  } = {}
): void {
  container.textContent = '';
  container.classList.add('board');
  container.style.gridTemplateColumns = `repeat(${size}, 1fr)`;
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const cell = grid ? grid[y][x] : null;
      const div = el(container, 'div', 'cell');
      div.dataset.x = String(x);
      div.dataset.y = String(y);
      div.style.background = cellBackground(cell);
      if (cell) div.textContent = GLYPHS[cell.object];
      if (opts.revealed?.has(cellKey(x, y))) div.classList.add('revealed');
      const clickable = opts.clickable?.(x, y) ?? false;
      if (clickable) {
        div.classList.add('clickable');
        div.addEventListener('click', () => opts.onClick?.(x, y));
      } else {
        div.classList.add('inert');
      }
    }
  }
}

export function renderGuesses(container: HTMLElement, guesses: Guess[], size: number): void {
  container.textContent = '';
  for (const [rank, guess] of guesses.entries()) {
    const card = el(container, 'div', 'guess');
    const title = el(card, 'div', 'guess-title');
    title.textContent = `#${rank + 1}  score ${guess.score.toExponential(2)}`;
    const board = el(card, 'div');
    renderGrid(board as HTMLElement, guess.grid, size);
  }
}

export function renderStatus(banner: HTMLElement, state: ViewState): void {
  banner.className = `banner ${state.phase}`;
  if (state.phase === 'solved') {
    banner.textContent = `Solved! The listener found your pattern after ${state.utteranceCount} reveals.`;
  } else if (state.phase === 'given_up') {
    banner.textContent = 'Given up. The hidden pattern is shown on the board.';
  } else if (state.phase === 'active') {
    banner.textContent = `Reveals: ${state.utteranceCount}. Click an occupied cell to reveal it.`;
  } else {
    banner.textContent = 'Pick a listener and start a game.';
  }
}
