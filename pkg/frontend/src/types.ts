export type ListenerId = 'J0' | 'J1' | 'F0' | 'F1' | 'N0' | 'N1';

export const LISTENER_IDS: ListenerId[] = ['J0', 'J1', 'F0', 'F1', 'N0', 'N1'];

export interface CellContent {
  object: 'chicken' | 'pig' | 'pebble';
  colour: number;
}

/** rows[y][x]; null marks an empty cell */
export type GridCells = (CellContent | null)[][];

export interface CreateGameResponse {
  v: number;
  id: string;
  grid_size: number;
  listener: string;
  target?: number[];
  target_grid?: GridCells;
}

export interface Guess {
  program: number[];
  grid: GridCells;
  score: number;
}

export interface RevealResponse {
  v: number;
  cell: CellContent;
  guesses: Guess[];
  solved: boolean;
}

export interface GiveUpResponse {
  v: number;
  target: number[];
  grid: GridCells;
}

export interface TrialExport {
  v: number;
  target: number[];
  utterances: { x: number; y: number; object: string; colour: number }[];
  source: string;
}
