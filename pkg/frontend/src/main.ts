/**
 * Browser wiring: a 5x5 trial board driven by the phase state machine,
 * a palette with per-color inventories for the build phase, and the
 * experimenter panel (posterior heat map + isocontour) refreshed after
 * every outcome.
 */

import { ApiClient } from './api.js';
import { curveToPixels, heatmapImage } from './heatmap.js';
import { TrialRunner } from './phases.js';
import { scoreBuild, colorCounts, emptyBuild } from './scoring.js';
import { sessionLoop } from './session.js';
import {
  DEFAULT_PHASES,
  GRID,
  N_CELLS,
  PALETTE,
  PatternSpec,
  PosteriorResponse,
  StimulusParams,
} from './types.js';

interface Settings {
  serviceUrl: string;
  mode: 'adaptive' | 'classic';
  seed: number;
  /** Reveal on primary click by default; right-click is contextual in browsers. */
  revealButton: 'left' | 'right';
}

function readSettings(): Settings {
  const q = new URLSearchParams(location.search);
  return {
    serviceUrl: q.get('service') ?? 'http://127.0.0.1:8000',
    mode: q.get('mode') === 'classic' ? 'classic' : 'adaptive',
    seed: Number(q.get('seed') ?? 0),
    revealButton: q.get('reveal') === 'right' ? 'right' : 'left',
  };
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function buildBoard(container: HTMLElement): HTMLButtonElement[] {
  container.innerHTML = '';
  const cells: HTMLButtonElement[] = [];
  for (let i = 0; i < N_CELLS; i++) {
    const cell = document.createElement('button');
    cell.className = 'cell';
    cell.dataset.index = String(i);
    container.appendChild(cell);
    cells.push(cell);
  }
  container.style.gridTemplateColumns = `repeat(${GRID}, 1fr)`;
  return cells;
}

function drawPosterior(canvas: HTMLCanvasElement, posterior: PosteriorResponse): void {
  const img = heatmapImage(posterior.grid);
  canvas.width = img.width;
  canvas.height = img.height;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.putImageData(new ImageData(img.data, img.width, img.height), 0, 0);
  if (posterior.curve) {
    const pts = curveToPixels(posterior.curve, posterior.grid);
    ctx.strokeStyle = '#111';
    ctx.lineWidth = 1;
    ctx.beginPath();
    pts.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
    ctx.stroke();
  }
}

/** One interactive trial: observation clicks, then palette-driven build. */
async function playTrial(
  pattern: PatternSpec,
  settings: Settings,
  cells: HTMLButtonElement[],
  status: HTMLElement,
  palette: HTMLElement,
): Promise<boolean> {
  const placed = emptyBuild();
  const inventory = colorCounts(pattern);
  let selectedColor = [...inventory.keys()][0] ?? 0;

  const runner = new TrialRunner(pattern, DEFAULT_PHASES, {
    onPhase: (phase) => {
      status.textContent = phase;
      document.body.dataset.phase = phase;
    },
    onTileRevealed: (cell, color) => {
      cells[cell]!.style.background = PALETTE[color] ?? '#999';
    },
    onTileHidden: (cell) => {
      cells[cell]!.style.background = '';
    },
  });

  palette.innerHTML = '';
  for (const [color, count] of inventory) {
    const chip = document.createElement('button');
    chip.className = 'chip';
    chip.style.background = PALETTE[color] ?? '#999';
    chip.textContent = String(count);
    chip.onclick = () => (selectedColor = color);
    palette.appendChild(chip);
  }

  const onCell = (i: number, event: MouseEvent) => {
    event.preventDefault();
    if (runner.currentPhase() === 'observation') {
      const wantRight = settings.revealButton === 'right';
      if ((event.type === 'contextmenu') === wantRight) runner.revealTile(i);
    } else if (runner.currentPhase() === 'build') {
      const used = placed.filter((c) => c === selectedColor).length;
      if (placed[i] === selectedColor) {
        placed[i] = -1; // toggle off
      } else if (used < (inventory.get(selectedColor) ?? 0)) {
        placed[i] = selectedColor;
      }
      cells[i]!.style.background = placed[i]! >= 0 ? PALETTE[placed[i]!] ?? '' : '';
    }
  };
  cells.forEach((cell, i) => {
    cell.onclick = (e) => onCell(i, e);
    cell.oncontextmenu = (e) => onCell(i, e);
  });

  el<HTMLButtonElement>('submit').onclick = () => {
    if (runner.currentPhase() === 'build') runner.submitBuild([...placed]);
  };

  runner.start();
  const result = await runner.done;
  status.textContent = result.passed
    ? 'Correct'
    : `Incorrect — accuracy ${(result.accuracy * 100).toFixed(0)}%`;
  cells.forEach((c) => (c.style.background = ''));
  return result.passed;
}

async function run(): Promise<void> {
  const settings = readSettings();
  const client = new ApiClient(settings.serviceUrl);
  const cells = buildBoard(el('board'));
  const status = el('status');
  const palette = el('palette');
  const canvas = el<HTMLCanvasElement>('posterior');

  const summary = await sessionLoop(
    client,
    settings.mode,
    async (rec: StimulusParams, pattern) => {
      el('trial-info').textContent = `L=${rec.L} K=${rec.K}`;
      const spec = pattern ?? (await client.getPattern(rec, settings.seed));
      return playTrial(spec, settings, cells, status, palette);
    },
    {
      seed: settings.seed,
      fetchPatterns: true,
      onPosterior: (posterior) => drawPosterior(canvas, posterior),
    },
  );

  const curve = summary.termination.curve;
  const psis = curve?.points
    .filter((p) => p.present && p.psi !== null)
    .map((p) => `K=${p.K}: ${p.psi!.toFixed(1)}`)
    .join('  ');
  status.textContent = `Session complete (${summary.trials.length} trials). ${psis ?? ''}`;
}

run().catch((err) => {
  el('status').textContent = `session aborted: ${err}`;
  console.error(err);
});

export { playTrial, drawPosterior };
