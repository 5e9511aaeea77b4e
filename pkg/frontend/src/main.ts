/** App wiring: prompting view (refine/edit/diffuse), token chips with the
 * four-option menu, attention slider, explore/replace panels, inpainting
 * canvas, and the version bar with two-up compare. All model work happens
 * server-side; this file only moves state between DOM and API. */

import { ApiClient, ApiError } from './api';
import { createCanvasView } from './canvas';
import { createChipRow } from './chips';
import { createCompareView } from './compare';
import { createExplorePanel, createReplacePanel } from './explore';
import { appendPhrase, deleteToken, replaceToken } from './promptEdit';
import { createAttentionSlider } from './slider';
import { Store } from './state';
import './style.css';

const api = new ApiClient('');
const store = new Store();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function refreshVersions(): Promise<void> {
  if (!store.state.sessionId) return;
  store.setVersions(await api.versions(store.state.sessionId));
  renderVersionBar();
}

async function activateVersion(id: number): Promise<void> {
  const version = store.state.versions.find((v) => v.id === id);
  if (!version) return;
  let heatmaps = null;
  if (version.explanation) {
    try {
      heatmaps = await api.heatmaps(version.ref);
    } catch {
      heatmaps = null; // generated without trace
    }
  }
  store.setActiveVersion(id, heatmaps);
  const image = new Image();
  image.onload = () => {
    canvas.setImage(image.src, image.naturalWidth, image.naturalHeight);
  };
  image.src = api.imageUrl(version.ref);
  chipRow.render();
  statusLine.textContent = `VER.${id} · ${version.kind} · seed ${version.seed}`;
}

async function runJob(start: () => Promise<{ job_id: string }>): Promise<void> {
  if (!store.beginJob()) return;
  statusLine.textContent = 'working…';
  try {
    const ticket = await start();
    const settled = await api.waitForJob(ticket.job_id, (t) => {
      statusLine.textContent = `job ${t.state}`;
    });
    if (settled.state === 'failed') {
      statusLine.textContent = `failed: ${settled.error}`;
      return;
    }
    await refreshVersions();
    const latest = store.state.versions.at(-1);
    if (latest) await activateVersion(latest.id);
  } catch (error) {
    statusLine.textContent =
      error instanceof ApiError ? `rejected: ${error.code}` : `error: ${error}`;
  } finally {
    store.endJob();
  }
}

// ---------------------------------------------------------------- prompting

const promptBox = () => el<HTMLTextAreaElement>('prompt-input');
const refinedBox = () => el<HTMLTextAreaElement>('refined-input');
const statusLine = document.createElement('div');

async function onRefine(): Promise<void> {
  if (!store.state.sessionId) return;
  const suggestion = await api.refine(store.state.sessionId, promptBox().value);
  refinedBox().value = suggestion.refined;
}

async function onDiffuse(): Promise<void> {
  const sessionId = store.state.sessionId;
  if (!sessionId) return;
  const prompt = refinedBox().value || promptBox().value;
  const seed = parseInt(el<HTMLInputElement>('seed-input').value, 10) || 0;
  const adjustment = { ...store.state.pendingAdjustment };
  await runJob(() => api.generate(sessionId, prompt, seed, adjustment));
}

async function onInpaint(): Promise<void> {
  const sessionId = store.state.sessionId;
  const active = store.state.activeVersion;
  if (!sessionId || active === null || store.state.strokes.length === 0) return;
  const inpaintPrompt = el<HTMLInputElement>('inpaint-prompt').value || null;
  const seed = parseInt(el<HTMLInputElement>('seed-input').value, 10) || 0;
  const strokes = [...store.state.strokes];
  await runJob(() => api.inpaint(sessionId, active, strokes, inpaintPrompt, seed));
}

// ------------------------------------------------------------------- chips

const slider = createAttentionSlider(
  () => store.selectedTokens(),
  (patch) => store.setAdjustment(patch),
);

const replacePanel = createReplacePanel(api, (phrase) => {
  const open = store.state.openMenu;
  if (!open) return;
  const texts = store.state.chips.map((chip) => chip.text);
  refinedBox().value = replaceToken(texts, open.token, phrase);
  store.closeMenu();
  chipRow.render();
});

const explorePanel = createExplorePanel(api, (phrase) => {
  refinedBox().value = appendPhrase(refinedBox().value, phrase);
});

const chipRow = createChipRow(store, {
  onHover(token) {
    store.setHoverToken(token);
    canvas.render();
  },
  onMenu(token, kind) {
    const chip = store.state.chips[token];
    if (!chip) return;
    if (kind === 'delete') {
      const texts = store.state.chips.map((c) => c.text);
      refinedBox().value = deleteToken(texts, token);
      store.closeMenu();
    } else if (kind === 'attention') {
      if (!chip.selected) store.toggleChipSelected(token);
      el('slider-slot').replaceChildren(slider.element);
    } else if (kind === 'replace') {
      void replacePanel.load(chip.text);
      el('replace-slot').replaceChildren(replacePanel.element);
    } else if (kind === 'explore') {
      explorePanel.input.value = chip.text;
      void explorePanel.search(chip.text);
    }
    chipRow.render();
  },
});

// ------------------------------------------------------------------ canvas

const canvas = createCanvasView(store);

// ------------------------------------------------------------------ compare

const compare = createCompareView(api, () => store.state.sessionId);

function renderVersionBar(): void {
  const bar = el('version-bar');
  bar.replaceChildren(
    ...store.state.versions.map((version) => {
      const button = document.createElement('button');
      button.className = 'version-label';
      button.textContent = `VER.${version.id}`;
      if (store.state.selectedVersions.includes(version.id)) {
        button.classList.add('selected');
      }
      button.addEventListener('click', () => {
        store.toggleVersionSelection(version.id);
        void activateVersion(version.id);
        renderVersionBar();
        void compare.render(store.state.selectedVersions, store.state.versions);
      });
      return button;
    }),
  );
}

// -------------------------------------------------------------------- boot

export async function boot(): Promise<void> {
  store.update((s) => {
    s.brushRadius = parseInt(el<HTMLInputElement>('brush-radius').value, 10) || 8;
  });
  el('status-slot').appendChild(statusLine);
  el('chips-slot').appendChild(chipRow.element);
  el('canvas-slot').appendChild(canvas.element);
  el('compare-slot').appendChild(compare.element);
  el('explore-slot').appendChild(explorePanel.element);

  el('refine-button').addEventListener('click', () => void onRefine());
  el('diffuse-button').addEventListener('click', () => void onDiffuse());
  el('inpaint-button').addEventListener('click', () => void onInpaint());
  el('clear-strokes').addEventListener('click', () => {
    store.clearStrokes();
    canvas.render();
  });
  el<HTMLInputElement>('brush-radius').addEventListener('input', (event) => {
    const radius = parseInt((event.target as HTMLInputElement).value, 10);
    store.update((s) => {
      s.brushRadius = radius;
    });
  });

  store.subscribe(() => canvas.render());

  const sessionId = await api.createSession();
  store.update((s) => {
    s.sessionId = sessionId;
  });
  statusLine.textContent = `session ${sessionId.slice(0, 8)} ready`;
}

if (typeof document !== 'undefined' && document.getElementById('app-root')) {
  void boot();
}
