/** Side-by-side version comparison: one or two panes plus the server's
 * token-level prompt diff rendered as colored runs. */

import type { ApiClient, DiffDocument, VersionInfo } from './api';

export type CompareView = {
  element: HTMLElement;
  render(selected: number[], versions: VersionInfo[]): Promise<void>;
};

export function renderDiffRuns(doc: DiffDocument): HTMLElement {
  const container = document.createElement('div');
  container.className = 'diff-runs';
  if (doc.prompt_diff.length === 0) {
    const empty = document.createElement('span');
    empty.className = 'diff-empty';
    empty.textContent = 'prompts identical';
    container.appendChild(empty);
  }
  for (const run of doc.prompt_diff) {
    const span = document.createElement('span');
    span.className = `diff-${run.op}`;
    span.textContent = run.tokens.join(' ');
    container.appendChild(span);
  }
  for (const delta of doc.adjustment_delta) {
    const chip = document.createElement('span');
    chip.className = 'diff-gamma';
    chip.textContent = `token ${delta.token_index}: x${delta.a_gamma} -> x${delta.b_gamma}`;
    container.appendChild(chip);
  }
  return container;
}

export function createCompareView(api: ApiClient, sessionId: () => string | null): CompareView {
  const element = document.createElement('div');
  element.className = 'compare-view';

  function pane(version: VersionInfo): HTMLElement {
    const node = document.createElement('figure');
    node.className = 'compare-pane';
    const img = document.createElement('img');
    img.src = api.imageUrl(version.ref);
    img.alt = `version ${version.id}`;
    const caption = document.createElement('figcaption');
    caption.textContent = `VER.${version.id} · ${version.kind} · seed ${version.seed}`;
    node.append(img, caption);
    return node;
  }

  async function render(selected: number[], versions: VersionInfo[]) {
    element.replaceChildren();
    const chosen = versions.filter((v) => selected.includes(v.id));
    if (chosen.length === 0) return;

    const panes = document.createElement('div');
    panes.className = 'compare-panes';
    for (const version of chosen) panes.appendChild(pane(version));
    element.appendChild(panes);

    const session = sessionId();
    if (selected.length === 2 && session) {
      const doc = await api.diff(session, selected[0], selected[1]);
      element.appendChild(renderDiffRuns(doc));
    }
  }

  return { element, render };
}
