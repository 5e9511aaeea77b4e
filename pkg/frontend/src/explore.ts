/** Modifier exploration and replacement panels, backed by the catalog
 * endpoints: free-text search over the corpus, and similar/dissimilar
 * style suggestions for a selected phrase. */

import type { ApiClient, ModifierEntry, PromptHit } from './api';

export type ExplorePanel = {
  element: HTMLElement;
  input: HTMLInputElement;
  search(query: string): Promise<PromptHit[]>;
};

export function createExplorePanel(
  api: ApiClient,
  onAppend: (phrase: string) => void,
): ExplorePanel {
  const element = document.createElement('div');
  element.className = 'explore-panel';

  const input = document.createElement('input');
  input.type = 'search';
  input.placeholder = 'explore modifiers…';

  const related = document.createElement('div');
  related.className = 'explore-related';

  const results = document.createElement('ul');
  results.className = 'explore-results';

  async function search(query: string): Promise<PromptHit[]> {
    if (!query.trim()) {
      related.replaceChildren();
      results.replaceChildren();
      return [];
    }
    // phrase + frequency context for the explored keywords
    void api
      .similarModifiers(query.trim(), 5)
      .then((entries) => {
        related.replaceChildren(
          ...entries.map((entry) => {
            const chip = document.createElement('span');
            chip.className = 'related-modifier';
            chip.textContent = `${entry.phrase} · ${entry.frequency}`;
            return chip;
          }),
        );
      })
      .catch(() => related.replaceChildren());
    const hits = await api.searchModifiers(query);
    results.replaceChildren(
      ...hits.map((hit) => {
        const item = document.createElement('li');
        const text = document.createElement('span');
        text.textContent = hit.text;
        const add = document.createElement('button');
        add.textContent = '+';
        add.title = 'append to prompt';
        add.addEventListener('click', () => onAppend(query.trim()));
        item.append(text, add);
        if (hit.image_path) {
          const img = document.createElement('img');
          img.src = hit.image_path;
          img.alt = hit.text;
          item.appendChild(img);
        }
        return item;
      }),
    );
    return hits;
  }

  input.addEventListener('change', () => void search(input.value));
  element.append(input, related, results);
  return { element, input, search };
}

export type ReplacePanel = {
  element: HTMLElement;
  load(phrase: string): Promise<void>;
};

export function createReplacePanel(
  api: ApiClient,
  onReplace: (phrase: string) => void,
): ReplacePanel {
  const element = document.createElement('div');
  element.className = 'replace-panel';

  function group(title: string, entries: ModifierEntry[]): HTMLElement {
    const section = document.createElement('section');
    const heading = document.createElement('h4');
    heading.textContent = title;
    section.appendChild(heading);
    for (const entry of entries) {
      const button = document.createElement('button');
      button.className = 'replace-option';
      button.textContent = `${entry.phrase} (${entry.frequency})`;
      button.addEventListener('click', () => onReplace(entry.phrase));
      section.appendChild(button);
    }
    return section;
  }

  async function load(phrase: string) {
    const [similar, dissimilar] = await Promise.all([
      api.similarModifiers(phrase, 3),
      api.dissimilarModifiers(phrase, 3),
    ]);
    element.replaceChildren(group('similar styles', similar), group('dissimilar styles', dissimilar));
  }

  return { element, load };
}
