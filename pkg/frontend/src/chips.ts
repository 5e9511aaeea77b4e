/** Token chip row: each prompt token rendered as a chip colored by its
 * saliency, with a four-option menu (Delete / Replace / Attention /
 * Explore) and hover wiring for the heatmap overlay. */

import { chipStyle } from './saliency';
import type { MenuKind, Store } from './state';

export const MENU_OPTIONS: Exclude<MenuKind, 'none'>[] = [
  'delete',
  'replace',
  'attention',
  'explore',
];

export type ChipCallbacks = {
  onHover(token: number | null): void;
  onMenu(token: number, kind: Exclude<MenuKind, 'none'>): void;
};

export type ChipRow = {
  element: HTMLElement;
  render(): void;
};

export function createChipRow(store: Store, callbacks: ChipCallbacks): ChipRow {
  const element = document.createElement('div');
  element.className = 'chip-row';

  function render() {
    element.replaceChildren();
    store.state.chips.forEach((chip, token) => {
      const node = document.createElement('span');
      node.className = 'token-chip';
      node.dataset.token = String(token);
      node.textContent = chip.text;
      const style = chipStyle(chip.saliency);
      node.style.background = style.background;
      if (chip.selected) node.classList.add('selected');

      node.addEventListener('mouseenter', () => callbacks.onHover(token));
      node.addEventListener('mouseleave', () => callbacks.onHover(null));
      node.addEventListener('click', (event) => {
        event.stopPropagation();
        toggleMenu(token);
      });

      const open = store.state.openMenu;
      if (open && open.token === token) {
        node.appendChild(menuFor(token));
      }
      element.appendChild(node);
    });
  }

  function toggleMenu(token: number) {
    const open = store.state.openMenu;
    if (open && open.token === token) {
      store.closeMenu();
    } else {
      // opening any menu closes the previous one (store invariant)
      store.update((s) => {
        s.openMenu = { token, kind: 'none' };
      });
    }
  }

  function menuFor(token: number): HTMLElement {
    const menu = document.createElement('div');
    menu.className = 'chip-menu';
    for (const kind of MENU_OPTIONS) {
      const button = document.createElement('button');
      button.className = `chip-menu-${kind}`;
      button.textContent = kind[0].toUpperCase() + kind.slice(1);
      button.addEventListener('click', (event) => {
        event.stopPropagation();
        store.update((s) => {
          s.openMenu = { token, kind };
        });
        callbacks.onMenu(token, kind);
      });
      menu.appendChild(button);
    }
    return menu;
  }

  return { element, render };
}
