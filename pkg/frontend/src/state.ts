/** Single observable app state. Components render from it and mutate it
 * through the methods below; invariants (one open menu, at most two
 * selected versions, strokes cleared on version switch, one in-flight job)
 * live here rather than in the DOM. */

import type { AdjustmentEntries, Stroke, VersionInfo } from './api';
import type { HeatmapStack } from './chex';

export type MenuKind = 'none' | 'delete' | 'replace' | 'attention' | 'explore';

export type ChipState = {
  text: string;
  saliency: number;
  selected: boolean;
};

export type AppState = {
  sessionId: string | null;
  versions: VersionInfo[];
  /** up to two version ids for the side-by-side view */
  selectedVersions: number[];
  /** the version whose image/explanation the canvas shows */
  activeVersion: number | null;
  chips: ChipState[];
  openMenu: { token: number; kind: MenuKind } | null;
  heatmaps: HeatmapStack | null;
  /** token index whose heatmap is overlaid while hovered, else null */
  hoverToken: number | null;
  strokes: Stroke[];
  brushRadius: number;
  pendingAdjustment: AdjustmentEntries;
  jobInFlight: boolean;
};

export type Listener = (state: AppState) => void;

export class Store {
  private listeners = new Set<Listener>();

  readonly state: AppState = {
    sessionId: null,
    versions: [],
    selectedVersions: [],
    activeVersion: null,
    chips: [],
    openMenu: null,
    heatmaps: null,
    hoverToken: null,
    strokes: [],
    brushRadius: 8,
    pendingAdjustment: {},
    jobInFlight: false,
  };

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit() {
    for (const listener of this.listeners) listener(this.state);
  }

  update(mutate: (state: AppState) => void): void {
    mutate(this.state);
    this.emit();
  }

  setVersions(versions: VersionInfo[]): void {
    this.update((s) => {
      s.versions = versions;
    });
  }

  /** Switch the canvas to a version; brush strokes never survive a switch. */
  setActiveVersion(id: number | null, heatmaps: HeatmapStack | null): void {
    this.update((s) => {
      s.activeVersion = id;
      s.heatmaps = heatmaps;
      s.strokes = [];
      s.hoverToken = null;
      s.openMenu = null;
      const version = s.versions.find((v) => v.id === id);
      s.chips = version?.explanation
        ? version.explanation.tokens.map((text, j) => ({
            text,
            saliency: version.explanation!.saliencies[j],
            selected: false,
          }))
        : [];
      s.pendingAdjustment = {};
    });
  }

  /** Toggle membership in the up-to-two compare selection (oldest evicted). */
  toggleVersionSelection(id: number): void {
    this.update((s) => {
      if (s.selectedVersions.includes(id)) {
        s.selectedVersions = s.selectedVersions.filter((v) => v !== id);
      } else {
        s.selectedVersions = [...s.selectedVersions, id].slice(-2);
      }
    });
  }

  /** Open one token menu; any other menu closes. Same menu toggles shut. */
  openMenu(token: number, kind: MenuKind): void {
    this.update((s) => {
      const current = s.openMenu;
      s.openMenu =
        current && current.token === token && current.kind === kind
          ? null
          : { token, kind };
    });
  }

  closeMenu(): void {
    this.update((s) => {
      s.openMenu = null;
    });
  }

  toggleChipSelected(token: number): void {
    this.update((s) => {
      const chip = s.chips[token];
      if (chip) chip.selected = !chip.selected;
    });
  }

  selectedTokens(): number[] {
    return this.state.chips
      .map((chip, index) => (chip.selected ? index : -1))
      .filter((index) => index >= 0);
  }

  setHoverToken(token: number | null): void {
    this.update((s) => {
      s.hoverToken = token;
    });
  }

  addStroke(stroke: Stroke): void {
    this.update((s) => {
      s.strokes = [...s.strokes, stroke];
    });
  }

  clearStrokes(): void {
    this.update((s) => {
      s.strokes = [];
    });
  }

  setAdjustment(entries: AdjustmentEntries): void {
    this.update((s) => {
      s.pendingAdjustment = { ...s.pendingAdjustment, ...entries };
    });
  }

  /** Client-side guard: at most one generation/inpaint job in flight. */
  beginJob(): boolean {
    if (this.state.jobInFlight) return false;
    this.update((s) => {
      s.jobInFlight = true;
    });
    return true;
  }

  endJob(): void {
    this.update((s) => {
      s.jobInFlight = false;
    });
  }
}
