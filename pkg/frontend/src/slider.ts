/** Attention slider: one control, locked to the engine's gamma bounds,
 * emitting one adjustment entry per selected token. */

import type { AdjustmentEntries } from './api';

export const GAMMA_MIN = 0.5;
export const GAMMA_MAX = 2.0;
export const GAMMA_DEFAULT = 1.0;
export const GAMMA_STEP = 0.05;

export type AttentionSlider = {
  element: HTMLElement;
  input: HTMLInputElement;
  /** Entries for the current position: empty while untouched. */
  patch(): AdjustmentEntries;
  reset(): void;
};

export function createAttentionSlider(
  selectedTokens: () => number[],
  onChange?: (patch: AdjustmentEntries) => void,
): AttentionSlider {
  const element = document.createElement('div');
  element.className = 'attention-slider';

  const input = document.createElement('input');
  input.type = 'range';
  input.min = String(GAMMA_MIN);
  input.max = String(GAMMA_MAX);
  input.step = String(GAMMA_STEP);
  input.value = String(GAMMA_DEFAULT);

  const readout = document.createElement('span');
  readout.className = 'gamma-readout';
  readout.textContent = `x${GAMMA_DEFAULT.toFixed(2)}`;

  let touched = false;

  const patch = (): AdjustmentEntries => {
    if (!touched) return {};
    const gamma = clampGamma(parseFloat(input.value));
    const entries: AdjustmentEntries = {};
    for (const index of selectedTokens()) {
      entries[String(index)] = gamma;
    }
    return entries;
  };

  input.addEventListener('input', () => {
    touched = true;
    readout.textContent = `x${parseFloat(input.value).toFixed(2)}`;
    onChange?.(patch());
  });

  element.append(input, readout);
  return {
    element,
    input,
    patch,
    reset() {
      touched = false;
      input.value = String(GAMMA_DEFAULT);
      readout.textContent = `x${GAMMA_DEFAULT.toFixed(2)}`;
    },
  };
}

export function clampGamma(value: number): number {
  if (Number.isNaN(value)) return GAMMA_DEFAULT;
  return Math.min(GAMMA_MAX, Math.max(GAMMA_MIN, value));
}
