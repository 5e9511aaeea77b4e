import { describe, expect, it } from 'vitest';

import {
  GAMMA_DEFAULT,
  GAMMA_MAX,
  GAMMA_MIN,
  GAMMA_STEP,
  clampGamma,
  createAttentionSlider,
} from '../src/slider';

function setValue(input: HTMLInputElement, value: string) {
  input.value = value;
  input.dispatchEvent(new Event('input'));
}

describe('attention slider', () => {
  it('locks the range to [0.5, 2.0] with step 0.05 and default 1.0', () => {
    const slider = createAttentionSlider(() => [0]);
    expect(slider.input.min).toBe(String(GAMMA_MIN));
    expect(slider.input.max).toBe(String(GAMMA_MAX));
    expect(slider.input.step).toBe(String(GAMMA_STEP));
    expect(slider.input.value).toBe(String(GAMMA_DEFAULT));
    expect(GAMMA_MIN).toBe(0.5);
    expect(GAMMA_MAX).toBe(2.0);
    expect(GAMMA_DEFAULT).toBe(1.0);
    expect(GAMMA_STEP).toBe(0.05);
  });

  it('emits an empty patch while untouched', () => {
    const slider = createAttentionSlider(() => [0, 1, 2]);
    expect(slider.patch()).toEqual({});
  });

  it('emits one entry per selected token after a move', () => {
    const slider = createAttentionSlider(() => [2, 5]);
    setValue(slider.input, '2');
    expect(slider.patch()).toEqual({ '2': 2.0, '5': 2.0 });
  });

  it('matches the halve-the-token gesture', () => {
    const slider = createAttentionSlider(() => [1]);
    setValue(slider.input, '0.5');
    expect(slider.patch()).toEqual({ '1': 0.5 });
  });

  it('notifies subscribers with the current patch', () => {
    let seen: Record<string, number> | null = null;
    const slider = createAttentionSlider(
      () => [3],
      (patch) => {
        seen = patch;
      },
    );
    setValue(slider.input, '1.35');
    expect(seen).toEqual({ '3': 1.35 });
  });

  it('reset returns to the default untouched state', () => {
    const slider = createAttentionSlider(() => [0]);
    setValue(slider.input, '1.5');
    expect(slider.patch()).toEqual({ '0': 1.5 });
    slider.reset();
    expect(slider.patch()).toEqual({});
    expect(slider.input.value).toBe('1');
  });

  it('clamps values at the control bounds', () => {
    expect(clampGamma(0.2)).toBe(0.5);
    expect(clampGamma(3.7)).toBe(2.0);
    expect(clampGamma(1.25)).toBe(1.25);
    expect(clampGamma(NaN)).toBe(1.0);
  });
});
