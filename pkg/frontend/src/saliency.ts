/** Saliency-to-style mapping for token chips: more important tokens get a
 * darker background. Linear in saliency so chip ordering always matches
 * saliency ordering. */

export const MIN_OPACITY = 0.15;
export const MAX_OPACITY = 1.0;

export function saliencyOpacity(saliency: number): number {
  const s = Math.min(1, Math.max(0, saliency));
  return MIN_OPACITY + (MAX_OPACITY - MIN_OPACITY) * s;
}

export type ChipStyle = { background: string; opacity: number };

const CHIP_RGB = '99, 102, 241';

export function chipStyle(saliency: number): ChipStyle {
  const opacity = saliencyOpacity(saliency);
  return {
    opacity,
    background: `rgba(${CHIP_RGB}, ${opacity.toFixed(4)})`,
  };
}
