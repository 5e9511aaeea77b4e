/** Image canvas: shows the active version, overlays the hovered token's
 * heatmap, and collects brush strokes for inpainting. Strokes stay in
 * image-pixel coordinates and are submitted as circles; the client never
 * builds a pixel mask. */

import type { Stroke } from './api';
import type { HeatmapStack } from './chex';
import type { Store } from './state';

export type CanvasView = {
  element: HTMLElement;
  image: HTMLImageElement;
  overlay: HTMLCanvasElement;
  strokesLayer: HTMLCanvasElement;
  render(): void;
  setImage(url: string, width: number, height: number): void;
};

export function createCanvasView(store: Store): CanvasView {
  const element = document.createElement('div');
  element.className = 'canvas-stack';

  const image = document.createElement('img');
  image.className = 'version-image';
  image.alt = 'generated image';

  const overlay = document.createElement('canvas');
  overlay.className = 'heatmap-overlay';

  const strokesLayer = document.createElement('canvas');
  strokesLayer.className = 'strokes-layer';

  element.append(image, overlay, strokesLayer);

  let brushing = false;

  function canvasPoint(event: MouseEvent): { x: number; y: number } {
    const rect = strokesLayer.getBoundingClientRect();
    const scaleX = rect.width ? strokesLayer.width / rect.width : 1;
    const scaleY = rect.height ? strokesLayer.height / rect.height : 1;
    return {
      x: (event.clientX - rect.left) * scaleX,
      y: (event.clientY - rect.top) * scaleY,
    };
  }

  strokesLayer.addEventListener('pointerdown', (event) => {
    brushing = true;
    const { x, y } = canvasPoint(event);
    store.addStroke({ x, y, r: store.state.brushRadius });
  });
  strokesLayer.addEventListener('pointermove', (event) => {
    if (!brushing) return;
    const { x, y } = canvasPoint(event);
    store.addStroke({ x, y, r: store.state.brushRadius });
  });
  const stop = () => {
    brushing = false;
  };
  strokesLayer.addEventListener('pointerup', stop);
  strokesLayer.addEventListener('pointerleave', stop);

  function render() {
    drawOverlay(overlay, store.state.heatmaps, store.state.hoverToken);
    drawStrokes(strokesLayer, store.state.strokes);
  }

  function setImage(url: string, width: number, height: number) {
    image.src = url;
    for (const layer of [overlay, strokesLayer]) {
      layer.width = width;
      layer.height = height;
    }
    render();
  }

  return { element, image, overlay, strokesLayer, render, setImage };
}

/** The single map the overlay must show: exactly the hovered token's
 * heatmap, or null when nothing is hovered. */
export function selectOverlayMap(
  heatmaps: HeatmapStack | null,
  hoverToken: number | null,
): Float32Array | null {
  if (heatmaps === null || hoverToken === null) return null;
  if (hoverToken < 0 || hoverToken >= heatmaps.count) return null;
  return heatmaps.maps[hoverToken];
}

/** Paint exactly the hovered token's heatmap; hoverToken null clears. */
export function drawOverlay(
  canvas: HTMLCanvasElement,
  heatmaps: HeatmapStack | null,
  hoverToken: number | null,
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const map = selectOverlayMap(heatmaps, hoverToken);
  if (map === null || heatmaps === null) return;
  const { width, height } = heatmaps;
  const pixels = ctx.createImageData(width, height);
  for (let i = 0; i < map.length; i++) {
    pixels.data[i * 4 + 0] = 255;
    pixels.data[i * 4 + 1] = 80;
    pixels.data[i * 4 + 2] = 0;
    pixels.data[i * 4 + 3] = Math.round(200 * Math.min(1, Math.max(0, map[i])));
  }
  // heatmaps come at image resolution, so a direct put is 1:1
  ctx.putImageData(pixels, 0, 0);
}

export function drawStrokes(canvas: HTMLCanvasElement, strokes: Stroke[]): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = 'rgba(255, 255, 255, 0.55)';
  for (const stroke of strokes) {
    ctx.beginPath();
    ctx.arc(stroke.x, stroke.y, stroke.r, 0, Math.PI * 2);
    ctx.fill();
  }
}
