/** Parser for the CHEX heatmap sidecar: "CHEX" magic, then count/height/
 * width as little-endian uint32, then count*h*w little-endian float32. */

export type HeatmapStack = {
  count: number;
  height: number;
  width: number;
  /** map index -> row-major float values */
  maps: Float32Array[];
};

const MAGIC = 0x58454843; // "CHEX" read as LE uint32

export function parseChex(buffer: ArrayBuffer): HeatmapStack {
  const view = new DataView(buffer);
  if (buffer.byteLength < 16 || view.getUint32(0, true) !== MAGIC) {
    throw new Error('not a CHEX payload');
  }
  const count = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const width = view.getUint32(12, true);
  const expected = 16 + count * height * width * 4;
  if (buffer.byteLength !== expected) {
    throw new Error(`CHEX payload is ${buffer.byteLength} bytes, expected ${expected}`);
  }
  const maps: Float32Array[] = [];
  for (let i = 0; i < count; i++) {
    const offset = 16 + i * height * width * 4;
    const flat = new Float32Array(height * width);
    for (let j = 0; j < flat.length; j++) {
      flat[j] = view.getFloat32(offset + j * 4, true);
    }
    maps.push(flat);
  }
  return { count, height, width, maps };
}
