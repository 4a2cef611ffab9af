/** Decoding helpers for the wire sample format: base64 little-endian f32. */

import type { SamplePayload } from "./types.js";

function base64ToBytes(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) {
    out[i] = bin.charCodeAt(i);
  }
  return out;
}

export function decodeSample(payload: SamplePayload): {
  data: Float32Array;
  shape: number[];
} {
  const bytes = base64ToBytes(payload.b64);
  const data = new Float32Array(bytes.buffer, bytes.byteOffset, bytes.byteLength / 4);
  const expected = payload.shape.reduce((a, b) => a * b, 1);
  if (data.length !== expected) {
    throw new Error(`sample has ${data.length} values, shape wants ${expected}`);
  }
  return { data, shape: payload.shape };
}

/** MRI sample → grayscale RGBA pixels for a canvas ImageData. */
export function mriToPixels(payload: SamplePayload): {
  width: number;
  height: number;
  rgba: Uint8ClampedArray<ArrayBuffer>;
} {
  const { data, shape } = decodeSample(payload);
  const [height, width] = shape;
  const rgba = new Uint8ClampedArray(new ArrayBuffer(width * height * 4));
  for (let i = 0; i < data.length; i++) {
    const v = Math.max(0, Math.min(1, data[i])) * 255;
    rgba[i * 4] = v;
    rgba[i * 4 + 1] = v;
    rgba[i * 4 + 2] = v;
    rgba[i * 4 + 3] = 255;
  }
  return { width, height, rgba };
}

/** ECG sample → per-lead arrays for stacked line charts. */
export function ecgToLeads(payload: SamplePayload): Float32Array[] {
  const { data, shape } = decodeSample(payload);
  const [leads, samples] = shape;
  const out: Float32Array[] = [];
  for (let l = 0; l < leads; l++) {
    out.push(data.subarray(l * samples, (l + 1) * samples));
  }
  return out;
}
