/**
 * Deterministic stand-in encoders for the three modalities.
 *
 * Real deployments would call a pretrained text encoder, an image CNN and
 * an audio network here. Those weights are not shippable with this repo,
 * so each stage is a fixed seeded random projection instead: deterministic,
 * dimension-correct and honest about being a stand-in (see TOOL_VERSIONS).
 * The downstream package never sees the difference - it consumes vectors
 * of the declared widths.
 */

import { seededVector } from "./hash.js";
import { MANIFEST, TOOL_VERSIONS } from "./manifest.js";

export class ExtractionError extends Error {}

const seedTag = `proj-seed:${TOOL_VERSIONS.projection_seed}`;

/** Tokenize to lowercase word tokens; punctuation splits, digits kept. */
export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^a-z0-9']+/)
    .filter((t) => t.length > 0);
}

/**
 * Text encoder (summary-vector stand-in): mean of per-token seeded
 * vectors, 768 wide. Throws on empty text per the preprocessing rule.
 */
export function encodeText(text: string): number[] {
  const tokens = tokenize(text);
  if (tokens.length === 0) {
    throw new ExtractionError("empty text: record must be skipped");
  }
  const out = new Array<number>(MANIFEST.d_T).fill(0);
  for (const token of tokens) {
    const vec = seededVector(`${seedTag}:text:${token}`, MANIFEST.d_T);
    for (let j = 0; j < out.length; j++) out[j] += vec[j];
  }
  for (let j = 0; j < out.length; j++) out[j] /= tokens.length;
  return out;
}

const frameRowCache = new Map<number, number[]>();

function frameCoefRow(i: number): number[] {
  let row = frameRowCache.get(i);
  if (!row) {
    row = seededVector(`${seedTag}:frame-coef:${i}`, MANIFEST.d_I);
    frameRowCache.set(i, row);
  }
  return row;
}

/**
 * Frame encoder: fixed random projection of the pixel block plus a
 * constant bias channel, 1024 wide per frame.
 */
export function encodeFrame(pixels: number[]): number[] {
  if (pixels.length === 0) {
    throw new ExtractionError("frame has no pixels");
  }
  const out = seededVector(`${seedTag}:frame-bias`, MANIFEST.d_I);
  for (let i = 0; i < pixels.length; i++) {
    if (pixels[i] === 0) continue;
    const row = frameCoefRow(i);
    for (let j = 0; j < out.length; j++) {
      out[j] += (pixels[i] * row[j]) / pixels.length;
    }
  }
  return out;
}

export function encodeFrames(frames: { pixels: number[] }[]): number[][] {
  return frames.map((f) => encodeFrame(f.pixels));
}

const audioRowCache = new Map<number, number[]>();

function audioCoefRow(i: number): number[] {
  let row = audioRowCache.get(i);
  if (!row) {
    row = seededVector(`${seedTag}:audio-coef:${i}`, MANIFEST.d_A);
    audioRowCache.set(i, row);
  }
  return row;
}

/**
 * Audio encoder: fixed random projection of each 1-second PCM chunk plus a
 * constant bias channel, 128 wide per chunk. A silent chunk (all zero
 * samples) therefore maps to the same constant vector every time.
 */
export function encodeAudioChunk(samples: number[]): number[] {
  const out = seededVector(`${seedTag}:audio-bias`, MANIFEST.d_A);
  if (samples.length === 0) return out;
  for (let i = 0; i < samples.length; i++) {
    if (samples[i] === 0) continue;
    const row = audioCoefRow(i);
    for (let j = 0; j < out.length; j++) {
      out[j] += (samples[i] * row[j]) / samples.length;
    }
  }
  return out;
}

export function encodeAudio(chunks: number[][]): number[][] {
  return chunks.map(encodeAudioChunk);
}

/**
 * English filter from the preprocessing rules: a record whose title and
 * description are mostly non-ASCII letters is treated as non-English and
 * skipped upstream of any encoding.
 */
export function looksEnglish(text: string): boolean {
  const letters = Array.from(text).filter((c) => /\p{L}/u.test(c));
  if (letters.length === 0) return true;
  const ascii = letters.filter((c) => /[a-zA-Z]/.test(c)).length;
  return ascii / letters.length >= 0.7;
}
