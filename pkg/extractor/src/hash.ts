/**
 * Deterministic seeded pseudo-random vectors.
 *
 * Every stand-in encoder in this package derives its weights from string
 * keys through FNV-1a + mulberry32, so the whole extraction pipeline is a
 * pure function of its inputs and the pinned projection seed.
 */

/** 32-bit FNV-1a hash of a string. */
export function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/** mulberry32 PRNG; small, fast, and reproducible across platforms. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** A deterministic vector in [-1, 1]^dim keyed by an arbitrary string. */
export function seededVector(key: string, dim: number): number[] {
  const next = mulberry32(fnv1a(key));
  const out = new Array<number>(dim);
  for (let j = 0; j < dim; j++) {
    out[j] = next() * 2 - 1;
  }
  return out;
}
