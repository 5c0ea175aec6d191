/**
 * Named-entity extraction and embedding.
 *
 * NER is a gazetteer matcher over persons, locations and organizations (a
 * stand-in for a full tagger; see TOOL_VERSIONS). Recognized entities are
 * embedded with a deterministic 300-wide word-vector stand-in. Entities
 * outside the embedding vocabulary are dropped with a log line, never
 * zero-filled, so degenerate vectors cannot enter the consistency stage.
 */

import { seededVector } from "./hash.js";
import { tokenize } from "./encoders.js";
import { MANIFEST, TOOL_VERSIONS, KEYFRAME_STRIDE } from "./manifest.js";

export const GAZETTEER = {
  person: ["obama", "einstein", "cleopatra", "napoleon", "curie", "mandela"],
  location: ["paris", "london", "tokyo", "berlin", "cairo", "nairobi", "atlantis"],
  organization: ["nasa", "unesco", "google", "interpol", "fifa"],
} as const;

/**
 * Embedding vocabulary. Deliberately not identical to the gazetteer:
 * "atlantis" is recognizable but has no vector, exercising the
 * out-of-vocabulary drop rule.
 */
export const VOCAB: ReadonlySet<string> = new Set(
  [...GAZETTEER.person, ...GAZETTEER.location, ...GAZETTEER.organization].filter(
    (w) => w !== "atlantis",
  ),
);

const ALL_ENTITIES: ReadonlySet<string> = new Set([
  ...GAZETTEER.person,
  ...GAZETTEER.location,
  ...GAZETTEER.organization,
]);

/** Unique gazetteer entities mentioned in the text, in first-seen order. */
export function recognizeEntities(text: string): string[] {
  const seen = new Set<string>();
  const found: string[] = [];
  for (const token of tokenize(text)) {
    if (ALL_ENTITIES.has(token) && !seen.has(token)) {
      seen.add(token);
      found.push(token);
    }
  }
  return found;
}

/** Deterministic 300-wide word vector for an in-vocabulary entity. */
export function entityVector(entity: string): number[] {
  return seededVector(
    `proj-seed:${TOOL_VERSIONS.projection_seed}:entity:${entity}`,
    MANIFEST.d_E,
  );
}

/**
 * Recognize, filter by vocabulary, and embed. Out-of-vocabulary entities
 * are reported through `warn` and omitted.
 */
export function extractEntitySet(
  text: string,
  warn: (message: string) => void = () => {},
): number[][] {
  const vectors: number[][] = [];
  for (const entity of recognizeEntities(text)) {
    if (!VOCAB.has(entity)) {
      warn(`dropping out-of-vocabulary entity "${entity}"`);
      continue;
    }
    vectors.push(entityVector(entity));
  }
  return vectors;
}

/** Keyframe indices: every Kth 1-second frame, frame 0 always included. */
export function keyframeIndices(frameCount: number, stride = KEYFRAME_STRIDE): number[] {
  const indices: number[] = [];
  for (let i = 0; i < frameCount; i += stride) indices.push(i);
  return indices;
}
