/**
 * Canonical feature-file dimensions and the pinned tool versions.
 *
 * The downstream training package validates every record against these
 * numbers, so they are fixed here in one place.
 */

export const MANIFEST = {
  d_T: 768, // text embedding width
  d_I: 1024, // per-frame embedding width
  d_A: 128, // per-audio-chunk embedding width
  d_E: 300, // entity embedding width
  schema_version: 1,
} as const;

/** Sampling interval for both frames and audio chunks, in seconds. */
export const SAMPLE_INTERVAL_SECONDS = 1;

/** Keyframe selection: every Kth sampled frame (frame 0 always included). */
export const KEYFRAME_STRIDE = 5;

/**
 * Versions of every encoding stage. Re-running with the same versions and
 * seed must reproduce the output byte for byte; bump a version whenever the
 * corresponding stage changes behaviour.
 */
export const TOOL_VERSIONS = {
  text_encoder: "hash-text/1",
  frame_encoder: "hash-frame/1",
  audio_encoder: "hash-audio/1",
  captioner: "annotation-captioner/1",
  transcriber: "annotation-transcriber/1",
  ner: "gazetteer-ner/1",
  entity_embedder: "hash-word2vec/1",
  projection_seed: 1,
} as const;
