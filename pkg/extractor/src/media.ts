/**
 * Decoded-media container for fixture videos.
 *
 * A `.video.json` file holds what a codec stack would hand us after
 * decoding: one grayscale pixel block per 1-second frame sample plus the
 * PCM samples for each synchronized 1-second audio chunk. Caption and
 * transcript channels carry the outputs that external captioning and
 * speech-to-text models would produce; the stand-in captioner/transcriber
 * read them verbatim (this is the injection point for real model backends).
 */

import { readFileSync } from "node:fs";

export interface DecodedFrame {
  /** Grayscale pixel intensities in [0, 1], row-major, any fixed size. */
  pixels: number[];
  /** Captioning-model output for this frame. */
  caption: string;
}

export interface DecodedAudio {
  /** PCM samples in [-1, 1], one array per 1-second chunk. */
  chunks: number[][];
  /** Speech-to-text output for the whole track. */
  transcript: string;
}

export interface DecodedVideo {
  durationSeconds: number;
  frames: DecodedFrame[];
  /** null when the video carries no audio track. */
  audio: DecodedAudio | null;
}

export class MediaError extends Error {}

function fail(path: string, reason: string): never {
  throw new MediaError(`${path}: ${reason}`);
}

/** Load and validate one decoded video; throws MediaError on bad files. */
export function loadVideo(path: string): DecodedVideo {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    fail(path, `undecodable video (${(err as Error).message})`);
  }
  if (typeof raw !== "object" || raw === null) fail(path, "not an object");
  const v = raw as Record<string, unknown>;

  if (typeof v.durationSeconds !== "number" || v.durationSeconds <= 0) {
    fail(path, "durationSeconds must be a positive number");
  }
  if (!Array.isArray(v.frames) || v.frames.length === 0) {
    fail(path, "frames must be a nonempty array");
  }
  const frames: DecodedFrame[] = v.frames.map((f, i) => {
    const frame = f as Record<string, unknown>;
    if (!Array.isArray(frame.pixels) || frame.pixels.some((p) => typeof p !== "number")) {
      fail(path, `frame ${i}: pixels must be an array of numbers`);
    }
    if (typeof frame.caption !== "string") {
      fail(path, `frame ${i}: caption must be a string`);
    }
    return { pixels: frame.pixels as number[], caption: frame.caption };
  });
  // 1-second sampling: frame count must track the duration
  if (Math.abs(frames.length - (v.durationSeconds as number)) > 1) {
    fail(path, `${frames.length} frames for ${v.durationSeconds}s of video`);
  }

  let audio: DecodedAudio | null = null;
  if (v.audio !== null && v.audio !== undefined) {
    const a = v.audio as Record<string, unknown>;
    if (!Array.isArray(a.chunks) || typeof a.transcript !== "string") {
      fail(path, "audio must carry chunks[] and transcript");
    }
    const chunks = (a.chunks as unknown[]).map((c, i) => {
      if (!Array.isArray(c) || c.some((s) => typeof s !== "number")) {
        fail(path, `audio chunk ${i}: must be an array of numbers`);
      }
      return c as number[];
    });
    if (Math.abs(chunks.length - frames.length) > 1) {
      fail(path, `audio chunks (${chunks.length}) not synchronized with frames (${frames.length})`);
    }
    audio = { chunks, transcript: a.transcript };
  }
  return { durationSeconds: v.durationSeconds as number, frames, audio };
}
