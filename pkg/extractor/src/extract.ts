/**
 * End-to-end extraction: media directory + metadata CSV -> canonical
 * feature file (JSON lines) plus a pinned-versions run manifest.
 */

import { existsSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { MANIFEST, TOOL_VERSIONS } from "./manifest.js";
import { loadVideo, MediaError } from "./media.js";
import {
  encodeAudio,
  encodeFrames,
  encodeText,
  looksEnglish,
  ExtractionError,
} from "./encoders.js";
import { extractEntitySet, keyframeIndices } from "./entities.js";

export interface MetadataRow {
  id: string;
  title: string;
  description: string;
  label: number;
}

export interface FeatureRecord {
  id: string;
  label: number;
  text_emb: number[];
  image_frames: number[][];
  audio_chunks?: number[][];
  audio_emb?: number[];
  entities: { text: number[][]; image: number[][]; audio: number[][] };
}

export interface ExtractionResult {
  records: FeatureRecord[];
  skipped: { id: string; reason: string }[];
  warnings: string[];
}

/** Minimal CSV reader with double-quote escaping; header row required. */
export function parseMetadataCsv(content: string): MetadataRow[] {
  const lines = content.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new ExtractionError("metadata CSV is empty");
  const parseLine = (line: string): string[] => {
    const cells: string[] = [];
    let cell = "";
    let quoted = false;
    for (let i = 0; i < line.length; i++) {
      const ch = line[i];
      if (quoted) {
        if (ch === '"' && line[i + 1] === '"') {
          cell += '"';
          i++;
        } else if (ch === '"') {
          quoted = false;
        } else {
          cell += ch;
        }
      } else if (ch === '"') {
        quoted = true;
      } else if (ch === ",") {
        cells.push(cell);
        cell = "";
      } else {
        cell += ch;
      }
    }
    cells.push(cell);
    return cells;
  };
  const header = parseLine(lines[0]);
  const expected = ["id", "title", "description", "label"];
  if (header.join(",") !== expected.join(",")) {
    throw new ExtractionError(
      `metadata CSV header must be "${expected.join(",")}", got "${header.join(",")}"`,
    );
  }
  return lines.slice(1).map((line, n) => {
    const cells = parseLine(line);
    if (cells.length !== 4) {
      throw new ExtractionError(`metadata row ${n + 2}: expected 4 cells, got ${cells.length}`);
    }
    const label = Number(cells[3]);
    if (label !== 0 && label !== 1) {
      throw new ExtractionError(`metadata row ${n + 2}: label must be 0 or 1`);
    }
    return { id: cells[0], title: cells[1], description: cells[2], label };
  });
}

/** Extract one record; throws ExtractionError / MediaError on skips. */
export function extractRecord(
  row: MetadataRow,
  mediaDir: string,
  warn: (message: string) => void,
): FeatureRecord {
  const text = `${row.title} ${row.description}`.trim();
  if (text.length === 0) {
    throw new ExtractionError("empty text");
  }
  if (!looksEnglish(text)) {
    throw new ExtractionError("non-English text");
  }
  const videoPath = join(mediaDir, `${row.id}.video.json`);
  if (!existsSync(videoPath)) {
    throw new MediaError(`missing media file ${videoPath}`);
  }
  const video = loadVideo(videoPath);

  const textEmb = encodeText(text);
  const frames = encodeFrames(video.frames);

  const record: FeatureRecord = {
    id: row.id,
    label: row.label,
    text_emb: textEmb,
    image_frames: frames,
    entities: { text: [], image: [], audio: [] },
  };

  if (video.audio === null) {
    warn(`${row.id}: no audio track, emitting zero audio embedding`);
    record.audio_emb = new Array<number>(MANIFEST.d_A).fill(0);
  } else {
    record.audio_chunks = encodeAudio(video.audio.chunks);
  }

  const entityWarn = (msg: string) => warn(`${row.id}: ${msg}`);
  record.entities.text = extractEntitySet(text, entityWarn);
  const captions = keyframeIndices(video.frames.length)
    .map((i) => video.frames[i].caption)
    .join(" ");
  record.entities.image = extractEntitySet(captions, entityWarn);
  record.entities.audio = video.audio
    ? extractEntitySet(video.audio.transcript, entityWarn)
    : [];
  return record;
}

/** Run the whole pipeline over the metadata CSV. */
export function extractAll(
  mediaDir: string,
  metadataPath: string,
  warn: (message: string) => void = () => {},
): ExtractionResult {
  const rows = parseMetadataCsv(readFileSync(metadataPath, "utf-8"));
  const records: FeatureRecord[] = [];
  const skipped: { id: string; reason: string }[] = [];
  const warnings: string[] = [];
  const collect = (msg: string) => {
    warnings.push(msg);
    warn(msg);
  };
  for (const row of rows) {
    try {
      records.push(extractRecord(row, mediaDir, collect));
    } catch (err) {
      if (err instanceof ExtractionError || err instanceof MediaError) {
        skipped.push({ id: row.id, reason: err.message });
        collect(`${row.id}: skipped (${err.message})`);
      } else {
        throw err;
      }
    }
  }
  return { records, skipped, warnings };
}

/** Serialize manifest line + records as JSON lines. */
export function renderFeatureFile(records: FeatureRecord[]): string {
  const lines = [JSON.stringify({ manifest: MANIFEST })];
  for (const r of records) lines.push(JSON.stringify(r));
  return lines.join("\n") + "\n";
}

/** Write the feature file and the pinned-versions run manifest. */
export function writeOutputs(result: ExtractionResult, outPath: string): void {
  writeFileSync(outPath, renderFeatureFile(result.records));
  const manifestPath = outPath.replace(/(\.jsonl)?$/, ".versions.json");
  writeFileSync(
    manifestPath,
    JSON.stringify(
      {
        tool_versions: TOOL_VERSIONS,
        dims: MANIFEST,
        records: result.records.length,
        skipped: result.skipped,
      },
      null,
      2,
    ) + "\n",
  );
}
