import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { MANIFEST } from "../src/manifest.js";
import { extractAll, parseMetadataCsv, renderFeatureFile, writeOutputs } from "../src/extract.js";
import { loadVideo, MediaError } from "../src/media.js";

const here = dirname(fileURLToPath(import.meta.url));
const FIXTURES = join(here, "..", "fixtures");
const METADATA = join(FIXTURES, "metadata.csv");

function runFixtures() {
  return extractAll(FIXTURES, METADATA);
}

describe("parseMetadataCsv", () => {
  it("reads quoted cells with embedded commas", () => {
    const rows = parseMetadataCsv('id,title,description,label\na,"x, y",z,1\n');
    expect(rows).toEqual([{ id: "a", title: "x, y", description: "z", label: 1 }]);
  });

  it("rejects a wrong header", () => {
    expect(() => parseMetadataCsv("id,name\n")).toThrow(/header/);
  });

  it("rejects labels outside {0, 1}", () => {
    expect(() => parseMetadataCsv("id,title,description,label\na,t,d,2\n")).toThrow(/label/);
  });
});

describe("loadVideo", () => {
  it("rejects desynchronized audio", () => {
    const dir = mkdtempSync(join(tmpdir(), "vid-"));
    const path = join(dir, "bad.video.json");
    writeFileSync(
      path,
      JSON.stringify({
        durationSeconds: 4,
        frames: Array.from({ length: 4 }, () => ({ pixels: [0.1], caption: "" })),
        audio: { chunks: [[0.1]], transcript: "" },
      }),
    );
    expect(() => loadVideo(path)).toThrow(MediaError);
  });

  it("rejects frame counts far from the duration", () => {
    const dir = mkdtempSync(join(tmpdir(), "vid-"));
    const path = join(dir, "bad.video.json");
    writeFileSync(
      path,
      JSON.stringify({
        durationSeconds: 10,
        frames: [{ pixels: [0.1], caption: "" }],
        audio: null,
      }),
    );
    expect(() => loadVideo(path)).toThrow(MediaError);
  });
});

describe("extractAll on the fixture set", () => {
  it("emits three records and skips the empty-text and non-English rows", () => {
    const result = runFixtures();
    expect(result.records.map((r) => r.id)).toEqual(["vid001", "vid002", "vid003"]);
    expect(result.skipped.map((s) => s.id)).toEqual(["vid004", "vid005"]);
    expect(result.skipped[0].reason).toContain("empty text");
    expect(result.skipped[1].reason).toContain("non-English");
  });

  it("carries the declared dimensions on every record", () => {
    for (const r of runFixtures().records) {
      expect(r.text_emb).toHaveLength(MANIFEST.d_T);
      for (const frame of r.image_frames) expect(frame).toHaveLength(MANIFEST.d_I);
      for (const chunk of r.audio_chunks ?? []) expect(chunk).toHaveLength(MANIFEST.d_A);
      if (r.audio_emb) expect(r.audio_emb).toHaveLength(MANIFEST.d_A);
      for (const mod of ["text", "image", "audio"] as const) {
        for (const vec of r.entities[mod]) expect(vec).toHaveLength(MANIFEST.d_E);
      }
    }
  });

  it("keeps frames and chunks synchronized within one", () => {
    for (const r of runFixtures().records) {
      if (!r.audio_chunks) continue;
      expect(Math.abs(r.image_frames.length - r.audio_chunks.length)).toBeLessThanOrEqual(1);
    }
  });

  it("samples one frame per second (10s video gives 10 frames)", () => {
    const rec = runFixtures().records.find((r) => r.id === "vid001")!;
    expect(Math.abs(rec.image_frames.length - 10)).toBeLessThanOrEqual(1);
  });

  it("finds consistent entities for the real record", () => {
    const rec = runFixtures().records.find((r) => r.id === "vid001")!;
    // paris appears in title/description, keyframe captions and transcript
    expect(rec.entities.text.length).toBeGreaterThan(0);
    expect(rec.entities.image.length).toBeGreaterThan(0);
    expect(rec.entities.audio.length).toBeGreaterThan(0);
  });

  it("flags the missing audio track with zeros and a warning", () => {
    const result = runFixtures();
    const rec = result.records.find((r) => r.id === "vid003")!;
    expect(rec.audio_chunks).toBeUndefined();
    expect(rec.audio_emb).toEqual(new Array(MANIFEST.d_A).fill(0));
    expect(rec.entities.audio).toEqual([]);
    expect(result.warnings.join(" ")).toContain("no audio track");
  });

  it("logs the out-of-vocabulary drop for atlantis", () => {
    const result = runFixtures();
    expect(result.warnings.join(" ")).toContain("atlantis");
  });

  it("re-running is byte-identical", () => {
    const a = renderFeatureFile(runFixtures().records);
    const b = renderFeatureFile(runFixtures().records);
    expect(a).toBe(b);
  });
});

describe("feature file output", () => {
  it("starts with the manifest line", () => {
    const text = renderFeatureFile(runFixtures().records);
    const first = JSON.parse(text.split("\n")[0]);
    expect(first).toEqual({ manifest: MANIFEST });
  });

  it("writes a pinned-versions manifest next to the feature file", () => {
    const dir = mkdtempSync(join(tmpdir(), "out-"));
    const out = join(dir, "features.jsonl");
    writeOutputs(runFixtures(), out);
    const versions = JSON.parse(readFileSync(join(dir, "features.versions.json"), "utf-8"));
    expect(versions.tool_versions.ner).toBe("gazetteer-ner/1");
    expect(versions.records).toBe(3);
  });

  it("loads in the downstream trainer with zero validation errors", () => {
    const dir = mkdtempSync(join(tmpdir(), "out-"));
    const out = join(dir, "features.jsonl");
    writeOutputs(runFixtures(), out);
    // the downstream package recomputes consistency scores from the file;
    // a zero exit means every record passed schema and dimension checks
    execFileSync("python3", [
      "-m", "multimd", "consistency", "--data", out, "--out", join(dir, "scores"),
    ]);
    const csv = readFileSync(join(dir, "scores", "consistency.csv"), "utf-8");
    expect(csv.trim().split("\n")).toHaveLength(4); // header + 3 records
    expect(existsSync(join(dir, "scores", "run_manifest.json"))).toBe(true);
  });
});
