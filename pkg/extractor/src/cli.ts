/**
 * Command line: extract a media directory + metadata CSV into the
 * canonical feature file.
 *
 *   extract --media <dir> --metadata <csv> --out <file.jsonl>
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { extractAll, writeOutputs } from "./extract.js";

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        media: { type: "string" },
        metadata: { type: "string" },
        out: { type: "string" },
      },
    }));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  if (!values.media || !values.metadata || !values.out) {
    console.error("usage: extract --media <dir> --metadata <csv> --out <file.jsonl>");
    return 1;
  }
  try {
    const result = extractAll(values.media, values.metadata, (msg) =>
      console.warn(`warning: ${msg}`),
    );
    writeOutputs(result, values.out);
    console.log(
      `wrote ${result.records.length} records to ${values.out}` +
        (result.skipped.length ? ` (${result.skipped.length} skipped)` : ""),
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
