#!/usr/bin/env node
/** `plots --input <dir> --out <dir> [--figs sinr,thr,table]` */

import { mkdirSync, writeFileSync } from "node:fs";
import path from "node:path";
import { parseArgs } from "node:util";

import { sinrFigure, summaryTable, throughputFigures } from "./figures.js";
import { renderCdfSvg } from "./svg.js";

const ALL_FIGS = ["sinr", "thr", "table"];

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        input: { type: "string" },
        out: { type: "string" },
        figs: { type: "string", default: ALL_FIGS.join(",") },
        help: { type: "boolean", default: false },
      },
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  const { input, out, figs, help } = parsed.values;
  if (help) {
    console.log(
      "usage: plots --input <dir> --out <dir> [--figs sinr,thr,table]",
    );
    return 0;
  }
  if (input === undefined || out === undefined) {
    console.error("error: --input and --out are required");
    return 2;
  }
  const wanted = figs!.split(",").map((f) => f.trim()).filter((f) => f !== "");
  const unknown = wanted.filter((f) => !ALL_FIGS.includes(f));
  if (unknown.length > 0) {
    console.error(`error: unknown figure kind(s): ${unknown.join(", ")}`);
    return 2;
  }

  try {
    mkdirSync(out, { recursive: true });
    if (wanted.includes("sinr")) {
      const file = path.join(out, "sinr_cdf.svg");
      writeFileSync(file, renderCdfSvg(sinrFigure(input)));
      console.log(`wrote ${file}`);
    }
    if (wanted.includes("thr")) {
      for (const { group, figure } of throughputFigures(input)) {
        const file = path.join(out, `throughput_cdf_${group}.svg`);
        writeFileSync(file, renderCdfSvg(figure));
        console.log(`wrote ${file}`);
      }
    }
    if (wanted.includes("table")) {
      const file = path.join(out, "summary_table.md");
      writeFileSync(file, summaryTable(input));
      console.log(`wrote ${file}`);
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
