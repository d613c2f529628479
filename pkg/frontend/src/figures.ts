/** Figure and table construction from a simulator results directory.
 *
 * A results directory holds one `results_table.csv` plus one subdirectory per
 * experiment (`<group>_<receiver>`) containing `sinr_samples.csv` and
 * `vehicle_summary.csv`.  Receivers compared within a figure: mrc, lmmse,
 * lmmse_precoded.
 */

import { existsSync, readdirSync } from "node:fs";
import path from "node:path";

import { empiricalCdf } from "./cdf.js";
import {
  readResultsTable,
  readSinrSamples,
  readVehicleSummary,
  type ResultsRow,
} from "./csv.js";
import type { CdfFigure, CdfSeries } from "./svg.js";

export const RECEIVER_SUFFIXES = ["lmmse_precoded", "lmmse", "mrc"] as const;

export const RECEIVER_NAMES: Record<string, string> = {
  mrc: "MRC",
  lmmse: "LMMSE",
  lmmse_precoded: "LMMSE+precoding",
};

/** Table receiver labels in presentation order. */
export const TABLE_RECEIVERS = ["mrc", "lmmse", "lmmse+precoding"];

export interface ExperimentDir {
  label: string;
  group: string;
  receiver: string;
  dir: string;
}

export function discoverExperiments(inputDir: string): ExperimentDir[] {
  const out: ExperimentDir[] = [];
  for (const entry of readdirSync(inputDir, { withFileTypes: true })) {
    if (!entry.isDirectory()) continue;
    const dir = path.join(inputDir, entry.name);
    if (!existsSync(path.join(dir, "vehicle_summary.csv"))) continue;
    const suffix = RECEIVER_SUFFIXES.find((s) => entry.name.endsWith(`_${s}`));
    if (suffix === undefined) continue;
    out.push({
      label: entry.name,
      group: entry.name.slice(0, entry.name.length - suffix.length - 1),
      receiver: suffix,
      dir,
    });
  }
  out.sort((a, b) => a.label.localeCompare(b.label));
  if (out.length === 0) {
    throw new Error(`no experiment directories found under ${inputDir}`);
  }
  return out;
}

function groupsOf(experiments: ExperimentDir[]): Map<string, ExperimentDir[]> {
  const groups = new Map<string, ExperimentDir[]>();
  for (const e of experiments) {
    const list = groups.get(e.group) ?? [];
    list.push(e);
    groups.set(e.group, list);
  }
  return groups;
}

function receiverSeries(
  experiments: ExperimentDir[],
  values: (e: ExperimentDir) => number[],
): CdfSeries[] {
  const byReceiver = new Map(experiments.map((e) => [e.receiver, e]));
  const series: CdfSeries[] = [];
  for (const receiver of ["mrc", "lmmse", "lmmse_precoded"]) {
    const exp = byReceiver.get(receiver);
    if (exp === undefined) continue;
    const v = values(exp);
    if (v.length === 0) {
      console.warn(`warning: empty series ${exp.label}, skipped`);
      continue;
    }
    series.push({ name: RECEIVER_NAMES[receiver], cdf: empiricalCdf(v) });
  }
  return series;
}

/** Mean vehicles per drop, used to identify the sparsest group. */
function meanVehicles(experiments: ExperimentDir[]): number {
  const rows = readVehicleSummary(
    path.join(experiments[0].dir, "vehicle_summary.csv"),
  );
  const drops = new Set(rows.map((r) => r.drop)).size;
  return rows.length / Math.max(drops, 1);
}

/** SINR CDF for the sparsest group, one series per receiver. */
export function sinrFigure(inputDir: string): CdfFigure {
  const groups = groupsOf(discoverExperiments(inputDir));
  const sparsest = [...groups.entries()].reduce((a, b) =>
    meanVehicles(b[1]) < meanVehicles(a[1]) ? b : a,
  );
  return {
    title: `Downlink SINR by receiver (${sparsest[0]})`,
    xLabel: "SINR [dB]",
    xRange: [-10, 40],
    series: receiverSeries(sparsest[1], (e) =>
      readSinrSamples(path.join(e.dir, "sinr_samples.csv")).map(
        (r) => r.sinr_db,
      ),
    ),
  };
}

/** One throughput CDF figure per density group. */
export function throughputFigures(
  inputDir: string,
): { group: string; figure: CdfFigure }[] {
  const groups = groupsOf(discoverExperiments(inputDir));
  return [...groups.entries()].map(([group, experiments]) => ({
    group,
    figure: {
      title: `Vehicle throughput by receiver (${group})`,
      xLabel: "throughput [kb/s]",
      xRange: [0, 140],
      series: receiverSeries(experiments, (e) =>
        readVehicleSummary(path.join(e.dir, "vehicle_summary.csv")).map(
          (r) => r.mean_thr_kbps,
        ),
      ),
    },
  }));
}

/** target_prob rendered as a percentage without float noise. */
export function percentCell(targetProb: string): string {
  return String(parseFloat((Number(targetProb) * 100).toPrecision(12)));
}

/** cell_edge_kbps rendered verbatim, with "--" below 1 kb/s. */
export function cellEdgeCell(cellEdgeKbps: string): string {
  return Number(cellEdgeKbps) < 1 ? "--" : cellEdgeKbps;
}

/** Markdown summary: rows = density configs, columns = receiver settings,
 * cells = target probability (%) and cell-edge throughput (kb/s). */
export function renderSummaryTable(rows: ResultsRow[]): string {
  const configs: string[] = [];
  const cells = new Map<string, ResultsRow>();
  for (const row of rows) {
    if (!configs.includes(row.config_label)) configs.push(row.config_label);
    cells.set(`${row.config_label}|${row.receiver}`, row);
  }
  const receivers = TABLE_RECEIVERS.filter((r) =>
    rows.some((row) => row.receiver === r),
  );
  const missing: string[] = [];
  for (const c of configs) {
    for (const r of receivers) {
      if (!cells.has(`${c}|${r}`)) missing.push(`${c} / ${r}`);
    }
  }
  if (missing.length > 0) {
    throw new Error(`missing results rows: ${missing.join(", ")}`);
  }
  const lines = [
    `| config | ${receivers.join(" | ")} |`,
    `| --- | ${receivers.map(() => "---").join(" | ")} |`,
  ];
  for (const c of configs) {
    const body = receivers
      .map((r) => {
        const row = cells.get(`${c}|${r}`)!;
        return `${percentCell(row.target_prob)}% / ${cellEdgeCell(row.cell_edge_kbps)}`;
      })
      .join(" | ");
    lines.push(`| ${c} | ${body} |`);
  }
  return lines.join("\n") + "\n";
}

export function summaryTable(inputDir: string): string {
  return renderSummaryTable(
    readResultsTable(path.join(inputDir, "results_table.csv")),
  );
}
