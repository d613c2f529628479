/** Typed readers for the three simulator CSV schemas. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface SinrSample {
  drop: number;
  rsu: number;
  vehicle: number;
  tti: number;
  sinr_db: number;
}

export interface VehicleSummary {
  drop: number;
  vehicle: number;
  rsu: number;
  mean_thr_kbps: number;
  outage: number;
  achieved_target: number;
}

export interface ResultsRow {
  config_label: string;
  receiver: string;
  target_prob: string;
  cell_edge_kbps: string;
  outage_frac: string;
  mean_vehicles_per_rsu: string;
}

export class CsvSchemaError extends Error {}

function parseRows(path: string, required: string[]): Record<string, string>[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new CsvSchemaError(`${path}: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  const missing = required.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new CsvSchemaError(
      `${path}: missing column(s) ${missing.join(", ")}`,
    );
  }
  return parsed.data;
}

function toNumber(path: string, column: string, value: string): number {
  const n = Number(value);
  if (!Number.isFinite(n)) {
    throw new CsvSchemaError(`${path}: non-numeric ${column} value ${value}`);
  }
  return n;
}

export function readSinrSamples(path: string): SinrSample[] {
  const cols = ["drop", "rsu", "vehicle", "tti", "sinr_db"];
  return parseRows(path, cols).map((r) => ({
    drop: toNumber(path, "drop", r.drop),
    rsu: toNumber(path, "rsu", r.rsu),
    vehicle: toNumber(path, "vehicle", r.vehicle),
    tti: toNumber(path, "tti", r.tti),
    sinr_db: toNumber(path, "sinr_db", r.sinr_db),
  }));
}

export function readVehicleSummary(path: string): VehicleSummary[] {
  const cols = [
    "drop", "vehicle", "rsu", "mean_thr_kbps", "outage", "achieved_target",
  ];
  return parseRows(path, cols).map((r) => ({
    drop: toNumber(path, "drop", r.drop),
    vehicle: toNumber(path, "vehicle", r.vehicle),
    rsu: toNumber(path, "rsu", r.rsu),
    mean_thr_kbps: toNumber(path, "mean_thr_kbps", r.mean_thr_kbps),
    outage: toNumber(path, "outage", r.outage),
    achieved_target: toNumber(path, "achieved_target", r.achieved_target),
  }));
}

/** Results table rows keep their cell strings verbatim for exact rendering. */
export function readResultsTable(path: string): ResultsRow[] {
  const cols = [
    "config_label", "receiver", "target_prob", "cell_edge_kbps",
    "outage_frac", "mean_vehicles_per_rsu",
  ];
  const rows = parseRows(path, cols).map((r) => ({
    config_label: r.config_label,
    receiver: r.receiver,
    target_prob: r.target_prob,
    cell_edge_kbps: r.cell_edge_kbps,
    outage_frac: r.outage_frac,
    mean_vehicles_per_rsu: r.mean_vehicles_per_rsu,
  }));
  if (rows.length === 0) {
    throw new CsvSchemaError(`${path}: no data rows`);
  }
  return rows;
}
