/** Readers for the lab's CSV and JSON output schemas. */

import { readFileSync } from "node:fs";

export class SchemaError extends Error {
  constructor(
    public file: string,
    detail: string,
  ) {
    super(`${file}: ${detail}`);
  }
}

export interface CsvTable {
  header: string[];
  rows: number[][];
  configHash: string | null;
  file: string;
}

export function readCsv(path: string): CsvTable {
  const text = readFileSync(path, "utf-8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  let configHash: string | null = null;
  let idx = 0;
  while (idx < lines.length && lines[idx].startsWith("#")) {
    const m = lines[idx].match(/config_hash=([A-Za-z0-9_-]+)/);
    if (m) configHash = m[1];
    idx++;
  }
  if (idx >= lines.length) {
    throw new SchemaError(path, "missing header row");
  }
  const header = lines[idx].split(",").map((h) => h.trim());
  idx++;
  const rows: number[][] = [];
  for (; idx < lines.length; idx++) {
    const parts = lines[idx].split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(path, `row ${idx + 1} has ${parts.length} fields, expected ${header.length}`);
    }
    const row = parts.map((p) => Number(p));
    if (row.some((v) => Number.isNaN(v))) {
      throw new SchemaError(path, `row ${idx + 1} is not numeric`);
    }
    rows.push(row);
  }
  return { header, rows, configHash, file: path };
}

export interface DualityRecord {
  lhs: { mean: number; stderr: number; reps: number };
  rhs: { mean: number; stderr: number; reps: number };
  z: number;
  pass?: boolean;
  configHash: string | null;
  file: string;
}

export function readDualityJson(path: string): DualityRecord | null {
  let payload: any;
  try {
    payload = JSON.parse(readFileSync(path, "utf-8"));
  } catch {
    throw new SchemaError(path, "invalid JSON");
  }
  if (
    typeof payload !== "object" ||
    payload === null ||
    !payload.lhs ||
    !payload.rhs ||
    typeof payload.z !== "number"
  ) {
    return null;
  }
  return {
    lhs: payload.lhs,
    rhs: payload.rhs,
    z: payload.z,
    pass: payload.pass,
    configHash: payload.config_hash ?? null,
    file: path,
  };
}

export function columnsOf(table: CsvTable): Map<string, number[]> {
  const out = new Map<string, number[]>();
  table.header.forEach((h, j) => {
    out.set(
      h,
      table.rows.map((r) => r[j]),
    );
  });
  return out;
}
