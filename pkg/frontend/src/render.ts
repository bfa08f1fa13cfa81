/**
 * Turns a directory of lab outputs into figures:
 *
 *   field_heatmap.png  from a t,x,u snapshot CSV
 *   population.png     from t,|I|,... trajectory CSVs (one series per file)
 *                      or an l,t,mean coming-down table (one series per l)
 *   duality.png        from a JSON record with lhs/rhs/z
 *   moments_grid.png   from an l,m,mean,stderr,reps grid CSV
 *
 * Rendering is a pure function of the input files.
 */

import { readdirSync, writeFileSync, mkdirSync } from "node:fs";
import { basename, join } from "node:path";

import { Series, barsWithErrors, drawSeries, heatColor, makeFrame } from "./chart.js";
import { CsvTable, DualityRecord, SchemaError, columnsOf, readCsv, readDualityJson } from "./parse.js";
import { Canvas } from "./raster.js";

export interface RenderResult {
  written: string[];
  warnings: string[];
}

export function formatZ(z: number): string {
  return `Z = ${z.toFixed(2)}`;
}

function caption(hash: string | null): string {
  return hash ? `config ${hash}` : "config unknown";
}

function headerIs(t: CsvTable, ...names: string[]): boolean {
  return names.length === t.header.length && names.every((n, i) => t.header[i] === n);
}

export function renderFieldHeatmap(table: CsvTable): Canvas {
  const cols = columnsOf(table);
  const ts = [...new Set(cols.get("t")!)].sort((a, b) => a - b);
  const xs = [...new Set(cols.get("x")!)].sort((a, b) => a - b);
  const frame = makeFrame("field heatmap u(t,x)", "x", "t (rows, top = 0)", [xs[0], xs[xs.length - 1]], [0, 1], {
    caption: caption(table.configHash),
  });
  const tIndex = new Map(ts.map((t, i) => [t, i]));
  const xIndex = new Map(xs.map((x, i) => [x, i]));
  const cellW = Math.max(1, (frame.x1 - frame.x0) / xs.length);
  const cellH = Math.max(1, (frame.y1 - frame.y0) / ts.length);
  for (const row of table.rows) {
    const [t, x, u] = row;
    const iy = tIndex.get(t)!;
    const ix = xIndex.get(x)!;
    frame.canvas.fillRect(
      frame.x0 + ix * cellW,
      frame.y0 + iy * cellH,
      Math.ceil(cellW),
      Math.ceil(cellH),
      heatColor(u),
    );
  }
  return frame.canvas;
}

export function populationSeriesFromTrajectories(tables: CsvTable[]): Series[] {
  return tables.map((t) => {
    const cols = columnsOf(t);
    const m = basename(t.file).match(/_m(\d+)/);
    return {
      name: m ? `m=${m[1]}` : basename(t.file).replace(/\.csv$/, ""),
      x: cols.get("t")!,
      y: cols.get("|I|")!,
    };
  });
}

export function populationSeriesFromComingDown(table: CsvTable): Series[] {
  const cols = columnsOf(table);
  const ls = [...new Set(cols.get("l")!)].sort((a, b) => a - b);
  return ls.map((l) => {
    const x: number[] = [];
    const y: number[] = [];
    table.rows.forEach((row) => {
      if (row[0] === l) {
        x.push(row[1]);
        y.push(row[2]);
      }
    });
    return { name: `l=${l}`, x, y };
  });
}

export function renderPopulation(series: Series[], hash: string | null): Canvas {
  const allX = series.flatMap((s) => s.x);
  const allY = series.flatMap((s) => s.y).filter((v) => v > 0);
  const frame = makeFrame(
    "population |I_t| by truncation",
    "t",
    "|I| (log scale)",
    [Math.min(...allX), Math.max(...allX)],
    [Math.min(...allY, 1), Math.max(...allY, 1)],
    { logY: true, caption: caption(hash) },
  );
  drawSeries(frame, series);
  return frame.canvas;
}

export function renderDuality(rec: DualityRecord): Canvas {
  return barsWithErrors(
    "duality: field moment vs dual estimate",
    ["field side", "dual side"],
    [rec.lhs.mean, rec.rhs.mean],
    [3 * rec.lhs.stderr, 3 * rec.rhs.stderr],
    formatZ(rec.z),
    caption(rec.configHash),
  );
}

export function renderMomentsGrid(table: CsvTable): Canvas {
  const cols = columnsOf(table);
  const ms = [...new Set(cols.get("m")!)].sort((a, b) => a - b);
  const series: Series[] = ms.map((m) => {
    const x: number[] = [];
    const y: number[] = [];
    const err: number[] = [];
    table.rows.forEach((row) => {
      if (row[1] === m) {
        x.push(row[0]);
        y.push(row[2]);
        err.push(3 * row[3]);
      }
    });
    return { name: `m=${m}`, x, y, err };
  });
  const allY = series.flatMap((s) => s.y.map((v, i) => v + (s.err![i] ?? 0)));
  const frame = makeFrame(
    "moment estimates vs l",
    "l (initial particles)",
    "estimate with 3 sigma bars",
    [0, Math.max(...series.flatMap((s) => s.x)) * 1.05],
    [0, Math.max(...allY, 1e-6) * 1.1],
    { caption: caption(table.configHash) },
  );
  drawSeries(frame, series);
  return frame.canvas;
}

export function render(inputDir: string, outputDir: string): RenderResult {
  const written: string[] = [];
  const warnings: string[] = [];
  let entries: string[];
  entries = readdirSync(inputDir).sort();
  if (entries.length === 0) {
    return { written, warnings: ["no inputs"] };
  }
  mkdirSync(outputDir, { recursive: true });

  const trajectories: CsvTable[] = [];
  let comingDown: CsvTable | null = null;
  let field: CsvTable | null = null;
  let moments: CsvTable | null = null;
  let duality: DualityRecord | null = null;

  for (const entry of entries) {
    const path = join(inputDir, entry);
    if (entry.endsWith(".json")) {
      const rec = readDualityJson(path);
      if (rec) {
        if (duality) warnings.push(`skipping extra duality record ${entry}`);
        else duality = rec;
      } else {
        warnings.push(`skipping unrecognized json ${entry}`);
      }
    } else if (entry.endsWith(".csv")) {
      const table = readCsv(path);
      if (headerIs(table, "t", "x", "u")) {
        if (field) warnings.push(`skipping extra field csv ${entry}`);
        else field = table;
      } else if (table.header[0] === "t" && table.header[1] === "|I|") {
        trajectories.push(table);
      } else if (headerIs(table, "l", "t", "mean", "stderr", "reps")) {
        if (comingDown) warnings.push(`skipping extra coming-down csv ${entry}`);
        else comingDown = table;
      } else if (headerIs(table, "l", "m", "mean", "stderr", "reps")) {
        if (moments) warnings.push(`skipping extra moments csv ${entry}`);
        else moments = table;
      } else {
        warnings.push(`skipping unrecognized csv ${entry}`);
      }
    } else {
      warnings.push(`skipping ${entry}`);
    }
  }

  const emit = (name: string, canvas: Canvas) => {
    const path = join(outputDir, name);
    writeFileSync(path, canvas.png());
    written.push(path);
  };

  if (field) emit("field_heatmap.png", renderFieldHeatmap(field));
  if (trajectories.length > 0) {
    emit("population.png", renderPopulation(populationSeriesFromTrajectories(trajectories), trajectories[0].configHash));
    if (comingDown) warnings.push("population.png uses trajectories; coming-down table ignored");
  } else if (comingDown) {
    emit("population.png", renderPopulation(populationSeriesFromComingDown(comingDown), comingDown.configHash));
  }
  if (duality) emit("duality.png", renderDuality(duality));
  if (moments) emit("moments_grid.png", renderMomentsGrid(moments));
  return { written, warnings };
}

export { SchemaError };
