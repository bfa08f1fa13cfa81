/** Entry point: render <input_dir> <output_dir>. */

import { SchemaError, render } from "./render.js";

function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error("usage: render <input_dir> <output_dir>");
    return 2;
  }
  const [inputDir, outputDir] = argv;
  try {
    const result = render(inputDir, outputDir);
    for (const w of result.warnings) {
      console.warn(w);
    }
    for (const f of result.written) {
      console.log(`wrote ${f}`);
    }
    if (result.written.length === 0 && result.warnings.includes("no inputs")) {
      console.log("no inputs");
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error in ${err.file}: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

process.exitCode = main(process.argv.slice(2));
