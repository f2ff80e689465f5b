export { MissingColumnError, isEmpty, numbers, readTable, requireColumns } from "./csv.js";
export { REQUIRED_COLUMNS, RENDERERS, type Figure, type Overlays } from "./figures.js";
export { SpecError, loadSpec, render, type PlotSpec, type RenderResult } from "./spec.js";
export { defaultSpecs, discoverRuns, type RunDir } from "./discover.js";
