// Canvas renderer for server chart specs. The zoom/pan transform is applied
// through the context so per-view transforms work identically for every
// chart kind. Drawing goes through a structural context type, letting tests
// record calls without a DOM canvas.

import type { ChartSpec } from "./types.js";
import type { Transform } from "./viewState.js";

export interface DrawContext {
  canvas?: { width: number; height: number };
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  lineWidth: number;
  setTransform(a: number, b: number, c: number, d: number, e: number, f: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
}

export interface Size {
  width: number;
  height: number;
}

const FONT = "12px sans-serif";
const TITLE_FONT = "14px sans-serif";

export function isEmptySpec(spec: ChartSpec): boolean {
  switch (spec.kind) {
    case "bar":
    case "grouped_bar":
      return spec.series.length === 0;
    case "rules_table":
    case "delta_table":
      return spec.rows.length === 0;
    case "dag":
      return spec.nodes.length === 0;
  }
}

export function renderChart(
  ctx: DrawContext,
  spec: ChartSpec,
  transform: Transform,
  size: Size,
): void {
  ctx.setTransform(1, 0, 0, 1, 0, 0);
  ctx.clearRect(0, 0, size.width, size.height);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, size.width, size.height);

  ctx.setTransform(transform.scale, 0, 0, transform.scale, transform.tx, transform.ty);
  ctx.font = TITLE_FONT;
  ctx.fillStyle = "#1c2a3a";
  ctx.textAlign = "left";
  ctx.textBaseline = "alphabetic";
  ctx.fillText(spec.title, 12, 20);
  ctx.font = FONT;

  if (isEmptySpec(spec)) {
    ctx.fillStyle = "#777777";
    ctx.textAlign = "center";
    ctx.fillText("no data", size.width / 2, size.height / 2);
    return;
  }

  switch (spec.kind) {
    case "bar":
      drawBars(ctx, spec, size);
      break;
    case "rules_table":
    case "delta_table":
      drawTable(ctx, spec);
      break;
    case "dag":
      drawDag(ctx, spec, size);
      break;
    case "grouped_bar":
      drawGroupedBars(ctx, spec, size);
      break;
  }
}

function drawBars(ctx: DrawContext, spec: ChartSpec, size: Size): void {
  const series = spec.series as Array<{ label: string; value: number }>;
  const maxAbs = Math.max(...series.map((s) => Math.abs(s.value)), 1e-12);
  const left = 150;
  const width = Math.max(60, size.width - left - 30);
  const zero = left + width / 2;
  const rowH = 22;
  ctx.strokeStyle = "#444444";
  ctx.beginPath();
  ctx.moveTo(zero, 30);
  ctx.lineTo(zero, 34 + series.length * rowH);
  ctx.stroke();
  series.forEach((s, i) => {
    const y = 40 + i * rowH;
    const len = (s.value / maxAbs) * (width / 2);
    ctx.fillStyle = s.value >= 0 ? "#d9895b" : "#6b9bd1";
    ctx.fillRect(Math.min(zero, zero + len), y, Math.abs(len), rowH - 6);
    ctx.fillStyle = "#1c2a3a";
    ctx.textAlign = "right";
    ctx.fillText(s.label, left - 8, y + rowH - 10);
  });
  ctx.textAlign = "left";
  ctx.fillStyle = "#555555";
  if (spec.x_label) ctx.fillText(spec.x_label, left, 46 + series.length * rowH);
}

function drawTable(ctx: DrawContext, spec: ChartSpec): void {
  const colW = 140;
  ctx.fillStyle = "#1c2a3a";
  ctx.textAlign = "left";
  spec.columns.forEach((c, j) => ctx.fillText(String(c), 12 + j * colW, 44));
  ctx.strokeStyle = "#cccccc";
  ctx.beginPath();
  ctx.moveTo(10, 50);
  ctx.lineTo(10 + spec.columns.length * colW, 50);
  ctx.stroke();
  spec.rows.forEach((row, i) => {
    row.forEach((cell, j) => {
      ctx.fillText(String(cell), 12 + j * colW, 66 + i * 20);
    });
  });
}

function drawDag(ctx: DrawContext, spec: ChartSpec, size: Size): void {
  const cx = size.width / 2;
  const cy = size.height / 2 + 10;
  const radius = Math.min(cx, cy) - 60;
  const pos = new Map<string, [number, number]>();
  spec.nodes.forEach((name, i) => {
    const angle = (2 * Math.PI * i) / spec.nodes.length;
    pos.set(name, [cx + radius * Math.cos(angle), cy + radius * Math.sin(angle)]);
  });
  ctx.strokeStyle = "#555555";
  for (const edge of spec.edges) {
    const a = pos.get(edge.from);
    const b = pos.get(edge.to);
    if (!a || !b) continue;
    ctx.beginPath();
    ctx.moveTo(a[0], a[1]);
    ctx.lineTo(b[0], b[1]);
    ctx.stroke();
    // arrow head near the target
    const dx = b[0] - a[0];
    const dy = b[1] - a[1];
    const len = Math.hypot(dx, dy) || 1;
    const hx = b[0] - (dx / len) * 26;
    const hy = b[1] - (dy / len) * 26;
    ctx.beginPath();
    ctx.arc(hx, hy, 3, 0, 2 * Math.PI);
    ctx.fillStyle = "#555555";
    ctx.fill();
  }
  for (const [name, [x, y]] of pos) {
    ctx.beginPath();
    ctx.arc(x, y, 22, 0, 2 * Math.PI);
    ctx.fillStyle = "#e8eef7";
    ctx.fill();
    ctx.strokeStyle = "#3a5a8c";
    ctx.stroke();
    ctx.fillStyle = "#1c2a3a";
    ctx.textAlign = "center";
    ctx.fillText(name.slice(0, 14), x, y + 4);
  }
}

function drawGroupedBars(ctx: DrawContext, spec: ChartSpec, size: Size): void {
  const series = spec.series as Array<{
    label: string;
    a: number;
    b: number;
    stars?: string;
  }>;
  const maxV = Math.max(...series.map((s) => Math.max(s.a, s.b)), 1);
  const baseY = size.height - 50;
  const plotH = baseY - 60;
  const groupW = Math.max(70, (size.width - 80) / series.length);
  series.forEach((s, i) => {
    const x0 = 50 + i * groupW;
    const ha = (s.a / maxV) * plotH;
    const hb = (s.b / maxV) * plotH;
    ctx.fillStyle = "#f5b78a";
    ctx.fillRect(x0, baseY - ha, groupW * 0.3, ha);
    ctx.fillStyle = "#a8c6e8";
    ctx.fillRect(x0 + groupW * 0.35, baseY - hb, groupW * 0.3, hb);
    ctx.fillStyle = "#1c2a3a";
    ctx.textAlign = "center";
    ctx.fillText(s.label, x0 + groupW * 0.32, baseY + 16);
    if (s.stars) {
      ctx.fillStyle = "#cc2222";
      ctx.fillText(s.stars, x0 + groupW * 0.32, baseY - Math.max(ha, hb) - 8);
    }
  });
}
