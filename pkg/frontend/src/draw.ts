// Vector rendering helpers: everything is redrawn from stroke lists, so the
// display scales with the canvas element, not with any fixed raster.

import type { SessionState, Stroke } from "./session.js";
import type { EchoedPart } from "./api.js";

export const PART_COLORS = [
  "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
  "#46f0f0", "#f032e6", "#9a6324", "#008080", "#808000",
];

export function partColor(index: number): string {
  return PART_COLORS[index % PART_COLORS.length];
}

function drawPolyline(
  ctx: CanvasRenderingContext2D,
  points: Stroke,
  scale: number,
): void {
  ctx.beginPath();
  ctx.moveTo(points[0][0] * scale, points[0][1] * scale);
  for (let i = 1; i < points.length; i++) {
    ctx.lineTo(points[i][0] * scale, points[i][1] * scale);
  }
  ctx.stroke();
}

/** Redraw the whole session; parts (when echoed by the server) recolor the
 *  sketch strokes so the UI shows the engine's grouping, not its own. */
export function renderSession(
  canvas: HTMLCanvasElement,
  state: SessionState,
  canvasUnits: number,
  parts: EchoedPart[] | null,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const scale = canvas.width / canvasUnits;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.lineCap = "round";
  ctx.lineJoin = "round";

  for (const zone of state.zones) {
    ctx.fillStyle = "rgba(70, 130, 180, 0.15)";
    ctx.strokeStyle = "rgba(70, 130, 180, 0.6)";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(zone[0][0] * scale, zone[0][1] * scale);
    for (let i = 1; i < zone.length; i++) {
      ctx.lineTo(zone[i][0] * scale, zone[i][1] * scale);
    }
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  }

  if (state.bbox) {
    const [x0, y0, x1, y1] = state.bbox;
    ctx.strokeStyle = "#d4a017";
    ctx.lineWidth = 1.5;
    ctx.setLineDash([6, 4]);
    ctx.strokeRect(x0 * scale, y0 * scale, (x1 - x0) * scale, (y1 - y0) * scale);
    ctx.setLineDash([]);
  }

  ctx.lineWidth = 2;
  if (parts && parts.length > 0) {
    parts.forEach((part, i) => {
      ctx.strokeStyle = partColor(i);
      for (const stroke of part.strokes) drawPolyline(ctx, stroke, scale);
    });
  } else {
    ctx.strokeStyle = "#222";
    for (const stroke of state.sketch) drawPolyline(ctx, stroke, scale);
  }
}

/** Draw a returned model view into a thumbnail canvas. */
export function renderThumbnail(
  canvas: HTMLCanvasElement,
  parts: EchoedPart[],
  canvasUnits: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const scale = canvas.width / canvasUnits;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.lineCap = "round";
  ctx.lineWidth = 1.5;
  parts.forEach((part, i) => {
    ctx.strokeStyle = partColor(i);
    for (const stroke of part.strokes) {
      if (stroke.length >= 2) drawPolyline(ctx, stroke, scale);
    }
  });
}
