import { ApiError, QueryClient, buildQueryPayload } from "./api.js";
import type { EchoedPart, QueryResponse, RankedModel } from "./api.js";
import { renderSession, renderThumbnail } from "./draw.js";
import { CanvasSession } from "./session.js";
import type { Mode, Point, Stroke } from "./session.js";

const CANVAS_UNITS = 320;
const API_BASE = (window as any).PARTPYR_API ?? "";

const session = new CanvasSession();
const client = new QueryClient(API_BASE);
let echoedParts: EchoedPart[] | null = null;

const app = document.getElementById("app")!;
app.innerHTML = `
  <h1>partpyr sketch search</h1>
  <div class="toolbar">
    <span class="group" id="mode-group">
      <button data-mode="sketch" class="active">sketch</button>
      <button data-mode="zone">zone</button>
      <button data-mode="bbox">bbox</button>
    </span>
    <button id="undo">undo</button>
    <button id="clear">clear</button>
    <label><input type="checkbox" id="incomplete" /> incomplete (partial sketch)</label>
    <button id="submit" disabled>search</button>
    <span id="status"></span>
  </div>
  <div class="workspace">
    <canvas id="board" width="480" height="480"></canvas>
    <div id="results"></div>
  </div>
  <div id="detail"></div>
`;

const board = document.getElementById("board") as HTMLCanvasElement;
const submitBtn = document.getElementById("submit") as HTMLButtonElement;
const incompleteBox = document.getElementById("incomplete") as HTMLInputElement;
const statusEl = document.getElementById("status")!;
const resultsEl = document.getElementById("results")!;
const detailEl = document.getElementById("detail")!;

function redraw(): void {
  renderSession(board, session.state, CANVAS_UNITS, echoedParts);
  submitBtn.disabled = !session.canSubmit();
}

function setStatus(text: string, isError = false): void {
  statusEl.textContent = text;
  statusEl.className = isError ? "error" : "";
}

// --- pointer handling: strokes are captured in canvas units -------------

let active: Stroke | null = null;

function toUnits(ev: PointerEvent): Point {
  const rect = board.getBoundingClientRect();
  return [
    ((ev.clientX - rect.left) / rect.width) * CANVAS_UNITS,
    ((ev.clientY - rect.top) / rect.height) * CANVAS_UNITS,
  ];
}

board.addEventListener("pointerdown", (ev) => {
  board.setPointerCapture(ev.pointerId);
  active = [toUnits(ev)];
});

board.addEventListener("pointermove", (ev) => {
  if (!active) return;
  active.push(toUnits(ev));
  redraw();
  // live preview of the stroke in progress
  const ctx = board.getContext("2d")!;
  const scale = board.width / CANVAS_UNITS;
  ctx.strokeStyle = session.mode === "sketch" ? "#222" : "#4682b4";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(active[0][0] * scale, active[0][1] * scale);
  for (const [x, y] of active) ctx.lineTo(x * scale, y * scale);
  ctx.stroke();
});

board.addEventListener("pointerup", () => {
  if (active) {
    session.addStroke(active);
    active = null;
    echoedParts = null; // grouping is stale once the sketch changes
    redraw();
  }
});

// --- toolbar -------------------------------------------------------------

document.querySelectorAll<HTMLButtonElement>("#mode-group button").forEach((btn) => {
  btn.addEventListener("click", () => {
    session.mode = btn.dataset.mode as Mode;
    document
      .querySelectorAll("#mode-group button")
      .forEach((b) => b.classList.toggle("active", b === btn));
  });
});

document.getElementById("undo")!.addEventListener("click", () => {
  if (session.undo()) {
    echoedParts = null;
    redraw();
  }
});

document.getElementById("clear")!.addEventListener("click", () => {
  session.clear();
  echoedParts = null;
  resultsEl.innerHTML = "";
  detailEl.innerHTML = "";
  setStatus("");
  redraw();
});

incompleteBox.addEventListener("change", () => {
  session.incomplete = incompleteBox.checked;
});

submitBtn.addEventListener("click", () => void runQuery());

// --- query / results -----------------------------------------------------

async function runQuery(): Promise<void> {
  if (!session.canSubmit()) return;
  setStatus("searching…");
  const payload = buildQueryPayload(session.state, session.incomplete);
  let response: QueryResponse | null;
  try {
    response = await client.submit(payload);
  } catch (err) {
    if (err instanceof ApiError) setStatus(`${err.status}: ${err.message}`, true);
    else setStatus(String(err), true);
    return;
  }
  if (response === null) return; // superseded by a newer submission
  echoedParts = response.parts;
  redraw();
  setStatus(`${response.results.length} models (${response.mode} mode)`);
  await showResults(response.results);
}

async function showResults(results: RankedModel[]): Promise<void> {
  resultsEl.innerHTML = "";
  detailEl.innerHTML = "";
  for (const r of results) {
    const card = document.createElement("div");
    card.className = "card";
    const thumb = document.createElement("canvas");
    thumb.width = 120;
    thumb.height = 120;
    const caption = document.createElement("div");
    caption.textContent = `${r.model_id} · ${r.distance.toFixed(4)}`;
    card.append(thumb, caption);
    card.addEventListener("click", () => void showDetail(r.model_id));
    resultsEl.appendChild(card);
    try {
      const doc = await client.modelView(r.model_id, r.best_view_id);
      renderThumbnail(thumb, doc.parts, doc.canvas);
    } catch {
      caption.textContent = `${r.model_id} (view unavailable)`;
    }
  }
}

async function showDetail(modelId: string): Promise<void> {
  detailEl.innerHTML = `<h2>${modelId}</h2>`;
  const strip = document.createElement("div");
  strip.className = "strip";
  detailEl.appendChild(strip);
  const first = await client.modelView(modelId, 0).catch(() => null);
  if (!first) return;
  for (const vid of first.all_view_ids) {
    const c = document.createElement("canvas");
    c.width = 96;
    c.height = 96;
    strip.appendChild(c);
    try {
      const doc = await client.modelView(modelId, vid);
      renderThumbnail(c, doc.parts, doc.canvas);
    } catch {
      /* skip missing views */
    }
  }
}

client
  .health()
  .then((h) => setStatus(`index: ${h.records} views, scheme ${h.scheme}`))
  .catch(() => setStatus("service unreachable", true));

redraw();
