// Drawing-session state: three stroke layers (query sketch, segmentation
// zones, bounding box) plus an undo stack of full snapshots. All geometry is
// kept in server canvas units; no feature math happens here.

export type Mode = "sketch" | "zone" | "bbox";

export type Point = [number, number];
export type Stroke = Point[];

export interface SessionState {
  sketch: Stroke[];
  zones: Stroke[];
  bbox: [number, number, number, number] | null;
}

export function emptyState(): SessionState {
  return { sketch: [], zones: [], bbox: null };
}

function cloneState(s: SessionState): SessionState {
  return {
    sketch: s.sketch.map((st) => st.map((p) => [p[0], p[1]] as Point)),
    zones: s.zones.map((st) => st.map((p) => [p[0], p[1]] as Point)),
    bbox: s.bbox ? [...s.bbox] : null,
  };
}

export class CanvasSession {
  state: SessionState = emptyState();
  mode: Mode = "sketch";
  incomplete = false;
  private undoStack: SessionState[] = [];

  private snapshot(): void {
    this.undoStack.push(cloneState(this.state));
  }

  /** Commit a finished stroke drawn in the current mode. */
  addStroke(points: Stroke): void {
    if (points.length < 2) return;
    this.snapshot();
    if (this.mode === "sketch") {
      this.state.sketch.push(points.map((p) => [p[0], p[1]]));
    } else if (this.mode === "zone") {
      // zones are closed regions: snap the end back to the start
      const closed = points.map((p) => [p[0], p[1]] as Point);
      const [x0, y0] = closed[0];
      closed.push([x0, y0]);
      this.state.zones.push(closed);
    } else {
      // bbox mode keeps at most one rectangle: the stroke's extent
      const xs = points.map((p) => p[0]);
      const ys = points.map((p) => p[1]);
      this.state.bbox = [
        Math.min(...xs),
        Math.min(...ys),
        Math.max(...xs),
        Math.max(...ys),
      ];
    }
  }

  clear(): void {
    this.snapshot();
    this.state = emptyState();
  }

  /** Restore the exact stroke set from before the last change. */
  undo(): boolean {
    const prev = this.undoStack.pop();
    if (!prev) return false;
    this.state = prev;
    return true;
  }

  canSubmit(): boolean {
    return this.state.sketch.length > 0;
  }
}
