import type { CandidateFeature, PolygonGeometry, Verdict } from "./types";

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export interface Projector {
  toCanvas(x: number, y: number): [number, number];
  toMap(px: number, py: number): [number, number];
}

function rings(geometry: PolygonGeometry): number[][][] {
  if (geometry.type === "Polygon") {
    return geometry.coordinates as number[][][];
  }
  const out: number[][][] = [];
  for (const poly of geometry.coordinates as number[][][][]) {
    out.push(...poly);
  }
  return out;
}

export function exteriorRings(feature: CandidateFeature): number[][][] {
  return rings(feature.geometry);
}

export function boundsOfFeatures(features: CandidateFeature[]): Bounds {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const f of features) {
    for (const ring of rings(f.geometry)) {
      for (const [x, y] of ring) {
        if (x < minX) minX = x;
        if (x > maxX) maxX = x;
        if (y < minY) minY = y;
        if (y > maxY) maxY = y;
      }
    }
  }
  if (!Number.isFinite(minX)) {
    return { minX: 0, minY: 0, maxX: 1, maxY: 1 };
  }
  return { minX, minY, maxX, maxY };
}

/**
 * Uniform-scale map→canvas projection with padding; preserves aspect ratio
 * and flips the y axis (map y grows north, canvas y grows down).
 */
export function makeProjector(
  bounds: Bounds,
  canvasWidth: number,
  canvasHeight: number,
  padding = 10,
): Projector {
  const spanX = Math.max(bounds.maxX - bounds.minX, 1e-9);
  const spanY = Math.max(bounds.maxY - bounds.minY, 1e-9);
  const scale = Math.min(
    (canvasWidth - 2 * padding) / spanX,
    (canvasHeight - 2 * padding) / spanY,
  );
  const offsetX = padding + (canvasWidth - 2 * padding - spanX * scale) / 2;
  const offsetY = padding + (canvasHeight - 2 * padding - spanY * scale) / 2;
  return {
    toCanvas(x, y) {
      return [
        offsetX + (x - bounds.minX) * scale,
        offsetY + (bounds.maxY - y) * scale,
      ];
    },
    toMap(px, py) {
      return [
        bounds.minX + (px - offsetX) / scale,
        bounds.maxY - (py - offsetY) / scale,
      ];
    },
  };
}

const CLASS_COLORS: Record<string, string> = {
  field: "#2e9a4b",
  non_cropland: "#8a6d3b",
};

const VERDICT_ALPHA: Record<Verdict, string> = {
  accepted: "cc",
  rejected: "40",
  pending: "80",
};

export function colorFor(cls: string, verdict: Verdict): string {
  const base = CLASS_COLORS[cls] ?? "#4466aa";
  return base + VERDICT_ALPHA[verdict];
}

/** Even-odd point-in-ring test in map coordinates. */
export function pointInRing(x: number, y: number, ring: number[][]): boolean {
  let inside = false;
  for (let i = 0, j = ring.length - 1; i < ring.length; j = i++) {
    const [xi, yi] = ring[i];
    const [xj, yj] = ring[j];
    if (yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
  }
  return inside;
}

export function hitTest(
  x: number,
  y: number,
  features: CandidateFeature[],
): CandidateFeature | null {
  // iterate backwards so the most recently drawn overlay wins
  for (let i = features.length - 1; i >= 0; i--) {
    for (const ring of rings(features[i].geometry)) {
      if (pointInRing(x, y, ring)) return features[i];
    }
  }
  return null;
}

export function drawOverlays(
  ctx: CanvasRenderingContext2D,
  features: CandidateFeature[],
  verdictOf: (instanceId: number) => Verdict,
  projector: Projector,
  focusedId: number | null,
): void {
  for (const f of features) {
    const verdict = verdictOf(f.properties.instance_id);
    ctx.fillStyle = colorFor(f.properties.class, verdict);
    ctx.strokeStyle = f.properties.instance_id === focusedId ? "#ffdd33" : "#222222";
    ctx.lineWidth = f.properties.instance_id === focusedId ? 3 : 1;
    for (const ring of rings(f.geometry)) {
      ctx.beginPath();
      ring.forEach(([x, y], i) => {
        const [px, py] = projector.toCanvas(x, y);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.closePath();
      ctx.fill();
      ctx.stroke();
    }
  }
}
