/**
 * Canvas layout persistence. Positions live client-side (localStorage),
 * keyed by model id, and never enter the model document: the server's
 * schema stays UI-agnostic.
 */

export interface Point {
  x: number;
  y: number;
}

export type Positions = Record<string, Point>;

/** The subset of the Storage API the layout needs; tests inject a Map. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = "vera-layout:";

export class LayoutStore {
  constructor(private readonly storage: KeyValueStore) {}

  /** Positions for a model, restricted to entities that still exist. */
  load(modelId: string, entityIds: string[]): Positions {
    const raw = this.storage.getItem(PREFIX + modelId);
    if (!raw) return {};
    let parsed: unknown;
    try {
      parsed = JSON.parse(raw);
    } catch {
      return {};
    }
    const positions: Positions = {};
    const allowed = new Set(entityIds);
    if (parsed && typeof parsed === "object") {
      for (const [key, value] of Object.entries(parsed as Record<string, unknown>)) {
        const point = value as Point;
        if (allowed.has(key) && typeof point?.x === "number" && typeof point?.y === "number") {
          positions[key] = { x: point.x, y: point.y };
        }
      }
    }
    return positions;
  }

  save(modelId: string, positions: Positions, entityIds: string[]): void {
    const allowed = new Set(entityIds);
    const pruned: Positions = {};
    for (const [key, point] of Object.entries(positions)) {
      if (allowed.has(key)) pruned[key] = point;
    }
    this.storage.setItem(PREFIX + modelId, JSON.stringify(pruned));
  }

  forget(modelId: string): void {
    this.storage.removeItem(PREFIX + modelId);
  }
}

/** Deterministic default placement for nodes that have no stored
 * position yet: a loose ring around the canvas center, clamped so new
 * nodes always land visibly inside the canvas. */
export function defaultPosition(index: number, width: number, height: number): Point {
  const margin = 48;
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 3;
  const angle = (index * 2 * Math.PI) / 6 - Math.PI / 2;
  const ring = 1 + Math.floor(index / 6) * 0.45;
  const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));
  return {
    x: Math.round(clamp(cx + radius * ring * Math.cos(angle), margin, width - margin)),
    y: Math.round(clamp(cy + radius * ring * Math.sin(angle), margin, height - margin)),
  };
}
