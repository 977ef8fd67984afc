/**
 * Model canvas rendered to an SVG string: biotic circles, abiotic
 * squares, typed arrows between them. Interaction (selection, dragging,
 * relation drawing) is handled by the page through data-* attributes.
 */

import { Point, Positions } from "./layout.js";
import { ModelDoc, Relation, RelationKind } from "./types.js";

export const NODE_RADIUS = 34;

export const RELATION_STYLE: Record<RelationKind, { color: string; dash: string }> = {
  consumes: { color: "#dc2626", dash: "" },
  inhibits: { color: "#9333ea", dash: "6 3" },
  enhances: { color: "#16a34a", dash: "" },
  competes_with: { color: "#ea580c", dash: "2 3" },
  consumes_resource: { color: "#0891b2", dash: "8 3" },
};

/** Trim the segment between two node centers by the node radius so the
 * arrowhead touches the rim, not the center. */
export function edgeEndpoints(a: Point, b: Point, radius = NODE_RADIUS): { from: Point; to: Point } {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const length = Math.hypot(dx, dy) || 1;
  const ux = dx / length;
  const uy = dy / length;
  return {
    from: { x: a.x + ux * radius, y: a.y + uy * radius },
    to: { x: b.x - ux * (radius + 6), y: b.y - uy * (radius + 6) },
  };
}

export function relationKey(relation: Relation): string {
  return `${relation.source}|${relation.target}|${relation.kind}`;
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface GraphSelection {
  entityId?: string;
  relation?: Relation;
  /** Source node of a relation being drawn. */
  pendingSource?: string;
}

export function renderGraph(
  doc: ModelDoc,
  positions: Positions,
  selection: GraphSelection,
  width = 800,
  height = 520,
): string {
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="graph" data-canvas="1">`,
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" markerHeight="7" orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z" fill="context-stroke"/></marker></defs>`,
  ];

  for (const relation of doc.relations) {
    const a = positions[relation.source];
    const b = positions[relation.target];
    if (!a || !b) continue;
    const style = RELATION_STYLE[relation.kind];
    const { from, to } = edgeEndpoints(a, b);
    const key = relationKey(relation);
    const selected =
      selection.relation !== undefined && relationKey(selection.relation) === key;
    parts.push(
      `<line x1="${from.x}" y1="${from.y}" x2="${to.x}" y2="${to.y}" stroke="${style.color}" ` +
        `stroke-width="${selected ? 3.5 : 2}" ${style.dash ? `stroke-dasharray="${style.dash}" ` : ""}` +
        `marker-end="url(#arrow)" data-relation="${escapeXml(key)}" class="edge"/>`,
    );
    const midX = (from.x + to.x) / 2;
    const midY = (from.y + to.y) / 2 - 6;
    parts.push(
      `<text x="${midX}" y="${midY}" text-anchor="middle" class="edge-label" fill="${style.color}" data-relation="${escapeXml(key)}">${relation.kind}</text>`,
    );
  }

  for (const entity of doc.entities) {
    const at = positions[entity.id];
    if (!at) continue;
    const selected = selection.entityId === entity.id;
    const pending = selection.pendingSource === entity.id;
    const stroke = pending ? "#f59e0b" : selected ? "#1d4ed8" : "#334155";
    const strokeWidth = selected || pending ? 3 : 1.5;
    const common = `data-entity="${escapeXml(entity.id)}" class="node"`;
    if (entity.kind === "biotic") {
      parts.push(
        `<circle cx="${at.x}" cy="${at.y}" r="${NODE_RADIUS}" fill="#ecfdf5" stroke="${stroke}" stroke-width="${strokeWidth}" ${common}/>`,
      );
    } else {
      const r = NODE_RADIUS;
      parts.push(
        `<rect x="${at.x - r}" y="${at.y - r * 0.75}" width="${2 * r}" height="${1.5 * r}" rx="8" fill="#f1f5f9" stroke="${stroke}" stroke-width="${strokeWidth}" ${common}/>`,
      );
    }
    parts.push(
      `<text x="${at.x}" y="${at.y}" text-anchor="middle" dominant-baseline="middle" class="node-label" data-entity="${escapeXml(entity.id)}">${escapeXml(entity.name)}</text>`,
    );
    if (entity.species_ref) {
      parts.push(
        `<text x="${at.x}" y="${at.y + 14}" text-anchor="middle" class="node-ref" data-entity="${escapeXml(entity.id)}">${escapeXml(entity.species_ref)}</text>`,
      );
    }
  }

  parts.push("</svg>");
  return parts.join("");
}
