/**
 * Pure edit operations on model documents. Each returns a new document;
 * the store decides whether an edit survives by round-tripping it
 * through the server.
 */

import {
  Entity,
  EntityParamField,
  ModelDoc,
  Relation,
  RelationKind,
} from "./types.js";

function clone(doc: ModelDoc): ModelDoc {
  return structuredClone(doc);
}

export function addEntity(doc: ModelDoc, entity: Entity): ModelDoc {
  const next = clone(doc);
  next.entities.push(entity);
  return next;
}

/** Removing an entity cascades: its relations, parameters, and the
 * parameters of those relations all go with it. */
export function removeEntity(doc: ModelDoc, entityId: string): ModelDoc {
  const next = clone(doc);
  next.entities = next.entities.filter((e) => e.id !== entityId);
  next.relations = next.relations.filter(
    (r) => r.source !== entityId && r.target !== entityId,
  );
  delete next.entity_params[entityId];
  next.interaction_params = next.interaction_params.filter(
    (ip) => ip.source !== entityId && ip.target !== entityId,
  );
  return next;
}

export function renameEntity(doc: ModelDoc, entityId: string, name: string): ModelDoc {
  const next = clone(doc);
  const entity = next.entities.find((e) => e.id === entityId);
  if (entity) entity.name = name;
  return next;
}

export function setSpeciesRef(
  doc: ModelDoc,
  entityId: string,
  speciesRef: string | undefined,
): ModelDoc {
  const next = clone(doc);
  const entity = next.entities.find((e) => e.id === entityId);
  if (entity) {
    if (speciesRef === undefined) delete entity.species_ref;
    else entity.species_ref = speciesRef;
  }
  return next;
}

export function drawRelation(doc: ModelDoc, relation: Relation): ModelDoc {
  const next = clone(doc);
  next.relations.push(relation);
  return next;
}

export function removeRelation(doc: ModelDoc, relation: Relation): ModelDoc {
  const match = (r: Relation) =>
    r.source === relation.source && r.target === relation.target && r.kind === relation.kind;
  const next = clone(doc);
  next.relations = next.relations.filter((r) => !match(r));
  next.interaction_params = next.interaction_params.filter(
    (ip) =>
      !(ip.source === relation.source && ip.target === relation.target && ip.kind === relation.kind),
  );
  return next;
}

export function setEntityParam(
  doc: ModelDoc,
  entityId: string,
  field: EntityParamField,
  value: number | undefined,
): ModelDoc {
  const next = clone(doc);
  const params = { ...(next.entity_params[entityId] ?? {}) };
  if (value === undefined) delete params[field];
  else params[field] = value;
  next.entity_params[entityId] = params;
  return next;
}

export function setInteractionParam(
  doc: ModelDoc,
  relation: Relation,
  field: "rate" | "efficiency",
  value: number,
): ModelDoc {
  const next = clone(doc);
  const existing = next.interaction_params.find(
    (ip) =>
      ip.source === relation.source && ip.target === relation.target && ip.kind === relation.kind,
  );
  if (existing) {
    existing[field] = value;
  } else {
    next.interaction_params.push({
      source: relation.source,
      target: relation.target,
      kind: relation.kind,
      rate: field === "rate" ? value : 0,
      efficiency: field === "efficiency" ? value : 0,
    });
  }
  return next;
}

/** Parse a recommendation path back onto the document.
 * Mirrors the server grammar: "field@entity" or "field@src->dst:kind". */
export function applyParameterPath(doc: ModelDoc, path: string, value: number): ModelDoc {
  const at = path.indexOf("@");
  if (at < 0) throw new Error(`bad parameter path: ${path}`);
  const field = path.slice(0, at);
  const rest = path.slice(at + 1);
  const arrow = rest.indexOf("->");
  if (arrow < 0) {
    return setEntityParam(doc, rest, field as EntityParamField, value);
  }
  const source = rest.slice(0, arrow);
  const colon = rest.lastIndexOf(":");
  const target = rest.slice(arrow + 2, colon);
  const kind = rest.slice(colon + 1) as RelationKind;
  return setInteractionParam(doc, { source, target, kind }, field as "rate" | "efficiency", value);
}

/** Write a whole recommendation (path -> value map) onto the document. */
export function applyRecommendation(doc: ModelDoc, bestParams: Record<string, number>): ModelDoc {
  let next = doc;
  for (const [path, value] of Object.entries(bestParams)) {
    next = applyParameterPath(next, path, value);
  }
  return next;
}
