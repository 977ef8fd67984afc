/**
 * Wire-contract types for the workbench HTTP API, with zod schemas so
 * every payload is validated at the boundary. Shapes mirror the server's
 * JSON documents exactly; the client never invents fields.
 */

import { z } from "zod";

export const RELATION_KINDS = [
  "consumes",
  "inhibits",
  "enhances",
  "competes_with",
  "consumes_resource",
] as const;
export type RelationKind = (typeof RELATION_KINDS)[number];

export const ENTITY_PARAM_FIELDS = [
  "initial_population",
  "birth_rate",
  "death_rate",
  "carrying_capacity",
] as const;
export type EntityParamField = (typeof ENTITY_PARAM_FIELDS)[number];

export const EntitySchema = z.object({
  id: z.string(),
  name: z.string(),
  kind: z.enum(["biotic", "abiotic"]),
  species_ref: z.string().optional(),
});
export type Entity = z.infer<typeof EntitySchema>;

export const RelationSchema = z.object({
  source: z.string(),
  target: z.string(),
  kind: z.enum(RELATION_KINDS),
});
export type Relation = z.infer<typeof RelationSchema>;

export const EntityParamsSchema = z.object({
  initial_population: z.number().optional(),
  birth_rate: z.number().optional(),
  death_rate: z.number().optional(),
  carrying_capacity: z.number().optional(),
});
export type EntityParams = z.infer<typeof EntityParamsSchema>;

export const InteractionParamsSchema = z.object({
  source: z.string(),
  target: z.string(),
  kind: z.enum(RELATION_KINDS),
  rate: z.number(),
  efficiency: z.number(),
});
export type InteractionParams = z.infer<typeof InteractionParamsSchema>;

export const ModelDocSchema = z.object({
  id: z.string(),
  name: z.string(),
  description: z.string(),
  entities: z.array(EntitySchema),
  relations: z.array(RelationSchema),
  entity_params: z.record(z.string(), EntityParamsSchema),
  interaction_params: z.array(InteractionParamsSchema),
  lineage: z.object({ parent_id: z.string() }).optional(),
});
export type ModelDoc = z.infer<typeof ModelDocSchema>;

export const ViolationSchema = z.object({
  code: z.string(),
  subject: z.string(),
  message: z.string(),
});
export type Violation = z.infer<typeof ViolationSchema>;

export const ApiErrorSchema = z.object({
  code: z.enum(["validation_failed", "not_found", "bad_request", "engine_error"]),
  message: z.string(),
  details: z.unknown().nullish(),
});
export type ApiErrorDoc = z.infer<typeof ApiErrorSchema>;

export const TimeSeriesSchema = z.object({
  times: z.array(z.number()),
  series: z.record(z.string(), z.array(z.number())),
  meta: z.object({
    seed: z.number().nullable(),
    engine: z.string(),
    dt: z.number(),
  }),
});
export type TimeSeriesDoc = z.infer<typeof TimeSeriesSchema>;

export const ObservationsSchema = z.object({
  times: z.array(z.number()),
  series: z.record(z.string(), z.array(z.number())),
  provenance: z.string().optional(),
  warnings: z.array(z.string()).optional(),
});
export type ObservationsDoc = z.infer<typeof ObservationsSchema>;

export const FitResultSchema = z.object({
  best_params: z.record(z.string(), z.number()),
  best_discrepancy: z.number().nullable(),
  initial_discrepancy: z.number().nullable(),
  evaluations: z.number(),
  trace: z.array(
    z.object({
      params: z.record(z.string(), z.number()),
      discrepancy: z.number().nullable(),
    }),
  ),
});
export type FitResultDoc = z.infer<typeof FitResultSchema>;

export const ModelSummarySchema = z.object({
  id: z.string(),
  name: z.string(),
  tags: z.array(z.string()),
  created_at: z.string(),
  revised_at: z.string(),
  lineage: z.string().nullable(),
});
export type ModelSummary = z.infer<typeof ModelSummarySchema>;

export const CompiledSpecSchema = z.object({
  archetype: z.string(),
  populations: z.array(z.object({ entity: z.string(), initial_population: z.number() })),
  reactions: z.array(
    z.object({
      label: z.string(),
      kind: z.string(),
      rate: z.number(),
      entity: z.string(),
      partner: z.string().optional(),
      carrying_capacity: z.number().optional(),
      deltas: z.record(z.string(), z.number()),
    }),
  ),
  warnings: z.array(z.string()),
});
export type CompiledSpec = z.infer<typeof CompiledSpecSchema>;

export const SpeciesRecordSchema = z.object({
  species_id: z.string(),
  common_name: z.string(),
  lifespan_years: z.number(),
  body_mass_g: z.number(),
  offspring_count: z.number(),
  reproductive_maturity_years: z.number(),
});
export type SpeciesRecord = z.infer<typeof SpeciesRecordSchema>;

export interface RunSettings {
  engine: "stochastic" | "ode";
  duration: number;
  dt: number;
  seed: number;
  record_every: number;
  runs: number;
}

/** Node + link count shown on the complexity badge. */
export function complexityOf(doc: ModelDoc): { nodes: number; links: number; total: number } {
  const nodes = doc.entities.length;
  const links = doc.relations.length;
  return { nodes, links, total: nodes + links };
}

/** Path string for an entity parameter, e.g. "birth_rate@kudzu". */
export function entityParamPath(field: EntityParamField, entityId: string): string {
  return `${field}@${entityId}`;
}

/** Path string for an interaction parameter, e.g. "rate@bug->kudzu:consumes". */
export function interactionParamPath(
  field: "rate" | "efficiency",
  relation: Pick<Relation, "source" | "target" | "kind">,
): string {
  return `${field}@${relation.source}->${relation.target}:${relation.kind}`;
}

/** Every tunable path in the model, for the fit panel's checklist. */
export function tunablePaths(doc: ModelDoc): string[] {
  const paths: string[] = [];
  for (const [entityId, params] of Object.entries(doc.entity_params)) {
    for (const field of ENTITY_PARAM_FIELDS) {
      if (params[field] !== undefined) paths.push(entityParamPath(field, entityId));
    }
  }
  for (const ip of doc.interaction_params) {
    paths.push(interactionParamPath("rate", ip));
    paths.push(interactionParamPath("efficiency", ip));
  }
  return paths;
}
