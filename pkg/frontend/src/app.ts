/**
 * Page wiring: binds the store, canvas, and panels to the DOM. All state
 * that matters lives on the server (or, for layout only, in
 * localStorage); this file is presentation and event plumbing.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderChart } from "./chart.js";
import {
  addEntity,
  drawRelation,
  removeEntity,
  removeRelation,
  renameEntity,
  setEntityParam,
  setInteractionParam,
  setSpeciesRef,
} from "./edits.js";
import { GraphSelection, relationKey, renderGraph } from "./graph.js";
import { defaultPosition, LayoutStore, Positions } from "./layout.js";
import { WorkbenchStore } from "./store.js";
import {
  complexityOf,
  Entity,
  ENTITY_PARAM_FIELDS,
  EntityParamField,
  ModelDoc,
  Relation,
  RELATION_KINDS,
  RelationKind,
  RunSettings,
  tunablePaths,
} from "./types.js";

const API_BASE = (window as unknown as { VERA_API?: string }).VERA_API ?? "";
const api = new ApiClient(API_BASE || `${location.protocol}//${location.host}`);
const store = new WorkbenchStore(api);
const layouts = new LayoutStore(window.localStorage);

const CANVAS_W = 800;
const CANVAS_H = 520;

let positions: Positions = {};
let selection: GraphSelection = {};
let relationMode: RelationKind | null = null;
let dragging: { entityId: string; offsetX: number; offsetY: number } | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function currentModel(): ModelDoc | null {
  return store.view().model;
}

// ---------------------------------------------------------------------------
// layout helpers

function syncLayout(doc: ModelDoc): void {
  const ids = doc.entities.map((e) => e.id);
  const stored = layouts.load(doc.id, ids);
  positions = { ...stored };
  doc.entities.forEach((entity, index) => {
    if (!positions[entity.id]) {
      positions[entity.id] = defaultPosition(index, CANVAS_W, CANVAS_H);
    }
  });
  layouts.save(doc.id, positions, ids);
}

function persistLayout(): void {
  const doc = currentModel();
  if (doc) layouts.save(doc.id, positions, doc.entities.map((e) => e.id));
}

// ---------------------------------------------------------------------------
// rendering

function render(): void {
  const view = store.view();
  const doc = view.model;

  el("toast").textContent = view.toast ?? "";
  el("toast").classList.toggle("visible", view.toast !== null);

  const banner = el("validation-banner");
  if (view.violations.length) {
    banner.classList.add("visible");
    banner.innerHTML = view.violations
      .map((v) => `<div>[${v.code}] ${v.subject}: ${v.message}</div>`)
      .join("");
  } else {
    banner.classList.remove("visible");
    banner.innerHTML = "";
  }

  if (!doc) {
    el("canvas-host").innerHTML = "<p class='hint'>open or create a model to begin</p>";
    el("complexity").textContent = "";
    el("inspector").innerHTML = "";
    return;
  }

  const c = complexityOf(doc);
  el("complexity").textContent = `${c.nodes} nodes + ${c.links} links = ${c.total}`;
  el("model-title").textContent = doc.name;
  el("canvas-host").innerHTML = renderGraph(doc, positions, selection, CANVAS_W, CANVAS_H);
  renderInspector(doc);
  renderRunPanel();
  renderFitPanel(doc);

  (el("run-btn") as HTMLButtonElement).disabled = view.busy;
  (el("fit-btn") as HTMLButtonElement).disabled = view.busy;
}

function renderInspector(doc: ModelDoc): void {
  const host = el("inspector");
  if (selection.entityId) {
    const entity = doc.entities.find((e) => e.id === selection.entityId);
    if (!entity) {
      selection = {};
      host.innerHTML = "";
      return;
    }
    const params = doc.entity_params[entity.id] ?? {};
    host.innerHTML = `
      <h3>${entity.kind === "biotic" ? "population" : "resource"}: ${entity.id}</h3>
      <label>name <input id="ins-name" value="${entity.name}"/></label>
      <label>species ref <input id="ins-ref" value="${entity.species_ref ?? ""}" placeholder="trait store id"/></label>
      ${ENTITY_PARAM_FIELDS.map(
        (field) => `
        <label>${field.replace(/_/g, " ")}
          <input id="ins-${field}" type="number" step="any" value="${params[field] ?? ""}"/>
        </label>`,
      ).join("")}
      <button id="ins-delete" class="danger">delete entity</button>
    `;
    el("ins-name").addEventListener("change", (ev) => {
      void commit(renameEntity(doc, entity.id, (ev.target as HTMLInputElement).value));
    });
    el("ins-ref").addEventListener("change", (ev) => {
      const value = (ev.target as HTMLInputElement).value.trim();
      void commit(setSpeciesRef(doc, entity.id, value || undefined));
    });
    for (const field of ENTITY_PARAM_FIELDS) {
      el(`ins-${field}`).addEventListener("change", (ev) => {
        const raw = (ev.target as HTMLInputElement).value.trim();
        const value = raw === "" ? undefined : Number(raw);
        void commit(setEntityParam(doc, entity.id, field as EntityParamField, value));
      });
    }
    el("ins-delete").addEventListener("click", () => {
      selection = {};
      void commit(removeEntity(doc, entity.id));
    });
    return;
  }
  if (selection.relation) {
    const relation = selection.relation;
    const ip = doc.interaction_params.find(
      (p) => p.source === relation.source && p.target === relation.target && p.kind === relation.kind,
    );
    host.innerHTML = `
      <h3>${relation.kind}: ${relation.source} &rarr; ${relation.target}</h3>
      <label>rate <input id="ins-rate" type="number" step="any" value="${ip?.rate ?? ""}"/></label>
      <label>efficiency <input id="ins-eff" type="number" step="any" min="0" max="1" value="${ip?.efficiency ?? ""}"/></label>
      <button id="ins-delete" class="danger">delete relation</button>
    `;
    el("ins-rate").addEventListener("change", (ev) => {
      void commit(setInteractionParam(doc, relation, "rate", Number((ev.target as HTMLInputElement).value)));
    });
    el("ins-eff").addEventListener("change", (ev) => {
      void commit(
        setInteractionParam(doc, relation, "efficiency", Number((ev.target as HTMLInputElement).value)),
      );
    });
    el("ins-delete").addEventListener("click", () => {
      selection = {};
      void commit(removeRelation(doc, relation));
    });
    return;
  }
  host.innerHTML = "<p class='hint'>select a node or edge to edit it</p>";
}

function renderRunPanel(): void {
  const view = store.view();
  el("chart-host").innerHTML = renderChart({
    current: view.lastRun,
    ghost: view.ghostRun,
    observations: view.observations,
  });
  const meta = view.lastRun?.meta;
  el("run-meta").textContent = meta
    ? `engine=${meta.engine} dt=${meta.dt}${meta.seed !== null ? ` seed=${meta.seed}` : ""}`
    : "";
}

function renderFitPanel(doc: ModelDoc): void {
  const view = store.view();
  const paths = tunablePaths(doc);
  const host = el("fit-free");
  host.innerHTML = paths
    .map(
      (p) =>
        `<label class="check"><input type="checkbox" class="fit-path" value="${p}"/> ${p}</label>`,
    )
    .join("");

  const result = view.fitResult;
  const out = el("fit-result");
  if (!result) {
    out.innerHTML = view.observations
      ? "<p class='hint'>choose free parameters and run the fit</p>"
      : "<p class='hint'>import observations first</p>";
    return;
  }
  const improved =
    result.best_discrepancy !== null &&
    result.initial_discrepancy !== null &&
    result.best_discrepancy < result.initial_discrepancy;
  const rows = Object.entries(result.best_params)
    .map(([path, value]) => {
      return `<tr><td>${path}</td><td>${value}</td></tr>`;
    })
    .join("");
  out.innerHTML = `
    <p>${improved ? "recommendation" : "no improvement found"} —
      discrepancy ${result.initial_discrepancy} &rarr; ${result.best_discrepancy}
      (${result.evaluations} evaluations)</p>
    <table><thead><tr><th>parameter</th><th>recommended</th></tr></thead><tbody>${rows}</tbody></table>
    <button id="fit-apply">apply</button>
    <button id="fit-discard" class="danger">discard</button>
  `;
  el("fit-apply").addEventListener("click", () => void store.applyFit());
  el("fit-discard").addEventListener("click", () => store.discardFit());
}

async function commit(edited: ModelDoc): Promise<void> {
  await store.commitEdit(edited);
}

// ---------------------------------------------------------------------------
// canvas interaction

function canvasPoint(event: MouseEvent): { x: number; y: number } {
  const svg = el("canvas-host").querySelector("svg");
  if (!svg) return { x: 0, y: 0 };
  const rect = svg.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * CANVAS_W,
    y: ((event.clientY - rect.top) / rect.height) * CANVAS_H,
  };
}

function entityAt(event: MouseEvent): string | null {
  const target = event.target as Element;
  return target.getAttribute("data-entity");
}

function relationAt(event: MouseEvent): Relation | null {
  const target = event.target as Element;
  const key = target.getAttribute("data-relation");
  if (!key) return null;
  const [source, rtarget, kind] = key.split("|");
  return { source: source!, target: rtarget!, kind: kind as RelationKind };
}

function bindCanvas(): void {
  const host = el("canvas-host");
  host.addEventListener("mousedown", (event) => {
    const doc = currentModel();
    if (!doc) return;
    const entityId = entityAt(event);
    if (entityId && !relationMode) {
      const at = positions[entityId];
      const p = canvasPoint(event);
      if (at) dragging = { entityId, offsetX: p.x - at.x, offsetY: p.y - at.y };
    }
  });
  host.addEventListener("mousemove", (event) => {
    if (!dragging) return;
    const p = canvasPoint(event);
    positions[dragging.entityId] = {
      x: Math.round(p.x - dragging.offsetX),
      y: Math.round(p.y - dragging.offsetY),
    };
    const doc = currentModel();
    if (doc) el("canvas-host").innerHTML = renderGraph(doc, positions, selection, CANVAS_W, CANVAS_H);
  });
  host.addEventListener("mouseup", () => {
    if (dragging) {
      dragging = null;
      persistLayout();
      render();
    }
  });
  host.addEventListener("click", (event) => {
    const doc = currentModel();
    if (!doc) return;
    const entityId = entityAt(event);
    const relation = relationAt(event);
    if (relationMode && entityId) {
      if (!selection.pendingSource) {
        selection = { pendingSource: entityId };
      } else if (selection.pendingSource !== entityId) {
        const pending: Relation = {
          source: selection.pendingSource,
          target: entityId,
          kind: relationMode,
        };
        selection = {};
        relationMode = null;
        (el("relation-mode") as HTMLSelectElement).value = "";
        void commit(drawRelation(doc, pending));
        return;
      }
    } else if (entityId) {
      selection = { entityId };
    } else if (relation) {
      selection = { relation };
    } else {
      selection = {};
    }
    render();
  });
}

// ---------------------------------------------------------------------------
// header / toolbar

async function refreshModelList(): Promise<void> {
  const models = await api.listModels();
  const picker = el<HTMLSelectElement>("model-picker");
  const current = currentModel()?.id;
  picker.innerHTML =
    `<option value="">— open model —</option>` +
    models
      .map((m) => `<option value="${m.id}" ${m.id === current ? "selected" : ""}>${m.name}</option>`)
      .join("");
}

function slugify(name: string): string {
  return (
    name
      .toLowerCase()
      .replace(/[^a-z0-9]+/g, "-")
      .replace(/^-+|-+$/g, "") || "model"
  );
}

function bindToolbar(): void {
  el("model-picker").addEventListener("change", (event) => {
    const id = (event.target as HTMLSelectElement).value;
    if (id) void openModel(id);
  });

  el("new-model").addEventListener("click", () => {
    void (async () => {
      const name = prompt("model name?", "untitled model");
      if (!name) return;
      const doc: ModelDoc = {
        id: `${slugify(name)}-${Date.now().toString(36)}`,
        name,
        description: "",
        entities: [],
        relations: [],
        entity_params: {},
        interaction_params: [],
      };
      await api.createModel(doc);
      await refreshModelList();
      await openModel(doc.id);
    })();
  });

  el("copy-model").addEventListener("click", () => {
    void (async () => {
      const doc = currentModel();
      if (!doc) return;
      const name = prompt("name for the copy?", `${doc.name} (copy)`);
      if (!name) return;
      const newId = await api.copyModel(doc.id, name);
      await refreshModelList();
      await openModel(newId);
    })();
  });

  el("add-biotic").addEventListener("click", () => void addNode("biotic"));
  el("add-abiotic").addEventListener("click", () => void addNode("abiotic"));

  el("relation-mode").addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value;
    relationMode = value ? (value as RelationKind) : null;
    selection = {};
    render();
  });

  el("run-btn").addEventListener("click", () => {
    void store.run(readRunSettings());
  });

  el("obs-file").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    void (async () => {
      const text = await file.text();
      try {
        store.setObservations(await api.parseObservations(text));
      } catch (error) {
        if (error instanceof ApiError) {
          store.setObservations(null);
          alert(error.payload.message);
        } else {
          throw error;
        }
      }
      render();
    })();
  });

  el("fit-btn").addEventListener("click", () => {
    const free = Array.from(document.querySelectorAll<HTMLInputElement>(".fit-path:checked")).map(
      (input) => input.value,
    );
    const budget = Number(el<HTMLInputElement>("fit-budget").value) || 100;
    if (free.length === 0) {
      alert("pick at least one free parameter");
      return;
    }
    void store.runFit(free, budget);
  });
}

async function addNode(kind: "biotic" | "abiotic"): Promise<void> {
  const doc = currentModel();
  if (!doc) return;
  const name = prompt(`${kind} entity name?`);
  if (!name) return;
  let id = slugify(name);
  while (doc.entities.some((e) => e.id === id)) id = `${id}-2`;
  const entity: Entity = { id, name, kind };
  positions[id] = defaultPosition(doc.entities.length, CANVAS_W, CANVAS_H);
  const accepted = await store.commitEdit(addEntity(doc, entity));
  if (accepted) persistLayout();
}

function readRunSettings(): RunSettings {
  return {
    engine: el<HTMLSelectElement>("run-engine").value as "stochastic" | "ode",
    duration: Number(el<HTMLInputElement>("run-duration").value) || 10,
    dt: Number(el<HTMLInputElement>("run-dt").value) || 0.01,
    seed: Number(el<HTMLInputElement>("run-seed").value) || 0,
    record_every: Number(el<HTMLInputElement>("run-record").value) || 1,
    runs: Number(el<HTMLInputElement>("run-runs").value) || 1,
  };
}

async function openModel(id: string): Promise<void> {
  await store.load(id);
  const doc = currentModel();
  if (doc) syncLayout(doc);
  selection = {};
  render();
}

// ---------------------------------------------------------------------------

store.subscribe(() => render());

window.addEventListener("DOMContentLoaded", () => {
  bindToolbar();
  bindCanvas();
  void refreshModelList();
  render();
});
