/** Store behavior: edit round-trips, run panel, fit review. */

import { beforeEach, describe, expect, it } from "vitest";

import {
  addEntity,
  drawRelation,
  removeEntity,
  setEntityParam,
} from "../src/edits.js";
import { WorkbenchStore } from "../src/store.js";
import { RunSettings } from "../src/types.js";
import { FakeServer, sampleModel } from "./fake-server.js";

const RUN: RunSettings = {
  engine: "stochastic",
  duration: 10,
  dt: 0.1,
  seed: 3,
  record_every: 1,
  runs: 1,
};

describe("edit round-trips", () => {
  let server: FakeServer;
  let store: WorkbenchStore;

  beforeEach(async () => {
    server = new FakeServer();
    server.seed(sampleModel());
    store = new WorkbenchStore(server);
    await store.load("kudzu-invasion");
  });

  it("a drawn relation persists and reloads", async () => {
    const doc = store.view().model!;
    const accepted = await store.commitEdit(
      drawRelation(doc, { source: "hornbeam", target: "kudzu", kind: "competes_with" }),
    );
    expect(accepted).toBe(true);
    const fresh = new WorkbenchStore(server);
    await fresh.load("kudzu-invasion");
    expect(fresh.view().model!.relations).toContainEqual({
      source: "hornbeam",
      target: "kudzu",
      kind: "competes_with",
    });
  });

  it("a rejected edit leaves the view on the old model and shows the report", async () => {
    const doc = store.view().model!;
    const before = JSON.stringify(doc);
    const accepted = await store.commitEdit(
      drawRelation(doc, { source: "kudzu", target: "ghost", kind: "consumes" }),
    );
    expect(accepted).toBe(false);
    expect(JSON.stringify(store.view().model)).toBe(before);
    expect(store.view().violations.length).toBeGreaterThan(0);
    expect(store.view().violations[0]!.code).toBe("unknown_entity");
    expect(server.snapshot("kudzu-invasion")).toBe(before);
  });

  it("a consumes_resource edge onto a biotic target is rejected inline", async () => {
    const doc = store.view().model!;
    const accepted = await store.commitEdit(
      drawRelation(doc, { source: "kudzu_bug", target: "kudzu", kind: "consumes_resource" }),
    );
    expect(accepted).toBe(false);
    expect(store.view().violations.map((v) => v.code)).toContain("resource_target_not_abiotic");
  });

  it("deleting an entity cascades its relations and parameters", async () => {
    const doc = store.view().model!;
    await store.commitEdit(removeEntity(doc, "kudzu"));
    const after = store.view().model!;
    expect(after.entities.map((e) => e.id)).toEqual(["kudzu_bug", "hornbeam"]);
    expect(after.relations).toEqual([]); // both relations touched kudzu
    expect(after.entity_params["kudzu"]).toBeUndefined();
    expect(after.interaction_params).toEqual([]);
  });

  it("a successful edit clears the previous violation report", async () => {
    const doc = store.view().model!;
    await store.commitEdit(drawRelation(doc, { source: "kudzu", target: "ghost", kind: "consumes" }));
    expect(store.view().violations.length).toBeGreaterThan(0);
    await store.commitEdit(setEntityParam(doc, "kudzu", "birth_rate", 0.7));
    expect(store.view().violations).toEqual([]);
    expect(store.view().model!.entity_params["kudzu"]!.birth_rate).toBe(0.7);
  });
});

describe("run panel", () => {
  let server: FakeServer;
  let store: WorkbenchStore;

  beforeEach(async () => {
    server = new FakeServer();
    server.seed(sampleModel());
    store = new WorkbenchStore(server);
    await store.load("kudzu-invasion");
  });

  it("charts exactly the returned payload", async () => {
    await store.run(RUN);
    const run = store.view().lastRun!;
    const expected = await server.simulate("kudzu-invasion", RUN);
    expect(run).toEqual(expected);
  });

  it("same seed re-runs produce identical data", async () => {
    await store.run(RUN);
    const first = JSON.stringify(store.view().lastRun);
    await store.run(RUN);
    expect(JSON.stringify(store.view().lastRun)).toBe(first);
  });

  it("keeps the previous run as the ghost curve", async () => {
    await store.run(RUN);
    const first = store.view().lastRun;
    await store.run({ ...RUN, seed: 9 });
    expect(store.view().ghostRun).toEqual(first);
    expect(store.view().lastRun).not.toEqual(first);
  });

  it("an engine error keeps the prior chart and raises a toast", async () => {
    await store.run(RUN);
    const prior = store.view().lastRun;
    const ok = await store.run({ ...RUN, duration: 1e9 });
    expect(ok).toBe(false);
    expect(store.view().lastRun).toEqual(prior);
    expect(store.view().toast).toMatch(/engine_error/);
  });

  it("allows at most one in-flight run", async () => {
    const first = store.run(RUN);
    const second = await store.run(RUN); // busy -> refused
    expect(second).toBe(false);
    expect(await first).toBe(true);
  });
});

describe("fit review", () => {
  let server: FakeServer;
  let store: WorkbenchStore;

  beforeEach(async () => {
    server = new FakeServer();
    server.seed(sampleModel());
    store = new WorkbenchStore(server);
    await store.load("kudzu-invasion");
    store.setObservations({
      times: [0, 1, 2],
      series: { kudzu: [1000, 900, 800] },
      provenance: "upload",
    });
  });

  it("apply writes the recommendation through PUT and re-runs", async () => {
    await store.run(RUN);
    await store.runFit(["birth_rate@kudzu"], 50);
    const recommended = store.view().fitResult!.best_params["birth_rate@kudzu"]!;
    await store.applyFit();
    const after = store.view().model!;
    expect(after.entity_params["kudzu"]!.birth_rate).toBe(recommended);
    expect(server.log.filter((l) => l.startsWith("PUT"))).toHaveLength(1);
    // re-ran with the prior settings
    expect(server.log.filter((l) => l.includes("/simulate"))).toHaveLength(2);
    expect(store.view().fitResult).toBeNull();
  });

  it("budget 1 recommends the current values (no improvement found)", async () => {
    await store.runFit(["birth_rate@kudzu"], 1);
    const result = store.view().fitResult!;
    expect(result.best_params["birth_rate@kudzu"]).toBe(0.8);
    expect(result.best_discrepancy).toBe(result.initial_discrepancy);
  });

  it("fit failure leaves the model untouched and shows a toast", async () => {
    store.setObservations({ times: [], series: {}, provenance: "" });
    const before = server.snapshot("kudzu-invasion");
    const ok = await store.runFit(["birth_rate@kudzu"], 50);
    expect(ok).toBe(false);
    expect(store.view().toast).toMatch(/bad_request/);
    expect(server.snapshot("kudzu-invasion")).toBe(before);
  });
});

describe("edit helpers", () => {
  it("addEntity and removeEntity are inverse on the document", () => {
    const doc = sampleModel();
    const grown = addEntity(doc, { id: "deer", name: "Deer", kind: "biotic" });
    expect(grown.entities).toHaveLength(4);
    const back = removeEntity(grown, "deer");
    expect(back).toEqual(doc);
  });
});
