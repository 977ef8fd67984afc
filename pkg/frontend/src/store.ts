/**
 * Workbench state machine for the construct / evaluate / revise loop.
 *
 * Server truth only: the store never holds a model the server has not
 * confirmed. Every edit round-trips as PUT + GET, so the document in
 * the view is always exactly what a fresh GET would return — a page
 * refresh rebuilds the same view (run results and fit reviews are
 * deliberately ephemeral; canvas layout persists separately).
 */

import { ApiError, WorkbenchApi } from "./api.js";
import { applyRecommendation } from "./edits.js";
import {
  FitResultDoc,
  ModelDoc,
  ObservationsDoc,
  RunSettings,
  TimeSeriesDoc,
  Violation,
} from "./types.js";

export interface StoreView {
  model: ModelDoc | null;
  /** Report from the last rejected edit; empty after a clean round-trip. */
  violations: Violation[];
  lastRun: TimeSeriesDoc | null;
  /** The run before the current one, kept for before/after comparison. */
  ghostRun: TimeSeriesDoc | null;
  lastSettings: RunSettings | null;
  observations: ObservationsDoc | null;
  fitResult: FitResultDoc | null;
  /** One in-flight simulate/fit per model; controls disable on this. */
  busy: boolean;
  toast: string | null;
}

export type Listener = (view: StoreView) => void;

export class WorkbenchStore {
  private model: ModelDoc | null = null;
  private violations: Violation[] = [];
  private lastRun: TimeSeriesDoc | null = null;
  private ghostRun: TimeSeriesDoc | null = null;
  private lastSettings: RunSettings | null = null;
  private observations: ObservationsDoc | null = null;
  private fitResult: FitResultDoc | null = null;
  private busy = false;
  private toast: string | null = null;
  private listeners = new Set<Listener>();

  constructor(private readonly api: WorkbenchApi) {}

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    const snapshot = this.view();
    for (const listener of this.listeners) listener(snapshot);
  }

  view(): StoreView {
    return {
      model: this.model,
      violations: this.violations,
      lastRun: this.lastRun,
      ghostRun: this.ghostRun,
      lastSettings: this.lastSettings,
      observations: this.observations,
      fitResult: this.fitResult,
      busy: this.busy,
      toast: this.toast,
    };
  }

  /** Load a model from the server; run and fit state start clean. */
  async load(modelId: string): Promise<void> {
    this.model = await this.api.getModel(modelId);
    this.violations = [];
    this.lastRun = null;
    this.ghostRun = null;
    this.lastSettings = null;
    this.fitResult = null;
    this.toast = null;
    this.emit();
  }

  /**
   * Round-trip an edited document. On success the view shows the
   * server's canonical form (re-fetched, not assumed); on a validation
   * rejection the current document stays and the report is surfaced.
   * Returns whether the edit survived.
   */
  async commitEdit(edited: ModelDoc): Promise<boolean> {
    if (!this.model) throw new Error("no model loaded");
    try {
      await this.api.putModel(edited);
    } catch (error) {
      if (error instanceof ApiError && error.payload.code === "validation_failed") {
        this.violations = (error.payload.details ?? []) as Violation[];
        this.toast = error.payload.message;
        this.emit();
        return false;
      }
      throw error;
    }
    this.model = await this.api.getModel(edited.id);
    this.violations = [];
    this.toast = null;
    this.emit();
    return true;
  }

  setObservations(obs: ObservationsDoc | null): void {
    this.observations = obs;
    this.emit();
  }

  /**
   * Launch a simulation. The previous trajectory becomes the ghost
   * curve; an engine failure keeps the prior chart and raises a toast.
   */
  async run(settings: RunSettings): Promise<boolean> {
    if (!this.model) throw new Error("no model loaded");
    if (this.busy) return false;
    this.busy = true;
    this.emit();
    try {
      const result = await this.api.simulate(this.model.id, settings);
      this.ghostRun = this.lastRun;
      this.lastRun = result;
      this.lastSettings = settings;
      this.toast = null;
      return true;
    } catch (error) {
      if (error instanceof ApiError) {
        this.toast = `${error.payload.code}: ${error.payload.message}`;
        return false; // prior chart retained
      }
      throw error;
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  /** Run the parameter recommendation against the loaded observations. */
  async runFit(free: string[], budget: number, dt?: number): Promise<boolean> {
    if (!this.model) throw new Error("no model loaded");
    if (!this.observations) throw new Error("no observations imported");
    if (this.busy) return false;
    this.busy = true;
    this.emit();
    try {
      this.fitResult = await this.api.fit(this.model.id, this.observations, free, budget, dt);
      this.toast = null;
      return true;
    } catch (error) {
      if (error instanceof ApiError) {
        this.toast = `${error.payload.code}: ${error.payload.message}`;
        return false; // model untouched
      }
      throw error;
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  /**
   * Accept the recommendation: write it through the normal edit
   * round-trip and re-run with the previous settings so the chart shows
   * the effect immediately.
   */
  async applyFit(): Promise<boolean> {
    if (!this.model || !this.fitResult) return false;
    const revised = applyRecommendation(this.model, this.fitResult.best_params);
    const accepted = await this.commitEdit(revised);
    if (!accepted) return false;
    this.fitResult = null;
    this.emit();
    if (this.lastSettings) {
      await this.run(this.lastSettings);
    }
    return true;
  }

  /** Reject the recommendation. Purely client-side: the server model is
   * untouched by the whole fit review. */
  discardFit(): void {
    this.fitResult = null;
    this.emit();
  }

  clearToast(): void {
    this.toast = null;
    this.emit();
  }
}
