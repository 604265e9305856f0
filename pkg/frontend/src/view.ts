/** Pure view-model construction: every rendered number traces to a payload field. */

import type { StatePayload } from "./types.js";

export interface BarView {
  modelId: string;
  index: number;
  percent: number; // rounded for display
  fraction: number; // raw payload value
  highlighted: boolean;
}

export interface AccuracyRowView {
  modelId: string;
  meanAccuracyPercent: number;
  best: boolean;
}

export interface ClassButtonView {
  classIndex: number;
  label: string;
  shortcut: string | null; // keyboard key for the first ten classes
}

export interface SessionView {
  kind: "state";
  sessionId: string;
  stepCount: number;
  budget: number;
  bars: BarView[];
  chosenModelId: string;
  accuracyRows: AccuracyRowView[];
  pendingItemId: string | null;
  pendingItemUri: string | null;
  classButtons: ClassButtonView[];
  showClassSearch: boolean; // search box instead of a wall of buttons
  entropySeries: number[]; // one point per completed step plus the current state
  exhausted: boolean;
}

export interface ErrorView {
  kind: "error";
  message: string;
}

export function shannonEntropy(probs: number[]): number {
  let h = 0;
  for (const p of probs) {
    if (p > 0) h -= p * Math.log(p);
  }
  return h;
}

function malformed(payload: unknown): string | null {
  const p = payload as Partial<StatePayload> | null;
  if (!p || typeof p !== "object") return "payload is not an object";
  if (!Array.isArray(p.pbest) || p.pbest.length === 0) return "payload has no pbest vector";
  if (!Array.isArray(p.model_ids) || p.model_ids.length !== p.pbest.length) {
    return "model_ids does not match pbest";
  }
  if (typeof p.num_classes !== "number" || p.num_classes < 2) return "bad num_classes";
  if (typeof p.step_count !== "number") return "missing step_count";
  return null;
}

export const CLASS_BUTTON_LIMIT = 12;

export function buildView(payload: unknown): SessionView | ErrorView {
  const problem = malformed(payload);
  if (problem) return { kind: "error", message: `malformed payload: ${problem}` };
  const p = payload as StatePayload;

  const argmax = p.pbest.indexOf(Math.max(...p.pbest));
  const bars: BarView[] = p.pbest.map((v, i) => ({
    modelId: p.model_ids[i],
    index: i,
    percent: Math.round(v * 1000) / 10,
    fraction: v,
    highlighted: i === argmax,
  }));

  const bestAcc = Math.max(...p.mean_accuracies);
  const accuracyRows: AccuracyRowView[] = p.mean_accuracies.map((v, i) => ({
    modelId: p.model_ids[i],
    meanAccuracyPercent: Math.round(v * 1000) / 10,
    best: v === bestAcc,
  }));

  const classButtons: ClassButtonView[] = [];
  for (let c = 0; c < p.num_classes; c += 1) {
    classButtons.push({
      classIndex: c,
      label: p.class_names?.[c] ?? `class ${c}`,
      shortcut: c < 10 ? String(c) : null,
    });
  }

  // History carries the post-update distribution per step; the live state
  // contributes the final point, so a fresh session plots a single point.
  const entropySeries = p.history_tail.map((row) => shannonEntropy(row.pbest));
  entropySeries.push(shannonEntropy(p.pbest));

  return {
    kind: "state",
    sessionId: p.session_id,
    stepCount: p.step_count,
    budget: p.budget,
    bars,
    chosenModelId: p.chosen_model.id,
    accuracyRows,
    pendingItemId: p.pending_query?.item_id ?? null,
    pendingItemUri: p.pending_query?.item_uri ?? null,
    classButtons,
    showClassSearch: p.num_classes > CLASS_BUTTON_LIMIT,
    entropySeries,
    exhausted: p.pending_query === null,
  };
}

export function filterClassButtons(view: SessionView, query: string): ClassButtonView[] {
  const q = query.trim().toLowerCase();
  if (!q) return view.classButtons.slice(0, CLASS_BUTTON_LIMIT);
  return view.classButtons.filter(
    (b) => b.label.toLowerCase().includes(q) || String(b.classIndex) === q,
  );
}
