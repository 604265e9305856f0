/** Payload shapes mirrored from the session service API. */

export interface PendingQuery {
  index: number;
  item_id: string;
  item_uri: string | null;
}

export interface HistoryRow {
  step: number;
  item_index: number;
  item_id: string;
  class_index: number;
  chosen_model: number;
  pbest: number[];
}

export interface ChosenModel {
  index: number;
  id: string;
}

export interface StatePayload {
  session_id: string;
  step_count: number;
  budget: number;
  labeled_count: number;
  num_models: number;
  num_classes: number;
  model_ids: string[];
  class_names: string[] | null;
  pbest: number[];
  chosen_model: ChosenModel;
  mean_accuracies: number[];
  pending_query: PendingQuery | null;
  history_tail: HistoryRow[];
  config: Record<string, unknown>;
}

export interface ApiErrorBody {
  error: { code: "not_found" | "conflict" | "bad_request" | "unauthorized"; message: string };
}
