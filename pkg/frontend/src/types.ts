// Wire formats shared with the carelens API service.

export const EMOTIONS = [
  "anger",
  "disgust",
  "fear",
  "happiness",
  "sadness",
  "surprise",
  "neutral",
] as const;

export type Emotion = (typeof EMOTIONS)[number];
export type Distribution = Record<Emotion, number>;

export type XaiKind = "shap" | "rules" | "cf" | "causal";
export const XAI_KINDS: XaiKind[] = ["shap", "rules", "cf", "causal"];

export interface ChartSpec {
  kind: "bar" | "rules_table" | "delta_table" | "dag" | "grouped_bar";
  title: string;
  x_label: string;
  y_label: string;
  series: Array<Record<string, unknown>>;
  columns: string[];
  rows: Array<Array<string | number>>;
  nodes: string[];
  edges: Array<{ from: string; to: string; score_gain?: number }>;
}

export interface ChatMessage {
  email: string;
  timestamp: number;
  role: "user" | "assistant";
  content: string;
}

export interface ExplanationPayload {
  participant_id: string;
  kind: XaiKind;
  artifact: unknown;
  chart_spec: ChartSpec;
  img64: string;
}

export interface ApiError {
  status: number;
  code: string;
  message: string;
}
