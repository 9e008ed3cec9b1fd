// Emotion frame production: slider/webcam distributions normalized client
// side and posted on a fixed 2-second cadence while a source is active.

import { EMOTIONS, type Distribution, type Emotion } from "./types.js";
import type { EmotionSource } from "./viewState.js";

export const FRAME_INTERVAL_MS = 2000;

export function neutralDistribution(): Distribution {
  const d = Object.fromEntries(EMOTIONS.map((e) => [e, 0])) as Distribution;
  d.neutral = 1;
  return d;
}

/**
 * Clamp negatives to zero and renormalize so proportions sum to exactly 1;
 * an all-zero input falls back to fully neutral. Every posted frame must
 * validate server-side (sum within 1e-6).
 */
export function normalizeDistribution(raw: Partial<Record<Emotion, number>>): Distribution {
  const clamped = EMOTIONS.map((e) => {
    const v = raw[e] ?? 0;
    return Number.isFinite(v) && v > 0 ? v : 0;
  });
  const total = clamped.reduce((a, b) => a + b, 0);
  if (total <= 0) return neutralDistribution();
  const d = {} as Distribution;
  let running = 0;
  for (let i = 0; i < EMOTIONS.length - 1; i++) {
    d[EMOTIONS[i]] = clamped[i] / total;
    running += d[EMOTIONS[i]];
  }
  // assign the remainder to the last entry so the sum lands on 1; the
  // clamp guards the case where float error pushes the remainder below 0
  d[EMOTIONS[EMOTIONS.length - 1]] = Math.max(0, 1 - running);
  return d;
}

export function distributionSum(d: Distribution): number {
  return EMOTIONS.reduce((acc, e) => acc + d[e], 0);
}

export type FrameProvider = () => Distribution | null;

export interface SchedulerHooks {
  post: (timestamp: number, distribution: Distribution) => Promise<unknown>;
  providers: Partial<Record<Exclude<EmotionSource, "off">, FrameProvider>>;
  onFallback?: (reason: string) => void;
  onPostError?: (error: unknown) => void;
  now?: () => number;
}

/**
 * Posts one frame every 2 s from the active source; `off` posts nothing.
 * A webcam provider failure flips the source to sliders and surfaces a
 * notice instead of stopping the stream.
 */
export class FrameScheduler {
  source: EmotionSource = "off";
  posted = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  private hooks: SchedulerHooks;

  constructor(hooks: SchedulerHooks, private intervalMs: number = FRAME_INTERVAL_MS) {
    this.hooks = hooks;
  }

  setSource(source: EmotionSource): void {
    this.source = source;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  get running(): boolean {
    return this.timer !== null;
  }

  tick(): void {
    if (this.source === "off") return;
    const provider = this.hooks.providers[this.source];
    let distribution: Distribution | null = null;
    if (provider) {
      try {
        distribution = provider();
      } catch {
        distribution = null;
      }
    }
    if (distribution === null) {
      if (this.source === "webcam") {
        this.source = "sliders";
        this.hooks.onFallback?.("camera unavailable; switched to sliders");
        const sliders = this.hooks.providers.sliders;
        distribution = sliders ? sliders() : null;
      }
      if (distribution === null) return;
    }
    const now = this.hooks.now ? this.hooks.now() : Date.now() / 1000;
    this.posted += 1;
    void this.hooks.post(now, distribution).catch((err) => {
      this.hooks.onPostError?.(err);
    });
  }
}
