// Console view state: exactly one active XAI view, one zoom/pan transform
// per view. Transforms are plain affine (scale, tx, ty) with scale clamped
// positive so they stay invertible; toggling views never loses a transform.

import type { XaiKind } from "./types.js";

export interface Transform {
  scale: number;
  tx: number;
  ty: number;
}

export const MIN_SCALE = 0.1;
export const MAX_SCALE = 10;

export function identity(): Transform {
  return { scale: 1, tx: 0, ty: 0 };
}

export function apply(t: Transform, x: number, y: number): [number, number] {
  return [x * t.scale + t.tx, y * t.scale + t.ty];
}

export function invert(t: Transform, x: number, y: number): [number, number] {
  return [(x - t.tx) / t.scale, (y - t.ty) / t.scale];
}

/** Zoom by `factor` keeping the screen point (cx, cy) fixed. */
export function zoomAt(t: Transform, cx: number, cy: number, factor: number): Transform {
  const scale = Math.min(MAX_SCALE, Math.max(MIN_SCALE, t.scale * factor));
  const real = scale / t.scale;
  return {
    scale,
    tx: cx - (cx - t.tx) * real,
    ty: cy - (cy - t.ty) * real,
  };
}

export function pan(t: Transform, dx: number, dy: number): Transform {
  return { scale: t.scale, tx: t.tx + dx, ty: t.ty + dy };
}

export type ActiveView = XaiKind | "none";
export type EmotionSource = "webcam" | "sliders" | "off";

export class ViewStateStore {
  activeView: ActiveView = "none";
  emotionSource: EmotionSource = "off";
  private transforms = new Map<XaiKind, Transform>();
  private listeners: Array<() => void> = [];

  subscribe(fn: () => void): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  setView(view: ActiveView): void {
    this.activeView = view;
    this.notify();
  }

  setEmotionSource(source: EmotionSource): void {
    this.emotionSource = source;
    this.notify();
  }

  transform(view: XaiKind): Transform {
    return this.transforms.get(view) ?? identity();
  }

  updateTransform(view: XaiKind, t: Transform): void {
    this.transforms.set(view, t);
    this.notify();
  }

  resetTransform(view: XaiKind): void {
    this.transforms.set(view, identity());
    this.notify();
  }
}
