// DOM wiring for the console: chat panel, XAI panel, emotion panel.
// All behavior lives in the tested modules; this file only binds events.

import { ApiClient, ApiRequestError } from "./api.js";
import { ChatController } from "./chat.js";
import { isEmptySpec, renderChart } from "./charts.js";
import { FrameScheduler, normalizeDistribution } from "./emotions.js";
import { EMOTIONS, XAI_KINDS, type ChartSpec, type XaiKind } from "./types.js";
import {
  ViewStateStore,
  pan,
  zoomAt,
  type EmotionSource,
} from "./viewState.js";
import {
  estimateFromFrames,
  luminanceFromRgba,
  type GrayFrame,
} from "./webcamEstimator.js";

declare global {
  interface Window {
    CARELENS_API?: string;
  }
}

const api = new ApiClient(window.CARELENS_API ?? "");
const chat = new ChatController(api);
const views = new ViewStateStore();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

// --- session setup ---

const sessionForm = $<HTMLFormElement>("session-form");
const sessionStatus = $<HTMLSpanElement>("session-status");

sessionForm.addEventListener("submit", async (ev) => {
  ev.preventDefault();
  const email = $<HTMLInputElement>("email").value || "clinician@example.org";
  const participant = $<HTMLInputElement>("participant").value || "p01";
  sessionStatus.textContent = "connecting…";
  try {
    await chat.init(email, participant);
    sessionStatus.textContent = `session active for ${participant}`;
    renderQueries();
    scheduler.start();
    void loadView();
  } catch (err) {
    sessionStatus.textContent =
      err instanceof ApiRequestError ? `error: ${err.code}` : "connection failed";
  }
});

// --- chat panel ---

const messageList = $<HTMLDivElement>("messages");
const composer = $<HTMLTextAreaElement>("composer");
const sendButton = $<HTMLButtonElement>("send");
const retryBanner = $<HTMLDivElement>("retry-banner");
const queryMenu = $<HTMLDivElement>("query-menu");

function renderQueries(): void {
  queryMenu.innerHTML = "";
  queryMenu.hidden = chat.state.queries.length === 0;
  for (const q of chat.state.queries) {
    const button = document.createElement("button");
    button.type = "button";
    button.className = "query";
    button.textContent = q;
    button.addEventListener("click", () => {
      chat.prefill(q);
      composer.focus();
    });
    queryMenu.appendChild(button);
  }
}

chat.subscribe(() => {
  composer.value = chat.state.composer;
  sendButton.disabled = chat.state.pending;
  sendButton.textContent = chat.state.pending ? "sending…" : "send";
  retryBanner.hidden = chat.state.retryBanner === null;
  retryBanner.textContent = chat.state.retryBanner
    ? `${chat.state.retryBanner} — your message is still in the composer`
    : "";
  messageList.innerHTML = "";
  for (const m of chat.state.messages) {
    const row = document.createElement("div");
    row.className = `message ${m.role}`;
    if (m.role === "assistant") {
      // the chat icon lets users locate the system's responses quickly
      const icon = document.createElement("span");
      icon.className = "chat-icon";
      icon.textContent = "\u{1F4AC}";
      row.appendChild(icon);
    }
    const body = document.createElement("span");
    body.textContent = m.content;
    row.appendChild(body);
    messageList.appendChild(row);
  }
  messageList.scrollTop = messageList.scrollHeight;
});

composer.addEventListener("input", () => {
  chat.state.composer = composer.value;
});
sendButton.addEventListener("click", () => void chat.send());
composer.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter" && !ev.shiftKey) {
    ev.preventDefault();
    void chat.send();
  }
});

// --- XAI panel ---

const canvas = $<HTMLCanvasElement>("xai-canvas");
const placeholder = $<HTMLDivElement>("xai-placeholder");
const specCache = new Map<XaiKind, ChartSpec>();
let dragging: { x: number; y: number } | null = null;

function activeKind(): XaiKind | null {
  return views.activeView === "none" ? null : views.activeView;
}

function draw(): void {
  const kind = activeKind();
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  if (!kind) {
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    placeholder.hidden = false;
    placeholder.textContent = "select a view";
    return;
  }
  const spec = specCache.get(kind);
  if (!spec) {
    placeholder.hidden = false;
    placeholder.textContent = "loading…";
    return;
  }
  placeholder.hidden = !isEmptySpec(spec);
  if (isEmptySpec(spec)) placeholder.textContent = "no data";
  renderChart(ctx, spec, views.transform(kind), {
    width: canvas.width,
    height: canvas.height,
  });
}

async function loadView(): Promise<void> {
  const kind = activeKind();
  if (!kind || specCache.has(kind)) {
    draw();
    return;
  }
  const participant = $<HTMLInputElement>("participant").value || "p01";
  try {
    const payload = await api.explanation(participant, kind);
    specCache.set(kind, payload.chart_spec);
  } catch (err) {
    placeholder.hidden = false;
    placeholder.textContent =
      err instanceof ApiRequestError ? `error: ${err.code}` : "failed to load";
    return;
  }
  draw();
}

for (const kind of XAI_KINDS) {
  $<HTMLButtonElement>(`view-${kind}`).addEventListener("click", () => {
    views.setView(views.activeView === kind ? "none" : kind);
    for (const k of XAI_KINDS) {
      $<HTMLButtonElement>(`view-${k}`).classList.toggle("active", views.activeView === k);
    }
    void loadView();
  });
}

$<HTMLButtonElement>("view-reset").addEventListener("click", () => {
  const kind = activeKind();
  if (kind) {
    views.resetTransform(kind);
    draw();
  }
});

canvas.addEventListener("wheel", (ev) => {
  const kind = activeKind();
  if (!kind) return;
  ev.preventDefault();
  const rect = canvas.getBoundingClientRect();
  const factor = Math.exp(-ev.deltaY * 0.0015);
  views.updateTransform(
    kind,
    zoomAt(views.transform(kind), ev.clientX - rect.left, ev.clientY - rect.top, factor),
  );
  draw();
});

canvas.addEventListener("pointerdown", (ev) => {
  dragging = { x: ev.clientX, y: ev.clientY };
  canvas.setPointerCapture(ev.pointerId);
});
canvas.addEventListener("pointermove", (ev) => {
  const kind = activeKind();
  if (!dragging || !kind) return;
  views.updateTransform(
    kind,
    pan(views.transform(kind), ev.clientX - dragging.x, ev.clientY - dragging.y),
  );
  dragging = { x: ev.clientX, y: ev.clientY };
  draw();
});
canvas.addEventListener("pointerup", () => {
  dragging = null;
});

// --- emotion panel ---

const emotionBanner = $<HTMLDivElement>("emotion-banner");
const sourceSelect = $<HTMLSelectElement>("emotion-source");
const frameCounter = $<HTMLSpanElement>("frame-counter");

const sliderFor = (e: string) => $<HTMLInputElement>(`slider-${e}`);

function slidersDistribution() {
  const raw: Record<string, number> = {};
  for (const e of EMOTIONS) raw[e] = Number(sliderFor(e).value);
  return normalizeDistribution(raw);
}

let lastFrame: GrayFrame | null = null;
let video: HTMLVideoElement | null = null;
const grabCanvas = document.createElement("canvas");

function webcamDistribution() {
  if (!video || video.readyState < 2) return null;
  const w = 64;
  const h = 48;
  grabCanvas.width = w;
  grabCanvas.height = h;
  const gctx = grabCanvas.getContext("2d");
  if (!gctx) return null;
  gctx.drawImage(video, 0, 0, w, h);
  const gray = luminanceFromRgba(gctx.getImageData(0, 0, w, h).data, w, h);
  const dist = lastFrame ? estimateFromFrames(lastFrame, gray) : null;
  lastFrame = gray;
  return dist;
}

const scheduler = new FrameScheduler({
  post: (ts, dist) => {
    if (!chat.state.sessionId) return Promise.resolve(null);
    return api.postEmotion(chat.state.sessionId, ts, dist).then((r) => {
      frameCounter.textContent = `${scheduler.posted} frames posted`;
      return r;
    });
  },
  providers: { sliders: slidersDistribution, webcam: webcamDistribution },
  onFallback: (reason) => {
    sourceSelect.value = "sliders";
    views.setEmotionSource("sliders");
    emotionBanner.hidden = false;
    emotionBanner.textContent = reason;
  },
  onPostError: () => {
    emotionBanner.hidden = false;
    emotionBanner.textContent = "frame rejected by the server";
  },
});

sourceSelect.addEventListener("change", async () => {
  const source = sourceSelect.value as EmotionSource;
  emotionBanner.hidden = true;
  if (source === "webcam") {
    try {
      const stream = await navigator.mediaDevices.getUserMedia({ video: true });
      video = document.createElement("video");
      video.srcObject = stream;
      await video.play();
    } catch {
      // permission denied: automatic fallback to sliders with a notice
      sourceSelect.value = "sliders";
      views.setEmotionSource("sliders");
      scheduler.setSource("sliders");
      emotionBanner.hidden = false;
      emotionBanner.textContent = "camera denied; using sliders";
      return;
    }
  }
  views.setEmotionSource(source);
  scheduler.setSource(source);
});
