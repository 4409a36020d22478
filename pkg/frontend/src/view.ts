// DOM rendering helpers; pure functions of their inputs so tests can
// assert on the produced tree.

import type { ContextHit, QueryResponse } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderAnswer(container: HTMLElement, answer: string): void {
  container.textContent = answer;
}

export function renderSourceCards(container: HTMLElement, contexts: ContextHit[]): void {
  container.replaceChildren();
  for (const ctx of contexts) {
    const card = el("article", "source-card");

    const header = el("header", "source-header");
    header.append(
      el("span", "source-rank", `#${ctx.rank}`),
      el("span", `route-badge route-${ctx.route}`, ctx.route),
      el("span", "source-score", ctx.score.toFixed(4)),
    );
    card.append(header);

    card.append(el("div", "source-path", ctx.knowledge_path || ctx.file_path));

    const details = el("details", "source-text");
    details.append(el("summary", "source-chunk-id", ctx.chunk_id));
    details.append(el("pre", "source-body", ctx.text));
    card.append(details);

    container.append(card);
  }
}

export function renderTimings(
  container: HTMLElement,
  timings: Record<string, number>,
): void {
  container.replaceChildren();
  const entries = Object.entries(timings);
  if (entries.length === 0) return;
  const maxMs = Math.max(...entries.map(([, ms]) => ms), 1e-6);
  for (const [stage, ms] of entries) {
    const row = el("div", "timing-row");
    row.append(el("span", "timing-stage", stage));
    const track = el("div", "timing-track");
    const bar = el("div", "timing-bar");
    bar.style.width = `${Math.max((ms / maxMs) * 100, 1).toFixed(1)}%`;
    track.append(bar);
    row.append(track);
    row.append(el("span", "timing-ms", `${ms.toFixed(1)} ms`));
    container.append(row);
  }
}

export function renderResult(
  answerEl: HTMLElement,
  sourcesEl: HTMLElement,
  timingsEl: HTMLElement,
  response: QueryResponse,
): void {
  renderAnswer(answerEl, response.answer);
  renderSourceCards(sourcesEl, response.contexts);
  renderTimings(timingsEl, response.timings_ms);
}

export function showBanner(banner: HTMLElement, message: string): void {
  banner.textContent = message;
  banner.classList.remove("hidden");
}

export function clearBanner(banner: HTMLElement): void {
  banner.textContent = "";
  banner.classList.add("hidden");
}

export function showFieldErrors(
  form: HTMLElement,
  errors: Record<string, string | undefined>,
): void {
  for (const msg of form.querySelectorAll(".field-error")) msg.remove();
  for (const input of form.querySelectorAll(".invalid")) input.classList.remove("invalid");
  for (const [field, message] of Object.entries(errors)) {
    if (!message) continue;
    const input = form.querySelector<HTMLElement>(`[data-field="${field}"]`);
    if (!input) continue;
    input.classList.add("invalid");
    const note = el("div", "field-error", message);
    input.insertAdjacentElement("afterend", note);
  }
}
