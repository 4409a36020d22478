// DOM wiring: panel edits -> validated overrides; question submit ->
// /v1/query via the controller; submissions disabled while pending.

import { getHealth } from "./api";
import { submitQuestion } from "./controller";
import { buildOverrides, UiSession, type PanelState } from "./state";
import {
  clearBanner,
  renderResult,
  showBanner,
  showFieldErrors,
} from "./view";
import "./style.css";

const session = new UiSession();

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const questionInput = byId<HTMLTextAreaElement>("question");
const submitButton = byId<HTMLButtonElement>("submit");
const resetButton = byId<HTMLButtonElement>("reset-panel");
const banner = byId<HTMLDivElement>("banner");
const answerEl = byId<HTMLDivElement>("answer");
const sourcesEl = byId<HTMLDivElement>("sources");
const timingsEl = byId<HTMLDivElement>("timings");
const panelForm = byId<HTMLFormElement>("panel");
const healthEl = byId<HTMLSpanElement>("health");

function readPanel(): PanelState {
  const value = (field: string) =>
    panelForm.querySelector<HTMLInputElement | HTMLSelectElement>(
      `[data-field="${field}"]`,
    )?.value ?? "";
  return {
    chunkTopK: value("chunkTopK"),
    pathTopK: value("pathTopK"),
    denseTopK: value("denseTopK"),
    coarseFusion: value("coarseFusion") as PanelState["coarseFusion"],
    rerankFusion: value("rerankFusion") as PanelState["rerankFusion"],
    rerankK: value("rerankK"),
    rerankPolicy: value("rerankPolicy") as PanelState["rerankPolicy"],
    rerankThreshold: value("rerankThreshold"),
    compressEnabled: value("compressEnabled") as PanelState["compressEnabled"],
    compressRate: value("compressRate"),
    template: value("template") as PanelState["template"],
    answerMerge: value("answerMerge") as PanelState["answerMerge"],
    allowedFilePrefixes: value("allowedFilePrefixes"),
  };
}

function refreshSubmitState(): void {
  session.panel = readPanel();
  const { errors } = buildOverrides(session.panel);
  submitButton.disabled =
    session.pending ||
    questionInput.value.trim().length === 0 ||
    Object.keys(errors).length > 0;
  showFieldErrors(panelForm, errors);
}

function submit(): void {
  session.panel = readPanel();
  clearBanner(banner);
  void submitQuestion(session, questionInput.value, {
    onResult: (response) => renderResult(answerEl, sourcesEl, timingsEl, response),
    onError: (status, message) =>
      showBanner(
        banner,
        status === 503
          ? `backend unavailable: ${message}`
          : `request failed (${status || "network"}): ${message}`,
      ),
    onFieldErrors: (errors) => showFieldErrors(panelForm, errors),
    onPendingChange: () => refreshSubmitState(),
  });
}

submitButton.addEventListener("click", submit);
questionInput.addEventListener("input", refreshSubmitState);
questionInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && (event.ctrlKey || event.metaKey)) submit();
});
panelForm.addEventListener("input", refreshSubmitState);
resetButton.addEventListener("click", () => {
  panelForm.reset();
  refreshSubmitState();
});

refreshSubmitState();

void getHealth().then((result) => {
  if (result.ok) {
    healthEl.textContent = `${result.body.status} · ${result.body.index_doc_count} chunks`;
    healthEl.classList.toggle("degraded", result.body.status !== "ok");
  } else {
    healthEl.textContent = "service unreachable";
    healthEl.classList.add("degraded");
  }
});
