/** DOM shell around the session controller: start screen, one item per
 * screen, done screen. All behavior lives in session.ts; this file only
 * renders state and forwards events. */

import { ApiClient, type Label, type Task } from "./api.js";
import { labelForKey, LABELS, SessionController, type UiSessionState } from "./session.js";
import { copyFor } from "./strings.js";

const copy = copyFor(
  new URLSearchParams(window.location.search).get("lang") ?? navigator.language,
);
const controller = new SessionController(new ApiClient(""), window.localStorage);
const root = document.getElementById("app") as HTMLElement;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderStart(): void {
  const saved = controller.resumeInfo();
  const box = el("div", "card");
  box.append(el("h1", "title", copy.startTitle));

  const subjectField = el("label", "field", copy.subjectLabel);
  const subjectInput = el("input");
  subjectInput.value = saved?.subject ?? "";
  subjectField.append(subjectInput);

  const taskField = el("label", "field", copy.taskLabel);
  const taskSelect = el("select");
  for (const task of ["ranking", "classification"] as Task[]) {
    const option = el("option", undefined, copy.taskNames[task]);
    option.value = task;
    taskSelect.append(option);
  }
  taskSelect.value = saved?.task ?? "ranking";
  taskField.append(taskSelect);

  const button = el("button", "primary", copy.startButton);
  button.addEventListener("click", () => {
    if (subjectInput.value.trim()) {
      void controller.start(subjectInput.value.trim(), taskSelect.value as Task);
    }
  });

  box.append(subjectField, taskField, button);
  root.replaceChildren(box);
}

function renderProgress(state: UiSessionState): HTMLElement {
  const wrap = el("div", "progress");
  const bar = el("div", "progress-bar");
  const fill = el("div", "progress-fill");
  fill.style.width = state.nItems
    ? `${(100 * state.answered) / state.nItems}%`
    : "0";
  bar.append(fill);
  wrap.append(bar, el("span", "progress-text", copy.progress(state.answered, state.nItems)));
  return wrap;
}

function renderRanking(state: UiSessionState): HTMLElement {
  const box = el("div", "card");
  box.append(renderProgress(state), el("p", "instructions", copy.instructions.ranking));
  state.texts.forEach((text, textIndex) => {
    const card = el("div", "stimulus");
    card.append(el("p", "stimulus-text", text));
    const row = el("div", "rank-row");
    copy.rankNames.forEach((name, rankIndex) => {
      const rank = rankIndex + 1;
      const button = el(
        "button",
        state.ranks[textIndex] === rank ? "rank selected" : "rank",
        name,
      );
      button.addEventListener("click", () => controller.setRank(textIndex, rank));
      row.append(button);
    });
    card.append(row);
    box.append(card);
  });
  box.append(renderSubmit(state));
  return box;
}

function renderClassification(state: UiSessionState): HTMLElement {
  const box = el("div", "card");
  box.append(renderProgress(state), el("p", "instructions", copy.instructions.classification));
  box.append(el("p", "stimulus-text", state.texts[0] ?? ""));
  const row = el("div", "label-row");
  for (const label of LABELS) {
    const button = el(
      "button",
      state.label === label ? "label selected" : "label",
      copy.labelNames[label],
    );
    button.addEventListener("click", () => controller.setLabel(label));
    row.append(button);
  }
  box.append(row, el("p", "hint", copy.keyboardHint), renderSubmit(state));
  return box;
}

function renderSubmit(state: UiSessionState): HTMLElement {
  const button = el("button", "primary", copy.submitButton);
  button.disabled = !controller.canSubmit() || state.phase === "submitting";
  button.addEventListener("click", () => void controller.submit());
  return button;
}

function renderDone(): void {
  const box = el("div", "card");
  box.append(el("h1", "title", copy.doneTitle), el("p", undefined, copy.doneBody));
  root.replaceChildren(box);
}

function renderError(state: UiSessionState): void {
  const box = el("div", "card error");
  box.append(
    el("h1", "title", copy.errorTitle),
    el("p", "error-text", state.error ?? ""),
  );
  const button = el("button", "primary", copy.retryButton);
  button.addEventListener("click", () => void controller.retry());
  box.append(button);
  root.replaceChildren(box);
}

function render(state: UiSessionState): void {
  switch (state.phase) {
    case "start":
      renderStart();
      break;
    case "loading":
    case "submitting":
      root.replaceChildren(el("div", "card", copy.loading));
      break;
    case "item":
      root.replaceChildren(
        state.task === "ranking" ? renderRanking(state) : renderClassification(state),
      );
      break;
    case "done":
      renderDone();
      break;
    case "error":
      renderError(state);
      break;
  }
}

document.addEventListener("keydown", (event) => {
  const state = controller.getState();
  if (state.phase !== "item" || state.task !== "classification") {
    return;
  }
  const label: Label | null = labelForKey(event.key);
  if (label !== null) {
    controller.setLabel(label);
  }
});

document.title = copy.appTitle;
controller.subscribe(render);
render(controller.getState());
