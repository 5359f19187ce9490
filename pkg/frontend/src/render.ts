// HTML rendering of a PlayView. Pure string construction so it is testable
// without a browser; app.ts mounts the result and wires events.

import type { PlayView } from "./view.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function renderMeter(view: PlayView): string {
  const bits = view.entropyBits;
  const width = Math.min(100, (bits / 7) * 100);
  return `
    <div class="entropy-meter" data-bits="${bits.toFixed(4)}">
      <div class="entropy-fill" style="width: ${width.toFixed(1)}%"></div>
      <span class="entropy-label">${bits.toFixed(2)} bits remaining</span>
    </div>`;
}

function renderQuestion(view: PlayView): string {
  if (view.done) {
    const verdict = view.finalGuess
      ? `<p class="final-guess">My guess: <strong>${escapeHtml(view.finalGuess)}</strong> — was I right?</p>`
      : `<p class="final-guess">Out of questions — you win!</p>`;
    return `<div class="question done">${verdict}</div>`;
  }
  if (view.questionText === null) {
    return `<div class="question idle">Start a game to play.</div>`;
  }
  const badge =
    view.lastEig !== null
      ? `<span class="eig-badge" title="information gain of the previous question">${view.lastEig.toFixed(3)} bits</span>`
      : "";
  return `
    <div class="question">
      <p class="question-text">${escapeHtml(view.questionText)}</p>
      ${badge}
    </div>`;
}

function renderButtons(view: PlayView): string {
  const disabled = view.buttonsEnabled ? "" : " disabled";
  return `
    <div class="answers">
      <button data-answer="yes"${disabled}>Yes</button>
      <button data-answer="no"${disabled}>No</button>
      <button data-answer="cant_answer"${disabled}>Can't answer</button>
    </div>`;
}

function renderGrid(view: PlayView): string {
  const numeric = view.task === "guess_number";
  const tiles = view.grid
    .map((tile) => {
      const chips = tile.chips
        .map((chip) => `<span class="chip">${escapeHtml(chip)}</span>`)
        .join("");
      const cls = numeric ? "tile cell" : "tile card";
      return `<div class="${cls}" data-id="${escapeHtml(tile.id)}"><span class="tile-label">${escapeHtml(
        tile.label,
      )}</span>${chips}</div>`;
    })
    .join("");
  return `<div class="grid ${numeric ? "grid-numbers" : "grid-cards"}" data-count="${view.gridCount}">${tiles}</div>`;
}

function renderTranscript(view: PlayView): string {
  const rows = view.transcript
    .map((entry) => {
      const eig = entry.eig !== null ? ` <span class="eig-badge">${entry.eig.toFixed(3)}</span>` : "";
      const feedback = entry.feedback
        ? `<pre class="feedback">${escapeHtml(entry.feedback)}</pre>`
        : "";
      return `<li data-turn="${entry.turn}">${escapeHtml(entry.question_text)} → <em>${entry.answer}</em>${eig}${feedback}</li>`;
    })
    .join("");
  return `<ol class="transcript">${rows}</ol>`;
}

export function renderPlayView(view: PlayView): string {
  const banner = view.error
    ? `<div class="error-banner">${escapeHtml(view.error)} <button data-action="retry">Retry</button></div>`
    : "";
  if (view.sessionId === null) {
    return `
      ${banner}
      <div class="start">
        <button data-start="guess-who">Play Guess Who</button>
        <button data-start="guess-number">Play Guess Number</button>
      </div>`;
  }
  return `
    ${banner}
    <div class="game" data-session="${escapeHtml(view.sessionId)}">
      ${renderQuestion(view)}
      ${renderButtons(view)}
      ${renderMeter(view)}
      ${renderGrid(view)}
      ${renderTranscript(view)}
      <button data-action="new-game" class="new-game">New game</button>
    </div>`;
}
