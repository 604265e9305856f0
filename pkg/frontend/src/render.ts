/** HTML string rendering of view models. */

import type { ErrorView, SessionView } from "./view.js";
import { filterClassButtons } from "./view.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderBars(view: SessionView): string {
  return view.bars
    .map((bar) => {
      const weight = bar.highlighted ? "font-weight:bold" : "opacity:.85";
      const fill = bar.highlighted ? "#4c9aff" : "#9aa7b5";
      return `
      <div class="bar-row" style="display:flex;gap:10px;align-items:center;margin:4px 0;${weight}">
        <div style="width:140px;overflow:hidden;text-overflow:ellipsis">${esc(bar.modelId)}</div>
        <div style="flex:1;height:10px;background:#2a2f36;border-radius:999px;overflow:hidden">
          <div style="width:${bar.percent}%;height:100%;background:${fill}"></div>
        </div>
        <div style="width:56px;text-align:right">${bar.percent.toFixed(1)}%</div>
      </div>`;
    })
    .join("");
}

export function renderAccuracyTable(view: SessionView): string {
  const rows = view.accuracyRows
    .map(
      (row) => `
      <tr${row.best ? ' style="font-weight:bold"' : ""}>
        <td>${esc(row.modelId)}</td>
        <td style="text-align:right">${row.meanAccuracyPercent.toFixed(1)}%</td>
      </tr>`,
    )
    .join("");
  return `<table class="acc"><thead><tr><th>model</th><th>est. accuracy</th></tr></thead>
    <tbody>${rows}</tbody></table>`;
}

export function renderClassButtons(view: SessionView, query = ""): string {
  const buttons = filterClassButtons(view, query)
    .map(
      (b) => `
      <button class="cls" data-class="${b.classIndex}" title="${esc(b.label)}">
        ${b.shortcut !== null ? `<span class="key">${b.shortcut}</span> ` : ""}${esc(b.label)}
      </button>`,
    )
    .join("");
  const search = view.showClassSearch
    ? `<input id="class-search" type="search" placeholder="search ${view.classButtons.length} classes" value="${esc(query)}">`
    : "";
  return `${search}<div class="cls-grid">${buttons}</div>`;
}

export function renderEntropyPlot(view: SessionView, width = 360, height = 80): string {
  const series = view.entropySeries;
  const maxY = Math.max(...series, 1e-9);
  const stepX = series.length > 1 ? width / (series.length - 1) : 0;
  const points = series
    .map((v, i) => `${(i * stepX).toFixed(1)},${(height - (v / maxY) * (height - 6) - 3).toFixed(1)}`)
    .join(" ");
  const marker =
    series.length === 1
      ? `<circle cx="0" cy="${(height - (series[0] / maxY) * (height - 6) - 3).toFixed(1)}" r="3" fill="#4c9aff"/>`
      : "";
  return `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">
    <polyline fill="none" stroke="#4c9aff" stroke-width="1.5" points="${points}"/>${marker}
  </svg>`;
}

export function renderQuery(view: SessionView): string {
  if (view.exhausted) {
    return `<div class="query done">labeling budget exhausted — no pending query</div>`;
  }
  const media = view.pendingItemUri
    ? `<img src="${esc(view.pendingItemUri)}" alt="${esc(view.pendingItemId ?? "")}" style="max-width:100%;max-height:320px">`
    : `<div class="placeholder">no preview URI for this item</div>`;
  return `
    <div class="query">
      <div class="item-id">item <code>${esc(view.pendingItemId ?? "")}</code></div>
      ${media}
    </div>`;
}

export function renderError(view: ErrorView): string {
  return `<div class="banner error">${esc(view.message)}</div>`;
}

export function renderHeader(view: SessionView): string {
  return `
    <div class="header">
      <span>session <code>${esc(view.sessionId.slice(0, 8))}</code></span>
      <span>step <b id="step-count">${view.stepCount}</b> / ${view.budget}</span>
      <span>current pick: <b>${esc(view.chosenModelId)}</b></span>
      <button id="undo">undo last label</button>
    </div>`;
}
