import type { ViewModel } from "./controller.js";
import { renderPlot, type Series } from "./plot.js";
import type { IterationMessage } from "./types.js";

const PALETTE = ["#2a6fdb", "#d9822b", "#3f9e4d", "#b04ad9", "#c23b3b", "#2ba3a0"];

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function fmt(v: number, digits = 4): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(digits - 1);
  }
  return v.toPrecision(digits);
}

export function muPlot(msg: IterationMessage): string {
  const series: Series[] = [
    { label: "mu_upper", x: msg.omega, y: msg.mu_upper, color: PALETTE[0] },
  ];
  return renderPlot(series, { logY: true, yGuide: 1.0 });
}

export function dScalePlot(msg: IterationMessage): string {
  const series: Series[] = msg.d_entries.map((e, i) => ({
    label: e.name,
    x: msg.omega,
    y: e.mag,
    color: PALETTE[i % PALETTE.length],
  }));
  return renderPlot(series, { logY: true });
}

/** Candidate table rows; `candidates` must already be sorted by fit_error. */
export function candidateTable(vm: ViewModel): string {
  const disabled = vm.posting ? " disabled" : "";
  const rows = vm.candidates
    .map(
      (c) => `<tr data-order="${c.order}" data-fit-error="${c.fit_error}">
  <td>${c.order}</td>
  <td>${fmt(c.fit_error)}</td>
  <td><button class="choose"${disabled} data-order="${c.order}">fit order ${c.order}</button></td>
</tr>`,
    )
    .join("\n");
  return `<table class="candidates">
<thead><tr><th>order</th><th>fit error</th><th></th></tr></thead>
<tbody>${rows}</tbody>
</table>
<div class="decision-actions">
  <button class="accept"${disabled}>accept current controller</button>
  <button class="stop"${disabled}>stop</button>
</div>`;
}

export function statusLine(vm: ViewModel): string {
  const badge = vm.converged
    ? `<span class="badge converged">robust: peak &le; 1</span>`
    : "";
  const peak = vm.message ? ` &mdash; iteration ${vm.message.index}, peak &mu; ${fmt(vm.message.peak)}, &gamma; ${fmt(vm.message.gamma)}` : "";
  return `<span class="phase">${esc(vm.phase)}</span>${peak} ${badge}`;
}

export function banner(vm: ViewModel): string {
  if (vm.connectionLost) {
    return `<div class="banner error">connection lost &mdash; the session is still running
  <button class="retry">retry</button></div>`;
  }
  if (vm.error) {
    return `<div class="banner error">${esc(vm.error)}</div>`;
  }
  return "";
}

export function resultPanel(vm: ViewModel): string {
  if (!vm.result) return "";
  const r = vm.result;
  const verdict = r.converged
    ? `<span class="badge converged">robust: peak &le; 1</span>`
    : `<span class="badge">not robust (peak &gt; 1)</span>`;
  return `<div class="result">
  <p>finished: best peak &mu; ${fmt(r.peak)} over ${r.iterations.length} iterations ${verdict}</p>
  <button class="download-controller">download controller JSON</button>
  <button class="download-report">download report JSON</button>
</div>`;
}

export function render(vm: ViewModel): string {
  const parts = [banner(vm), `<div class="status">${statusLine(vm)}</div>`];
  if (vm.message) {
    parts.push(`<section><h2>&mu; upper bound</h2>${muPlot(vm.message)}</section>`);
    parts.push(
      `<section><h2>D-scale magnitudes |d(j&omega;)|</h2>${dScalePlot(vm.message)}</section>`,
    );
  }
  if (vm.phase === "awaiting_choice") {
    parts.push(`<section><h2>choose next fit order</h2>${candidateTable(vm)}</section>`);
  }
  parts.push(resultPanel(vm));
  return parts.join("\n");
}
