/**
 * HTML/SVG renderers.
 *
 * Every renderer is a pure function from model state to markup, so the view
 * layer can be exercised without a browser.  Numbers are printed as served;
 * bar widths scale through a CSS custom property, keeping all probability
 * arithmetic out of the client.
 */

import type { MarginalRow, UpdateStep } from "../api/types.js";
import type { ConsultModel } from "../model/consult.js";
import type { NetLayout } from "../model/layout.js";
import { NODE_HEADER, NODE_PAD, VAR_BOX, VAR_GAP } from "../model/layout.js";
import type { WizardModel } from "../model/wizard.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatProbability(value: number): string {
  return value.toFixed(4);
}

// ------------------------------------------------------------------- net

export function renderNetSvg(layout: NetLayout): string {
  const edges = layout.edges
    .map(
      (edge) => `
  <g class="edge">
    <line x1="${edge.x1}" y1="${edge.y1}" x2="${edge.x2}" y2="${edge.y2}"/>
    <text x="${(edge.x1 + edge.x2) / 2}" y="${(edge.y1 + edge.y2) / 2 - 6}">${escapeHtml(edge.label)}</text>
  </g>`,
    )
    .join("");
  const nodes = layout.nodes
    .map((node) => {
      const boxes = node.variables
        .map((variable, index) => {
          const x = node.x + NODE_PAD + index * (VAR_BOX + VAR_GAP);
          const y = node.y + NODE_HEADER + NODE_PAD;
          const classes = ["var", variable.is_bev ? "bev" : "", variable.kind]
            .filter(Boolean)
            .join(" ");
          return `
    <rect class="${classes}" x="${x}" y="${y}" width="${VAR_BOX}" height="${VAR_BOX}">
      <title>${escapeHtml(variable.name)}</title>
    </rect>`;
        })
        .join("");
      return `
  <g class="leg" data-leg="${escapeHtml(node.id)}">
    <rect class="leg-box" x="${node.x}" y="${node.y}" width="${node.width}" height="${node.height}" rx="14"/>
    <text x="${node.x + NODE_PAD}" y="${node.y + NODE_HEADER}">${escapeHtml(node.name)}</text>${boxes}
  </g>`;
    })
    .join("");
  return `<svg viewBox="0 0 ${layout.width} ${layout.height}" width="${layout.width}" height="${layout.height}">${edges}${nodes}
</svg>`;
}

// ---------------------------------------------------------------- wizard

export function renderWizardPanel(wizard: WizardModel): string {
  const progress = wizard.progress;
  const header = `<h2>${escapeHtml(wizard.leg.name)}</h2>`;
  const error = wizard.errorMessage
    ? `<p class="error" role="alert">${escapeHtml(wizard.errorMessage)}</p>`
    : "";
  if (!progress) return `${header}<p>Loading.</p>`;

  if (wizard.done) {
    const table = wizard.built
      ? renderCmdTable(wizard)
      : `<button data-action="build">Build</button>`;
    return `${header}
<p>All ${progress.total} constraints specified.</p>
${error}
${table}`;
  }

  const question = wizard.question;
  if (!question) return `${header}<p>Loading.</p>${error}`;
  const [lo, hi] = question.interval;
  const conditional = question.conditionalPhrase
    ? `<p class="phrase alt">${escapeHtml(question.conditionalPhrase)}</p>`
    : "";
  return `${header}
<p class="progress">${progress.accepted} of ${progress.total} answered, ${progress.remaining} remaining</p>
<p class="phrase">${escapeHtml(question.jointPhrase)}</p>
${conditional}
<input type="range" data-action="slider" min="${lo}" max="${hi}" step="any"
       value="${question.defaultValue}" list="default-mark"/>
<datalist id="default-mark"><option value="${question.defaultValue}"></option></datalist>
<p class="bounds">feasible: ${lo} to ${hi}; default ${question.defaultValue}</p>
<button data-action="accept">Accept</button>
<button data-action="accept-default">Use default</button>
${error}`;
}

function renderCmdTable(wizard: WizardModel): string {
  const rows = wizard
    .cmdTable(wizard.leg.id)
    .map(
      (row) =>
        `<tr><td class="atom">${row.label}</td><td>${formatProbability(row.value)}</td></tr>`,
    )
    .join("");
  return `<table class="cmd"><thead><tr><th>atoms</th><th>Pr</th></tr></thead><tbody>${rows}</tbody></table>`;
}

// ----------------------------------------------------------- consultation

export function renderConsultPanel(consult: ConsultModel): string {
  const banner = renderErrorBanner(consult);
  const toggles = consult.openToggles
    .map((row) => renderToggle(row))
    .join("");
  const asserted = consult.assertedToggles
    .map((row) => renderToggle(row))
    .join("");
  return `<section class="evidence">
<h3>Evidence</h3>
<label>order
  <select data-action="direction">
    <option value="most-likely"${consult.direction === "most-likely" ? " selected" : ""}>most likely</option>
    <option value="least-likely"${consult.direction === "least-likely" ? " selected" : ""}>least likely</option>
  </select>
</label>
<ul class="toggles">${toggles}</ul>
<ul class="toggles asserted">${asserted}</ul>
</section>
${banner}
<section class="advice">
<h3>Goals</h3>
${renderBars(consult.goals, true)}
<h3>Hypotheses</h3>
${renderBars(consult.hypotheses, false)}
</section>
<section class="trace">
<h3>Trace</h3>
<ol>${consult.trace.map((step) => renderStep(step)).join("")}</ol>
</section>`;
}

function renderToggle(row: MarginalRow): string {
  const state =
    row.asserted === null ? "open" : row.asserted ? "occurred" : "ruled-out";
  return `<li data-variable="${escapeHtml(row.variable)}" class="${state}">
  <span class="name">${escapeHtml(row.name)}</span>
  <span class="value">${formatProbability(row.value)}</span>
  <button data-action="toggle-true">occurred</button>
  <button data-action="toggle-false">did not</button>
</li>`;
}

export function renderBars(rows: MarginalRow[], advice: boolean): string {
  const items = rows
    .map(
      (row) => `<li class="${advice ? "goal" : "hypothesis"}">
  <span class="name">${escapeHtml(row.name)}</span>
  <span class="bar"><span class="fill" style="--p: ${row.value}"></span></span>
  <span class="value">${formatProbability(row.value)}</span>
</li>`,
    )
    .join("");
  return `<ul class="bars${advice ? " advice-bars" : ""}">${items}</ul>`;
}

function renderStep(step: UpdateStep): string {
  return `<li>#${step.seq} ${escapeHtml(step.kind)} ${escapeHtml(step.source_leg)} &rarr; ${escapeHtml(step.target_leg)} (${escapeHtml(step.shared.join(", "))})</li>`;
}

function renderErrorBanner(consult: ConsultModel): string {
  if (!consult.error) return "";
  const reset = consult.needsReset
    ? `<button data-action="reset">Reset session</button>`
    : "";
  return `<p class="error ${consult.error.kind}" role="alert">${escapeHtml(consult.error.message)} ${reset}</p>`;
}
