// DOM rendering: option cards, choice buttons, history, summary screen.

import { OptionView, QueryView, TraceRow } from './api.js';
import { overlayChart, sparkline } from './chart.js';

export const COLORS = { candidate: '#1f77b4', incumbent: '#ff7f0e' };

const SIGNALS: Array<{ key: 'a_z' | 'pitch_rate'; label: string }> = [
  { key: 'a_z', label: 'A_z (m/s^2)' },
  { key: 'pitch_rate', label: 'pitch rate (rad/s)' },
];

export function el(tag: string, className = '', html = ''): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (html) node.innerHTML = html;
  return node;
}

function paramsTable(x: number[]): string {
  const rows = x
    .map((v, i) => `<tr><td>x${i}</td><td>${Number(v.toPrecision(6))}</td></tr>`)
    .join('');
  return `<table class="params"><tbody>${rows}</tbody></table>`;
}

function descriptorList(d: Record<string, number>): string {
  const items = Object.entries(d)
    .map(([k, v]) => `<li><span class="dname">${k}</span> <span class="dval">${Number(v.toPrecision(5))}</span></li>`)
    .join('');
  return items ? `<ul class="descriptors">${items}</ul>` : '';
}

export function renderOptionCard(title: string, option: OptionView, accent: string): HTMLElement {
  const card = el('section', 'card');
  card.style.borderTopColor = accent;
  card.append(el('h3', '', title));
  card.append(el('div', 'card-params', paramsTable(option.x)));
  card.append(el('div', 'card-descriptors', descriptorList(option.descriptors)));
  return card;
}

/** Overlay candidate vs incumbent response signals with shared axes. */
export function renderTraces(query: QueryView): HTMLElement {
  const wrap = el('div', 'traces');
  const a = query.candidate.trace;
  const b = query.incumbent.trace;
  if (!a || !b) return wrap; // descriptor-only cards
  for (const sig of SIGNALS) {
    const svg = overlayChart({
      yLabel: sig.label,
      series: [
        { name: 'A (new)', color: COLORS.candidate, time: a.time, values: a[sig.key] },
        { name: 'B (best)', color: COLORS.incumbent, time: b.time, values: b[sig.key] },
      ],
    });
    wrap.append(el('figure', 'trace-figure', svg));
  }
  return wrap;
}

export interface ChoiceRecord {
  iteration: number;
  label: -1 | 0 | 1;
  incumbentDescriptors: Record<string, number>;
}

export function renderHistory(history: ChoiceRecord[]): HTMLElement {
  const names = { '-1': 'A', '0': '=', '1': 'B' } as Record<string, string>;
  const items = history
    .map((h) => `<li>#${h.iteration}: ${names[String(h.label)]}</li>`)
    .join('');
  const box = el('aside', 'history', `<h4>choices</h4><ol>${items}</ol>`);
  const first = Object.keys(history[history.length - 1]?.incumbentDescriptors ?? {})[0];
  if (first) {
    const series = history.map((h) => h.incumbentDescriptors[first]);
    box.append(el('div', 'sparkline', `<h4>best ${first}</h4>` + sparkline(series)));
  }
  return box;
}

export function renderSummary(final: OptionView, trace: TraceRow[], history: ChoiceRecord[]): HTMLElement {
  const box = el('section', 'summary');
  box.append(el('h2', '', 'session finished'));
  box.append(el('div', '', paramsTable(final.x)));
  box.append(el('div', '', descriptorList(final.descriptors)));
  box.append(el('p', 'muted', `${trace.length} configurations evaluated, ${history.length} judgments given`));
  const first = Object.keys(history[0]?.incumbentDescriptors ?? {})[0];
  if (first) {
    const series = history.map((h) => h.incumbentDescriptors[first]);
    box.append(el('div', 'sparkline', `<h4>best ${first} over the session</h4>` + sparkline(series)));
  }
  return box;
}

export function renderBanner(message: string, onRetry?: () => void): HTMLElement {
  const banner = el('div', 'banner error');
  banner.append(el('span', '', message));
  const dismiss = el('button', 'dismiss', 'dismiss') as HTMLButtonElement;
  dismiss.addEventListener('click', () => banner.remove());
  banner.append(dismiss);
  if (onRetry) {
    const retry = el('button', 'retry', 'retry') as HTMLButtonElement;
    retry.addEventListener('click', () => {
      banner.remove();
      onRetry();
    });
    banner.append(retry);
  }
  return banner;
}
