// Bootstrap: resume the session named in the URL, or show the start form.

import { SessionApi } from './api.js';
import { App } from './app.js';
import { el } from './view.js';

const PROBLEMS = [
  { name: 'susp2d', label: 'suspension damping (2 parameters)' },
  { name: 'susp4d', label: 'suspension damping + stiffness (4 parameters)' },
  { name: 'analytical', label: 'analytical benchmark (7 parameters)' },
];

export function boot(root: HTMLElement, base = ''): App {
  const api = new SessionApi(base);
  const app = new App(root, api);
  const params = new URLSearchParams(window.location.search);
  const existing = params.get('session');
  if (existing) {
    void app.resume(existing);
    return app;
  }

  const form = el('form', 'start-form') as HTMLFormElement;
  form.innerHTML = `
    <h2>start a tuning session</h2>
    <label>problem
      <select name="problem">
        ${PROBLEMS.map((p) => `<option value="${p.name}">${p.label}</option>`).join('')}
      </select>
    </label>
    <label>queries <input name="budget" type="number" value="20" min="4"/></label>
    <label>seed <input name="seed" type="number" value="0"/></label>
    <label>mode
      <select name="mode">
        <option value="regularized">sensor-guided</option>
        <option value="baseline">preference-only</option>
      </select>
    </label>
    <button type="submit">start</button>
  `;
  form.addEventListener('submit', (ev) => {
    ev.preventDefault();
    const data = new FormData(form);
    form.remove();
    void app.start({
      problem: String(data.get('problem')),
      budget: Number(data.get('budget')),
      seed: Number(data.get('seed')),
      mode: String(data.get('mode')),
    });
  });
  root.append(form);
  return app;
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  boot(document.getElementById('app') as HTMLElement);
}
