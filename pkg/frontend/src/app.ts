// Session controller: one in-flight mutation, nonce-guarded choices,
// polling while the service computes the next candidate.

import { ApiError, Label, QueryView, SessionApi, SessionState } from './api.js';
import {
  ChoiceRecord,
  COLORS,
  el,
  renderBanner,
  renderHistory,
  renderOptionCard,
  renderSummary,
  renderTraces,
} from './view.js';

export type Phase = 'idle' | 'awaiting' | 'submitting' | 'computing' | 'finished' | 'error';

export interface SessionViewModel {
  id: string | null;
  phase: Phase;
  query: QueryView | null;
  history: ChoiceRecord[];
  finalOption: SessionState['final'] | null;
}

export interface AppOptions {
  pollIntervalMs?: number; // 1 s in production; tests shrink it
}

export class App {
  readonly api: SessionApi;
  private readonly root: HTMLElement;
  private readonly pollMs: number;
  private id: string | null = null;
  private phase: Phase = 'idle';
  private query: QueryView | null = null;
  private history: ChoiceRecord[] = [];
  private finalState: SessionState | null = null;
  private busy = false;

  constructor(root: HTMLElement, api: SessionApi, opts: AppOptions = {}) {
    this.root = root;
    this.api = api;
    this.pollMs = opts.pollIntervalMs ?? 1000;
  }

  vm(): SessionViewModel {
    return {
      id: this.id,
      phase: this.phase,
      query: this.query,
      history: [...this.history],
      finalOption: this.finalState?.final ?? null,
    };
  }

  async start(params: Record<string, unknown>): Promise<void> {
    try {
      const created = await this.api.createSession(params);
      this.id = created.id;
      this.query = created.query;
      this.phase = 'awaiting';
      this.pushSessionToUrl();
      this.render();
    } catch (err) {
      this.showError(err, () => void this.start(params));
    }
  }

  async resume(id: string): Promise<void> {
    this.id = id;
    try {
      await this.refresh();
    } catch (err) {
      this.id = null;
      this.showError(err);
    }
  }

  /** Post the user's judgment for the currently rendered query. */
  async choose(label: Label): Promise<void> {
    if (this.busy || this.phase !== 'awaiting' || !this.id || !this.query) {
      return; // double-click or stale input: exactly one submission goes out
    }
    this.busy = true;
    this.setButtonsEnabled(false);
    const q = this.query;
    this.history.push({
      iteration: q.iteration,
      label,
      incumbentDescriptors:
        label === -1 ? { ...q.candidate.descriptors } : { ...q.incumbent.descriptors },
    });
    try {
      const state = await this.api.postPreference(this.id, label, q.nonce);
      this.applyState(state);
    } catch (err) {
      this.history.pop();
      if (err instanceof ApiError && err.isConflict) {
        // another tab acted on this nonce: refetch and re-render
        await this.refresh();
      } else {
        this.showError(err);
      }
    } finally {
      this.busy = false;
    }
    this.render();
    if (this.vm().phase === 'computing') {
      void this.pollUntilReady();
    }
  }

  private applyState(state: SessionState): void {
    this.phase = (state.status === 'awaiting-preference' ? 'awaiting' : state.status) as Phase;
    if (state.status === 'awaiting-preference' && state.query) {
      this.query = state.query;
    } else if (state.status !== 'awaiting-preference') {
      this.query = null;
    }
    if (state.status === 'finished') {
      this.finalState = state;
    }
  }

  async refresh(): Promise<void> {
    if (!this.id) return;
    const state = await this.api.getSession(this.id);
    this.applyState(state);
    this.render();
    if (this.phase === 'computing') {
      void this.pollUntilReady();
    }
  }

  private polling = false;

  private async pollUntilReady(): Promise<void> {
    if (this.polling || !this.id) return;
    this.polling = true;
    try {
      while (this.phase === 'computing') {
        await sleep(this.pollMs);
        const doc = await this.api.getQuery(this.id);
        if ((doc as QueryView).nonce !== undefined) {
          this.query = doc as QueryView;
          this.phase = 'awaiting';
        } else if ((doc as { status?: string }).status !== 'computing') {
          await this.refresh();
          break;
        }
      }
      this.render();
    } catch (err) {
      if (err instanceof ApiError && err.isConflict) {
        await this.refresh(); // finished while we were polling
      } else {
        this.showError(err);
      }
    } finally {
      this.polling = false;
    }
  }

  private setButtonsEnabled(enabled: boolean): void {
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>('button.choice')) {
      btn.disabled = !enabled;
    }
  }

  private showError(err: unknown, retry?: () => void): void {
    const message = err instanceof Error ? err.message : String(err);
    this.root.prepend(renderBanner(message, retry));
    if (this.phase === 'idle') return; // banner only; no session state exists
    this.render(false);
  }

  private pushSessionToUrl(): void {
    if (typeof history !== 'undefined' && this.id) {
      const url = new URL(window.location.href);
      url.searchParams.set('session', this.id);
      history.replaceState(null, '', url.toString());
    }
  }

  render(clearBanners = true): void {
    const keep = clearBanners ? [] : Array.from(this.root.querySelectorAll('.banner'));
    this.root.textContent = '';
    for (const b of keep) this.root.append(b);

    if (this.phase === 'idle') return;
    const main = el('main', `phase-${this.phase}`);

    if (this.phase === 'computing') {
      main.append(el('p', 'computing', 'computing the next candidate...'));
    } else if (this.phase === 'finished' && this.finalState?.final) {
      main.append(
        renderSummary(this.finalState.final, this.finalState.trace ?? [], this.history),
      );
    } else if (this.phase === 'awaiting' && this.query) {
      const q = this.query;
      main.append(
        el('p', 'progress', `comparison ${q.iteration} &middot; ${q.remaining} queries left`),
      );
      const pair = el('div', 'pair');
      pair.append(renderOptionCard('A (new candidate)', q.candidate, COLORS.candidate));
      pair.append(renderOptionCard('B (current best)', q.incumbent, COLORS.incumbent));
      main.append(pair);
      main.append(renderTraces(q));
      const controls = el('div', 'controls');
      const buttons: Array<[string, Label]> = [
        ['A is better', -1],
        ['equivalent', 0],
        ['B is better', 1],
      ];
      for (const [text, label] of buttons) {
        const btn = el('button', 'choice', text) as HTMLButtonElement;
        btn.dataset.label = String(label);
        btn.addEventListener('click', () => void this.choose(label));
        controls.append(btn);
      }
      main.append(controls);
    } else if (this.phase === 'error') {
      main.append(el('p', 'error', this.finalState?.error ?? 'session failed'));
    }
    if (this.history.length > 0 && this.phase !== 'finished') {
      main.append(renderHistory(this.history));
    }
    this.root.append(main);
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
