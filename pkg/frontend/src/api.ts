// Typed client for the tuning-session HTTP API (JSON envelope v1).

export interface TraceSignals {
  time: number[];
  a_z: number[];
  pitch_rate: number[];
}

export interface OptionView {
  x: number[];
  descriptors: Record<string, number>;
  trace?: TraceSignals;
}

export interface QueryView {
  v: number;
  status: string;
  nonce: string;
  iteration: number;
  remaining: number;
  candidate: OptionView;
  incumbent: OptionView;
}

export interface ComputingNotice {
  v: number;
  status: 'computing';
  retry_after: number;
}

export interface TraceRow {
  iteration: number;
  y_best: number | null;
  lambda_ls: number | null;
  lambda_beta: number | null;
  epsilon: number | null;
  candidate: number[];
  incumbent_index: number;
  incumbent: number[];
}

export interface SessionState {
  v: number;
  id: string;
  problem: string | null;
  mode: string;
  status: string;
  budget: number;
  iteration: number;
  retry_after?: number;
  query?: QueryView;
  final?: OptionView;
  trace?: TraceRow[];
  error?: string;
}

export interface CreateResponse {
  v: number;
  id: string;
  query: QueryView;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly fields: Record<string, unknown> = {},
  ) {
    super(message);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

export type Label = -1 | 0 | 1;

export class SessionApi {
  constructor(private readonly base: string = '') {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, {
        method,
        headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    let doc: any = {};
    try {
      doc = await resp.json();
    } catch {
      // non-JSON error body: fall through with status only
    }
    if (!resp.ok && resp.status !== 202) {
      throw new ApiError(resp.status, doc.error ?? `HTTP ${resp.status}`, doc.fields ?? {});
    }
    return doc as T;
  }

  createSession(params: Record<string, unknown>): Promise<CreateResponse> {
    return this.call<CreateResponse>('POST', '/sessions', params);
  }

  getSession(id: string): Promise<SessionState> {
    return this.call<SessionState>('GET', `/sessions/${id}`);
  }

  getQuery(id: string): Promise<QueryView | ComputingNotice> {
    return this.call<QueryView | ComputingNotice>('GET', `/sessions/${id}/query`);
  }

  postPreference(id: string, label: Label, nonce: string): Promise<SessionState> {
    return this.call<SessionState>('POST', `/sessions/${id}/preference`, { label, nonce });
  }

  getTrace(id: string): Promise<{ v: number; id: string; rows: TraceRow[] }> {
    return this.call('GET', `/sessions/${id}/trace`);
  }
}
