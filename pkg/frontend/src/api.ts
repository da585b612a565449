import type {
  AnnotationRecord,
  NextTaskResponse,
  Progress,
  SubmitResponse,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Error carrying the HTTP status so the UI can branch on 409 vs the rest. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function throwFor(resp: Response): Promise<never> {
  let detail = `HTTP ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === 'string') detail = body.detail;
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ApiError(resp.status, detail);
}

/** Thin typed client over the service API; fetch is injectable for tests. */
export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    private readonly base = '',
  ) {}

  async nextTask(annotator: string): Promise<NextTaskResponse> {
    const resp = await this.fetchFn(
      `${this.base}/api/tasks/next?annotator=${encodeURIComponent(annotator)}`,
    );
    if (!resp.ok) await throwFor(resp);
    return resp.json();
  }

  async submit(record: AnnotationRecord): Promise<SubmitResponse> {
    const resp = await this.fetchFn(`${this.base}/api/records`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(record),
    });
    if (!resp.ok) await throwFor(resp);
    return resp.json();
  }

  async progress(): Promise<Progress> {
    const resp = await this.fetchFn(`${this.base}/api/progress`);
    if (!resp.ok) await throwFor(resp);
    return resp.json();
  }
}
