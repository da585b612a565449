import { ApiClient, ApiError } from './api.js';
import type { ApiTask } from './types.js';
import { applyShortcut, renderTask, type TaskViewHandle } from './view.js';

export interface AppOptions {
  annotator: string;
  client: ApiClient;
  container: HTMLElement;
}

/**
 * Annotation session driver: fetch a task, render it, submit on click,
 * advance to the next task on ack.  The server owns assignment; the
 * client only ever asks for "next".
 */
export class App {
  current: TaskViewHandle | null = null;
  done = false;

  private readonly doc: Document;
  private readonly progressBar: HTMLProgressElement;
  private readonly progressText: HTMLElement;
  private readonly taskSlot: HTMLElement;
  private readonly statusBox: HTMLElement;

  constructor(private readonly options: AppOptions) {
    this.doc = options.container.ownerDocument;
    options.container.replaceChildren();
    const bar = this.doc.createElement('div');
    bar.className = 'progress-area';
    this.progressBar = this.doc.createElement('progress');
    this.progressBar.max = 1;
    this.progressBar.value = 0;
    this.progressText = this.doc.createElement('span');
    this.progressText.className = 'progress-text';
    bar.appendChild(this.progressBar);
    bar.appendChild(this.progressText);
    options.container.appendChild(bar);
    this.taskSlot = this.doc.createElement('div');
    this.taskSlot.className = 'task-slot';
    options.container.appendChild(this.taskSlot);
    this.statusBox = this.doc.createElement('p');
    this.statusBox.className = 'status-box';
    options.container.appendChild(this.statusBox);
    this.doc.addEventListener('keydown', (event) => this.onKey(event));
  }

  async start(): Promise<void> {
    await this.refreshProgress();
    await this.advance();
  }

  private async refreshProgress(): Promise<void> {
    try {
      const p = await this.options.client.progress();
      this.progressBar.max = Math.max(p.total_slots, 1);
      this.progressBar.value = p.submitted;
      this.progressText.textContent = `${p.submitted} / ${p.total_slots} annotations`;
    } catch {
      this.progressText.textContent = 'progress unavailable';
    }
  }

  private async advance(): Promise<void> {
    let next;
    try {
      next = await this.options.client.nextTask(this.options.annotator);
    } catch (err) {
      this.statusBox.textContent = `Could not fetch a task: ${(err as Error).message}. Reload to retry.`;
      return;
    }
    if (next.status === 'no_tasks') {
      this.done = true;
      this.current = null;
      this.taskSlot.replaceChildren();
      this.statusBox.textContent = 'All assigned tasks are done. Thank you!';
      return;
    }
    this.mount(next.task);
  }

  private mount(task: ApiTask): void {
    const handle = renderTask(this.doc, task);
    handle.submitButton.addEventListener('click', () => void this.submit());
    this.current = handle;
    this.taskSlot.replaceChildren(handle.root);
    this.statusBox.textContent = '';
  }

  async submit(): Promise<void> {
    const handle = this.current;
    if (!handle || !handle.state.isComplete()) return;
    handle.errorBox.hidden = true;
    try {
      await this.options.client.submit({
        task_id: handle.state.task.task_id,
        annotator_id: this.options.annotator,
        result: handle.state.toResult(),
      });
    } catch (err) {
      // keep the rendered inputs; show the server's complaint inline
      handle.errorBox.hidden = false;
      handle.errorBox.textContent =
        err instanceof ApiError && err.status === 409
          ? `Already recorded differently: ${err.message}`
          : `Submit failed: ${(err as Error).message}`;
      return;
    }
    await this.refreshProgress();
    await this.advance();
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.current) return;
    const target = event.target as HTMLElement | null;
    if (target && ['INPUT', 'TEXTAREA'].includes(target.tagName)) return;
    if (event.key === 'Enter' && this.current.state.isComplete()) {
      void this.submit();
      return;
    }
    applyShortcut(this.current, event.key);
  }
}
