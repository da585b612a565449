import { TaskState, tokenizeRebuttal } from './state.js';
import { type ApiTask, type Preference, SCORE_DIMENSIONS } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface TaskViewHandle {
  root: HTMLElement;
  state: TaskState;
  submitButton: HTMLButtonElement;
  errorBox: HTMLElement;
  /** Re-evaluate submit gating and span highlighting after a state change. */
  refresh(): void;
}

function anchorLegend(anchors: Record<string, string>): string {
  return Object.keys(anchors)
    .sort()
    .map((k) => `${k}=${anchors[k]}`)
    .join(' … ');
}

function renderPairwise(doc: Document, task: ApiTask, state: TaskState, refresh: () => void): HTMLElement {
  const wrap = el(doc, 'div', 'pairwise');
  const panels = el(doc, 'div', 'panels');
  for (const candidate of task.payload.candidates ?? []) {
    const panel = el(doc, 'section', 'candidate-panel');
    panel.appendChild(el(doc, 'h3', 'slot-label', candidate.slot));
    panel.appendChild(el(doc, 'p', 'candidate-text', candidate.text));
    panels.appendChild(panel);
  }
  wrap.appendChild(panels);
  const choice = el(doc, 'fieldset', 'preference-choice');
  choice.appendChild(el(doc, 'legend', undefined, 'Which feedback is better?'));
  for (const value of ['A', 'B', 'Tie'] as Preference[]) {
    const label = el(doc, 'label', 'preference-option');
    const input = el(doc, 'input');
    input.type = 'radio';
    input.name = 'preference';
    input.value = value;
    input.addEventListener('change', () => {
      state.preference = value;
      refresh();
    });
    label.appendChild(input);
    label.appendChild(doc.createTextNode(value));
    choice.appendChild(label);
  }
  wrap.appendChild(choice);
  return wrap;
}

function renderPointwise(doc: Document, task: ApiTask, state: TaskState, refresh: () => void): HTMLElement {
  const wrap = el(doc, 'div', 'pointwise');
  if (task.payload.text) {
    wrap.appendChild(el(doc, 'p', 'candidate-text', task.payload.text));
  }
  const anchors = task.rubric_anchors ?? {};
  wrap.appendChild(el(doc, 'p', 'rubric-legend', anchorLegend(anchors)));
  const table = el(doc, 'table', 'rubric');
  for (const dimension of SCORE_DIMENSIONS) {
    const row = el(doc, 'tr', 'rubric-row');
    row.appendChild(el(doc, 'th', undefined, dimension));
    for (let value = 1; value <= 5; value++) {
      const cell = el(doc, 'td');
      const label = el(doc, 'label');
      label.title = `${value}=${anchors[String(value)] ?? value}`;
      const input = el(doc, 'input');
      input.type = 'radio';
      input.name = `score-${dimension}`;
      input.value = String(value);
      input.addEventListener('change', () => {
        state.setScore(dimension, value);
        refresh();
      });
      label.appendChild(input);
      label.appendChild(doc.createTextNode(String(value)));
      cell.appendChild(label);
      row.appendChild(cell);
    }
    table.appendChild(row);
  }
  wrap.appendChild(table);
  return wrap;
}

function renderMapping(doc: Document, task: ApiTask, state: TaskState, refresh: () => void): HTMLElement {
  const wrap = el(doc, 'div', 'mapping');
  wrap.appendChild(el(doc, 'h3', undefined, 'Review point'));
  wrap.appendChild(el(doc, 'p', 'segment-text', task.payload.segment_text ?? ''));
  wrap.appendChild(el(doc, 'h3', undefined, 'Rebuttal'));
  const tokenBox = el(doc, 'p', 'rebuttal-tokens');
  tokenizeRebuttal(task.payload.rebuttal_text ?? '').forEach((token, index) => {
    const span = el(doc, 'span', 'token', token);
    span.dataset.index = String(index);
    span.addEventListener('click', () => {
      state.selectToken(index);
      refresh();
    });
    tokenBox.appendChild(span);
    tokenBox.appendChild(doc.createTextNode(' '));
  });
  wrap.appendChild(tokenBox);
  const label = el(doc, 'label', 'no-response');
  const checkbox = el(doc, 'input');
  checkbox.type = 'checkbox';
  checkbox.name = 'no_response';
  checkbox.addEventListener('change', () => {
    state.setNoResponse(checkbox.checked);
    refresh();
  });
  label.appendChild(checkbox);
  label.appendChild(doc.createTextNode('No response in the rebuttal'));
  wrap.appendChild(label);
  return wrap;
}

/** Build the interactive DOM for one task; events mutate the TaskState. */
export function renderTask(doc: Document, task: ApiTask): TaskViewHandle {
  const state = new TaskState(task);
  const root = el(doc, 'div', `task task-${task.kind}`);
  const header = el(doc, 'div', 'task-header');
  if (task.payload.perspective) {
    header.appendChild(el(doc, 'span', 'perspective', task.payload.perspective));
  }
  if (task.payload.paper_id) {
    header.appendChild(el(doc, 'span', 'paper-id', task.payload.paper_id));
  }
  root.appendChild(header);

  const refresh = () => handle.refresh();
  if (task.kind === 'pairwise_preference') {
    root.appendChild(renderPairwise(doc, task, state, refresh));
  } else if (task.kind === 'pointwise_rating') {
    root.appendChild(renderPointwise(doc, task, state, refresh));
  } else {
    root.appendChild(renderMapping(doc, task, state, refresh));
  }

  const errorBox = el(doc, 'p', 'error-box');
  errorBox.hidden = true;
  root.appendChild(errorBox);
  const submitButton = el(doc, 'button', 'submit', 'Submit');
  submitButton.disabled = true;
  root.appendChild(submitButton);

  const handle: TaskViewHandle = {
    root,
    state,
    submitButton,
    errorBox,
    refresh() {
      submitButton.disabled = !state.isComplete();
      const tokens = root.querySelectorAll<HTMLSpanElement>('.token');
      tokens.forEach((span) => {
        const index = Number(span.dataset.index);
        const selected =
          !state.noResponse &&
          state.spanStart !== null &&
          index >= state.spanStart &&
          (state.spanEnd === null ? index === state.spanStart : index < state.spanEnd);
        span.classList.toggle('selected', selected);
        span.classList.toggle('disabled', state.noResponse);
      });
    },
  };
  return handle;
}

/** Map a keypress to a state mutation; returns whether anything changed. */
export function applyShortcut(handle: TaskViewHandle, key: string): boolean {
  const { state } = handle;
  if (state.task.kind === 'pairwise_preference') {
    const byKey: Record<string, Preference> = { a: 'A', b: 'B', t: 'Tie' };
    const pref = byKey[key.toLowerCase()];
    if (!pref) return false;
    state.preference = pref;
    handle.refresh();
    return true;
  }
  if (state.task.kind === 'pointwise_rating' && /^[1-5]$/.test(key)) {
    // fill dimensions in rubric order, one keypress each
    const next = SCORE_DIMENSIONS.find((d) => state.scores[d] === undefined);
    if (!next) return false;
    state.setScore(next, Number(key));
    handle.refresh();
    return true;
  }
  return false;
}
