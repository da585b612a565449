import {
  type AnnotationResult,
  type ApiTask,
  type Dimension,
  type Preference,
  SCORE_DIMENSIONS,
} from './types.js';

/**
 * Client-side state for the task being annotated.  Submit stays gated
 * on isComplete(); toResult() is only defined once complete.
 */
export class TaskState {
  preference: Preference | null = null;
  scores: Partial<Record<Dimension, number>> = {};
  spanStart: number | null = null;
  spanEnd: number | null = null;
  noResponse = false;

  constructor(readonly task: ApiTask) {}

  setScore(dimension: Dimension, value: number): void {
    if (value < 1 || value > 5 || !Number.isInteger(value)) {
      throw new Error(`score ${value} outside 1..5`);
    }
    this.scores[dimension] = value;
  }

  /** First click sets the start token, second click the end token. */
  selectToken(index: number): void {
    if (this.noResponse) return;
    if (this.spanStart === null || this.spanEnd !== null) {
      this.spanStart = index;
      this.spanEnd = null;
    } else {
      const [lo, hi] =
        index < this.spanStart ? [index, this.spanStart] : [this.spanStart, index];
      this.spanStart = lo;
      this.spanEnd = hi + 1; // half-open [start, end)
    }
  }

  setNoResponse(on: boolean): void {
    this.noResponse = on;
    if (on) {
      this.spanStart = null;
      this.spanEnd = null;
    }
  }

  isComplete(): boolean {
    switch (this.task.kind) {
      case 'pairwise_preference':
        return this.preference !== null;
      case 'pointwise_rating':
        return SCORE_DIMENSIONS.every((d) => this.scores[d] !== undefined);
      case 'mapping_verification':
        return this.noResponse || (this.spanStart !== null && this.spanEnd !== null);
    }
  }

  toResult(): AnnotationResult {
    if (!this.isComplete()) throw new Error('task incomplete');
    switch (this.task.kind) {
      case 'pairwise_preference':
        return { preference: this.preference! };
      case 'pointwise_rating': {
        const scores = {} as Record<Dimension, number>;
        for (const d of SCORE_DIMENSIONS) scores[d] = this.scores[d]!;
        return { scores };
      }
      case 'mapping_verification':
        if (this.noResponse) return { no_response: true };
        return { gold_span_range: [this.spanStart!, this.spanEnd!] };
    }
  }
}

/** Whitespace tokenization used for span granularity in mapping tasks. */
export function tokenizeRebuttal(text: string): string[] {
  return text.split(/\s+/).filter((t) => t.length > 0);
}
