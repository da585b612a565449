/** Shared shapes of the annotation service JSON API. */

export const SCORE_DIMENSIONS = [
  'actionability',
  'specificity',
  'groundedness',
  'relevance',
  'helpfulness',
] as const;

export type Dimension = (typeof SCORE_DIMENSIONS)[number];

export type TaskKind =
  | 'pairwise_preference'
  | 'pointwise_rating'
  | 'mapping_verification';

export interface CandidateView {
  slot: string;
  text: string;
}

export interface ApiTask {
  task_id: string;
  kind: TaskKind;
  payload: {
    paper_id?: string;
    text?: string;
    perspective?: string;
    candidates?: CandidateView[];
    segment_id?: string;
    segment_text?: string;
    rebuttal_text?: string;
  };
  display_order_seed: number;
  rubric_anchors: Record<string, string> | null;
}

export type NextTaskResponse =
  | { status: 'ok'; task: ApiTask }
  | { status: 'no_tasks' };

export type Preference = 'A' | 'B' | 'Tie';

export type AnnotationResult =
  | { preference: Preference }
  | { scores: Record<Dimension, number> }
  | { gold_span_range: [number, number] }
  | { no_response: true };

export interface AnnotationRecord {
  task_id: string;
  annotator_id: string;
  result: AnnotationResult;
}

export interface SubmitResponse {
  status: string;
  duplicate: boolean;
}

export interface Progress {
  tasks: number;
  annotators: number;
  coverage_target: number;
  assigned: number;
  submitted: number;
  total_slots: number;
}
