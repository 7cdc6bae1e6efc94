/** Wire types for the annotation service's /api/v1 endpoints.
 *
 * These mirror the server's JSON shapes verbatim; the UI never re-sorts or
 * augments them. Candidate order in a payload is the presentation order.
 */

export const KIND_LEXICAL_SELECTION = "lexical_selection";
export const KIND_RULE_VERIFICATION = "rule_verification";
export const KIND_VARIATION_PRECISION = "variation_precision";
export const KIND_VARIATION_RECALL = "variation_recall";

/** Judgment value for "the sentence does not determine the choice". */
export const CANNOT_DETERMINE = "cannot_determine";

/** Verdict values for rule and variation verification tasks. */
export const VERDICT_CORRECT = "correct";
export const VERDICT_INCORRECT = "incorrect";

export interface ConceptRef {
  lemma: string;
  pos: string;
}

export interface SelectionPayload {
  ref: string;
  concept: ConceptRef;
  source_tokens: string[];
  concept_index: number;
  candidates: string[];
}

export interface RulePayload {
  ref: string;
  concept: ConceptRef;
  variation: string;
  rule_text: string;
}

export interface PrecisionPayload {
  ref: string;
  concept: ConceptRef;
  variation: string;
}

export interface RecallPayload {
  ref: string;
  concept: ConceptRef;
  variations: string[];
}

export type TaskPayload =
  | SelectionPayload
  | RulePayload
  | PrecisionPayload
  | RecallPayload;

export interface TaskView {
  id: string;
  kind: string;
  payload: TaskPayload;
  annotator_id: string;
  presentation_seed: number;
}

export interface SessionInfo {
  id: string;
  kind: string;
  annotator_ids: string[];
  total_tasks: number;
}

export interface Progress {
  done: number;
  total: number;
}

export interface JudgmentSubmission {
  task_id: string;
  annotator_id: string;
  value: string;
}
