/** DOM builders for task views.
 *
 * All data lands via textContent, never markup. Candidates render in the
 * exact array order the server sent; numbering is positional, so the digit
 * a key press submits always matches what the annotator sees.
 */

import {
  KIND_LEXICAL_SELECTION,
  KIND_RULE_VERIFICATION,
  KIND_VARIATION_PRECISION,
  KIND_VARIATION_RECALL,
} from "./types.js";
import type {
  PrecisionPayload,
  Progress,
  RecallPayload,
  RulePayload,
  SelectionPayload,
  TaskView,
} from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function keyHint(doc: Document, key: string, label: string): HTMLElement {
  const wrap = el(doc, "span", "key-hint");
  wrap.appendChild(el(doc, "kbd", undefined, key));
  wrap.appendChild(doc.createTextNode(" " + label));
  return wrap;
}

/** Source sentence with the concept occurrence marked. */
export function renderSentence(
  doc: Document,
  payload: SelectionPayload,
): HTMLElement {
  const p = el(doc, "p", "sentence");
  payload.source_tokens.forEach((token, i) => {
    if (i > 0) {
      p.appendChild(doc.createTextNode(" "));
    }
    if (i === payload.concept_index) {
      p.appendChild(el(doc, "mark", "concept-word", token));
    } else {
      p.appendChild(doc.createTextNode(token));
    }
  });
  return p;
}

function renderSelection(doc: Document, payload: SelectionPayload): HTMLElement {
  const box = el(doc, "div", "task-body task-selection");
  box.appendChild(
    el(doc, "h2", undefined, "Which word belongs in this sentence?"),
  );
  box.appendChild(renderSentence(doc, payload));
  const list = el(doc, "ol", "candidates");
  payload.candidates.forEach((candidate, i) => {
    const item = el(doc, "li", "candidate");
    item.dataset.value = candidate;
    item.appendChild(el(doc, "kbd", undefined, String(i + 1)));
    item.appendChild(el(doc, "span", "candidate-text", candidate));
    list.appendChild(item);
  });
  box.appendChild(list);
  const escape = el(doc, "div", "cannot-determine");
  escape.appendChild(keyHint(doc, "0", "cannot determine from this sentence"));
  box.appendChild(escape);
  return box;
}

function renderRule(doc: Document, payload: RulePayload): HTMLElement {
  const box = el(doc, "div", "task-body task-rule");
  box.appendChild(
    el(
      doc,
      "h2",
      undefined,
      `Is this rule for "${payload.variation}" (${payload.concept.lemma}) correct?`,
    ),
  );
  box.appendChild(el(doc, "blockquote", "rule-text", payload.rule_text));
  box.appendChild(renderVerdicts(doc));
  return box;
}

function renderPrecision(doc: Document, payload: PrecisionPayload): HTMLElement {
  const box = el(doc, "div", "task-body task-precision");
  box.appendChild(
    el(
      doc,
      "h2",
      undefined,
      `Is "${payload.variation}" a real translation of "${payload.concept.lemma}"?`,
    ),
  );
  box.appendChild(renderVerdicts(doc));
  return box;
}

function renderVerdicts(doc: Document): HTMLElement {
  const row = el(doc, "div", "verdicts");
  const yes = el(doc, "button", "verdict");
  yes.dataset.verdict = "correct";
  yes.appendChild(keyHint(doc, "1", "correct"));
  const no = el(doc, "button", "verdict");
  no.dataset.verdict = "incorrect";
  no.appendChild(keyHint(doc, "2", "incorrect"));
  row.appendChild(yes);
  row.appendChild(no);
  return row;
}

function renderRecall(doc: Document, payload: RecallPayload): HTMLElement {
  const box = el(doc, "div", "task-body task-recall");
  box.appendChild(
    el(
      doc,
      "h2",
      undefined,
      `Are translations of "${payload.concept.lemma}" missing from this list?`,
    ),
  );
  const list = el(doc, "ul", "variations");
  for (const variation of payload.variations) {
    list.appendChild(el(doc, "li", undefined, variation));
  }
  box.appendChild(list);
  const input = el(doc, "input", "missing-input");
  input.type = "text";
  input.placeholder = "missing words, comma separated; leave empty for none";
  box.appendChild(input);
  box.appendChild(
    el(doc, "p", "hint", "Press Enter to submit."),
  );
  return box;
}

export function renderTask(doc: Document, task: TaskView): HTMLElement {
  switch (task.kind) {
    case KIND_LEXICAL_SELECTION:
      return renderSelection(doc, task.payload as SelectionPayload);
    case KIND_RULE_VERIFICATION:
      return renderRule(doc, task.payload as RulePayload);
    case KIND_VARIATION_PRECISION:
      return renderPrecision(doc, task.payload as PrecisionPayload);
    case KIND_VARIATION_RECALL:
      return renderRecall(doc, task.payload as RecallPayload);
    default:
      throw new Error(`unknown task kind ${task.kind}`);
  }
}

export function renderProgress(doc: Document, progress: Progress): HTMLElement {
  const wrap = el(doc, "div", "progress");
  const bar = el(doc, "div", "progress-bar");
  const fill = el(doc, "div", "progress-fill");
  const percent =
    progress.total === 0 ? 0 : Math.round((100 * progress.done) / progress.total);
  fill.style.width = `${percent}%`;
  bar.appendChild(fill);
  wrap.appendChild(bar);
  wrap.appendChild(
    el(doc, "span", "progress-text", `${progress.done} / ${progress.total}`),
  );
  return wrap;
}

export function renderCompletion(doc: Document, total: number): HTMLElement {
  const box = el(doc, "div", "completion");
  box.appendChild(el(doc, "h2", undefined, "Session complete"));
  box.appendChild(
    el(
      doc,
      "p",
      undefined,
      `All ${total} of your tasks are answered. Thank you.`,
    ),
  );
  return box;
}
