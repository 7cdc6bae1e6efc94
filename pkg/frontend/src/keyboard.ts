/** Keyboard bindings.
 *
 * Digits 1-9 choose by displayed position, 0 records "cannot determine",
 * Enter submits the recall free-text field. Keystrokes aimed at a text
 * input pass through untouched except Enter, so typing a missing word
 * never triggers a positional choice.
 */

import type { App } from "./app.js";

export function bindKeyboard(target: EventTarget, app: App): () => void {
  const handler = (event: Event): void => {
    const key = (event as KeyboardEvent).key;
    const element = event.target as HTMLElement | null;
    const inInput = element !== null && element.tagName === "INPUT";

    if (inInput) {
      if (key === "Enter") {
        app.submitRecall((element as HTMLInputElement).value);
        event.preventDefault();
      }
      return;
    }
    if (key >= "1" && key <= "9") {
      app.choose(Number(key) - 1);
      event.preventDefault();
    } else if (key === "0") {
      app.chooseCannotDetermine();
      event.preventDefault();
    }
  };
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}
