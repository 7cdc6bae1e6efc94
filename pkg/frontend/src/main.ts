/** Browser entry point: resolve who is annotating, then run the session. */

import { ApiClient } from "./api.js";
import { App } from "./app.js";
import {
  askAnnotatorId,
  rememberAnnotatorId,
  resolveAnnotatorId,
} from "./annotator.js";
import { bindKeyboard } from "./keyboard.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) {
    throw new Error("missing #app root element");
  }
  let annotatorId = resolveAnnotatorId(window);
  if (annotatorId === null) {
    annotatorId = await askAnnotatorId(root);
    rememberAnnotatorId(window, annotatorId);
  }
  const app = new App(root, new ApiClient(), annotatorId);
  bindKeyboard(document, app);
  await app.start();
}

void boot();
