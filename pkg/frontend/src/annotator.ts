/** Annotator identity resolution.
 *
 * Priority: explicit ?annotator= query parameter, then the id remembered
 * from a previous visit. Everything else about a session lives on the
 * server, so this is the only client-side persistence.
 */

const STORAGE_KEY = "lexsel.annotator";

export function resolveAnnotatorId(win: Window): string | null {
  const fromUrl = new URL(win.location.href).searchParams.get("annotator");
  if (fromUrl !== null && fromUrl.trim() !== "") {
    rememberAnnotatorId(win, fromUrl.trim());
    return fromUrl.trim();
  }
  try {
    return win.localStorage.getItem(STORAGE_KEY);
  } catch {
    return null;
  }
}

export function rememberAnnotatorId(win: Window, id: string): void {
  try {
    win.localStorage.setItem(STORAGE_KEY, id);
  } catch {
    // private browsing; the query parameter still works
  }
}

/** Render a minimal id form into root; resolves with the submitted id. */
export function askAnnotatorId(root: HTMLElement): Promise<string> {
  const doc = root.ownerDocument;
  return new Promise((resolve) => {
    root.textContent = "";
    const form = doc.createElement("form");
    form.className = "annotator-form";
    const label = doc.createElement("label");
    label.textContent = "Annotator id";
    const input = doc.createElement("input");
    input.type = "text";
    input.name = "annotator";
    const button = doc.createElement("button");
    button.type = "submit";
    button.textContent = "Start";
    label.appendChild(input);
    form.appendChild(label);
    form.appendChild(button);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const value = input.value.trim();
      if (value !== "") {
        resolve(value);
      }
    });
    root.appendChild(form);
    input.focus();
  });
}
