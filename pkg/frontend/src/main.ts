/**
 * Page wiring: an editor, bound inputs, and the render pipeline.
 *
 * Edits debounce into /parse calls (re-rendering the diagram pane and
 * resizing the bound inputs to the process's impact dimension); the run
 * button and bound changes go to /synthesize. The synthesize button stays
 * disabled while the text fails to parse. All state lives in one Session
 * value; the view half of the page is re-rendered from scratch on every
 * change.
 */

import { ApiClient } from "./api.js";
import { renderSession } from "./render.js";
import {
  Session,
  initialSession,
  isParseError,
  withBound,
  withBusy,
  withParse,
  withResult,
  withText,
} from "./session.js";

const SAMPLE = `Cut[10,1]{1} ,
(Bend[20,2]{2} , (HP[25,3]{2} ^ [Nat: 1/5] LP[45,0]{1}))
  || (Mill[15,1]{1} , (FD[15,1]{1} / [Dep] RD[40,4]{1})),
(LPLS[30,3]{1} / [Paint] HPHS[50,1]{1})`;

export function mount(doc: Document, baseUrl: string): void {
  const app = doc.getElementById("app");
  if (!app) throw new Error("missing #app container");

  let client = new ApiClient(baseUrl);
  let session: Session = initialSession(SAMPLE, ["155", "7.5"]);

  const controls = doc.createElement("div");
  controls.className = "controls";

  const backendInput = doc.createElement("input");
  backendInput.className = "backend-url";
  backendInput.value = baseUrl;
  backendInput.title = "backend base URL";

  const editor = doc.createElement("textarea");
  editor.className = "editor";
  editor.rows = 8;
  editor.value = session.text;

  const boundBox = doc.createElement("div");
  boundBox.className = "bounds";

  const runButton = doc.createElement("button");
  runButton.className = "run";
  runButton.textContent = "synthesize";

  const view = doc.createElement("div");
  view.className = "view";

  controls.append(backendInput, editor, boundBox, runButton);
  app.append(controls, view);

  function redraw() {
    runButton.disabled = session.busy || isParseError(session.parse);
    syncBoundInputs();
    view.replaceChildren(renderSession(doc, session));
  }

  function syncBoundInputs() {
    const needed = session.bound.length;
    while (boundBox.children.length > needed) boundBox.lastChild!.remove();
    while (boundBox.children.length < needed) {
      const input = doc.createElement("input");
      input.type = "number";
      input.step = "0.1";
      input.className = "bound-component";
      const index = boundBox.children.length;
      input.addEventListener("change", () => {
        const bound = [...session.bound];
        bound[index] = input.value; // the exact decimal string, never a float
        session = withBound(session, bound);
      });
      boundBox.appendChild(input);
    }
    session.bound.forEach((v, i) => {
      (boundBox.children[i] as HTMLInputElement).value = v;
    });
  }

  let debounce: ReturnType<typeof setTimeout> | undefined;
  editor.addEventListener("input", () => {
    session = withText(session, editor.value);
    if (debounce !== undefined) clearTimeout(debounce);
    debounce = setTimeout(() => void reparse(), 300);
  });

  backendInput.addEventListener("change", () => {
    client = new ApiClient(backendInput.value);
    void reparse();
  });

  runButton.addEventListener("click", () => void synthesize());

  async function reparse() {
    const response = await client.parse(session.text);
    session = withParse(session, response);
    redraw();
  }

  async function synthesize() {
    session = withBusy(session, true);
    redraw();
    const response = await client.synthesize(session.text, session.bound);
    if (response === null) return; // superseded by a newer request
    session = withResult(session, response);
    redraw();
  }

  void reparse();
  redraw();
}
