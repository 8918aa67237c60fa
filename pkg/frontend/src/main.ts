/** Entry point: wires the DOM chrome to the session and the viewport. */

import { ApiClient } from "./api";
import { keptCount } from "./mask";
import { Mode, ViewerSession } from "./state";
import { Viewport } from "./viewer";

const GENERATOR_KINDS = ["elongated", "bent_tube", "torus", "thin_ring", "sphere", "box", "block"];

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector<T>(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el;
};

const session = new ViewerSession(new ApiClient(""));
const statusEl = $<HTMLSpanElement>("#status");

function setStatus(message: string, isError = false): void {
  statusEl.textContent = message;
  statusEl.classList.toggle("error", isError);
}

const viewport = new Viewport($("#viewport"), session, {
  changed: () => render(),
  error: (message) => setStatus(message, true),
});

const modeButtons = [...document.querySelectorAll<HTMLButtonElement>(".modes button")];
const staleBadge = $<HTMLSpanElement>("#stale-badge");
const genKind = $<HTMLSelectElement>("#gen-kind");
const assetList = $<HTMLUListElement>("#asset-list");
const instList = $<HTMLUListElement>("#inst-list");
const brushMode = $<HTMLButtonElement>("#brush-mode");
const brushRadius = $<HTMLInputElement>("#brush-radius");
const instAdd = $<HTMLButtonElement>("#inst-add");
const instDup = $<HTMLButtonElement>("#inst-dup");
const instDel = $<HTMLButtonElement>("#inst-del");
const composeBtn = $<HTMLButtonElement>("#compose");
const exportBtn = $<HTMLButtonElement>("#export");

for (const kind of GENERATOR_KINDS) {
  const opt = document.createElement("option");
  opt.value = kind;
  opt.textContent = kind;
  genKind.appendChild(opt);
}

function itemRow(label: string, meta: string, selected: boolean, onSelect: () => void, onDelete: () => void): HTMLLIElement {
  const li = document.createElement("li");
  li.classList.toggle("selected", selected);
  const name = document.createElement("span");
  name.textContent = label;
  const right = document.createElement("span");
  right.className = "meta";
  right.textContent = meta;
  const del = document.createElement("button");
  del.textContent = "✕";
  del.title = "Delete";
  del.style.cssText = "background:none;border:none;color:inherit;cursor:pointer;padding:0 2px";
  del.addEventListener("click", (e) => {
    e.stopPropagation();
    onDelete();
  });
  li.append(name, right, del);
  li.addEventListener("click", onSelect);
  return li;
}

function render(): void {
  for (const btn of modeButtons) {
    btn.classList.toggle("active", btn.dataset["mode"] === session.mode);
  }
  staleBadge.classList.toggle("on", session.stale);

  assetList.replaceChildren(
    ...[...session.assets.values()].map((asset) =>
      itemRow(
        asset.id,
        `${keptCount(asset.mask)}/${asset.nVertices} kept`,
        asset.id === session.selectedAsset,
        () => {
          session.selectedAsset = asset.id;
          render();
        },
        () => run(`deleted ${asset.id}`, () => session.deleteAsset(asset.id)),
      ),
    ),
  );
  instList.replaceChildren(
    ...session.instanceOrder.map((iid) => {
      const inst = session.instances.get(iid)!;
      return itemRow(
        iid,
        inst.assetId,
        iid === session.selectedInstance,
        () => {
          session.selectedInstance = iid;
          render();
        },
        () => run(`deleted ${iid}`, () => session.deleteInstance(iid)),
      );
    }),
  );

  brushMode.textContent = session.brush.mode === "keep" ? "Keep" : "Drop";
  brushMode.className = session.brush.mode;
  instAdd.disabled = !session.selectedAsset;
  instDup.disabled = !session.selectedInstance;
  instDel.disabled = !session.selectedInstance;
  composeBtn.disabled = session.composing || session.instanceOrder.length === 0;
  composeBtn.textContent = session.composing ? "Composing…" : "Compose";
  exportBtn.disabled = !session.resultMesh;

  viewport.sync();
}

/** Run a mutation, then re-render; failures land in the status line. */
function run(doneMessage: string, fn: () => Promise<unknown>): void {
  void fn()
    .then(() => {
      setStatus(`${doneMessage} · rev ${session.sceneRevision}`);
      render();
    })
    .catch((err) => {
      setStatus(session.lastError ?? String(err), true);
      render();
    });
}

for (const btn of modeButtons) {
  btn.addEventListener("click", () => {
    session.setMode(btn.dataset["mode"] as Mode);
    render();
  });
}

$<HTMLButtonElement>("#gen-add").addEventListener("click", () => {
  const kind = genKind.value;
  run(`added ${kind}`, () => session.addGeneratedAsset({ kind }));
});

$<HTMLInputElement>("#upload").addEventListener("change", async (e) => {
  const input = e.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) return;
  const text = await file.text();
  input.value = "";
  run(`uploaded ${file.name}`, () => session.uploadAsset(file.name, text));
});

brushMode.addEventListener("click", () => {
  session.brush.mode = session.brush.mode === "keep" ? "drop" : "keep";
  render();
});
brushRadius.addEventListener("input", () => {
  session.brush.radius = Number(brushRadius.value);
});

instAdd.addEventListener("click", () => {
  const aid = session.selectedAsset;
  if (aid) run(`placed ${aid}`, () => session.addInstance(aid));
});
instDup.addEventListener("click", () => {
  const iid = session.selectedInstance;
  if (iid) run(`duplicated ${iid}`, () => session.duplicateInstance(iid));
});
instDel.addEventListener("click", () => {
  const iid = session.selectedInstance;
  if (iid) run(`deleted ${iid}`, () => session.deleteInstance(iid));
});

composeBtn.addEventListener("click", () => {
  render(); // show the composing label straight away
  run("composed", () => session.composeAndInspect());
});

exportBtn.addEventListener("click", () => {
  run("exported", async () => {
    const { filename, obj } = await session.exportResult();
    const url = URL.createObjectURL(new Blob([obj], { type: "model/obj" }));
    const a = document.createElement("a");
    a.href = url;
    a.download = filename;
    a.click();
    URL.revokeObjectURL(url);
  });
});

void session
  .start()
  .then(() => {
    setStatus(`session ${session.sessionId} · rev ${session.sceneRevision}`);
    render();
  })
  .catch((err) => setStatus(`cannot reach service: ${err}`, true));

render();
