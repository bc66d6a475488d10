/** Browser bootstrap: wires the canvas, reader pane, gestures, stream, and
 * API client together. All feedback semantics live on the server; this file
 * only routes gestures to events and repaints from server state. */

import { ApiClient } from "./api.js";
import { Camera, initialCamera, pan, zoom } from "./camera.js";
import {
  closeReaderGesture,
  dragDropGesture,
  minimizeReaderGesture,
  noteAttachGesture,
  textSelectionGesture,
} from "./gestures.js";
import { EventQueue } from "./queue.js";
import {
  DocumentSprite,
  documentSpritesFromLayout,
  drawScene,
  pickDocument,
  pickSupernode,
  superedgeList,
  supernodeSprites,
} from "./render.js";
import { SessionStream } from "./stream.js";
import * as viewstate from "./state.js";

interface Elements {
  canvas: HTMLCanvasElement;
  banner: HTMLElement;
  indicator: HTMLElement;
  reader: HTMLElement;
  readerBody: HTMLElement;
  levelLabel: HTMLElement;
}

export async function bootstrap(base: string, sessionId: string, root: Document): Promise<void> {
  const el: Elements = {
    canvas: root.getElementById("viz") as HTMLCanvasElement,
    banner: root.getElementById("banner")!,
    indicator: root.getElementById("indicator")!,
    reader: root.getElementById("reader")!,
    readerBody: root.getElementById("reader-body")!,
    levelLabel: root.getElementById("level-label")!,
  };
  const client = new ApiClient(base, (url, init) => fetch(url, init));
  const queue = new EventQueue(client, sessionId);
  let state = await viewstate.hydrate(client, sessionId);
  let camera: Camera = initialCamera(el.canvas.width, el.canvas.height);
  let docSprites: DocumentSprite[] = [];
  const memberTexts = new Map<string, string>();

  const repaint = () => {
    if (!state.summary || !state.layout) {
      return;
    }
    const ctx = el.canvas.getContext("2d")!;
    const sprites = supernodeSprites(state.summary, state.layout, camera);
    const groupOf = (id: string) =>
      state.summary!.supernodes.find((s) => s.members.includes(id))?.gid ?? 0;
    docSprites = state.expanded.length
      ? documentSpritesFromLayout(state.layout, groupOf, camera).filter((d) =>
          state.expanded.includes(d.gid),
        )
      : [];
    drawScene(ctx, el.canvas.width, el.canvas.height, sprites, docSprites, superedgeList(state.summary));
    el.banner.textContent = viewstate.staleBanner(state)
      ? "summary out of date — retrain"
      : state.offline
        ? `offline — ${state.pendingEvents} event(s) queued`
        : "";
    const sat = state.satisfaction;
    el.indicator.textContent = sat
      ? `feedback ${sat.satisfied}/${sat.total} satisfied · +${sat.positive} / −${sat.negative}`
      : "";
    el.levelLabel.textContent = `level ${state.level} / ${state.maxLevel}`;
  };

  const sendEvent = async (event: ReturnType<typeof dragDropGesture>) => {
    if (!event) {
      return;
    }
    try {
      const snap = await queue.send(event);
      if (snap) {
        state = viewstate.applySnapshot(state, snap);
      }
      state = viewstate.setOffline(state, queue.offline, queue.size);
    } catch (error) {
      el.banner.textContent = String(error); // conflicts surface inline
    }
    repaint();
  };

  // --- gestures ---------------------------------------------------------
  let dragging: { id: string; moved: boolean } | null = null;
  el.canvas.addEventListener("mousedown", (ev) => {
    const doc = pickDocument(docSprites, ev.offsetX, ev.offsetY);
    if (doc) {
      dragging = { id: doc.id, moved: false };
    }
  });
  el.canvas.addEventListener("mousemove", (ev) => {
    if (dragging && (ev.movementX || ev.movementY)) {
      dragging.moved = true;
    } else if (ev.buttons === 1 && !dragging) {
      camera = pan(camera, ev.movementX, ev.movementY);
      repaint();
    }
  });
  el.canvas.addEventListener("mouseup", async (ev) => {
    if (!dragging) {
      return;
    }
    const target = pickDocument(
      docSprites.filter((d) => d.id !== dragging!.id),
      ev.offsetX,
      ev.offsetY,
    );
    if (dragging.moved) {
      await sendEvent(dragDropGesture({ dragged: dragging.id, target: target?.id ?? null }, Date.now() / 1000));
    } else {
      await openReaderFor(dragging.id);
    }
    dragging = null;
  });
  el.canvas.addEventListener("wheel", (ev) => {
    camera = zoom(camera, ev.deltaY < 0 ? 1.1 : 1 / 1.1, ev.offsetX, ev.offsetY);
    ev.preventDefault();
    repaint();
  });
  el.canvas.addEventListener("dblclick", async (ev) => {
    const sprites = state.summary && state.layout ? supernodeSprites(state.summary, state.layout, camera) : [];
    const hit = pickSupernode(sprites, ev.offsetX, ev.offsetY);
    if (!hit) {
      return;
    }
    if (state.expanded.includes(hit.gid)) {
      state = viewstate.collapseGroup(state, hit.gid);
    } else {
      const group = await client.group(sessionId, state.level, hit.gid);
      for (const member of group.members) {
        memberTexts.set(member.id, member.text);
      }
      state = viewstate.expandGroup(state, hit.gid);
    }
    repaint();
  });

  const openReaderFor = async (doc: string) => {
    state = viewstate.openReader(state, doc);
    await client.setFocus(sessionId, doc); // reader open => focus synced
    el.reader.dataset.doc = doc;
    el.readerBody.textContent = memberTexts.get(doc) ?? "";
    el.reader.style.display = "block";
    repaint();
  };

  root.getElementById("reader-close")!.addEventListener("click", async () => {
    const closed = state.reader.doc;
    state = viewstate.closeReader(state);
    el.reader.style.display = "none";
    if (closed) {
      const info = await client.sessionInfo(sessionId);
      await sendEvent(closeReaderGesture(closed, info.focus === closed ? null : info.focus, Date.now() / 1000));
    }
    repaint();
  });
  root.getElementById("reader-minimize")!.addEventListener("click", async () => {
    const doc = state.reader.doc;
    el.reader.style.display = "none";
    if (doc) {
      const info = await client.sessionInfo(sessionId);
      await sendEvent(minimizeReaderGesture(doc, info.focus === doc ? null : info.focus, Date.now() / 1000));
    }
  });
  el.readerBody.addEventListener("mouseup", async () => {
    const selection = root.getSelection?.()?.toString() ?? "";
    if (state.reader.doc) {
      await sendEvent(textSelectionGesture(state.reader.doc, selection, Date.now() / 1000));
    }
  });
  root.getElementById("note-attach")!.addEventListener("click", async () => {
    const note = (root.getElementById("note-text") as HTMLTextAreaElement).value;
    if (state.reader.doc) {
      await sendEvent(noteAttachGesture(state.reader.doc, note, Date.now() / 1000));
    }
  });

  root.getElementById("level-up")!.addEventListener("click", async () => {
    state = await viewstate.navigateTo(client, state, state.level - 1);
    repaint();
  });
  root.getElementById("level-down")!.addEventListener("click", async () => {
    state = await viewstate.navigateTo(client, state, state.level + 1);
    repaint();
  });
  root.getElementById("retrain")!.addEventListener("click", async () => {
    await client.startTraining(sessionId, Math.max(2, 2 ** state.maxLevel));
  });

  // --- live stream ------------------------------------------------------
  const stream = new SessionStream({
    url: base.replace(/^http/, "ws") + `/sessions/${sessionId}/stream`,
    factory: (url) => new WebSocket(url) as unknown as import("./stream.js").SocketLike,
    onMessage: async (message) => {
      state = viewstate.applyStreamMessage(state, message);
      if (message.type === "summary_updated") {
        state = await viewstate.navigateTo(client, state, state.maxLevel);
      }
      repaint();
    },
    onReconnect: async () => {
      await queue.flush();
      state = await viewstate.hydrate(client, sessionId, state.level);
      state = viewstate.setOffline(state, queue.offline, queue.size);
      repaint();
    },
  });
  stream.start();
  repaint();
}
