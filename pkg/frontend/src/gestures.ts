/** Direct-manipulation gestures mapped to interaction events.
 *
 * The UI only names what happened (which documents were involved in which
 * gesture); the server derives all feedback pairs from these events. Free
 * drags that end without overlap are camera-only and emit nothing, which is
 * why there is no gesture here for them.
 */

import type { InteractionEventWire } from "./types.js";

export interface DragDrop {
  dragged: string;
  target: string | null; // null when the drop did not land on another node
}

/** Dropping one document node onto another expresses "these belong together". */
export function dragDropGesture(drag: DragDrop, now: number): InteractionEventWire | null {
  if (drag.target === null || drag.target === drag.dragged) {
    return null;
  }
  return { kind: "overlap", subject: drag.dragged, object: drag.target, timestamp: now };
}

/** Closing a reader pane while another document stays in focus. */
export function closeReaderGesture(
  closedDoc: string,
  focusedDoc: string | null,
  now: number,
): InteractionEventWire | null {
  if (focusedDoc === null || focusedDoc === closedDoc) {
    return null;
  }
  return { kind: "close", subject: closedDoc, context: focusedDoc, timestamp: now };
}

/** Minimizing a document while reading another one. */
export function minimizeReaderGesture(
  minimizedDoc: string,
  readingDoc: string | null,
  now: number,
): InteractionEventWire | null {
  if (readingDoc === null || readingDoc === minimizedDoc) {
    return null;
  }
  return { kind: "minimize", subject: minimizedDoc, context: readingDoc, timestamp: now };
}

/** Selecting text inside the reader highlights that document. */
export function textSelectionGesture(readerDoc: string, selection: string, now: number): InteractionEventWire | null {
  if (!selection.trim()) {
    return null;
  }
  return { kind: "highlight", subject: readerDoc, timestamp: now };
}

/** Attaching a note annotates the document it is attached to. */
export function noteAttachGesture(doc: string, note: string, now: number): InteractionEventWire | null {
  if (!note.trim()) {
    return null;
  }
  return { kind: "annotate", subject: doc, timestamp: now };
}
