/** Canvas rendering of the summary view.
 *
 * All geometry is computed by pure functions over the server layout and the
 * camera; the canvas code only draws what they return. Rendered coordinates
 * are therefore always the server's, mapped through the camera transform.
 */

import { Camera, worldToScreen } from "./camera.js";
import { layoutWordCloud, WordBox } from "./wordcloud.js";
import type { GroupResponse, LayoutResponse, SummaryResponse } from "./types.js";

export interface SupernodeSprite {
  gid: number;
  x: number;
  y: number;
  radius: number;
  label: string;
  cloud: WordBox[];
}

export interface DocumentSprite {
  id: string;
  x: number;
  y: number;
  gid: number;
}

export function supernodeSprites(
  summary: SummaryResponse,
  layout: LayoutResponse,
  camera: Camera,
): SupernodeSprite[] {
  return summary.supernodes.map((sn) => {
    const world = layout.supernodes[String(sn.gid)];
    const [x, y] = worldToScreen(camera, world[0], world[1]);
    const radius = 12 + 4 * Math.sqrt(sn.size);
    const label = sn.top_terms.slice(0, 3).map(([t]) => t).join(" ");
    return { gid: sn.gid, x, y, radius, label, cloud: layoutWordCloud(sn.top_terms, x, y) };
  });
}

/** Documents of an expanded group at their combined layout positions. */
export function expandedDocumentSprites(
  group: GroupResponse,
  camera: Camera,
): DocumentSprite[] {
  return group.members.map((m) => {
    const [x, y] = worldToScreen(camera, m.position[0], m.position[1]);
    return { id: m.id, x, y, gid: group.gid };
  });
}

export function documentSpritesFromLayout(
  layout: LayoutResponse,
  groupOf: (id: string) => number,
  camera: Camera,
): DocumentSprite[] {
  return Object.entries(layout.positions).map(([id, [wx, wy]]) => {
    const [x, y] = worldToScreen(camera, wx, wy);
    return { id, x, y, gid: groupOf(id) };
  });
}

const PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];

export function drawScene(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  supernodes: SupernodeSprite[],
  documents: DocumentSprite[],
  edges: { from: number; to: number; weight: number }[],
  relevant?: Set<string>,
): void {
  ctx.clearRect(0, 0, width, height);
  const byGid = new Map(supernodes.map((s) => [s.gid, s]));
  ctx.lineCap = "round";
  for (const edge of edges) {
    const a = byGid.get(edge.from);
    const b = byGid.get(edge.to);
    if (!a || !b || edge.weight <= 0) {
      continue;
    }
    ctx.strokeStyle = "rgba(120,120,120,0.5)";
    ctx.lineWidth = 1 + 6 * edge.weight;
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
  }
  for (const sprite of supernodes) {
    ctx.fillStyle = PALETTE[sprite.gid % PALETTE.length] + "55";
    ctx.strokeStyle = PALETTE[sprite.gid % PALETTE.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(sprite.x, sprite.y, sprite.radius, 0, 2 * Math.PI);
    ctx.fill();
    ctx.stroke();
    for (const word of sprite.cloud) {
      ctx.font = `${word.fontSize}px sans-serif`;
      ctx.fillStyle = "#222";
      ctx.fillText(word.term, word.x, word.y + word.height * 0.8);
    }
  }
  for (const doc of documents) {
    // evaluation mode: ground-truth relevant documents draw in red
    ctx.fillStyle = relevant?.has(doc.id) ? "#d62728" : "#8a8a8a";
    ctx.beginPath();
    ctx.arc(doc.x, doc.y, 5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function superedgeList(summary: SummaryResponse): { from: number; to: number; weight: number }[] {
  const edges: { from: number; to: number; weight: number }[] = [];
  for (let i = 0; i < summary.superedges.length; i++) {
    for (let j = i + 1; j < summary.superedges.length; j++) {
      edges.push({ from: i, to: j, weight: summary.superedges[i][j] });
    }
  }
  return edges;
}

/** Hit test in screen space; nearest sprite within its radius. */
export function pickSupernode(sprites: SupernodeSprite[], sx: number, sy: number): SupernodeSprite | null {
  let best: SupernodeSprite | null = null;
  let bestDist = Infinity;
  for (const sprite of sprites) {
    const d = Math.hypot(sprite.x - sx, sprite.y - sy);
    if (d <= sprite.radius && d < bestDist) {
      best = sprite;
      bestDist = d;
    }
  }
  return best;
}

export function pickDocument(sprites: DocumentSprite[], sx: number, sy: number, radius = 8): DocumentSprite | null {
  let best: DocumentSprite | null = null;
  let bestDist = Infinity;
  for (const sprite of sprites) {
    const d = Math.hypot(sprite.x - sx, sprite.y - sy);
    if (d <= radius && d < bestDist) {
      best = sprite;
      bestDist = d;
    }
  }
  return best;
}
