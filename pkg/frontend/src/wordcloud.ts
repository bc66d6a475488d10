/** Deterministic word-cloud box placement.
 *
 * Terms are laid out in weight order on an expanding spiral around the
 * anchor; the first collision-free spot wins. Pure geometry, no randomness,
 * so the same terms always render identically.
 */

export interface WordBox {
  term: string;
  weight: number;
  x: number;
  y: number;
  width: number;
  height: number;
  fontSize: number;
}

const MIN_FONT = 10;
const MAX_FONT = 26;

export function layoutWordCloud(
  terms: [string, number][],
  anchorX: number,
  anchorY: number,
): WordBox[] {
  if (terms.length === 0) {
    return [];
  }
  const weights = terms.map(([, w]) => w);
  const top = Math.max(...weights);
  const bottom = Math.min(...weights);
  const span = top - bottom || 1;
  const boxes: WordBox[] = [];
  for (const [term, weight] of terms) {
    const fontSize = MIN_FONT + ((weight - bottom) / span) * (MAX_FONT - MIN_FONT);
    const width = term.length * fontSize * 0.62;
    const height = fontSize * 1.25;
    const box = place(boxes, anchorX, anchorY, width, height);
    boxes.push({ term, weight, fontSize, width, height, ...box });
  }
  return boxes;
}

function place(
  boxes: WordBox[],
  anchorX: number,
  anchorY: number,
  width: number,
  height: number,
): { x: number; y: number } {
  for (let step = 0; step < 2000; step++) {
    const angle = step * 0.35;
    const radius = step * 0.7;
    const x = anchorX + radius * Math.cos(angle) - width / 2;
    const y = anchorY + radius * Math.sin(angle) - height / 2;
    if (!boxes.some((b) => overlaps(b, x, y, width, height))) {
      return { x, y };
    }
  }
  return { x: anchorX, y: anchorY }; // give up gracefully; callers cap term counts
}

function overlaps(b: WordBox, x: number, y: number, width: number, height: number): boolean {
  return x < b.x + b.width && b.x < x + width && y < b.y + b.height && b.y < y + height;
}
