import { describe, expect, it } from "vitest";

import { layoutWordCloud } from "../src/wordcloud.js";
import { fixture } from "./stub.js";
import type { GroupResponse } from "../src/types.js";

const terms = fixture<GroupResponse>("group_0.json").top_terms;

describe("word cloud layout", () => {
  it("is deterministic", () => {
    const a = layoutWordCloud(terms, 100, 100);
    const b = layoutWordCloud(terms, 100, 100);
    expect(b).toEqual(a);
  });

  it("produces non-overlapping boxes", () => {
    const boxes = layoutWordCloud(terms, 0, 0);
    for (let i = 0; i < boxes.length; i++) {
      for (let j = i + 1; j < boxes.length; j++) {
        const a = boxes[i];
        const b = boxes[j];
        const overlap =
          a.x < b.x + b.width && b.x < a.x + a.width && a.y < b.y + b.height && b.y < a.y + a.height;
        expect(overlap).toBe(false);
      }
    }
  });

  it("scales font size with weight", () => {
    const boxes = layoutWordCloud(
      [
        ["heavy", 10],
        ["light", 1],
      ],
      0,
      0,
    );
    expect(boxes[0].fontSize).toBeGreaterThan(boxes[1].fontSize);
  });

  it("handles empty input", () => {
    expect(layoutWordCloud([], 0, 0)).toEqual([]);
  });
});
