/** Camera transform between layout space ([-1, 1]^2) and screen pixels.
 *
 * Rendering must never re-layout: screen position is exactly
 * world * scale + translation, so the server's coordinates are recoverable
 * from every rendered node.
 */

export interface Camera {
  scale: number;
  tx: number;
  ty: number;
}

export function initialCamera(width: number, height: number, margin = 40): Camera {
  const scale = (Math.min(width, height) - 2 * margin) / 2;
  return { scale, tx: width / 2, ty: height / 2 };
}

export function worldToScreen(camera: Camera, x: number, y: number): [number, number] {
  return [x * camera.scale + camera.tx, y * camera.scale + camera.ty];
}

export function screenToWorld(camera: Camera, sx: number, sy: number): [number, number] {
  return [(sx - camera.tx) / camera.scale, (sy - camera.ty) / camera.scale];
}

export function pan(camera: Camera, dx: number, dy: number): Camera {
  return { ...camera, tx: camera.tx + dx, ty: camera.ty + dy };
}

/** Zoom about a fixed screen point so the content under the cursor stays put. */
export function zoom(camera: Camera, factor: number, sx: number, sy: number): Camera {
  const scale = camera.scale * factor;
  return {
    scale,
    tx: sx - (sx - camera.tx) * factor,
    ty: sy - (sy - camera.ty) * factor,
  };
}
