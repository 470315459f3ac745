// Screen <-> workspace mapping for one arm panel, plus the reachability
// clamp applied to every outgoing drag target.

export class WorkspaceTransform {
  readonly scale: number;

  constructor(
    readonly width: number,
    readonly height: number,
    readonly reach: number,
    readonly margin = 10,
  ) {
    const usable = Math.min(width, height) / 2 - margin;
    this.scale = usable / reach; // px per meter
  }

  toScreen(x: number, y: number): [number, number] {
    return [this.width / 2 + x * this.scale, this.height / 2 - y * this.scale];
  }

  toWorld(px: number, py: number): [number, number] {
    return [(px - this.width / 2) / this.scale, (this.height / 2 - py) / this.scale];
  }
}

/** Clamp a workspace point into the closed disk of the given radius. */
export function clampToReach(x: number, y: number, reach: number): [number, number] {
  const r = Math.hypot(x, y);
  if (r <= reach || r === 0) return [x, y];
  return [(x / r) * reach, (y / r) * reach];
}
