// Planar two-link forward kinematics mirroring the simulator's model.
// Link lengths come from the bridge hello message; there is no physics
// here, only drawing geometry.

export interface ArmPose {
  base: [number, number];
  elbow: [number, number];
  ee: [number, number];
}

export function forwardKinematics(l1: number, l2: number, q: number[]): ArmPose {
  const elbow: [number, number] = [l1 * Math.cos(q[0]), l1 * Math.sin(q[0])];
  const ee: [number, number] = [
    elbow[0] + l2 * Math.cos(q[0] + q[1]),
    elbow[1] + l2 * Math.sin(q[0] + q[1]),
  ];
  return { base: [0, 0], elbow, ee };
}
