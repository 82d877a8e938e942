// Side-view pose: the segment chain in the vertical plane, built from pitch
// angles with the same advance-then-bend rule the simulator uses.  Only a
// drawing aid; the numbers shown to the operator come from telemetry.

export interface Point {
  x: number;
  z: number; // down positive, matching depth
}

export function sideViewChain(jointPitchRad: number[], segmentLengthM: number): Point[] {
  let x = 0;
  let z = 0;
  let heading = 0; // pitch of the current segment, 0 = horizontal
  const points: Point[] = [{ x, z }];
  for (let i = 0; i <= jointPitchRad.length; i++) {
    x += segmentLengthM * Math.cos(heading);
    z += segmentLengthM * Math.sin(heading);
    points.push({ x, z });
    if (i < jointPitchRad.length) heading += jointPitchRad[i];
  }
  return points;
}

export function chainLength(points: Point[]): number {
  let total = 0;
  for (let i = 1; i < points.length; i++) {
    total += Math.hypot(points[i].x - points[i - 1].x, points[i].z - points[i - 1].z);
  }
  return total;
}
