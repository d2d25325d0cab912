// Minimal projective math for the integration tests: enough to construct the
// synthetic scene's ground-truth maps from 4-point correspondences and to
// reproject points, independent of the service implementation.

export type Mat3 = number[]; // 9 values, row-major
export type Pt = [number, number];

export function applyH(m: Mat3, p: Pt): Pt {
  const [x, y] = p;
  const w = m[6]! * x + m[7]! * y + m[8]!;
  return [(m[0]! * x + m[1]! * y + m[2]!) / w, (m[3]! * x + m[4]! * y + m[5]!) / w];
}

export function invertH(m: Mat3): Mat3 {
  const [a, b, c, d, e, f, g, h, i] = m as [
    number, number, number, number, number, number, number, number, number,
  ];
  const det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  return [
    (e * i - f * h) / det,
    (c * h - b * i) / det,
    (b * f - c * e) / det,
    (f * g - d * i) / det,
    (a * i - c * g) / det,
    (c * d - a * f) / det,
    (d * h - e * g) / det,
    (b * g - a * h) / det,
    (a * e - b * d) / det,
  ];
}

// Exact 4-point homography: solve the 8x8 linear system with h22 pinned to 1.
export function homographyFromQuads(src: Pt[], dst: Pt[]): Mat3 {
  const n = 8;
  const a: number[][] = [];
  const b: number[] = [];
  for (let k = 0; k < 4; k++) {
    const [x, y] = src[k]!;
    const [u, v] = dst[k]!;
    a.push([x, y, 1, 0, 0, 0, -u * x, -u * y]);
    b.push(u);
    a.push([0, 0, 0, x, y, 1, -v * x, -v * y]);
    b.push(v);
  }
  // Gaussian elimination with partial pivoting
  for (let col = 0; col < n; col++) {
    let pivot = col;
    for (let r = col + 1; r < n; r++) {
      if (Math.abs(a[r]![col]!) > Math.abs(a[pivot]![col]!)) pivot = r;
    }
    [a[col], a[pivot]] = [a[pivot]!, a[col]!];
    [b[col], b[pivot]] = [b[pivot]!, b[col]!];
    const lead = a[col]![col]!;
    if (Math.abs(lead) < 1e-12) throw new Error("degenerate quad");
    for (let r = col + 1; r < n; r++) {
      const factor = a[r]![col]! / lead;
      for (let c2 = col; c2 < n; c2++) a[r]![c2]! -= factor * a[col]![c2]!;
      b[r]! -= factor * b[col]!;
    }
  }
  const h = new Array<number>(n).fill(0);
  for (let r = n - 1; r >= 0; r--) {
    let sum = b[r]!;
    for (let c2 = r + 1; c2 < n; c2++) sum -= a[r]![c2]! * h[c2]!;
    h[r] = sum / a[r]![r]!;
  }
  return [...h, 1];
}
