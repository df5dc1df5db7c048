/**
 * Orbit state matching the server's camera convention: the camera sits at
 * (azimuth, elevation, distance) looking at the origin, z up. Keeping the
 * math here identical to the server means the azimuth/elevation the viewer
 * reports are exactly the values an edit stroke must be tagged with.
 */

export interface OrbitState {
  azimuthDeg: number;
  elevationDeg: number;
}

const ELEVATION_LIMIT = 89.0;

export class OrbitControlsState {
  private az: number;
  private el: number;

  constructor(azimuthDeg = 0, elevationDeg = 0) {
    this.az = azimuthDeg;
    this.el = clampElevation(elevationDeg);
  }

  get state(): OrbitState {
    return { azimuthDeg: this.az, elevationDeg: this.el };
  }

  set(azimuthDeg: number, elevationDeg: number): void {
    this.az = normalizeAzimuth(azimuthDeg);
    this.el = clampElevation(elevationDeg);
  }

  /** Drag by pixel deltas; right drag orbits leftward around the shape. */
  drag(dxPx: number, dyPx: number, degPerPx = 0.4): void {
    this.set(this.az - dxPx * degPerPx, this.el + dyPx * degPerPx);
  }

  /** Camera position on the unit-distance orbit sphere (z up). */
  eye(distance: number): [number, number, number] {
    const az = (this.az * Math.PI) / 180;
    const el = (this.el * Math.PI) / 180;
    return [
      distance * Math.cos(el) * Math.cos(az),
      distance * Math.cos(el) * Math.sin(az),
      distance * Math.sin(el),
    ];
  }
}

export function normalizeAzimuth(deg: number): number {
  let a = deg % 360;
  if (a < 0) a += 360;
  return a;
}

export function clampElevation(deg: number): number {
  return Math.max(-ELEVATION_LIMIT, Math.min(ELEVATION_LIMIT, deg));
}
