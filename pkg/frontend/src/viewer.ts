/**
 * Three.js mesh viewer with orbit controls that track the server camera
 * convention, so the azimuth/elevation shown is exactly what an edit stroke
 * drawn over this view must be tagged with.
 */

import * as THREE from "three";

import { ParsedMesh } from "./objparse.js";
import { OrbitControlsState, OrbitState } from "./orbit.js";

export class MeshViewer {
  readonly orbit: OrbitControlsState;
  private renderer: THREE.WebGLRenderer;
  private scene: THREE.Scene;
  private camera: THREE.PerspectiveCamera;
  private mesh: THREE.Mesh | null = null;
  private distance: number;
  private onOrbitChange: ((state: OrbitState) => void) | null = null;

  constructor(canvas: HTMLCanvasElement, distance = 3.0) {
    this.distance = distance;
    this.orbit = new OrbitControlsState(30, 15);
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.scene = new THREE.Scene();
    this.scene.background = new THREE.Color(0x10141a);
    this.camera = new THREE.PerspectiveCamera(
      35,
      canvas.width / canvas.height,
      0.01,
      100
    );
    const key = new THREE.DirectionalLight(0xffffff, 2.2);
    key.position.set(2, 2, 3);
    this.scene.add(key);
    this.scene.add(new THREE.AmbientLight(0x8899aa, 0.9));
    this.bindPointer(canvas);
    this.applyOrbit();
    this.renderLoop();
  }

  setOrbitListener(listener: (state: OrbitState) => void): void {
    this.onOrbitChange = listener;
    listener(this.orbit.state);
  }

  setOrbit(azimuthDeg: number, elevationDeg: number): void {
    this.orbit.set(azimuthDeg, elevationDeg);
    this.applyOrbit();
  }

  setMesh(parsed: ParsedMesh): void {
    if (this.mesh) {
      this.scene.remove(this.mesh);
      this.mesh.geometry.dispose();
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(parsed.positions, 3));
    geometry.setIndex(new THREE.BufferAttribute(parsed.indices, 1));
    geometry.computeVertexNormals();
    const material = new THREE.MeshStandardMaterial({
      color: 0x7fb2d9,
      flatShading: true,
      side: THREE.DoubleSide,
    });
    this.mesh = new THREE.Mesh(geometry, material);
    this.scene.add(this.mesh);
  }

  private bindPointer(canvas: HTMLCanvasElement): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    canvas.addEventListener("pointerdown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      this.orbit.drag(e.clientX - lastX, e.clientY - lastY);
      lastX = e.clientX;
      lastY = e.clientY;
      this.applyOrbit();
    });
    canvas.addEventListener("pointerup", () => {
      dragging = false;
    });
  }

  private applyOrbit(): void {
    const [x, y, z] = this.orbit.eye(this.distance);
    this.camera.position.set(x, y, z);
    this.camera.up.set(0, 0, 1); // server frame is z-up
    this.camera.lookAt(0, 0, 0);
    if (this.onOrbitChange) this.onOrbitChange(this.orbit.state);
  }

  private renderLoop(): void {
    const tick = () => {
      this.renderer.render(this.scene, this.camera);
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }
}
