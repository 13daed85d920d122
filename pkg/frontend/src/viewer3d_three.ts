/** three.js binding for the arch viewer: ellipsoid meshes with
 * raycaster-based click-to-select. All geometry comes from ToothGlyph view
 * models; this module owns only the WebGL scene.
 */

import * as THREE from "three";

import type { ToothGlyph } from "./viewer3d.js";
import { sceneCenter } from "./viewer3d.js";

export class ArchViewer {
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private readonly renderer: THREE.WebGLRenderer;
  private readonly raycaster = new THREE.Raycaster();
  private readonly meshes = new Map<number, THREE.Mesh>();
  private readonly unitSphere = new THREE.SphereGeometry(1, 24, 16);

  onSelect: ((fdi: number | null) => void) | null = null;

  constructor(private readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(
      40,
      canvas.clientWidth / Math.max(1, canvas.clientHeight),
      0.1,
      500,
    );
    this.scene.background = new THREE.Color("#181b20");
    const key = new THREE.DirectionalLight(0xffffff, 2.2);
    key.position.set(30, -40, 60);
    this.scene.add(key, new THREE.AmbientLight(0xffffff, 0.6));
    canvas.addEventListener("pointerdown", (event) => this.pick(event));
  }

  update(glyphs: ToothGlyph[]): void {
    const seen = new Set<number>();
    for (const glyph of glyphs) {
      seen.add(glyph.fdi);
      let mesh = this.meshes.get(glyph.fdi);
      if (!mesh) {
        mesh = new THREE.Mesh(
          this.unitSphere,
          new THREE.MeshStandardMaterial({ roughness: 0.55 }),
        );
        mesh.userData.fdi = glyph.fdi;
        this.meshes.set(glyph.fdi, mesh);
        this.scene.add(mesh);
      }
      mesh.position.set(...glyph.position);
      const [w, x, y, z] = glyph.quaternion_wxyz;
      mesh.quaternion.set(x, y, z, w);
      mesh.scale.set(...glyph.scale);
      (mesh.material as THREE.MeshStandardMaterial).color.set(glyph.color);
      (mesh.material as THREE.MeshStandardMaterial).emissive.set(
        glyph.selected ? "#6b3f00" : "#000000",
      );
    }
    for (const [fdi, mesh] of this.meshes) {
      mesh.visible = seen.has(fdi);
    }

    const center = sceneCenter(glyphs);
    this.camera.position.set(center[0], center[1] - 95, center[2] + 55);
    this.camera.lookAt(center[0], center[1], center[2]);
    this.render();
  }

  private pick(event: PointerEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const hits = this.raycaster.intersectObjects([...this.meshes.values()].filter((m) => m.visible));
    this.onSelect?.(hits.length ? (hits[0].object.userData.fdi as number) : null);
  }

  render(): void {
    this.renderer.setSize(this.canvas.clientWidth, this.canvas.clientHeight, false);
    this.renderer.render(this.scene, this.camera);
  }
}
