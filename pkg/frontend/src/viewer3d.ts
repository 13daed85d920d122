/** Pure view models for the 3D arch scene.
 *
 * Teeth render as ellipsoids scaled by the PCA extents served with each
 * tooth state; poses come from the current frame when one is shown,
 * otherwise from the arch state itself. The three.js binding consumes these
 * glyphs verbatim.
 */

import type { ArchStateDoc, FrameDoc, QuatTuple, Vec3Tuple } from "./types.js";

export interface ToothGlyph {
  fdi: number;
  position: Vec3Tuple;
  quaternion_wxyz: QuatTuple;
  /** Ellipsoid semi-axes in mm. */
  scale: Vec3Tuple;
  selected: boolean;
  color: string;
}

const SELECTED_COLOR = "#ffb347";
const PRESENT_COLOR = "#e8e4da";

/** PCA standard deviations to ellipsoid semi-axes. */
const EXTENT_TO_SEMI_AXIS = 2.0;
const MIN_SEMI_AXIS_MM = 1.2;

export function toothGlyphs(
  arch: ArchStateDoc,
  frame: FrameDoc | null,
  selectedFdi: number | null,
): ToothGlyph[] {
  const glyphs: ToothGlyph[] = [];
  for (const tooth of arch.teeth) {
    if (!tooth.present) {
      continue;
    }
    const pose = frame?.poses[String(tooth.fdi)];
    const position = pose ? pose.centroid : tooth.centroid;
    const quaternion = pose ? pose.orientation_wxyz : tooth.orientation_wxyz;
    const scale = tooth.extents.map(
      (e) => Math.max(MIN_SEMI_AXIS_MM, e * EXTENT_TO_SEMI_AXIS),
    ) as Vec3Tuple;
    glyphs.push({
      fdi: tooth.fdi,
      position,
      quaternion_wxyz: quaternion,
      scale,
      selected: tooth.fdi === selectedFdi,
      color: tooth.fdi === selectedFdi ? SELECTED_COLOR : PRESENT_COLOR,
    });
  }
  return glyphs.sort((a, b) => a.fdi - b.fdi);
}

/** Scene center: the mean of the rendered glyph positions. */
export function sceneCenter(glyphs: ToothGlyph[]): Vec3Tuple {
  if (glyphs.length === 0) {
    return [0, 0, 0];
  }
  const sum: Vec3Tuple = [0, 0, 0];
  for (const g of glyphs) {
    sum[0] += g.position[0];
    sum[1] += g.position[1];
    sum[2] += g.position[2];
  }
  return [sum[0] / glyphs.length, sum[1] / glyphs.length, sum[2] / glyphs.length];
}
