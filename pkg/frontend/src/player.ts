/** 4D frame player: play/pause/scrub over the served frame sequence.
 *
 * The scrubber maps bijectively onto served frame indices; there is no
 * client-side interpolation between frames.
 */

import type { FrameDoc, FrameSequenceDoc } from "./types.js";

export class FramePlayer {
  private frameIndex = 0;
  playing = false;
  /** Frames advanced per second while playing. */
  framesPerSecond: number;
  private accumulator = 0;

  constructor(
    private sequence: FrameSequenceDoc,
    framesPerSecond = 12,
  ) {
    if (sequence.frames.length === 0) {
      throw new Error("frame sequence is empty");
    }
    this.framesPerSecond = framesPerSecond;
  }

  get maxIndex(): number {
    return this.sequence.frames.length - 1;
  }

  get index(): number {
    return this.frameIndex;
  }

  get frame(): FrameDoc {
    return this.sequence.frames[this.frameIndex];
  }

  get t(): number {
    return this.frame.t;
  }

  replaceSequence(sequence: FrameSequenceDoc): void {
    if (sequence.frames.length === 0) {
      throw new Error("frame sequence is empty");
    }
    this.sequence = sequence;
    this.frameIndex = Math.min(this.frameIndex, this.maxIndex);
    this.accumulator = 0;
  }

  /** Jump to a served frame index (clamped, integral). */
  scrubTo(index: number): FrameDoc {
    const clamped = Math.max(0, Math.min(this.maxIndex, Math.round(index)));
    this.frameIndex = clamped;
    this.accumulator = 0;
    return this.frame;
  }

  play(): void {
    if (this.frameIndex === this.maxIndex) {
      this.frameIndex = 0;
    }
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
    this.accumulator = 0;
  }

  toggle(): void {
    if (this.playing) {
      this.pause();
    } else {
      this.play();
    }
  }

  stepForward(): FrameDoc {
    return this.scrubTo(this.frameIndex + 1);
  }

  stepBack(): FrameDoc {
    return this.scrubTo(this.frameIndex - 1);
  }

  /** Advance playback by a wall-clock delta; pauses at the final frame. */
  advance(dtSeconds: number): FrameDoc {
    if (!this.playing) {
      return this.frame;
    }
    this.accumulator += dtSeconds * this.framesPerSecond;
    const whole = Math.floor(this.accumulator);
    if (whole > 0) {
      this.accumulator -= whole;
      const next = this.frameIndex + whole;
      if (next >= this.maxIndex) {
        this.frameIndex = this.maxIndex;
        this.playing = false;
      } else {
        this.frameIndex = next;
      }
    }
    return this.frame;
  }
}
