import { describe, expect, it } from "vitest";

import { RingBuffer } from "../src/ring.js";

describe("RingBuffer", () => {
  it("holds at least 60 seconds of 30 Hz telemetry by default sizing", () => {
    const buffer = new RingBuffer<number>(Math.ceil(60 * 30));
    expect(buffer.capacity).toBe(1800);
  });

  it("keeps insertion order below capacity", () => {
    const buffer = new RingBuffer<number>(5);
    for (const v of [1, 2, 3]) buffer.push(v);
    expect(buffer.size).toBe(3);
    expect(buffer.toArray()).toEqual([1, 2, 3]);
    expect(buffer.last()).toBe(3);
  });

  it("overwrites oldest samples past capacity", () => {
    const buffer = new RingBuffer<number>(4);
    for (let v = 0; v < 10; v++) buffer.push(v);
    expect(buffer.size).toBe(4);
    expect(buffer.toArray()).toEqual([6, 7, 8, 9]);
    expect(buffer.at(0)).toBe(6);
    expect(buffer.at(4)).toBeUndefined();
  });

  it("stores a 10 s 30 Hz stream as 300 points", () => {
    const buffer = new RingBuffer<number>(1800);
    for (let k = 0; k < 300; k++) buffer.push(k / 30);
    expect(buffer.size).toBe(300);
  });

  it("clears", () => {
    const buffer = new RingBuffer<number>(3);
    buffer.push(1);
    buffer.clear();
    expect(buffer.size).toBe(0);
    expect(buffer.last()).toBeUndefined();
  });

  it("rejects non-positive capacity", () => {
    expect(() => new RingBuffer(0)).toThrow();
  });
});
