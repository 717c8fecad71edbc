/**
 * Fixed-capacity ring buffer for streaming telemetry. Capacity is sized in
 * samples (>= 60 s at the sensor rate); pushing past capacity overwrites
 * the oldest sample.
 */
export class RingBuffer<T> {
  private items: (T | undefined)[];
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity <= 0) throw new Error("capacity must be positive");
    this.items = new Array(capacity);
  }

  push(item: T): void {
    this.items[this.head] = item;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count++;
  }

  get size(): number {
    return this.count;
  }

  /** index 0 = oldest retained sample */
  at(index: number): T | undefined {
    if (index < 0 || index >= this.count) return undefined;
    const physical = (this.head - this.count + index + this.capacity) % this.capacity;
    return this.items[physical];
  }

  last(): T | undefined {
    return this.at(this.count - 1);
  }

  toArray(): T[] {
    const out: T[] = new Array(this.count);
    for (let i = 0; i < this.count; i++) out[i] = this.at(i) as T;
    return out;
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
    this.items = new Array(this.capacity);
  }
}
