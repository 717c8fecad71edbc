/**
 * Session client: one websocket to the simulation service, typed frame
 * dispatch, sequence tracking, and command/ack correlation.
 *
 * The socket is injected through a minimal interface so the browser app
 * passes a native WebSocket, the headless driver passes the `ws` package,
 * and tests pass a scripted fake.
 */

import {
  AckPayload,
  CommandArgs,
  CommandName,
  HelloPayload,
  Phase,
  SCHEMA_VERSION,
  ServerFrame,
  Telemetry,
  commandAllowed,
  parseServerFrame,
} from "./protocol.js";
import { RingBuffer } from "./ring.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  set onmessage(handler: (data: string) => void);
  set onclose(handler: () => void);
}

export interface ClientEvents {
  onHello?(hello: HelloPayload): void;
  onTelemetry?(sample: Telemetry): void;
  onPhase?(phase: Phase, cutIndex: number, fpTarget: number): void;
  onAck?(ack: AckPayload): void;
  onEvent?(t: number, kind: string, payload: Record<string, unknown>): void;
  onProtocolError?(message: string): void;
  onClose?(): void;
}

interface PendingCommand {
  seq: number;
  command: CommandName;
  resolve: (ack: AckPayload) => void;
  reject: (err: Error) => void;
}

export class SessionClient {
  readonly buffer: RingBuffer<Telemetry>;
  hello: HelloPayload | null = null;
  phase: Phase | null = null;
  lastServerSeq = -1;
  lastTelemetryAt: number | null = null;
  closed = false;

  private sendSeq = 0;
  private pending: PendingCommand[] = [];

  constructor(
    private socket: SocketLike,
    private events: ClientEvents = {},
    bufferSeconds = 60,
    sampleRate = 30,
  ) {
    this.buffer = new RingBuffer<Telemetry>(Math.ceil(bufferSeconds * sampleRate));
    socket.onmessage = (data) => this.handleMessage(data);
    socket.onclose = () => this.handleClose();
  }

  private handleClose(): void {
    this.closed = true;
    for (const p of this.pending.splice(0)) {
      p.reject(new Error("connection closed before ack"));
    }
    this.events.onClose?.();
  }

  private handleMessage(data: string): void {
    const frame = parseServerFrame(data);
    if (frame === null) {
      this.events.onProtocolError?.("unparseable frame from server");
      return;
    }
    if (frame.seq !== this.lastServerSeq + 1) {
      // rendered seq must never decrease and the stream must stay gap-free
      this.events.onProtocolError?.(
        `server seq gap: expected ${this.lastServerSeq + 1}, got ${frame.seq}`,
      );
    }
    this.lastServerSeq = Math.max(this.lastServerSeq, frame.seq);
    this.dispatch(frame);
  }

  private dispatch(frame: ServerFrame): void {
    switch (frame.type) {
      case "hello": {
        if (frame.payload.schema !== SCHEMA_VERSION) {
          this.events.onProtocolError?.(
            `schema mismatch: console speaks ${SCHEMA_VERSION}, server ${frame.payload.schema}`,
          );
          return;
        }
        this.hello = frame.payload;
        this.phase = frame.payload.phase;
        this.events.onHello?.(frame.payload);
        break;
      }
      case "telemetry": {
        this.buffer.push(frame.payload);
        this.phase = frame.payload.phase;
        this.lastTelemetryAt = Date.now();
        this.events.onTelemetry?.(frame.payload);
        break;
      }
      case "phase_change": {
        this.phase = frame.payload.to;
        this.events.onPhase?.(
          frame.payload.to,
          frame.payload.cut_index,
          frame.payload.fp_target,
        );
        break;
      }
      case "event": {
        const { t, kind, ...rest } = frame.payload;
        this.events.onEvent?.(t, kind, rest as Record<string, unknown>);
        break;
      }
      case "command_ack": {
        const pending = this.pending.shift();
        if (pending === undefined) {
          this.events.onProtocolError?.("ack without matching pending command");
        } else if (pending.seq !== frame.payload.command_seq) {
          pending.reject(
            new Error(
              `ack for seq ${frame.payload.command_seq} while seq ${pending.seq} was pending`,
            ),
          );
          this.events.onProtocolError?.("ack out of order");
        } else {
          pending.resolve(frame.payload);
        }
        this.events.onAck?.(frame.payload);
        break;
      }
      case "error": {
        this.events.onProtocolError?.(frame.payload.message);
        break;
      }
    }
  }

  /** True when the current phase enables this command button. */
  allowed(command: CommandName): boolean {
    return this.phase !== null && commandAllowed(command, this.phase);
  }

  /** Commands awaiting their ack (buttons stay disabled meanwhile). */
  get pendingCount(): number {
    return this.pending.length;
  }

  send(command: CommandName, args: CommandArgs = {}): Promise<AckPayload> {
    if (this.closed) {
      return Promise.reject(new Error("disconnected: commands are not queued locally"));
    }
    const seq = this.sendSeq++;
    const frame = { type: "command", seq, payload: { command, args } };
    return new Promise((resolve, reject) => {
      this.pending.push({ seq, command, resolve, reject });
      this.socket.send(JSON.stringify(frame));
    });
  }

  close(): void {
    this.socket.close();
  }
}
