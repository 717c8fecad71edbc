/**
 * Wire schema of the session service (see docs/protocol.md) plus the
 * phase/command legality table the console mirrors from the server-side
 * state machine. This module is platform-neutral: the browser app and the
 * headless Node client both build on it.
 */

export const SCHEMA_VERSION = 1;

export type Phase =
  | "Approach"
  | "Grasping"
  | "InitialPull"
  | "AwaitCut"
  | "PostCutPull"
  | "OperatorCheck"
  | "MoveOut"
  | "Done"
  | "Failed";

export type CommandName =
  | "cut"
  | "confirm_cutoff"
  | "request_another_cut"
  | "adjust_targets"
  | "abort";

export interface Telemetry {
  t: number;
  Fg_target: number;
  Fg_est: number;
  Fg_true: number;
  Fp_target: number;
  Fp_est: number;
  Fp_true: number;
  Fd: number;
  Fs: number;
  d_p: number;
  d_s: number;
  d_l: number;
  d_u: number;
  phase: Phase;
  events: string[];
}

export interface HelloPayload {
  schema: number;
  name: string;
  phase: Phase;
  t: number;
  dt_sensor: number;
  time_scale: number;
  decimation: number;
  params: {
    Fp_touch: number;
    Fg_target: number;
    Fp_initial: number;
    rho: number;
    d_incr_limit: number;
    d_total_limit: number;
    Fp_cutoff: number;
    decouple_during_pull: boolean;
  };
}

export interface PhaseChangePayload {
  t: number;
  from: Phase;
  to: Phase;
  cut_index: number;
  fp_target: number;
}

export interface EventPayload {
  t: number;
  kind: string;
  result?: string;
  summary?: Record<string, unknown>;
}

export interface AckPayload {
  command_seq: number;
  command: CommandName;
  accepted: boolean;
  reason: string;
}

export type ServerFrame =
  | { type: "hello"; seq: number; payload: HelloPayload }
  | { type: "telemetry"; seq: number; payload: Telemetry }
  | { type: "phase_change"; seq: number; payload: PhaseChangePayload }
  | { type: "event"; seq: number; payload: EventPayload }
  | { type: "command_ack"; seq: number; payload: AckPayload }
  | { type: "error"; seq: number; payload: { message: string } };

export interface CommandArgs {
  cut_fraction?: number;
  d_fg?: number;
  d_fp?: number;
}

export interface CommandFrame {
  type: "command";
  seq: number;
  payload: { command: CommandName; args: CommandArgs };
}

const SERVER_TYPES = new Set([
  "hello",
  "telemetry",
  "phase_change",
  "event",
  "command_ack",
  "error",
]);

/** Parse one wire frame; returns null for anything malformed. */
export function parseServerFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const frame = data as { type?: unknown; seq?: unknown; payload?: unknown };
  if (typeof frame.type !== "string" || !SERVER_TYPES.has(frame.type)) return null;
  if (typeof frame.seq !== "number") return null;
  if (typeof frame.payload !== "object" || frame.payload === null) return null;
  return frame as ServerFrame;
}

/**
 * Which phases accept which operator commands. Must match the service's
 * acceptance table exactly: a button the console enables must never be
 * rejected for phase reasons.
 */
export const COMMAND_PHASES: Record<CommandName, readonly Phase[]> = {
  cut: ["AwaitCut", "OperatorCheck"],
  confirm_cutoff: ["OperatorCheck"],
  request_another_cut: ["OperatorCheck"],
  adjust_targets: ["Grasping", "InitialPull", "AwaitCut", "PostCutPull", "OperatorCheck"],
  abort: [
    "Approach",
    "Grasping",
    "InitialPull",
    "AwaitCut",
    "PostCutPull",
    "OperatorCheck",
    "MoveOut",
  ],
};

export function commandAllowed(command: CommandName, phase: Phase): boolean {
  return COMMAND_PHASES[command].includes(phase);
}

export const TERMINAL_PHASES: readonly Phase[] = ["Done", "Failed"];

export function isTerminal(phase: Phase): boolean {
  return TERMINAL_PHASES.includes(phase);
}
