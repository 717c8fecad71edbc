/**
 * Scripted headless operator for live sessions, mirroring what the
 * browser console does over the same wire: connect, watch telemetry, cut
 * whenever the flow waits for the scissors, confirm the detected cutoff.
 *
 *   node dist/headless.js --host 127.0.0.1 --port 8765 [--cuts 8] [--cut-fraction 0.55]
 *
 * Exits 0 when the session ends in Done.
 */

import WebSocket from "ws";

import { SessionClient, SocketLike } from "./client.js";

function adaptNodeSocket(ws: WebSocket): SocketLike {
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    set onmessage(handler: (data: string) => void) {
      ws.on("message", (data) => handler(data.toString()));
    },
    set onclose(handler: () => void) {
      ws.on("close", () => handler());
    },
  };
}

function arg(name: string, fallback: string): string {
  const index = process.argv.indexOf(`--${name}`);
  return index >= 0 && index + 1 < process.argv.length
    ? process.argv[index + 1]
    : fallback;
}

async function main(): Promise<number> {
  const host = arg("host", "127.0.0.1");
  const port = arg("port", "8765");
  const maxCuts = Number(arg("cuts", "8"));
  const cutFraction = Number(arg("cut-fraction", "0.55"));

  const ws = new WebSocket(`ws://${host}:${port}/`);
  await new Promise<void>((resolve, reject) => {
    ws.once("open", resolve);
    ws.once("error", reject);
  });

  let cuts = 0;
  let result = "";
  let finished: () => void = () => {};
  const done = new Promise<void>((resolve) => {
    finished = resolve;
  });

  const act = (phase: string): void => {
    if (phase === "AwaitCut" && cuts < maxCuts) {
      cuts += 1;
      client
        .send("cut", { cut_fraction: cutFraction })
        .then((ack) => console.log(`cut #${cuts}: ${ack.accepted ? "accepted" : ack.reason}`))
        .catch((err: Error) => console.error(err.message));
    } else if (phase === "OperatorCheck") {
      client
        .send("confirm_cutoff")
        .then((ack) => console.log(`confirm_cutoff: ${ack.accepted ? "accepted" : ack.reason}`))
        .catch((err: Error) => console.error(err.message));
    }
  };

  const client = new SessionClient(adaptNodeSocket(ws), {
    onHello(hello) {
      console.log(`connected to ${hello.name}: phase ${hello.phase}, t=${hello.t}s`);
      act(hello.phase);
    },
    onPhase(phase, cutIndex, fpTarget) {
      console.log(`phase -> ${phase} (cut ${cutIndex}, F*p ${fpTarget})`);
      act(phase);
    },
    onEvent(t, kind, payload) {
      if (kind === "session_end") {
        result = String(payload.result);
        console.log(`session end at t=${t}s: ${result}`);
        finished();
      }
    },
    onProtocolError(message) {
      console.error(`protocol error: ${message}`);
    },
    onClose() {
      finished();
    },
  });

  await done;
  client.close();
  return result === "Done" ? 0 : 1;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err);
    process.exit(1);
  },
);
