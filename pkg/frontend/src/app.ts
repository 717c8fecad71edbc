/**
 * Operator console entry point: connects to the session service given by
 * the ?host=&port= query, renders live force/distance charts against
 * their targets and limits, and routes operator commands through the
 * command panel. Rendering is batched on animation frames; socket events
 * only append to the ring buffer.
 */

import { SessionClient, SocketLike } from "./client.js";
import { ChartSpec, StripChart } from "./charts.js";
import { CommandPanel } from "./panel.js";
import { CommandArgs, CommandName, HelloPayload, isTerminal } from "./protocol.js";

const STALE_AFTER_MS = 1000;

function adaptBrowserSocket(ws: WebSocket): SocketLike {
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    set onmessage(handler: (data: string) => void) {
      ws.onmessage = (ev) => handler(String(ev.data));
    },
    set onclose(handler: () => void) {
      ws.onclose = () => handler();
    },
  };
}

function chartSpecs(hello: HelloPayload | null): ChartSpec[] {
  const p = hello?.params;
  return [
    {
      title: "grasp force",
      unit: "N",
      windowSeconds: 60,
      series: [
        { key: "Fg_target", label: "target", color: "#8b95a5", dashed: true },
        { key: "Fg_est", label: "estimate", color: "#53b1fd" },
        { key: "Fg_true", label: "plant", color: "#2a6fae", dashed: true },
      ],
      thresholds: [],
    },
    {
      title: "pull force",
      unit: "N",
      windowSeconds: 60,
      series: [
        { key: "Fp_target", label: "target", color: "#8b95a5", dashed: true },
        { key: "Fp_est", label: "estimate", color: "#61d095" },
        { key: "Fp_true", label: "plant", color: "#2f8f5f", dashed: true },
      ],
      thresholds: p
        ? [{ value: p.Fp_cutoff, label: "cutoff", color: "#d0a761" }]
        : [],
    },
    {
      title: "pull distance",
      unit: "mm",
      windowSeconds: 60,
      series: [{ key: "d_p", label: "d_p", color: "#d07ae0" }],
      thresholds: p
        ? [
            { value: p.d_total_limit, label: "total limit", color: "#e0615f" },
            { value: p.d_incr_limit, label: "increment limit", color: "#d0a761" },
          ]
        : [],
    },
  ];
}

function main(): void {
  const query = new URLSearchParams(window.location.search);
  const host = query.get("host") ?? "127.0.0.1";
  const port = query.get("port") ?? "8765";

  const panelRoot = document.getElementById("panel") as HTMLElement;
  const chartsRoot = document.getElementById("charts") as HTMLElement;
  const log = document.getElementById("log") as HTMLElement;
  const summaryEl = document.getElementById("summary") as HTMLElement;
  const reconnect = document.getElementById("reconnect") as HTMLButtonElement;

  const logLine = (text: string) => {
    const el = document.createElement("div");
    el.textContent = text;
    log.prepend(el);
    while (log.childElementCount > 200) log.lastElementChild?.remove();
  };

  const canvases = ["fg", "fp", "dp"].map((id) => {
    const canvas = document.createElement("canvas");
    canvas.width = 860;
    canvas.height = 190;
    canvas.id = `chart-${id}`;
    chartsRoot.appendChild(canvas);
    return canvas;
  });

  let charts: StripChart[] = [];
  let dirty = false;
  let client: SessionClient | null = null;

  const panel = new CommandPanel(panelRoot, (command: CommandName, args: CommandArgs) => {
    if (client === null) return;
    panel.setBusy(true);
    client
      .send(command, args)
      .then((ack) => {
        panel.toast(
          ack.accepted ? `${ack.command} accepted` : `${ack.command} rejected: ${ack.reason}`,
          ack.accepted,
        );
      })
      .catch((err: Error) => panel.toast(err.message, false))
      .finally(() => panel.setBusy(false));
  });

  const connect = () => {
    reconnect.hidden = true;
    const ws = new WebSocket(`ws://${host}:${port}/`);
    client = new SessionClient(adaptBrowserSocket(ws), {
      onHello(hello) {
        charts = chartSpecs(hello).map((spec, i) => new StripChart(canvases[i], spec));
        panel.setPhase(hello.phase);
        logLine(`connected: ${hello.name} (phase ${hello.phase}, t=${hello.t}s)`);
        dirty = true;
      },
      onTelemetry() {
        dirty = true;
      },
      onPhase(phase, cutIndex, fpTarget) {
        panel.setPhase(phase);
        logLine(`phase -> ${phase} (cut ${cutIndex}, F*p ${fpTarget.toFixed(3)} N)`);
        if (isTerminal(phase)) {
          summaryEl.hidden = false;
          summaryEl.textContent = `session ${phase}`;
        }
      },
      onEvent(t, kind, payload) {
        logLine(`t=${t.toFixed(2)}s ${kind}`);
        if (kind === "session_end") {
          summaryEl.hidden = false;
          summaryEl.textContent = `session ${payload.result}: ${JSON.stringify(payload.summary)}`;
        }
      },
      onProtocolError(message) {
        panel.toast(message, false);
        logLine(`protocol error: ${message}`);
      },
      onClose() {
        panel.setPhase(null);
        panel.setBusy(false);
        logLine("disconnected");
        reconnect.hidden = false;
      },
    });
  };
  reconnect.addEventListener("click", connect);
  connect();

  // animation-frame batched rendering; socket handlers only mark dirty
  const renderLoop = () => {
    if (dirty && client !== null && charts.length === 3) {
      const samples = client.buffer.toArray();
      for (const chart of charts) chart.render(samples);
      dirty = false;
    }
    requestAnimationFrame(renderLoop);
  };
  requestAnimationFrame(renderLoop);

  setInterval(() => {
    const last = client?.lastTelemetryAt ?? null;
    const stale =
      last !== null &&
      Date.now() - last > STALE_AFTER_MS &&
      !isTerminal(client?.phase ?? "Done");
    panel.setStale(stale);
  }, 250);
}

main();
