/**
 * Command panel: phase badge, operator buttons, target-adjust inputs, and
 * ack/error toasts. Buttons are enabled strictly by the shared legality
 * table, and everything locks while a command awaits its ack.
 */

import { CommandArgs, CommandName, Phase, commandAllowed } from "./protocol.js";

export type CommandHandler = (command: CommandName, args: CommandArgs) => void;

const BUTTONS: { command: CommandName; label: string }[] = [
  { command: "cut", label: "Cut" },
  { command: "confirm_cutoff", label: "Confirm cutoff" },
  { command: "request_another_cut", label: "Request another cut" },
  { command: "abort", label: "Abort" },
];

export class CommandPanel {
  private badge: HTMLElement;
  private buttons = new Map<CommandName, HTMLButtonElement>();
  private toasts: HTMLElement;
  private adjustFg: HTMLInputElement;
  private adjustFp: HTMLInputElement;
  private adjustApply: HTMLButtonElement;
  private cutFraction: HTMLInputElement;
  private phase: Phase | null = null;
  private busy = false;

  constructor(root: HTMLElement, private onCommand: CommandHandler) {
    root.innerHTML = `
      <div class="row">
        <span id="phase-badge" class="badge">disconnected</span>
        <span id="stale" class="stale" hidden>STALE</span>
      </div>
      <div class="row" id="buttons"></div>
      <div class="row adjust">
        <label>cut fraction <input id="cut-fraction" type="number" step="0.05" min="0.05" max="0.95" value="0.55"></label>
      </div>
      <div class="row adjust">
        <label>&Delta;F*g <input id="adjust-fg" type="number" step="0.01" value="0"></label>
        <label>&Delta;F*p <input id="adjust-fp" type="number" step="0.01" value="0"></label>
        <button id="adjust-apply">Adjust targets</button>
      </div>
      <div id="toasts"></div>
    `;
    this.badge = root.querySelector("#phase-badge") as HTMLElement;
    this.toasts = root.querySelector("#toasts") as HTMLElement;
    this.adjustFg = root.querySelector("#adjust-fg") as HTMLInputElement;
    this.adjustFp = root.querySelector("#adjust-fp") as HTMLInputElement;
    this.cutFraction = root.querySelector("#cut-fraction") as HTMLInputElement;
    this.adjustApply = root.querySelector("#adjust-apply") as HTMLButtonElement;

    const row = root.querySelector("#buttons") as HTMLElement;
    for (const spec of BUTTONS) {
      const button = document.createElement("button");
      button.textContent = spec.label;
      button.disabled = true;
      button.addEventListener("click", () => {
        const args: CommandArgs =
          spec.command === "cut"
            ? { cut_fraction: Number(this.cutFraction.value) }
            : {};
        this.onCommand(spec.command, args);
      });
      row.appendChild(button);
      this.buttons.set(spec.command, button);
    }
    this.adjustApply.disabled = true;
    this.adjustApply.addEventListener("click", () => {
      this.onCommand("adjust_targets", {
        d_fg: Number(this.adjustFg.value),
        d_fp: Number(this.adjustFp.value),
      });
    });
  }

  setPhase(phase: Phase | null): void {
    this.phase = phase;
    this.badge.textContent = phase ?? "disconnected";
    this.badge.dataset.phase = phase ?? "none";
    this.refresh();
  }

  /** Lock every control while a command awaits its ack. */
  setBusy(busy: boolean): void {
    this.busy = busy;
    this.refresh();
  }

  setStale(stale: boolean): void {
    const el = this.badge.parentElement?.querySelector("#stale") as HTMLElement | null;
    if (el) el.hidden = !stale;
  }

  private refresh(): void {
    for (const [command, button] of this.buttons) {
      const legal = this.phase !== null && commandAllowed(command, this.phase);
      button.disabled = this.busy || !legal;
    }
    const adjustLegal =
      this.phase !== null && commandAllowed("adjust_targets", this.phase);
    this.adjustApply.disabled = this.busy || !adjustLegal;
  }

  toast(message: string, ok: boolean): void {
    const el = document.createElement("div");
    el.className = ok ? "toast ok" : "toast bad";
    el.textContent = message;
    this.toasts.prepend(el);
    setTimeout(() => el.remove(), 6000);
  }
}
