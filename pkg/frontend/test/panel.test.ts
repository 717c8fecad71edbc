// @vitest-environment happy-dom

import { describe, expect, it } from "vitest";

import { CommandPanel } from "../src/panel.js";
import { CommandArgs, CommandName } from "../src/protocol.js";

function makePanel() {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const sent: { command: CommandName; args: CommandArgs }[] = [];
  const panel = new CommandPanel(root, (command, args) => sent.push({ command, args }));
  const button = (label: string) =>
    [...root.querySelectorAll("button")].find((b) => b.textContent === label)!;
  return { root, panel, sent, button };
}

describe("CommandPanel", () => {
  it("enables buttons exactly per the phase legality table", () => {
    const { panel, button } = makePanel();
    expect(button("Cut").disabled).toBe(true); // disconnected

    panel.setPhase("Grasping");
    expect(button("Cut").disabled).toBe(true);
    expect(button("Abort").disabled).toBe(false);
    expect(button("Adjust targets").disabled).toBe(false);

    panel.setPhase("AwaitCut");
    expect(button("Cut").disabled).toBe(false);
    expect(button("Confirm cutoff").disabled).toBe(true);

    panel.setPhase("OperatorCheck");
    expect(button("Cut").disabled).toBe(false);
    expect(button("Confirm cutoff").disabled).toBe(false);
    expect(button("Request another cut").disabled).toBe(false);

    panel.setPhase("Done");
    expect(button("Cut").disabled).toBe(true);
    expect(button("Abort").disabled).toBe(true);
  });

  it("locks every control while a command awaits its ack", () => {
    const { panel, button } = makePanel();
    panel.setPhase("AwaitCut");
    expect(button("Cut").disabled).toBe(false);
    panel.setBusy(true);
    expect(button("Cut").disabled).toBe(true);
    expect(button("Abort").disabled).toBe(true);
    panel.setBusy(false);
    expect(button("Cut").disabled).toBe(false);
  });

  it("sends cut with the configured fraction", () => {
    const { root, panel, sent, button } = makePanel();
    panel.setPhase("AwaitCut");
    (root.querySelector("#cut-fraction") as HTMLInputElement).value = "0.4";
    button("Cut").click();
    expect(sent).toEqual([{ command: "cut", args: { cut_fraction: 0.4 } }]);
  });

  it("sends target adjustments from the numeric inputs", () => {
    const { root, panel, sent, button } = makePanel();
    panel.setPhase("AwaitCut");
    (root.querySelector("#adjust-fg") as HTMLInputElement).value = "0.05";
    (root.querySelector("#adjust-fp") as HTMLInputElement).value = "-0.02";
    button("Adjust targets").click();
    expect(sent).toEqual([
      { command: "adjust_targets", args: { d_fg: 0.05, d_fp: -0.02 } },
    ]);
  });

  it("renders toasts for acks", () => {
    const { root, panel } = makePanel();
    panel.toast("cut accepted", true);
    panel.toast("cut rejected: wrong phase", false);
    const toasts = [...root.querySelectorAll(".toast")];
    expect(toasts).toHaveLength(2);
    expect(toasts[0].className).toContain("bad");
    expect(toasts[1].className).toContain("ok");
  });
});
