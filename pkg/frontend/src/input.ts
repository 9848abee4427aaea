// Command box wiring: focus pauses the game, enter submits, escape backs
// out.  The box is disabled while a command is in flight; the view's
// commandPending flag (cleared by branch/error) drives re-enabling.

import { GameConnection } from "./net.js";

export function wireCommandBox(
  box: HTMLInputElement,
  pauseButton: HTMLButtonElement,
  connection: GameConnection,
): void {
  box.maxLength = 500; // oversize input blocked client-side

  box.addEventListener("focus", () => {
    connection.startTyping();
  });

  box.addEventListener("blur", () => {
    if (!box.value.trim()) connection.cancelTyping();
  });

  box.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") {
      if (connection.submitCommand(box.value)) {
        box.value = "";
        box.blur();
      }
    } else if (ev.key === "Escape") {
      box.value = "";
      connection.cancelTyping();
      box.blur();
    }
  });

  // touch devices: an explicit pause-and-type affordance
  pauseButton.addEventListener("click", () => box.focus());
}
