/** Adapters from real websocket objects to the SessionSocket shape. */

import type { SessionSocket } from "./protocol.js";

/** Browser WebSocket (or anything with the same event surface). */
export function fromBrowserWebSocket(ws: WebSocket): SessionSocket {
  return {
    send: (text) => ws.send(text),
    close: () => ws.close(),
    onMessage: (handler) =>
      ws.addEventListener("message", (ev) => handler(String((ev as MessageEvent).data))),
    onClose: (handler) => ws.addEventListener("close", () => handler()),
  };
}

/** Structural shape of a node "ws" client; avoids importing its types here. */
interface NodeWsLike {
  send(data: string): void;
  close(): void;
  on(event: "message", cb: (data: unknown) => void): unknown;
  on(event: "close", cb: () => void): unknown;
}

export function fromNodeWebSocket(ws: NodeWsLike): SessionSocket {
  return {
    send: (text) => ws.send(text),
    close: () => ws.close(),
    onMessage: (handler) => ws.on("message", (data) => handler(String(data))),
    onClose: (handler) => ws.on("close", handler),
  };
}
