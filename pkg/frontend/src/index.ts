export * from "./protocol.js";
export * from "./sockets.js";
export * from "./store.js";
export * from "./schematicPane.js";
export * from "./viewport3d.js";
export * from "./drag.js";
export * from "./printAction.js";
export * from "./editor.js";
