import { ServiceClient } from "./api.js";
import { SessionController } from "./controller.js";
import { buildApp } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "http://127.0.0.1:8000";
const pollMs = Number(params.get("poll") ?? "5000");

const controller = new SessionController(new ServiceClient(base), { pollMs });
buildApp(document.getElementById("app") as HTMLElement, controller);

// page reloads re-attach via ?session=<id>: the UI is stateless beyond it
const existing = params.get("session");
if (existing) void controller.attach(existing);
