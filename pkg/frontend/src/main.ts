/**
 * Entry point: read connection settings (query string first, then
 * localStorage), issue a session when needed, and mount the surface that
 * matches the role.
 */

import { ApiClient } from "./api";
import { AuthorView } from "./author";
import { WorkerView } from "./worker";
import "./style.css";

interface Settings {
  server: string;
  token: string;
  role: "author" | "worker";
  doc: string;
  actor: string;
}

function readSettings(): Partial<Settings> {
  const query = new URLSearchParams(window.location.search);
  const stored = JSON.parse(window.localStorage.getItem("crowdscribe-settings") ?? "{}");
  return {
    server: query.get("server") ?? stored.server,
    token: query.get("token") ?? stored.token,
    role: (query.get("role") ?? stored.role) as Settings["role"],
    doc: query.get("doc") ?? stored.doc,
    actor: query.get("actor") ?? stored.actor,
  };
}

function saveSettings(settings: Settings): void {
  window.localStorage.setItem("crowdscribe-settings", JSON.stringify(settings));
}

async function mount(settings: Settings): Promise<void> {
  const root = document.getElementById("app")!;
  let token = settings.token;
  if (!token) {
    const session = await ApiClient.createSession(
      settings.server,
      settings.actor,
      settings.role,
      settings.role === "worker" ? settings.doc : undefined,
    );
    token = session.token;
  }
  saveSettings({ ...settings, token });
  const api = new ApiClient({ baseUrl: settings.server, token });
  if (settings.role === "author") {
    await new AuthorView(root, api, settings.doc).start();
  } else {
    await new WorkerView(root, api, settings.doc, settings.actor).start();
  }
}

function connectForm(partial: Partial<Settings>): void {
  const root = document.getElementById("app")!;
  root.innerHTML = `
    <form class="connect">
      <h1>crowdscribe companion</h1>
      <label>server <input name="server" value="${partial.server ?? "http://127.0.0.1:8100"}"></label>
      <label>document <input name="doc" value="${partial.doc ?? "doc-1"}"></label>
      <label>your name <input name="actor" value="${partial.actor ?? ""}"></label>
      <label>role
        <select name="role">
          <option value="worker">worker</option>
          <option value="author">author</option>
        </select>
      </label>
      <label>token (optional) <input name="token" value=""></label>
      <button type="submit">open</button>
    </form>`;
  root.querySelector("form")!.addEventListener("submit", (e) => {
    e.preventDefault();
    const data = new FormData(e.target as HTMLFormElement);
    const settings: Settings = {
      server: String(data.get("server")),
      doc: String(data.get("doc")),
      actor: String(data.get("actor")) || "anonymous",
      role: data.get("role") === "author" ? "author" : "worker",
      token: String(data.get("token") ?? ""),
    };
    mount(settings).catch((err) => {
      root.insertAdjacentHTML("beforeend", `<p class="error">${err}</p>`);
    });
  });
}

const settings = readSettings();
if (settings.server && settings.doc && settings.role && (settings.token || settings.actor)) {
  mount(settings as Settings).catch((err) => {
    document.getElementById("app")!.innerHTML = `<p class="error">${err}</p>`;
    connectForm(settings);
  });
} else {
  connectForm(settings);
}
