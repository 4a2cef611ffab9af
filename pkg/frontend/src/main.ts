import { ExplorerApi } from "./api.js";
import { bootstrap } from "./ui/app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "http://localhost:8000";
const api = new ExplorerApi(base);

bootstrap(api, document.getElementById("app")!).catch((err) => {
  const app = document.getElementById("app")!;
  app.textContent = `failed to reach the service at ${base}: ${err}`;
});
