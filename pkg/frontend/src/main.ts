import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app element");
}
const baseUrl = (window as { INQUEST_BASE_URL?: string }).INQUEST_BASE_URL ?? "http://127.0.0.1:8377";
mountApp(root, baseUrl);
