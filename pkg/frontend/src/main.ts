import { ChatApi } from "./api.js";
import { ChatApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}
new ChatApp(root, new ChatApi("")).mount();
