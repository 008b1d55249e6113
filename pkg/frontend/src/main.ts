import { Client } from "./api.js";
import { App } from "./render.js";

const root = document.getElementById("app");
if (root) {
  new App(new Client(""), root).start();
}
