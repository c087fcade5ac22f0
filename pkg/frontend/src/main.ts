import { WorkbenchApi } from "./api.js";
import { WorkbenchPage } from "./render.js";
import { WorkbenchStore } from "./store.js";

const api = new WorkbenchApi(window.location.origin);
const store = new WorkbenchStore(api);
const root = document.getElementById("app");
if (root === null) throw new Error("missing #app element");
new WorkbenchPage(root, store);
void store.init();
