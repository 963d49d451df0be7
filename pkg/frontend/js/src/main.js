import { Client } from "./api.js";
import { Workbench } from "./workbench.js";
const app = new Workbench(new Client(""), document);
void app.start();
