/**
 * Browser bootstrap: loads the first knowledge base, renders the net graph,
 * and wires the elicitation wizard and consultation panels to their models.
 * All state lives in the models; every handler awaits server confirmation
 * and re-renders from the returned snapshot.
 */

import { ApiClient } from "./api/client.js";
import { ConsultModel } from "./model/consult.js";
import { layoutNet } from "./model/layout.js";
import { WizardModel } from "./model/wizard.js";
import {
  renderConsultPanel,
  renderNetSvg,
  renderWizardPanel,
} from "./view/render.js";

const client = new ApiClient("");

function element(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found;
}

async function main(): Promise<void> {
  const catalog = await client.listKbs();
  const first = catalog.kbs[0];
  if (!first) {
    element("net").textContent = "No knowledge bases on the server.";
    return;
  }
  const net = await client.getNet(first.name);
  element("net").innerHTML = renderNetSvg(layoutNet(net));

  const wizardHost = element("wizard");
  const leg = net.legs[0];
  if (leg) {
    const wizard = new WizardModel(client, first.name, leg);
    await wizard.load();
    const redraw = () => {
      wizardHost.innerHTML = renderWizardPanel(wizard);
    };
    redraw();
    wizardHost.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      const action = target.dataset["action"];
      if (!action) return;
      const slider = wizardHost.querySelector<HTMLInputElement>(
        'input[data-action="slider"]',
      );
      const run = async () => {
        if (action === "accept" && slider) {
          await wizard.acceptValue(Number(slider.value));
        } else if (action === "accept-default") {
          await wizard.acceptDefault();
        } else if (action === "build") {
          await wizard.build();
        }
        redraw();
      };
      void run();
    });
  }

  const consultHost = element("consult");
  const consult = await ConsultModel.open(client, first.name);
  const redrawConsult = () => {
    consultHost.innerHTML = renderConsultPanel(consult);
  };
  redrawConsult();
  consultHost.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset["action"];
    if (!action) return;
    const item = target.closest<HTMLElement>("[data-variable]");
    const run = async () => {
      if (action === "toggle-true" && item?.dataset["variable"]) {
        await consult.toggle(item.dataset["variable"], true);
      } else if (action === "toggle-false" && item?.dataset["variable"]) {
        await consult.toggle(item.dataset["variable"], false);
      } else if (action === "reset") {
        await consult.reset();
      }
      redrawConsult();
    };
    void run();
  });
  consultHost.addEventListener("change", (event) => {
    const target = event.target as HTMLSelectElement;
    if (target.dataset["action"] !== "direction") return;
    const run = async () => {
      await consult.setDirection(
        target.value === "least-likely" ? "least-likely" : "most-likely",
      );
      redrawConsult();
    };
    void run();
  });
}

void main().catch((err: unknown) => {
  element("net").textContent = err instanceof Error ? err.message : String(err);
});
