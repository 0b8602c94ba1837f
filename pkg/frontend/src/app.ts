// Single-page client. One long-poll loop per page keeps the view fresh;
// every wake refetches the authoritative state and rerenders, so a dropped
// connection heals itself on the next poll.

import { ApiClient, ApiError } from "./api.js";
import { BidFormModel } from "./bidform.js";
import { LecturerDashboard } from "./dashboard.js";
import { ClassificationWorksheet, WorksheetError, submissionToCsv } from "./worksheet.js";
import type { ParticipantView, TenderView } from "./types.js";

const root = document.getElementById("app");

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function el<T extends HTMLElement>(selector: string): T {
  const node = root?.querySelector(selector);
  if (!node) throw new Error(`missing element: ${selector}`);
  return node as T;
}

interface Settings {
  session: string;
  code: string | null;
  token: string | null;
}

function readSettings(): Settings {
  const params = new URLSearchParams(window.location.search);
  return {
    session: params.get("session") ?? localStorage.getItem("tetravale.session") ?? "",
    code: params.get("code") ?? localStorage.getItem("tetravale.code"),
    token: params.get("token"),
  };
}

// -- boot screen -----------------------------------------------------------

function renderBoot(settings: Settings, error?: string): void {
  if (!root) return;
  root.innerHTML = `
    <section class="card">
      <h1>Tetravale</h1>
      <p>Join with the code on the board, or open the lecturer dashboard.</p>
      ${error ? `<p class="error">${escapeHtml(error)}</p>` : ""}
      <form id="join-form">
        <label>Session <input name="session" required value="${escapeHtml(settings.session)}"></label>
        <label>Join code <input name="code" required placeholder="e.g. Q7W2X"></label>
        <label>Your name <input name="name" required maxlength="60"></label>
        <button type="submit">Join the game</button>
      </form>
      <form id="lecturer-form">
        <label>Session <input name="session" required value="${escapeHtml(settings.session)}"></label>
        <label>Lecturer token <input name="token" required></label>
        <button type="submit">Open dashboard</button>
      </form>
    </section>`;
  el<HTMLFormElement>("#join-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    const session = String(data.get("session")).trim();
    const code = String(data.get("code")).trim().toUpperCase();
    const name = String(data.get("name")).trim();
    const api = new ApiClient("", session);
    try {
      await api.join(code, name);
    } catch (err) {
      // an already-joined code can simply resume
      if (!(err instanceof ApiError && /already joined/.test(err.detail))) {
        renderBoot({ ...settings, session }, err instanceof Error ? err.message : String(err));
        return;
      }
    }
    localStorage.setItem("tetravale.session", session);
    localStorage.setItem("tetravale.code", code);
    runParticipant(api, code);
  });
  el<HTMLFormElement>("#lecturer-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    const session = String(data.get("session")).trim();
    localStorage.setItem("tetravale.session", session);
    runLecturer(new ApiClient("", session), String(data.get("token")).trim());
  });
}

// -- participant -----------------------------------------------------------

const bidForms = new Map<string, BidFormModel>();
let worksheet: ClassificationWorksheet | null = null;
let worksheetError = "";

function bidFormFor(view: ParticipantView, tender: TenderView): BidFormModel {
  let model = bidForms.get(tender.tender_id);
  if (!model) {
    model = new BidFormModel(view, tender.tender_id);
    bidForms.set(tender.tender_id, model);
  }
  model.refresh(view);
  return model;
}

function tenderCard(view: ParticipantView, tender: TenderView): string {
  const form = bidFormFor(view, tender);
  const state = form.state();
  const meta = `${tender.location} &middot; ${tender.contract_type} &middot; situation ${tender.situation}`;
  let controls: string;
  switch (state.kind) {
    case "submitted":
      controls = `<p class="ok">bid in: ${escapeHtml(state.bid)}</p>`;
      break;
    case "submitting":
      controls = `<p>sending&hellip;</p>`;
      break;
    case "disabled":
      controls = `<p class="muted">${escapeHtml(state.reason)}</p>`;
      break;
    default:
      controls = `
        <form class="bid-form" data-tender="${tender.tender_id}">
          <input name="amount" inputmode="decimal" placeholder="your bid" required>
          <button type="submit">Bid</button>
          ${state.kind === "error" ? `<span class="error">${escapeHtml(state.message)}</span>` : ""}
        </form>`;
  }
  return `
    <article class="tender">
      <h3>${tender.tender_id}</h3>
      <p>${meta}</p>
      <p>Year ${tender.year}, round ${tender.round} &mdash; your cost: <strong>${escapeHtml(tender.your_cost)}</strong></p>
      ${controls}
    </article>`;
}

function participantHtml(view: ParticipantView): string {
  const members = view.group_members
    .map((m) => `${escapeHtml(m.name)}${m.seat ? ` (seat ${m.seat})` : ""}`)
    .join(", ");
  const head = `
    <header>
      <h1>${escapeHtml(view.name)} &mdash; ${view.group_id}${view.village ? `, ${view.village}` : ""}</h1>
      <p>phase: <strong>${view.phase}</strong> &middot; group: ${members}</p>
    </header>`;
  if (view.phase === "lobby") {
    return `${head}<p>Waiting for the lecturer to start part 1.</p>`;
  }
  let body = "";
  if (view.open_tenders && view.open_tenders.length > 0) {
    body += view.open_tenders.map((t) => tenderCard(view, t)).join("");
  } else if (view.phase === "part1" || view.phase === "part2") {
    body += `<p class="muted">No round is open right now.</p>`;
  }
  if (view.phase === "part2") {
    body += `
      <section class="chat">
        <h2>Group chat</h2>
        <div id="chat-thread">loading&hellip;</div>
        <form id="chat-form"><input name="text" maxlength="500" placeholder="coordinate here"><button>Send</button></form>
      </section>`;
  }
  if (view.results && view.results.length > 0) {
    const rows = view.results
      .map(
        (r) =>
          `<tr><td>${r.tender_id}</td><td>${r.winner_seat ?? "nobody"}</td>` +
          `<td>${r.you_won ? "you won" : ""}</td><td>${r.your_margin ?? ""}</td></tr>`,
      )
      .join("");
    body += `
      <details class="results"><summary>Awarded tenders</summary>
        <table><tr><th>tender</th><th>winner seat</th><th></th><th>your margin</th></tr>${rows}</table>
      </details>`;
  }
  if (view.phase === "part3") {
    body += worksheetHtml(view);
  }
  if (view.phase === "debrief") {
    body += leaderboardHtml(view.leaderboard ?? [], view.winners ?? []);
  }
  return head + body;
}

function worksheetHtml(view: ParticipantView): string {
  const status = view.submitted
    ? `<p class="ok">Submission stored. You can replace it until the debrief.</p>`
    : "";
  if (!worksheet) {
    return `${status}<section class="worksheet"><h2>Classification</h2><p>loading dataset&hellip;</p></section>`;
  }
  const rows = worksheet.rows
    .map((row) => {
      const label = worksheet!.labelOf(row.id);
      const screens = (Object.keys(row.screens) as (keyof typeof row.screens)[])
        .map((name) => `<td>${row.screens[name] === null ? "" : row.screens[name]}</td>`)
        .join("");
      return `
        <tr>
          <td>${row.id}</td>${screens}<td>${row.bids.join(" / ")}</td>
          <td><button class="toggle ${label ?? "unset"}" data-id="${row.id}">${label ?? "label it"}</button></td>
        </tr>`;
    })
    .join("");
  const reason = worksheet.blockReason();
  return `
    ${status}
    <section class="worksheet">
      <h2>Classification (${worksheet.rows.length} tenders)</h2>
      <p>
        <a href="#" id="download-dataset">download dataset CSV</a>
        ${view.training_data_available ? ` &middot; <a href="#" id="download-training">training data</a>` : ""}
        &middot; upload a submission: <input type="file" id="upload-submission" accept=".csv">
      </p>
      <p>
        threshold <input type="range" id="threshold" min="0" max="1" step="0.05" value="0.5"
          ${worksheet.hasProbabilities() ? "" : "disabled"}>
        <span id="threshold-value">0.5</span>
        ${worksheet.hasProbabilities() ? "" : `<span class="muted">(upload a probability column to enable)</span>`}
      </p>
      <div class="scroll">
        <table>
          <tr><th>ID</th><th>SPD</th><th>CV</th><th>RD</th><th>RDNORM</th><th>DIFFP</th><th>ranked bids</th><th>verdict</th></tr>
          ${rows}
        </table>
      </div>
      <p>
        <button id="submit-classification" ${reason ? "disabled" : ""}>Submit classification</button>
        ${reason ? `<span class="error">${escapeHtml(reason)}</span>` : ""}
        ${worksheetError ? `<span class="error">${escapeHtml(worksheetError)}</span>` : ""}
      </p>
    </section>`;
}

function leaderboardHtml(board: ParticipantView["leaderboard"] & {}, winners: string[]): string {
  const rows = board
    .map(
      (r) =>
        `<tr><td>${escapeHtml(r.participant)}</td><td>${r.part1_points}</td><td>${r.part2_provisional}</td>` +
        `<td>${r.part2_revoked}</td><td>${r.correct_rate}</td><td>${r.fp_count}</td>` +
        `<td>${r.penalty_factor}</td><td>${r.eligible}</td><td><strong>${r.final_points}</strong></td></tr>`,
    )
    .join("");
  return `
    <section>
      <h2>Final leaderboard</h2>
      ${winners.length ? `<p class="ok">winner${winners.length > 1 ? "s" : ""}: ${winners.map(escapeHtml).join(", ")}</p>` : ""}
      <div class="scroll"><table>
        <tr><th>who</th><th>part 1</th><th>part 2</th><th>revoked</th><th>rate</th><th>FPs</th><th>factor</th><th>eligible</th><th>final</th></tr>
        ${rows}
      </table></div>
    </section>`;
}

function downloadText(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const link = document.createElement("a");
  link.href = url;
  link.download = filename;
  link.click();
  URL.revokeObjectURL(url);
}

async function wireParticipant(api: ApiClient, code: string, view: ParticipantView): Promise<void> {
  if (!root) return;
  root.querySelectorAll<HTMLFormElement>(".bid-form").forEach((formEl) => {
    formEl.addEventListener("submit", async (event) => {
      event.preventDefault();
      const tenderId = formEl.dataset.tender!;
      const amount = String(new FormData(formEl).get("amount") ?? "");
      const model = bidForms.get(tenderId);
      if (!model) return;
      await model.submit((a) => api.submitBid(code, tenderId, a), amount);
      await refreshParticipant(api, code);
    });
  });

  const chatForm = root.querySelector<HTMLFormElement>("#chat-form");
  if (chatForm) {
    chatForm.addEventListener("submit", async (event) => {
      event.preventDefault();
      const text = String(new FormData(chatForm).get("text") ?? "").trim();
      if (!text) return;
      try {
        await api.postChat(code, text);
        chatForm.reset();
      } catch (err) {
        alert(err instanceof Error ? err.message : String(err));
      }
      await renderChat(api, code);
    });
    await renderChat(api, code);
  }

  if (view.phase === "part3") {
    if (!worksheet) {
      try {
        worksheet = new ClassificationWorksheet(await api.datasetCsv());
        await refreshParticipant(api, code);
        return;
      } catch (err) {
        worksheetError = err instanceof Error ? err.message : String(err);
      }
    }
    wireWorksheet(api, code);
  }
}

function wireWorksheet(api: ApiClient, code: string): void {
  if (!root || !worksheet) return;
  root.querySelectorAll<HTMLButtonElement>(".toggle").forEach((button) => {
    button.addEventListener("click", async () => {
      worksheet!.toggle(Number(button.dataset.id));
      await refreshParticipant(api, code);
    });
  });
  root.querySelector("#download-dataset")?.addEventListener("click", async (event) => {
    event.preventDefault();
    downloadText("part3_dataset.csv", await api.datasetCsv());
  });
  root.querySelector("#download-training")?.addEventListener("click", async (event) => {
    event.preventDefault();
    downloadText("training.csv", await api.trainingCsv());
  });
  root.querySelector<HTMLInputElement>("#upload-submission")?.addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    worksheetError = "";
    try {
      worksheet!.loadSubmissionCsv(await file.text());
    } catch (err) {
      worksheetError = err instanceof WorksheetError ? err.message : String(err);
    }
    await refreshParticipant(api, code);
  });
  const slider = root.querySelector<HTMLInputElement>("#threshold");
  slider?.addEventListener("input", async () => {
    const theta = Number(slider.value);
    el<HTMLElement>("#threshold-value").textContent = slider.value;
    worksheet!.applyThreshold(theta);
    await refreshParticipant(api, code);
  });
  root.querySelector("#submit-classification")?.addEventListener("click", async () => {
    worksheetError = "";
    try {
      const submission = worksheet!.toSubmission();
      await api.submitClassification(code, submission.labels);
      // keep a local copy in the canonical CSV form for the curious
      console.debug(submissionToCsv(submission));
    } catch (err) {
      worksheetError = err instanceof Error ? err.message : String(err);
    }
    await refreshParticipant(api, code);
  });
}

async function renderChat(api: ApiClient, code: string): Promise<void> {
  const thread = root?.querySelector("#chat-thread");
  if (!thread) return;
  try {
    const chat = await api.readChat(code);
    thread.innerHTML =
      chat.messages
        .map(
          (m) =>
            `<p><strong>${escapeHtml(m.name)}</strong> <span class="muted">Y${m.year}R${m.round}</span> ${escapeHtml(m.text)}</p>`,
        )
        .join("") || `<p class="muted">nothing yet</p>`;
  } catch {
    thread.innerHTML = `<p class="muted">chat unavailable</p>`;
  }
}

async function refreshParticipant(api: ApiClient, code: string): Promise<void> {
  if (!root) return;
  const view = await api.view(code);
  root.innerHTML = `<div class="page">${participantHtml(view)}</div>`;
  await wireParticipant(api, code, view);
}

function runParticipant(api: ApiClient, code: string): void {
  let cursor = -1;
  const loop = async () => {
    for (;;) {
      try {
        const entries = await api.events(cursor, { code, wait: 25 });
        if (entries.length > 0) cursor = entries[entries.length - 1].index;
        await refreshParticipant(api, code);
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
          renderBoot(readSettings(), err.detail);
          return;
        }
        await new Promise((resolve) => setTimeout(resolve, 2000));
      }
    }
  };
  refreshParticipant(api, code)
    .then(loop)
    .catch((err) => renderBoot(readSettings(), err instanceof Error ? err.message : String(err)));
}

// -- lecturer ---------------------------------------------------------------

let revealed = false;

function lecturerHtml(dash: LecturerDashboard, state: Parameters<LecturerDashboard["refresh"]>[0]): string {
  const target = dash.advanceTarget();
  const blockers = dash.advanceBlockers();
  const progress = dash.bidProgress();
  const subs = dash.submissionProgress();
  const reveal = dash.canReveal();
  const codes = Object.entries(state.groups)
    .map(
      ([gid, group]) =>
        `<li><strong>${gid}</strong> (${group.size} seats): ${group.codes.join(" ")}</li>`,
    )
    .join("");
  return `
    <header><h1>Lecturer &mdash; ${state.session_id}</h1>
      <p>phase <strong>${state.phase}</strong> &middot; joined ${dash.joinedCount()}/${state.class_size}
         &middot; chat messages ${state.chat_messages}</p></header>
    <section class="card">
      <h2>Phase</h2>
      <button id="advance" ${dash.canAdvance() ? "" : "disabled"}>
        ${target ? `advance to ${target}` : "final phase reached"}
      </button>
      ${blockers.length ? `<ul class="error">${blockers.map((b) => `<li>${escapeHtml(b)}</li>`).join("")}</ul>` : ""}
    </section>
    <section class="card">
      <h2>Rounds</h2>
      <form id="round-form">
        year <select name="year">${[1, 2, 3, 4].map((y) => `<option>${y}</option>`).join("")}</select>
        round <select name="round"><option value="">all</option>${[1, 2, 3, 4].map((r) => `<option>${r}</option>`).join("")}</select>
        <button data-action="open">open round</button>
        <button data-action="close">${escapeHtml(dash.closeButtonLabel())}</button>
      </form>
      ${state.open_tenders?.length ? `<p>open now: ${state.open_tenders.join(", ")} &mdash; ${progress.got}/${progress.expected} bids in</p>` : `<p class="muted">no open tenders</p>`}
      ${state.awarded !== undefined ? `<p>awarded ${state.awarded}/${state.tenders_in_part} tenders this part</p>` : ""}
    </section>
    ${state.submission_count !== undefined ? `<section class="card"><h2>Part 3</h2><p>submissions in: ${subs.got}/${subs.expected}</p></section>` : ""}
    <section class="card">
      <h2>Join codes</h2><ul>${codes}</ul>
      ${dash.missingCodes().length ? `<p class="muted">unused: ${dash.missingCodes().join(" ")}</p>` : ""}
    </section>
    <section class="card">
      <h2>Reveal</h2>
      <button id="reveal" ${reveal ? "" : "disabled"}>reveal leaderboard</button>
      ${reveal ? "" : `<span class="muted">${escapeHtml(dash.revealDisabledReason() ?? "")}</span>`}
      <div id="board">${revealed && state.leaderboard ? leaderboardHtml(state.leaderboard, state.winners ?? []) : ""}</div>
    </section>`;
}

async function refreshLecturer(api: ApiClient, token: string, dash: LecturerDashboard): Promise<void> {
  if (!root) return;
  const state = await api.state(token);
  dash.refresh(state);
  root.innerHTML = `<div class="page">${lecturerHtml(dash, state)}</div>`;

  el<HTMLButtonElement>("#advance").addEventListener("click", async () => {
    try {
      await api.advance(token);
    } catch (err) {
      alert(err instanceof Error ? err.message : String(err));
    }
    await refreshLecturer(api, token, dash);
  });
  el<HTMLFormElement>("#round-form")
    .querySelectorAll<HTMLButtonElement>("button")
    .forEach((button) => {
      button.addEventListener("click", async (event) => {
        event.preventDefault();
        const form = new FormData(el<HTMLFormElement>("#round-form"));
        const year = Number(form.get("year"));
        const roundRaw = String(form.get("round") ?? "");
        const round = roundRaw === "" ? undefined : Number(roundRaw);
        try {
          if (button.dataset.action === "open") await api.openRound(token, year, round);
          else await api.closeRound(token, year, round);
        } catch (err) {
          alert(err instanceof Error ? err.message : String(err));
        }
        await refreshLecturer(api, token, dash);
      });
    });
  el<HTMLButtonElement>("#reveal").addEventListener("click", async () => {
    revealed = true;
    await refreshLecturer(api, token, dash);
  });
}

function runLecturer(api: ApiClient, token: string): void {
  const dash = new LecturerDashboard({
    session_id: api.sessionId,
    phase: "lobby",
    class_size: 0,
    groups: {},
    participants: [],
    missing_codes: [],
    advance_blockers: [],
    round_seconds: 0,
    chat_messages: 0,
  });
  let cursor = -1;
  const loop = async () => {
    for (;;) {
      try {
        const entries = await api.events(cursor, { token, wait: 25 });
        if (entries.length > 0) cursor = entries[entries.length - 1].index;
        await refreshLecturer(api, token, dash);
      } catch {
        await new Promise((resolve) => setTimeout(resolve, 2000));
      }
    }
  };
  refreshLecturer(api, token, dash)
    .then(loop)
    .catch((err) => renderBoot(readSettings(), err instanceof Error ? err.message : String(err)));
}

// -- entry ------------------------------------------------------------------

const settings = readSettings();
if (settings.session && settings.token) {
  runLecturer(new ApiClient("", settings.session), settings.token);
} else if (settings.session && settings.code) {
  runParticipant(new ApiClient("", settings.session), settings.code);
} else {
  renderBoot(settings);
}
