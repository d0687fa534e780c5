// Per-kind input affordances. Each view owns its DOM subtree and reports
// (a) whether the input is complete and (b) the payload to post.
// Answer keys never reach the client, so there is nothing here to hide.

import type { Payload, PublicTask } from "./api.js";

export const TIERS = ["god", "high", "ordinary"] as const;

export interface TaskView {
  root: HTMLElement;
  isComplete(): boolean;
  payload(): Payload | null;
  setOnChange(listener: () => void): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderVideoPanel(task: PublicTask): HTMLElement {
  const panel = el("div", "video-panel");
  panel.appendChild(el("h2", "video-title", task.video.title || "(untitled video)"));
  if (task.video.category) {
    panel.appendChild(el("div", "video-category", task.video.category));
  }
  if (task.video.frame_paths.length > 0) {
    const strip = el("div", "frame-strip");
    for (const path of task.video.frame_paths.slice(0, 12)) {
      const img = el("img", "frame-thumb");
      img.loading = "lazy"; // thumbnails are optional; text surrogates carry the task
      img.src = path;
      img.alt = "video frame";
      strip.appendChild(img);
    }
    panel.appendChild(strip);
  }
  // text surrogates always shown so the UI works frame-free
  if (task.video.ocr_text) {
    panel.appendChild(el("p", "video-ocr", `On-screen text: ${task.video.ocr_text}`));
  }
  if (task.video.subtitle_text) {
    panel.appendChild(el("p", "video-subtitles", `Subtitles: ${task.video.subtitle_text}`));
  }
  // comments display in their original language; the translation toggle is
  // hidden inside a collapsed details block by default
  const details = el("details", "translation-toggle");
  details.appendChild(el("summary", undefined, "Translation"));
  details.appendChild(
    el("p", "translation-note", "Machine translation is not configured; showing original text."),
  );
  panel.appendChild(details);
  return panel;
}

class BaseView implements TaskView {
  root: HTMLElement;
  protected listener: () => void = () => {};

  constructor(className: string) {
    this.root = el("div", className);
  }

  setOnChange(listener: () => void): void {
    this.listener = listener;
  }

  protected changed(): void {
    this.listener();
  }

  isComplete(): boolean {
    return false;
  }

  payload(): Payload | null {
    return null;
  }
}

// --- selection: radio pick ---------------------------------------------------

export class SelectionView extends BaseView {
  private picked: string | null = null;

  constructor(task: PublicTask) {
    super("selection-view");
    this.root.appendChild(
      el("p", "instruction", "Pick the most creative and amazing comment."),
    );
    const list = el("div", "option-list");
    for (const [label, , text] of task.options) {
      const row = el("label", "option-row");
      const radio = el("input") as HTMLInputElement;
      radio.type = "radio";
      radio.name = "selection";
      radio.value = label;
      radio.dataset.label = label;
      radio.addEventListener("change", () => {
        this.picked = label;
        this.changed();
      });
      row.appendChild(radio);
      row.appendChild(el("span", "option-label", label));
      row.appendChild(el("span", "option-text", text));
      list.appendChild(row);
    }
    this.root.appendChild(list);
  }

  override isComplete(): boolean {
    return this.picked !== null;
  }

  override payload(): Payload | null {
    return this.picked === null ? null : { label: this.picked };
  }
}

// --- ranking: ordered click list ----------------------------------------------

export class RankingView extends BaseView {
  private order: string[] = [];
  private readonly labels: string[];
  private readonly badges = new Map<string, HTMLElement>();

  constructor(task: PublicTask) {
    super("ranking-view");
    this.labels = task.options.map(([label]) => label);
    this.root.appendChild(
      el(
        "p",
        "instruction",
        "Click the comments from best to worst. Click a ranked comment again to un-rank it.",
      ),
    );
    const list = el("div", "option-list");
    for (const [label, , text] of task.options) {
      const button = el("button", "option-row rank-option") as HTMLButtonElement;
      button.type = "button";
      button.dataset.label = label;
      const badge = el("span", "rank-badge", "");
      this.badges.set(label, badge);
      button.appendChild(badge);
      button.appendChild(el("span", "option-label", label));
      button.appendChild(el("span", "option-text", text));
      button.addEventListener("click", () => this.toggle(label));
      list.appendChild(button);
    }
    this.root.appendChild(list);
  }

  /** Clicking appends to the sequence; clicking again removes and shifts
   * everything after it up one rank. */
  private toggle(label: string): void {
    const at = this.order.indexOf(label);
    if (at >= 0) {
      this.order.splice(at, 1);
    } else {
      this.order.push(label);
    }
    for (const [option, badge] of this.badges) {
      const rank = this.order.indexOf(option);
      badge.textContent = rank >= 0 ? String(rank + 1) : "";
    }
    this.changed();
  }

  currentOrder(): string[] {
    return [...this.order];
  }

  override isComplete(): boolean {
    return this.order.length === this.labels.length;
  }

  override payload(): Payload | null {
    return this.isComplete() ? { permutation: [...this.order] } : null;
  }
}

// --- classification: tier buckets -----------------------------------------------

export class ClassificationView extends BaseView {
  private readonly assignment = new Map<string, string>();
  private readonly labels: string[];

  constructor(task: PublicTask) {
    super("classification-view");
    this.labels = task.options.map(([label]) => label);
    this.root.appendChild(
      el("p", "instruction", "Assign every comment to a quality bucket."),
    );
    const list = el("div", "option-list");
    for (const [label, , text] of task.options) {
      const row = el("div", "option-row classify-row");
      row.dataset.label = label;
      row.draggable = true;
      row.addEventListener("dragstart", (event) => {
        (event as DragEvent).dataTransfer?.setData("text/option", label);
      });
      row.appendChild(el("span", "option-label", label));
      row.appendChild(el("span", "option-text", text));
      const buckets = el("span", "bucket-buttons");
      for (const tier of TIERS) {
        const button = el("button", "bucket-button", tier) as HTMLButtonElement;
        button.type = "button";
        button.dataset.label = label;
        button.dataset.tier = tier;
        button.addEventListener("click", () => this.assign(label, tier, row));
        buckets.appendChild(button);
      }
      row.appendChild(buckets);
      list.appendChild(row);
    }
    this.root.appendChild(list);
    // drop targets mirror the click buttons for mouse users
    const zones = el("div", "bucket-zones");
    for (const tier of TIERS) {
      const zone = el("div", "bucket-zone", `drop here: ${tier}`);
      zone.dataset.tier = tier;
      zone.addEventListener("dragover", (event) => event.preventDefault());
      zone.addEventListener("drop", (event) => {
        const label = (event as DragEvent).dataTransfer?.getData("text/option");
        if (label) {
          const row = list.querySelector<HTMLElement>(`.classify-row[data-label="${label}"]`);
          if (row) this.assign(label, tier, row);
        }
        event.preventDefault();
      });
      zones.appendChild(zone);
    }
    this.root.appendChild(zones);
  }

  private assign(label: string, tier: string, row: HTMLElement): void {
    this.assignment.set(label, tier);
    for (const button of row.querySelectorAll<HTMLButtonElement>(".bucket-button")) {
      button.classList.toggle("active", button.dataset.tier === tier);
    }
    this.changed();
  }

  override isComplete(): boolean {
    return this.labels.every((label) => this.assignment.has(label));
  }

  override payload(): Payload | null {
    if (!this.isComplete()) return null;
    const assignment: Record<string, string> = {};
    for (const label of this.labels) {
      assignment[label] = this.assignment.get(label)!;
    }
    return { assignment };
  }
}

// --- preference: per-item star scores ---------------------------------------------

export class PreferenceView extends BaseView {
  private readonly scores = new Map<string, number>();
  private readonly labels: string[];

  constructor(task: PublicTask) {
    super("preference-view");
    this.labels = task.options.map(([label]) => label);
    this.root.appendChild(
      el("p", "instruction", "Score every comment from 1 to 5 stars."),
    );
    const list = el("div", "option-list");
    for (const [label, , text] of task.options) {
      const row = el("div", "option-row preference-row");
      row.dataset.label = label;
      row.appendChild(el("span", "option-label", label));
      row.appendChild(el("span", "option-text", text));
      const stars = el("span", "star-buttons");
      for (let value = 1; value <= 5; value++) {
        const star = el("button", "star-button", "★") as HTMLButtonElement;
        star.type = "button";
        star.dataset.label = label;
        star.dataset.value = String(value);
        star.addEventListener("click", () => {
          this.scores.set(label, value);
          for (const sibling of stars.querySelectorAll<HTMLButtonElement>(".star-button")) {
            sibling.classList.toggle("active", Number(sibling.dataset.value) <= value);
          }
          this.changed();
        });
        stars.appendChild(star);
      }
      row.appendChild(stars);
      list.appendChild(row);
    }
    this.root.appendChild(list);
  }

  override isComplete(): boolean {
    return this.labels.every((label) => this.scores.has(label));
  }

  override payload(): Payload | null {
    if (!this.isComplete()) return null;
    const scores: Record<string, number> = {};
    for (const label of this.labels) {
      scores[label] = this.scores.get(label)!;
    }
    return { scores };
  }
}

export function createView(task: PublicTask): TaskView {
  switch (task.kind) {
    case "selection":
      return new SelectionView(task);
    case "ranking":
      return new RankingView(task);
    case "classification":
      return new ClassificationView(task);
    case "preference":
      return new PreferenceView(task);
  }
}
