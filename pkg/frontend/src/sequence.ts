// Drag-to-reorder sequence editor backed by HTML5 drag events. Placement is
// one-dimensional along the kitchen walls, so a reorderable list is the
// honest interaction; every reorder POSTs the whole sequence.

import { reorder } from "./state.js";

export class SequenceEditor {
  private items: string[] = [];
  private dragIndex = -1;

  constructor(
    private list: HTMLElement,
    private onReorder: (sequence: string[]) => void,
  ) {}

  setItems(items: string[]): void {
    this.items = items.slice();
    this.renderList();
  }

  getItems(): string[] {
    return this.items.slice();
  }

  private renderList(): void {
    this.list.textContent = "";
    this.items.forEach((name, index) => {
      const li = document.createElement("li");
      li.textContent = name;
      li.draggable = true;
      li.dataset.index = String(index);
      li.addEventListener("dragstart", (e) => {
        this.dragIndex = index;
        e.dataTransfer?.setData("text/plain", String(index));
        li.classList.add("dragging");
      });
      li.addEventListener("dragend", () => li.classList.remove("dragging"));
      li.addEventListener("dragover", (e) => {
        e.preventDefault();
        li.classList.add("dropTarget");
      });
      li.addEventListener("dragleave", () => li.classList.remove("dropTarget"));
      li.addEventListener("drop", (e) => {
        e.preventDefault();
        li.classList.remove("dropTarget");
        const from = this.dragIndex >= 0
          ? this.dragIndex
          : Number(e.dataTransfer?.getData("text/plain") ?? -1);
        this.dragIndex = -1;
        if (from < 0 || from === index) return;
        this.items = reorder(this.items, from, index);
        this.renderList();
        this.onReorder(this.getItems());
      });
      this.list.appendChild(li);
    });
  }
}
