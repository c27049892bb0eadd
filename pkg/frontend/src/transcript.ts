/** Read-only activity log: every request the client makes and the phase
 * outputs that came back, so a practitioner can audit how the current state
 * was produced. */

export interface LogEntry {
  when: Date;
  action: string;
  detail: string;
}

export class ActivityLog {
  readonly entries: LogEntry[] = [];

  constructor(private readonly container: HTMLElement) {}

  add(action: string, detail: string): void {
    this.entries.push({ when: new Date(), action, detail });
    this.render();
  }

  private render(): void {
    this.container.textContent = "";
    const list = document.createElement("ol");
    list.className = "transcript";
    for (const entry of this.entries) {
      const item = document.createElement("li");
      const head = document.createElement("strong");
      head.textContent = `${entry.when.toLocaleTimeString()} ${entry.action}`;
      const body = document.createElement("pre");
      body.textContent = entry.detail;
      item.appendChild(head);
      item.appendChild(body);
      list.appendChild(item);
    }
    this.container.appendChild(list);
  }
}
