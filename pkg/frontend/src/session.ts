/** Session state machine: one item per screen, sequential, no skipping.
 *
 * Progress is always the server cursor carried by the last ack, never a
 * local increment, so replayed acks cannot double-count. Only one request
 * is in flight at a time; submit stays disabled until the draft response
 * is complete (a full rank permutation or one label).
 */

import { ApiError, type Ack, type AnnotationApi, type Label, type Task } from "./api.js";

export type Phase = "start" | "loading" | "item" | "submitting" | "done" | "error";

export interface UiSessionState {
  phase: Phase;
  subject: string;
  task: Task | null;
  sessionId: string | null;
  nItems: number;
  /** Items acked by the server so far (its cursor). */
  answered: number;
  itemIndex: number | null;
  /** Three texts for ranking, one for classification. */
  texts: string[];
  /** Draft rank per displayed text, ranking only. */
  ranks: (number | null)[];
  /** Draft label, classification only. */
  label: Label | null;
  error: string | null;
}

export const LABELS: readonly Label[] = ["yes", "no", "ct"];

const RESUME_KEY = "textgen-eval.session";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface ResumeInfo {
  subject: string;
  task: Task;
  sessionId: string;
}

/** null when the ranks form a permutation of 1..3, else what is wrong. */
export function validateRanking(
  ranks: ReadonlyArray<number | null>,
): "incomplete" | "duplicate" | "out-of-range" | null {
  const given = ranks.filter((r): r is number => r !== null);
  if (given.some((r) => !Number.isInteger(r) || r < 1 || r > ranks.length)) {
    return "out-of-range";
  }
  if (new Set(given).size !== given.length) {
    return "duplicate";
  }
  if (ranks.length !== 3 || given.length !== 3) {
    return "incomplete";
  }
  return null;
}

/** Keyboard shortcuts for the classification screen: 1 / 2 / 3. */
export function labelForKey(key: string): Label | null {
  const index = ["1", "2", "3"].indexOf(key);
  return index === -1 ? null : LABELS[index] ?? null;
}

function initialState(): UiSessionState {
  return {
    phase: "start",
    subject: "",
    task: null,
    sessionId: null,
    nItems: 0,
    answered: 0,
    itemIndex: null,
    texts: [],
    ranks: [],
    label: null,
    error: null,
  };
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}

type Listener = (state: UiSessionState) => void;

export class SessionController {
  private state = initialState();
  private listeners: Listener[] = [];
  private inFlight = false;

  constructor(
    private readonly client: AnnotationApi,
    private readonly storage?: StorageLike,
  ) {}

  getState(): UiSessionState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  /** Last started session, for prefilling the start screen after a reload. */
  resumeInfo(): ResumeInfo | null {
    const raw = this.storage?.getItem(RESUME_KEY);
    if (!raw) {
      return null;
    }
    try {
      return JSON.parse(raw) as ResumeInfo;
    } catch {
      return null;
    }
  }

  async start(subject: string, task: Task): Promise<void> {
    if (this.inFlight) {
      return;
    }
    this.inFlight = true;
    this.update({ ...initialState(), phase: "loading", subject, task });
    try {
      const info = await this.client.createSession(subject, task);
      this.inFlight = false;
      this.storage?.setItem(
        RESUME_KEY,
        JSON.stringify({ subject, task, sessionId: info.session_id }),
      );
      this.update({
        sessionId: info.session_id,
        nItems: info.n_items,
        answered: info.next,
      });
      await this.loadNext();
    } catch (err) {
      this.inFlight = false;
      if (err instanceof ApiError && err.code === "evalservice.PlanExhausted") {
        // the subject already answered everything: that is the done screen
        this.update({ phase: "done" });
        return;
      }
      this.update({ phase: "error", error: describe(err) });
    }
  }

  async loadNext(): Promise<void> {
    if (this.inFlight || this.state.sessionId === null) {
      return;
    }
    this.inFlight = true;
    this.update({ phase: "loading", error: null });
    try {
      const item = await this.client.nextItem(this.state.sessionId);
      this.inFlight = false;
      if (item.done) {
        this.update({
          phase: "done",
          nItems: item.n_items,
          answered: item.n_items,
          itemIndex: null,
          texts: [],
          ranks: [],
          label: null,
        });
        return;
      }
      const texts = "texts" in item ? item.texts : [item.text];
      this.update({
        phase: "item",
        itemIndex: item.item_index,
        nItems: item.n_items,
        answered: item.item_index,
        texts,
        ranks: texts.map(() => null),
        label: null,
      });
    } catch (err) {
      this.inFlight = false;
      this.update({ phase: "error", error: describe(err) });
    }
  }

  /** Assign a rank to a displayed text; a rank sits on one text at most. */
  setRank(textIndex: number, rank: number): void {
    if (this.state.phase !== "item" || this.state.task !== "ranking") {
      return;
    }
    if (!Number.isInteger(rank) || rank < 1 || rank > this.state.texts.length) {
      return;
    }
    const ranks = this.state.ranks.map((r, i) =>
      i === textIndex ? rank : r === rank ? null : r,
    );
    this.update({ ranks });
  }

  setLabel(label: Label): void {
    if (this.state.phase !== "item" || this.state.task !== "classification") {
      return;
    }
    if (!LABELS.includes(label)) {
      return;
    }
    this.update({ label });
  }

  canSubmit(): boolean {
    if (this.state.phase !== "item" || this.inFlight) {
      return false;
    }
    if (this.state.task === "ranking") {
      return validateRanking(this.state.ranks) === null;
    }
    return this.state.label !== null;
  }

  /** False when nothing was sent (incomplete draft or a request in flight). */
  async submit(): Promise<boolean> {
    if (!this.canSubmit() || this.state.sessionId === null || this.state.itemIndex === null) {
      return false;
    }
    const response =
      this.state.task === "ranking"
        ? (this.state.ranks as number[])
        : (this.state.label as Label);
    this.inFlight = true;
    this.update({ phase: "submitting" });
    try {
      const ack = await this.client.submit(
        this.state.sessionId,
        this.state.itemIndex,
        response,
      );
      this.inFlight = false;
      this.applyAck(ack);
      await this.loadNext();
      return true;
    } catch (err) {
      this.inFlight = false;
      if (
        err instanceof ApiError &&
        (err.code === "evalservice.DuplicateSubmission" ||
          err.code === "evalservice.OutOfOrder")
      ) {
        // the server cursor wins; fetch whatever it wants answered next
        await this.loadNext();
        return false;
      }
      this.update({ phase: "error", error: describe(err) });
      return false;
    }
  }

  /** Progress mirrors the ack's cursor, so replaying an ack is a no-op. */
  applyAck(ack: Ack): void {
    this.update({ answered: ack.next, nItems: ack.n_items });
  }

  async retry(): Promise<void> {
    if (this.state.phase !== "error") {
      return;
    }
    if (this.state.sessionId === null) {
      if (this.state.task !== null) {
        await this.start(this.state.subject, this.state.task);
      }
      return;
    }
    await this.loadNext();
  }

  private update(patch: Partial<UiSessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }
}
