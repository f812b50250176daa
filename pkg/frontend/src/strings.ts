/** All user-facing copy, externalized per language. Italian is the default
 * study language; the English set keeps the original task wording. */

import type { Label, Task } from "./api.js";

export interface CopySet {
  appTitle: string;
  startTitle: string;
  subjectLabel: string;
  taskLabel: string;
  taskNames: Record<Task, string>;
  startButton: string;
  instructions: Record<Task, string>;
  rankNames: [string, string, string];
  labelNames: Record<Label, string>;
  keyboardHint: string;
  submitButton: string;
  progress: (answered: number, total: number) => string;
  loading: string;
  doneTitle: string;
  doneBody: string;
  errorTitle: string;
  retryButton: string;
}

export const IT: CopySet = {
  appTitle: "Valutazione di testi",
  startTitle: "Inizia una sessione",
  subjectLabel: "Codice partecipante",
  taskLabel: "Compito",
  taskNames: { ranking: "Ordinamento", classification: "Classificazione" },
  startButton: "Inizia",
  instructions: {
    ranking: "Ordina gli esempi dal più naturale al più artificiale.",
    classification:
      "Secondo la tua intuizione, questa frase è stata scritta da un'intelligenza artificiale?",
  },
  rankNames: ["1 (più naturale)", "2", "3 (più artificiale)"],
  labelNames: { yes: "Sì", no: "No", ct: "Non saprei" },
  keyboardHint: "Scorciatoie: 1 = Sì, 2 = No, 3 = Non saprei",
  submitButton: "Invia",
  progress: (answered, total) => `${answered} di ${total}`,
  loading: "Caricamento…",
  doneTitle: "Sessione completata",
  doneBody: "Grazie per la partecipazione.",
  errorTitle: "Si è verificato un errore",
  retryButton: "Riprova",
};

export const EN: CopySet = {
  appTitle: "Text evaluation",
  startTitle: "Start a session",
  subjectLabel: "Participant code",
  taskLabel: "Task",
  taskNames: { ranking: "Ranking", classification: "Classification" },
  startButton: "Start",
  instructions: {
    ranking: "Rank the given examples from the most natural to the most artificial.",
    classification:
      "According to your intuition is this sentence written by an artificial intelligence?",
  },
  rankNames: ["1 (most natural)", "2", "3 (most artificial)"],
  labelNames: { yes: "Yes", no: "No", ct: "Can't tell" },
  keyboardHint: "Shortcuts: 1 = Yes, 2 = No, 3 = Can't tell",
  submitButton: "Submit",
  progress: (answered, total) => `${answered} of ${total}`,
  loading: "Loading…",
  doneTitle: "Session complete",
  doneBody: "Thank you for taking part.",
  errorTitle: "Something went wrong",
  retryButton: "Retry",
};

export function copyFor(locale?: string): CopySet {
  return locale?.toLowerCase().startsWith("en") ? EN : IT;
}
