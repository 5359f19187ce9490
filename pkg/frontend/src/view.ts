// PlayView derivation. The view is a pure function of the latest service
// state plus two client-side facts (request in flight, last error) -- no
// game logic, no EIG math, nothing the server has not already said.

import type { CandidateInfo, SessionState, TranscriptEntry } from "./types.js";

export interface CandidateTile {
  id: string;
  label: string;
  chips: string[];
}

export interface PlayView {
  sessionId: string | null;
  task: string | null;
  questionText: string | null;
  buttonsEnabled: boolean;
  grid: CandidateTile[];
  gridCount: number;
  entropyBits: number;
  lastEig: number | null;
  lastFeedback: string | null;
  transcript: TranscriptEntry[];
  turnIndex: number;
  done: boolean;
  finalGuess: string | null;
  outcome: string | null;
  error: string | null;
}

export function tileFor(candidate: CandidateInfo): CandidateTile {
  if (candidate.number !== undefined && candidate.number !== null) {
    return { id: candidate.id, label: String(candidate.number), chips: [] };
  }
  const chips = Object.entries(candidate.attributes ?? {}).map(([name, value]) => {
    const words = name.replace(/_/g, " ");
    if (value === "yes") return words;
    if (value === "no") return `no ${words.replace(/^(has|wears) /, "")}`;
    return `${value} ${words.replace(/ color$/, "")}`;
  });
  return { id: candidate.id, label: candidate.id, chips };
}

export function emptyView(error: string | null = null): PlayView {
  return {
    sessionId: null,
    task: null,
    questionText: null,
    buttonsEnabled: false,
    grid: [],
    gridCount: 0,
    entropyBits: 0,
    lastEig: null,
    lastFeedback: null,
    transcript: [],
    turnIndex: 0,
    done: false,
    finalGuess: null,
    outcome: null,
    error,
  };
}

export function buildPlayView(
  state: SessionState | null,
  inFlight: boolean,
  error: string | null = null,
): PlayView {
  if (state === null) {
    return emptyView(error);
  }
  const last = state.transcript.length
    ? state.transcript[state.transcript.length - 1] ?? null
    : null;
  return {
    sessionId: state.session_id,
    task: state.task,
    questionText: state.current_question?.text ?? null,
    buttonsEnabled: !inFlight && !state.done && state.current_question !== null,
    grid: state.candidates.map(tileFor),
    gridCount: state.candidate_count,
    entropyBits: state.entropy_bits,
    lastEig: last?.eig ?? null,
    lastFeedback: last?.feedback ?? null,
    transcript: state.transcript,
    turnIndex: state.turn_index,
    done: state.done,
    finalGuess: state.final_guess,
    outcome: state.outcome,
    error,
  };
}
