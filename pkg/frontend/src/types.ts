// Payload shapes of the session service JSON API.

export type AnswerValue = "yes" | "no" | "cant_answer";

export interface QuestionView {
  text: string;
  question: Record<string, unknown>;
}

export interface TranscriptEntry {
  turn: number;
  question_text: string;
  question: Record<string, unknown>;
  answer: AnswerValue;
  feedback: string | null;
  eig: number | null;
  candidate_count: number;
}

export interface CandidateInfo {
  id: string;
  number?: number;
  attributes?: Record<string, string>;
}

export interface SessionState {
  session_id: string;
  task: string;
  done: boolean;
  outcome: string | null;
  final_guess: string | null;
  turn_index: number;
  current_question: QuestionView | null;
  candidate_count: number;
  entropy_bits: number;
  candidates: CandidateInfo[];
  transcript: TranscriptEntry[];
  config: Record<string, unknown>;
}

export interface CreateSessionResponse {
  session_id: string;
  first_question: QuestionView | null;
  candidate_count: number;
  state: SessionState;
}

export interface AnswerResponse {
  done: boolean;
  next_question: QuestionView | null;
  final_guess: string | null;
  candidate_count: number;
  feedback: string | null;
  turn_index: number;
}

export type TaskKind = "guess-who" | "guess-number";

export interface StartOptions {
  seed?: number;
  tMax?: number;
  feedback?: "none" | "distribution";
}
