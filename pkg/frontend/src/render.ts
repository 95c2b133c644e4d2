/** DOM rendering for chat turns, result cards, and the error banner. */

import type { ChatTurn, QueryResponse, ResultItem } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderCard(doc: Document, item: ResultItem): HTMLElement {
  const card = el(doc, 'article', 'result-card');
  card.dataset.docId = item.doc_id;
  card.dataset.rank = String(item.rank);

  const heading = el(doc, 'h3', 'result-title');
  heading.append(el(doc, 'span', 'result-rank', `${item.rank}.`));
  if (item.url) {
    const link = doc.createElement('a');
    link.href = item.url;
    link.target = '_blank';
    link.rel = 'noopener';
    link.textContent = item.title ?? item.doc_id;
    heading.append(' ', link);
  } else {
    heading.append(' ', item.title ?? item.doc_id);
  }
  card.append(heading);
  card.append(el(doc, 'span', 'result-score', item.cross_score.toFixed(3)));
  return card;
}

export function renderResultsTurn(doc: Document, response: QueryResponse): HTMLElement {
  const turn = el(doc, 'div', 'turn turn-system');
  const sorted = [...response.results].sort((a, b) => a.rank - b.rank);
  for (const item of sorted) {
    turn.append(renderCard(doc, item));
  }
  if (sorted.length === 0) {
    turn.append(el(doc, 'p', 'no-results', 'No matching documents.'));
  }
  turn.append(el(doc, 'span', 'latency-badge', `${response.latency_ms} ms`));
  return turn;
}

export function renderUserTurn(doc: Document, text: string): HTMLElement {
  return el(doc, 'div', 'turn turn-user', text);
}

export function renderErrorTurn(doc: Document, message: string): HTMLElement {
  const turn = el(doc, 'div', 'turn turn-system');
  turn.append(el(doc, 'div', 'error-banner', message));
  return turn;
}

export function renderTurn(doc: Document, turn: ChatTurn): HTMLElement {
  if (turn.role === 'user') return renderUserTurn(doc, turn.text);
  if ('error' in turn) return renderErrorTurn(doc, turn.error);
  return renderResultsTurn(doc, turn.response);
}
