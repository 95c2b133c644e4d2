/** Append-only conversation log; turns are immutable history. */

import type { ChatTurn, QueryResponse } from './types.js';

export class ChatLog {
  private readonly log: ChatTurn[] = [];

  get turns(): readonly ChatTurn[] {
    return this.log;
  }

  addUser(text: string): ChatTurn {
    const turn: ChatTurn = { role: 'user', text, timestamp: Date.now() };
    this.log.push(turn);
    return turn;
  }

  addResults(response: QueryResponse): ChatTurn {
    const turn: ChatTurn = { role: 'system', response, timestamp: Date.now() };
    this.log.push(turn);
    return turn;
  }

  addError(error: string): ChatTurn {
    const turn: ChatTurn = { role: 'system', error, timestamp: Date.now() };
    this.log.push(turn);
    return turn;
  }
}
