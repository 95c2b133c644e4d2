import { describe, expect, it } from 'vitest';

import { ChatLog } from '../src/chat.js';
import type { QueryResponse } from '../src/types.js';

const response: QueryResponse = {
  results: [],
  latency_ms: 12,
  index_built_at: 0,
  model_tag: 'stub',
};

describe('chat log', () => {
  it('records turns in order', () => {
    const log = new ChatLog();
    log.addUser('first');
    log.addResults(response);
    log.addUser('second');
    log.addError('boom');
    expect(log.turns.map((t) => t.role)).toEqual(['user', 'system', 'user', 'system']);
    expect(log.turns[0]).toMatchObject({ role: 'user', text: 'first' });
    expect(log.turns[3]).toMatchObject({ role: 'system', error: 'boom' });
  });

  it('errors do not erase previous turns', () => {
    const log = new ChatLog();
    log.addUser('q');
    log.addResults(response);
    log.addError('network down');
    expect(log.turns).toHaveLength(3);
  });
});
