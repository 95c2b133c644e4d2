/** Page wiring: one in-flight query at a time, settings panel, chat log. */

import { ApiError, RecommendClient } from './api.js';
import { ChatLog } from './chat.js';
import { renderTurn } from './render.js';
import {
  clearSettings,
  isValidEndpoint,
  loadSettings,
  saveSettings,
  type Settings,
} from './settings.js';

export interface AppElements {
  form: HTMLFormElement;
  input: HTMLInputElement;
  submit: HTMLButtonElement;
  log: HTMLElement;
  endpointInput: HTMLInputElement;
  topNInput: HTMLInputElement;
  settingsSave: HTMLButtonElement;
  settingsReset: HTMLButtonElement;
  settingsError: HTMLElement;
}

export class App {
  readonly chat = new ChatLog();
  settings: Settings;
  private pending = false;

  constructor(
    private readonly doc: Document,
    private readonly els: AppElements,
    private readonly storage: Storage,
  ) {
    this.settings = loadSettings(storage);
    this.syncSettingsForm();
    els.form.addEventListener('submit', (event) => {
      event.preventDefault();
      void this.submitQuery(els.input.value);
    });
    els.settingsSave.addEventListener('click', (event) => {
      event.preventDefault();
      this.applySettings();
    });
    els.settingsReset.addEventListener('click', (event) => {
      event.preventDefault();
      this.settings = clearSettings(this.storage);
      this.syncSettingsForm();
    });
  }

  get isPending(): boolean {
    return this.pending;
  }

  private syncSettingsForm(): void {
    this.els.endpointInput.value = this.settings.endpoint;
    this.els.topNInput.value = String(this.settings.topN);
    this.els.settingsError.textContent = '';
  }

  applySettings(): void {
    const endpoint = this.els.endpointInput.value.trim();
    const topN = Number(this.els.topNInput.value);
    if (!isValidEndpoint(endpoint)) {
      this.els.settingsError.textContent = 'Invalid endpoint URL';
      return;
    }
    if (!Number.isInteger(topN) || topN < 1) {
      this.els.settingsError.textContent = 'top_n must be a positive integer';
      return;
    }
    this.settings = { endpoint, topN };
    saveSettings(this.storage, this.settings);
    this.els.settingsError.textContent = '';
  }

  async submitQuery(text: string): Promise<void> {
    const query = text.trim();
    if (!query || this.pending) return;
    this.pending = true;
    this.els.input.disabled = true;
    this.els.submit.disabled = true;
    this.appendTurn(this.chat.addUser(query));
    this.els.input.value = '';
    const client = new RecommendClient(this.settings.endpoint);
    try {
      const response = await client.recommend(query, this.settings.topN);
      this.appendTurn(this.chat.addResults(response));
    } catch (err) {
      const message = err instanceof ApiError ? err.message : String(err);
      this.appendTurn(this.chat.addError(message));
    } finally {
      this.pending = false;
      this.els.input.disabled = false;
      this.els.submit.disabled = false;
      this.els.input.focus();
    }
  }

  private appendTurn(turn: ReturnType<ChatLog['addUser']>): void {
    this.els.log.append(renderTurn(this.doc, turn));
    this.els.log.scrollTop = this.els.log.scrollHeight;
  }
}

export function initApp(doc: Document, storage: Storage): App {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };
  return new App(
    doc,
    {
      form: byId<HTMLFormElement>('query-form'),
      input: byId<HTMLInputElement>('query-input'),
      submit: byId<HTMLButtonElement>('query-submit'),
      log: byId<HTMLElement>('chat-log'),
      endpointInput: byId<HTMLInputElement>('settings-endpoint'),
      topNInput: byId<HTMLInputElement>('settings-topn'),
      settingsSave: byId<HTMLButtonElement>('settings-save'),
      settingsReset: byId<HTMLButtonElement>('settings-reset'),
      settingsError: byId<HTMLElement>('settings-error'),
    },
    storage,
  );
}
