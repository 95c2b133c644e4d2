/** Client settings persisted in localStorage. */

export interface Settings {
  endpoint: string;
  topN: number;
}

export const DEFAULT_SETTINGS: Settings = {
  endpoint: 'http://127.0.0.1:8080',
  topN: 5,
};

const STORAGE_KEY = 'metarec-ui-settings';

export function isValidEndpoint(url: string): boolean {
  try {
    const parsed = new URL(url);
    return parsed.protocol === 'http:' || parsed.protocol === 'https:';
  } catch {
    return false;
  }
}

export function loadSettings(storage: Storage): Settings {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) return { ...DEFAULT_SETTINGS };
  try {
    const parsed = JSON.parse(raw) as Partial<Settings>;
    const endpoint =
      typeof parsed.endpoint === 'string' && isValidEndpoint(parsed.endpoint)
        ? parsed.endpoint
        : DEFAULT_SETTINGS.endpoint;
    const topN =
      typeof parsed.topN === 'number' && Number.isInteger(parsed.topN) && parsed.topN >= 1
        ? parsed.topN
        : DEFAULT_SETTINGS.topN;
    return { endpoint, topN };
  } catch {
    return { ...DEFAULT_SETTINGS };
  }
}

export function saveSettings(storage: Storage, settings: Settings): void {
  if (!isValidEndpoint(settings.endpoint)) {
    throw new Error(`invalid endpoint URL: ${settings.endpoint}`);
  }
  if (!Number.isInteger(settings.topN) || settings.topN < 1) {
    throw new Error(`topN must be a positive integer, got ${settings.topN}`);
  }
  storage.setItem(STORAGE_KEY, JSON.stringify(settings));
}

export function clearSettings(storage: Storage): Settings {
  storage.removeItem(STORAGE_KEY);
  return { ...DEFAULT_SETTINGS };
}
