import { initApp } from './app.js';

initApp(document, window.localStorage);
