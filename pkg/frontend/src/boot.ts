import { createApi, defaultBaseUrl, initApp } from './main.js';

const root = document.getElementById('app');
if (root) {
  initApp(root, createApi(defaultBaseUrl(document)));
}
