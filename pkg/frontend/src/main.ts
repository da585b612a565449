import { ApiClient } from './api.js';
import { App } from './app.js';

const params = new URLSearchParams(window.location.search);
const annotator = params.get('annotator') ?? '';
const container = document.getElementById('app');

if (!container) {
  throw new Error('missing #app container');
} else if (!annotator) {
  container.textContent = 'Add ?annotator=<your id> to the URL to begin.';
} else {
  const app = new App({ annotator, client: new ApiClient(), container });
  void app.start();
}
