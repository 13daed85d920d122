/** API base-URL resolution, analogous to a VITE_API_URL-style setting.
 *
 * Priority: explicit override set on the page (`window.ORTHOPLAN_API_URL`),
 * then a `<meta name="orthoplan-api-url">` tag, then same-origin.
 */

declare global {
  interface Window {
    ORTHOPLAN_API_URL?: string;
  }
}

export function apiBaseUrl(): string {
  if (typeof window !== "undefined") {
    if (window.ORTHOPLAN_API_URL) {
      return window.ORTHOPLAN_API_URL.replace(/\/$/, "");
    }
    const meta = document.querySelector('meta[name="orthoplan-api-url"]');
    const content = meta?.getAttribute("content");
    if (content) {
      return content.replace(/\/$/, "");
    }
  }
  return "";
}
